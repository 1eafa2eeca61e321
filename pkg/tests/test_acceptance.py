"""End-to-end acceptance checks.

Each test prints one ``PASS`` or ``FAIL`` line naming its criterion, then
asserts.  The Monte Carlo criteria (2 and 3) take several minutes on one
core.
"""

import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from surfacelab.bounds import (
    CONNECTIVE,
    critical_storage_rate,
    css_capacity_root,
    enumerate_saps,
    gate_level_condition,
    growth_constant,
    local4d_threshold_bound,
    storage_threshold_bounds,
)
from surfacelab.cli import main
from surfacelab.code import build_planar_code
from surfacelab.decoder import exact_failure_probability
from surfacelab.harness import ExperimentConfig, curves_from_estimates, find_threshold, sweep
from surfacelab.local4d import build_4d_toric, heat_bath_round, local_update_round
from surfacelab.matching import MatchingProblem, brute_force_matching, min_weight_perfect_matching
from surfacelab.noise import GateRates, derive_circuit_rates, trial_rng


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def within(x, anchor, decimals):
    # agreement to half a unit in the anchor's last printed decimal
    return abs(x - anchor) <= 0.5 * 10.0**-decimals + 1e-15


def test_criterion_1_analytic_bounds(verdict):
    t0 = time.perf_counter()
    r3, r2 = storage_threshold_bounds()
    q4 = local4d_threshold_bound()
    head = gate_level_condition(GateRates(p_s=1.7e-4))
    zero = Fraction(0)
    q_hook = derive_circuit_rates(GateRates(Fraction(175, 10**6), zero, zero, zero)).q_hook
    checks = {
        "3d storage 0.0114": within(r3.value, 0.0114, 4),
        "2d storage 0.0373": within(r2.value, 0.0373, 4) and within(r2.details["p_exact"], 0.0373, 4),
        "capacity root 0.1100": within(css_capacity_root(), 0.1100, 4),
        "4d bound 4.8e-4": within(q4.value, 4.8e-4, 5) and within(q4.details["exact"], 4.8e-4, 5),
        "headline 3.5e-4": head.details["headline_pass"] and q_hook == Fraction(35, 10**5),
        "(p_s)_c 1.75e-4": within(critical_storage_rate(0.0), 1.75e-4, 6),
    }
    elapsed = time.perf_counter() - t0
    ok = all(checks.values()) and elapsed < 1.0
    bad = [k for k, v in checks.items() if not v]
    verdict(1, ok, f"analytic bounds ({elapsed:.3f} s){'; failing: ' + ', '.join(bad) if bad else ''}")


def test_criterion_2_toric_mwpm_threshold(verdict):
    grid = [round(0.090 + 0.005 * k, 3) for k in range(7)]
    cfg = ExperimentConfig(
        code="toric",
        L=[8, 12, 16],
        noise={"model": "phenomenological", "p": 0.1, "q": 0.0},
        p_grid=grid,
        trials=2 * 10**4,
        seed=2,
        sectors=["Z"],
    )
    ests = sweep(cfg)
    th = find_threshold(curves_from_estimates(ests))
    pairs = {f"{a}-{b}": round(v, 4) for (a, b), v in th.crossings.items()}
    ok = 0.095 <= th.mean <= 0.115 and all(0.095 <= v <= 0.115 for v in th.crossings.values())
    verdict(2, ok, f"2D MWPM crossing mean {th.mean:.4f} (pairs {pairs}), window [0.095, 0.115]")


def test_criterion_3_phenomenological_3d(verdict):
    grid = [0.020, 0.025, 0.030, 0.035, 0.040]
    cfg = ExperimentConfig(
        code="toric",
        L=[6, 8, 10],
        noise={"model": "phenomenological", "p": 0.02, "q": "p"},
        T="L",
        p_grid=grid,
        trials=4000,
        seed=3,
        sectors=["Z"],
    )
    th = find_threshold(curves_from_estimates(sweep(cfg)))
    low = ExperimentConfig(
        code="toric",
        L=[6, 8, 10],
        noise={"model": "phenomenological", "p": 0.01, "q": 0.01},
        T="L",
        trials=5 * 10**4,
        seed=4,
    )
    ests = sweep(low)
    separated = all(b.ci[1] < a.ci[0] for a, b in zip(ests, ests[1:]))
    crossing_ok = min(th.crossings.values()) >= 0.0114
    rates = ", ".join(f"L={e.L}: {e.failures}/{e.trials}" for e in ests)
    verdict(
        3,
        crossing_ok and separated,
        f"3D p=q crossings {[round(v, 4) for v in th.crossings.values()]} >= 0.0114; "
        f"p=q=0.01 failures {rates}, CI-separated={separated}",
    )


def test_criterion_4_ml_beats_mwpm(verdict):
    code = build_planar_code(3)
    rows, ok = [], True
    for p in (0.05, 0.10, 0.15):
        for sector in ("Z", "X"):
            ml = exact_failure_probability(code, p, "ml", sector)
            mw = exact_failure_probability(code, p, "mwpm", sector)
            ok &= ml <= mw + 1e-15
            rows.append(f"p={p} {sector}: ML {ml:.5f} <= MWPM {mw:.5f}")
    verdict(4, ok, "; ".join(rows))


def test_criterion_5_matching_oracle(verdict):
    rng = np.random.default_rng(55)
    checked = mismatches = 0
    while checked < 1000:
        n = 2 * int(rng.integers(1, 7))
        w_max = int(rng.choice([2, 10, 1000]))
        edges = tuple(
            (u, v, int(rng.integers(0, w_max + 1))) for u in range(n) for v in range(u + 1, n)
        )
        p = MatchingProblem(n, edges)
        mismatches += min_weight_perfect_matching(p).total_weight != brute_force_matching(p).total_weight
        checked += 1
    verdict(5, mismatches == 0, f"{checked} instances with n <= 12, {mismatches} weight mismatches")


def test_criterion_6_circuit_rates(verdict):
    rng = np.random.default_rng(66)
    ok = True
    for _ in range(10):
        ps, pc, pp, pm = (Fraction(int(rng.integers(0, 1000)), 10**6) for _ in range(4))
        r = derive_circuit_rates(GateRates(p_s=ps, p_CNOT=pc, p_p=pp, p_m=pm))
        expect = {
            "q_single": pp + 4 * pc + 6 * ps + pm,
            "q_hook": 3 * pc + 2 * ps,
            "p_hook": 2 * pc + ps,
            "p_single": 5 * pc + 7 * ps,
        }
        for name, value in expect.items():
            got = getattr(r, name)
            ok &= isinstance(got, Fraction) and got == value
    verdict(6, ok, "10 random exact-rational gate fixtures reproduce the four first-order rates")


def test_criterion_7_sap_growth(verdict):
    mu = growth_constant(enumerate_saps(2, 16).counts)
    rel = abs(mu - CONNECTIVE.mu2) / CONNECTIVE.mu2
    verdict(7, rel < 0.10, f"mu_hat = {mu:.4f} vs {CONNECTIVE.mu2} (relative error {rel:.3%})")


def test_criterion_8_local_rule(verdict):
    monotone = emptied = 0
    for i in range(100):
        rng = trial_rng(808, i)
        s = build_4d_toric(4)
        k = int(rng.integers(1, 9))
        s.flip(rng.choice(len(s.plaquettes), size=k, replace=False))
        prev, mono = s.string_length, True
        for _ in range(200 * len(s.schedule)):
            if not s.string.any():
                break
            local_update_round(s, rng)
            mono &= s.string_length <= prev
            prev = s.string_length
        monotone += mono
        emptied += not s.string.any()
    # heat bath: empty neighbourhood flips with odds e^{-4 beta}
    beta = 1.0
    s0 = build_4d_toric(4)
    rng = trial_rng(809, 0)
    flips = samples = 0
    while samples < 10**5:
        s = s0.copy()
        idx = s.schedule.sets[s.step % len(s.schedule)]
        heat_bath_round(s, beta, rng)
        flips += int(s.plaquettes[idx].sum())
        samples += len(idx)
        s0.step += 1
    w = math.exp(-4 * beta)
    prob = w / (1 + w)
    sigma = math.sqrt(samples * prob * (1 - prob))
    z = (flips - samples * prob) / sigma
    ok = monotone == 100 and emptied == 100 and abs(z) <= 3
    verdict(
        8,
        ok,
        f"local rule alone: {monotone}/100 monotone, {emptied}/100 emptied (no fallback used); "
        f"heat bath {flips}/{samples} flips vs e^-4 odds, z = {z:+.2f}",
    )


def test_criterion_9_determinism_across_jobs(verdict, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "L": [6],
                "noise": {"model": "phenomenological", "p": 0.03, "q": "p"},
                "T": "L",
                "trials": 300,
                "seed": 9,
            }
        )
    )
    counts = []
    for jobs in (1, 2):
        assert main(["simulate", "--config", str(cfg), "--jobs", str(jobs)]) == 0
        out = json.loads(capsys.readouterr().out)
        counts.append((out["failures"], out["per_sector"], out["per_logical"]))
    verdict(9, counts[0] == counts[1], f"jobs=1 vs jobs=2 counts {counts[0][0]} and {counts[1][0]} (same seed)")
