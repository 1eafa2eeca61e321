import math

import numpy as np
import pytest

from surfacelab.homology import Chain, homology_class
from surfacelab.local4d import (
    RelaxationResult,
    build_4d_toric,
    cleanup,
    heat_bath_flip_probability,
    heat_bath_round,
    is_frozen,
    local_update_round,
    relaxation_experiment,
)
from surfacelab.noise import trial_rng


def set_of(state, plaquette):
    for k, s in enumerate(state.schedule.sets):
        if plaquette in set(s.tolist()):
            return k
    raise AssertionError("plaquette in no set")


def test_counts():
    s = build_4d_toric(3)
    assert len(s.plaquettes) == 486 and len(s.string) == 324


def test_clean_state_has_no_string():
    s = build_4d_toric(2)
    assert s.string_length == 0 and s.check_cycle()


def test_one_flip_makes_four_links():
    s = build_4d_toric(3)
    s.flip([17])
    assert s.string_length == 4
    assert set(np.flatnonzero(s.string)) == set(s.faces[17])
    assert s.check_cycle()


def test_size_guard():
    with pytest.raises(ValueError):
        build_4d_toric(6)


@pytest.mark.parametrize("L", [2, 3, 4, 5])
def test_schedule_is_link_disjoint_partition(L):
    s = build_4d_toric(L)
    everything = np.concatenate(s.schedule.sets)
    assert sorted(everything.tolist()) == list(range(len(s.plaquettes)))
    for idx in s.schedule.sets:
        links = s.faces[idx].ravel()
        assert len(np.unique(links)) == len(links)
    assert len(s.schedule) == (24 if L % 2 == 0 else 54)


def test_isolated_plaquette_removed():
    s = build_4d_toric(4)
    s.flip([100])
    rng = trial_rng(0, 0)
    for _ in range(len(s.schedule)):
        local_update_round(s, rng)
    assert s.string_length == 0 and not s.plaquettes.any()


def test_empty_state_never_changes():
    s = build_4d_toric(3)
    rng = trial_rng(0, 0)
    for _ in range(2 * len(s.schedule)):
        local_update_round(s, rng)
    assert not s.plaquettes.any()


def test_two_string_corner_flips_half_the_time():
    base = build_4d_toric(4)
    lat = base.lattice
    square = [lat.index(2, (x, y, 0, 0), (0, 1)) for x in (0, 1) for y in (0, 1)]
    base.flip(square)
    corner = square[0]
    assert base.string[base.faces[corner]].sum() == 2
    base.step = set_of(base, corner)
    n, flips = 10**4, 0
    for i in range(n):
        s = base.copy()
        local_update_round(s, trial_rng(3, i))
        flips += int(s.plaquettes[corner] != base.plaquettes[corner])
    assert abs(flips - n / 2) <= 3 * math.sqrt(n / 4)


def test_local_rule_is_noiselessly_monotone():
    for seed in range(30):
        rng = trial_rng(seed, 0)
        s = build_4d_toric(4)
        s.flip(rng.choice(len(s.plaquettes), size=6, replace=False))
        prev = s.string_length
        for _ in range(40 * len(s.schedule)):
            local_update_round(s, rng)
            assert s.string_length <= prev
            assert s.check_cycle()
            prev = s.string_length
            if prev == 0:
                break
        assert prev == 0


def test_heat_bath_limits():
    cold = heat_bath_flip_probability(200.0)
    assert np.allclose(cold, [0, 0, 0.5, 1, 1])
    assert np.allclose(heat_bath_flip_probability(0.0), 0.5)


def test_heat_bath_ratios_are_boltzmann():
    beta = 0.7
    p = heat_bath_flip_probability(beta)
    for n, dl in ((0, 4), (1, 2), (2, 0)):
        assert p[n] / (1 - p[n]) == pytest.approx(math.exp(-beta * dl), rel=1e-12)
    with pytest.raises(ValueError):
        heat_bath_flip_probability(-1)


def test_heat_bath_zero_to_four_ratio_empirical():
    s0 = build_4d_toric(4)
    rng = trial_rng(9, 0)
    flips = trials = 0
    while trials < 10**5:
        s = s0.copy()
        idx = s.schedule.sets[s.step % len(s.schedule)]
        heat_bath_round(s, 1.0, rng)
        flips += int(s.plaquettes[idx].sum())
        trials += len(idx)
        s0.step += 1
    w = math.exp(-4.0)
    prob = w / (1 + w)
    assert abs(flips - trials * prob) <= 3 * math.sqrt(trials * prob * (1 - prob))


def winding_pair(L=4):
    s = build_4d_toric(L)
    lat = s.lattice
    # the strip between two parallel x-lines at y=0 and y=2
    strip = [lat.index(2, (x, y, 1, 1), (0, 1)) for x in range(L) for y in (0, 1)]
    s.flip(strip)
    return s


def test_straight_winding_lines_freeze_the_local_rule():
    s = winding_pair()
    assert s.string_length == 8 and is_frozen(s)
    before = s.string.copy()
    rng = trial_rng(0, 0)
    for _ in range(3 * len(s.schedule)):
        local_update_round(s, rng)
    assert np.array_equal(s.string, before)


def test_cleanup_removes_frozen_lines():
    s = winding_pair()
    assert cleanup(s, trial_rng(0, 0))
    assert s.string_length == 0
    assert homology_class(Chain.from_mask(2, s.plaquettes), s.lattice).trivial


def test_cleanup_empties_random_errors():
    for seed in range(20):
        rng = trial_rng(seed, 1)
        s = build_4d_toric(3)
        s.flip(rng.choice(len(s.plaquettes), size=20, replace=False))
        assert cleanup(s, rng)
        assert s.string_length == 0


def test_membrane_fallback_handles_stalled_loops():
    # this seed leaves loops in parallel planes that corner flips never join:
    # the rule stalls without freezing
    rng = trial_rng(6, 1)
    s = build_4d_toric(3)
    s.flip(rng.choice(len(s.plaquettes), size=20, replace=False))
    for _ in range(100 * len(s.schedule)):
        local_update_round(s, rng)
    stuck = s.string_length
    assert stuck > 0 and not is_frozen(s)
    for _ in range(20 * len(s.schedule)):
        local_update_round(s, rng)
    assert s.string_length == stuck
    assert cleanup(s, rng)
    assert s.string_length == 0


def test_relaxation_clean_and_zero_rate():
    res = relaxation_experiment(3, 0.0, 50, trial_rng(0, 0))
    assert not res.string_length.any() and not res.failed and res.converged


def test_relaxation_from_initial_error():
    s = build_4d_toric(3)
    s.flip([5, 40, 77])
    before = s.string_length
    res = relaxation_experiment(3, 0.0, 200, trial_rng(0, 0), initial=s)
    assert res.string_length[-1] == 0
    assert np.all(np.diff(res.string_length) <= 0)
    assert s.string_length == before  # the caller's state is untouched


def test_mean_length_grows_with_rate():
    lo = relaxation_experiment(4, 1e-3, 600, trial_rng(1, 0))
    hi = relaxation_experiment(4, 1e-2, 600, trial_rng(1, 0))
    assert hi.mean_length(100) > lo.mean_length(100)


def test_csv_series():
    res = RelaxationResult(np.array([4, 2, 0]), False, True, (0,) * 6, 0)
    lines = res.to_csv().strip().splitlines()
    assert lines[0] == "round,string_length" and lines[-1] == "2,0"


def test_rate_validated():
    with pytest.raises(ValueError):
        relaxation_experiment(3, 1.5, 10, trial_rng(0, 0))
