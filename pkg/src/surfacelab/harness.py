"""Monte Carlo driver: configs, trials, failure estimates and thresholds.

Every trial draws its randomness from ``trial_rng(seed, trial_index)``, so a
trial's outcome does not depend on which process ran it or in what order.
The same trial index sees the same random stream at every grid point, which
couples neighbouring points and smooths threshold curves.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations
from typing import Any, Iterable

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .code import LogicalAction, SurfaceCode, build_planar_code, build_toric_code
from .decoder import (
    DecoderConfig,
    _decode_2d,
    coset_label,
    decode_events,
    decode_ml,
    decode_windowed,
)
from .homology import Chain
from .noise import (
    EffectiveRates,
    GateRates,
    derive_circuit_rates,
    sample_circuit_level,
    sample_phenomenological,
    trial_rng,
)
from .syndrome import extract_monopoles, incidence, measure_history

__all__ = [
    "ConfigError",
    "BracketingError",
    "ExperimentConfig",
    "PointConfig",
    "TrialOutcome",
    "FailureEstimate",
    "ThresholdEstimate",
    "wilson_interval",
    "run_trial",
    "estimate_failure_rate",
    "sweep",
    "find_threshold",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DECODERS = ("mwpm", "ml", "window")
PRIOR_FLOOR = 1e-6


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class BracketingError(RuntimeError):
    """The swept grid contains no crossing for some pair of sizes."""

    def __init__(self, pairs: list):
        self.pairs = pairs
        super().__init__(f"grid does not bracket a crossing for L pairs {pairs}")


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointConfig:
    """One fully specified experiment: a single code size and noise point."""

    code: str
    L: int
    model: str  # "phenomenological" | "circuit"
    p: float = 0.0
    q: float = 0.0
    rates: EffectiveRates | None = None
    T: int = 1
    decoder: str = "mwpm"
    trials: int = 1000
    seed: int = 0
    sectors: tuple = ("Z", "X")
    prior_p: float | None = None
    prior_q: float | None = None
    window_T: int | None = None

    @property
    def perfect_2d(self) -> bool:
        """Single round with trusted measurements: decode the net syndrome."""
        if self.model == "phenomenological":
            return self.T == 1 and self.q == 0
        return self.T == 1 and float(self.rates.q_single) == 0 and float(self.rates.q_hook) == 0

    def decoder_config(self) -> DecoderConfig:
        if self.model == "phenomenological":
            p, q = self.p, self.q
        else:
            p, q = float(self.rates.p_single), float(self.rates.q_single)
        p = self.prior_p if self.prior_p is not None else p
        q = self.prior_q if self.prior_q is not None else q
        hi = 0.5 - PRIOR_FLOOR
        p = min(max(p, PRIOR_FLOOR), hi)
        q = 0.0 if self.perfect_2d and self.prior_q is None else min(max(q, PRIOR_FLOOR), hi)
        return DecoderConfig(p=p, q=q, window_T=self.window_T)


@dataclass
class ExperimentConfig:
    """A sweep over code sizes and (optionally) a grid of error rates.

    JSON keys mirror the fields.  ``noise`` is either
    ``{"model": "phenomenological", "p": .., "q": ..}`` (``q`` may be the
    string ``"p"`` to tie it to p) or ``{"model": "circuit", "gates": {..}}``
    / ``{"model": "circuit", "rates": {..}}``.  ``T`` is a round count or
    ``"L"``.  ``p_grid`` replaces ``noise.p`` point by point.
    """

    code: str = "toric"
    L: list = field(default_factory=lambda: [8])
    noise: dict = field(default_factory=lambda: {"model": "phenomenological", "p": 0.1, "q": 0.0})
    T: Any = 1
    decoder: str = "mwpm"
    trials: int = 1000
    seed: int = 0
    sectors: list = field(default_factory=lambda: ["Z", "X"])
    priors: dict | None = None
    p_grid: list | None = None
    window_T: int | None = None
    output: str | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.code not in ("toric", "planar"):
            raise ConfigError(f"code must be 'toric' or 'planar', got {self.code!r}")
        if isinstance(self.L, int):
            self.L = [self.L]
        if not self.L or any((not isinstance(x, int)) or x < 2 for x in self.L):
            raise ConfigError(f"L must be a list of integers >= 2, got {self.L}")
        if not (isinstance(self.trials, int) and self.trials >= 1):
            raise ConfigError("trials must be an integer >= 1")
        if not (self.T == "L" or (isinstance(self.T, int) and self.T >= 1)):
            raise ConfigError("T must be a positive integer or 'L'")
        if self.decoder not in DECODERS:
            raise ConfigError(f"decoder must be one of {DECODERS}")
        if not self.sectors or any(s not in ("Z", "X") for s in self.sectors):
            raise ConfigError("sectors must be a non-empty subset of ['Z', 'X']")
        model = self.noise.get("model")
        if model == "phenomenological":
            q = self.noise.get("q", 0.0)
            for name, v in (("p", self.noise.get("p", 0.0)), ("q", q)):
                if name == "q" and v == "p":
                    continue
                if not (isinstance(v, (int, float)) and 0 <= v <= 1):
                    raise ConfigError(f"noise.{name} must lie in [0, 1], got {v!r}")
        elif model == "circuit":
            if ("gates" in self.noise) == ("rates" in self.noise):
                raise ConfigError("circuit noise needs exactly one of 'gates' or 'rates'")
            try:
                self._rates()
            except (ValueError, TypeError) as exc:
                raise ConfigError(str(exc)) from exc
            if self.p_grid:
                raise ConfigError("p_grid applies to phenomenological noise only")
        else:
            raise ConfigError(f"unknown noise model {model!r}")
        if self.p_grid is not None:
            if any(not (0 <= v <= 1) for v in self.p_grid):
                raise ConfigError("p_grid values must lie in [0, 1]")
        if self.priors:
            for k, v in self.priors.items():
                if k not in ("p", "q") or not (0 < v < 0.5):
                    raise ConfigError(f"prior {k} must lie in (0, 1/2)")
        if self.window_T is not None and self.window_T < 1:
            raise ConfigError("window_T must be >= 1")

    def _rates(self) -> EffectiveRates:
        if "gates" in self.noise:
            return derive_circuit_rates(GateRates.from_json(self.noise["gates"]))
        return EffectiveRates.from_json(self.noise["rates"])

    def grid(self) -> list:
        if self.p_grid is not None:
            return list(self.p_grid)
        return [self.noise.get("p", 0.0)] if self.noise["model"] == "phenomenological" else [None]

    def points(self) -> list[PointConfig]:
        """Every (L, p) point of the sweep, L-major."""
        out = []
        for L in self.L:
            for p in self.grid():
                out.append(self.at(L, p))
        return out

    def at(self, L: int, p: float | None = None) -> PointConfig:
        T = L if self.T == "L" else int(self.T)
        priors = self.priors or {}
        common = dict(
            code=self.code,
            L=L,
            T=T,
            decoder=self.decoder,
            trials=self.trials,
            seed=self.seed,
            sectors=tuple(self.sectors),
            prior_p=priors.get("p"),
            prior_q=priors.get("q"),
            window_T=self.window_T,
        )
        if self.noise["model"] == "circuit":
            return PointConfig(model="circuit", rates=self._rates(), **common)
        p = self.noise.get("p", 0.0) if p is None else p
        q = self.noise.get("q", 0.0)
        q = p if q == "p" else q
        return PointConfig(model="phenomenological", p=float(p), q=float(q), **common)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------

_CODES: dict = {}


def get_code(kind: str, L: int) -> SurfaceCode:
    key = (kind, L)
    if key not in _CODES:
        _CODES[key] = build_toric_code(L) if kind == "toric" else build_planar_code(L)
    return _CODES[key]


@dataclass
class TrialOutcome:
    """Logical damage of one trial.

    ``classes[s]`` holds, per encoded qubit, whether sector s was corrupted
    (Z-bar for ``"Z"``, X-bar for ``"X"``).
    """

    index: int
    classes: dict
    debug: dict | None = None

    @property
    def failed(self) -> bool:
        return any(any(v) for v in self.classes.values())

    def sector_failed(self, sector: str) -> bool:
        return any(self.classes.get(sector, ()))

    @property
    def action(self) -> LogicalAction:
        n = len(next(iter(self.classes.values())))
        z = self.classes.get("Z", (0,) * n)
        x = self.classes.get("X", (0,) * n)
        return LogicalAction.from_bits(x, z)


def _sample(cfg: PointConfig, code: SurfaceCode, rng):
    if cfg.model == "phenomenological":
        return sample_phenomenological(code, cfg.p, cfg.q, cfg.T, rng)
    return sample_circuit_level(code, cfg.rates, cfg.T, rng)


def run_trial(cfg: PointConfig, trial_index: int, debug: bool = False) -> TrialOutcome:
    """Sample, measure, decode and classify one trial.

    Recovery fails in a sector when the residual (error plus correction) is
    a nontrivial cycle.
    """
    code = get_code(cfg.code, cfg.L)
    rng = trial_rng(cfg.seed, trial_index)
    history = _sample(cfg, code, rng)
    dcfg = cfg.decoder_config()
    classes, dbg = {}, {}
    monopoles = None
    if not cfg.perfect_2d:
        monopoles = extract_monopoles(measure_history(code, history, final_round_perfect=True))
    for sector in cfg.sectors:
        errors, _ = history.sector(sector)
        net = np.bitwise_xor.reduce(errors, axis=0)
        info = {}
        if cfg.decoder == "ml":
            if not cfg.perfect_2d:
                raise ConfigError("the exhaustive decoder needs perfect measurements (T=1, q=0)")
            defects = incidence(code, "site" if sector == "Z" else "plaquette") @ net.astype(np.int64) % 2
            degree = 0 if sector == "Z" else 2
            guess = decode_ml(code, Chain.from_mask(degree, defects.astype(bool)), dcfg.p)
            actual = coset_label(code, Chain.from_mask(1, net), sector)
            bits = tuple(a ^ b for a, b in zip(actual.labels, guess.labels))
            info = {"defects": np.flatnonzero(defects).tolist(), "ml_class": list(guess.labels)}
        else:
            if cfg.perfect_2d:
                inc = incidence(code, "site" if sector == "Z" else "plaquette")
                defects = np.flatnonzero(inc @ net.astype(np.int64) % 2)
                res = _decode_2d(code, defects, dcfg, sector)
                corr = res.correction
                info = {"events": res.events.tolist(), "pairs": res.pairs}
            elif cfg.decoder == "window":
                corr = decode_windowed(code, monopoles, dcfg, sector).mask(code.n_qubits)
                info = {"events": monopoles.sector(sector).tolist()}
            else:
                res = decode_events(code, monopoles.sector(sector), dcfg, sector)
                corr = res.correction
                info = {"events": res.events.tolist(), "pairs": res.pairs}
            residual = Chain.from_mask(1, net ^ corr)
            bits = coset_label(code, residual, sector).labels
            info["correction"] = np.flatnonzero(corr).tolist()
        classes[sector] = tuple(int(b) for b in bits)
        dbg[sector] = info
    return TrialOutcome(trial_index, classes, dbg if debug else None)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def wilson_interval(k: int, n: int, alpha: float = 0.05) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    from statsmodels.stats.proportion import proportion_confint

    lo, hi = proportion_confint(k, n, alpha=alpha, method="wilson")
    return float(lo), float(hi)


@dataclass
class FailureEstimate:
    """Aggregated failures at one point.

    ``per_sector`` counts trials with any corruption in that sector;
    ``per_logical`` counts by operator (``"Z1"`` is Z-bar on qubit 1).
    """

    L: int
    p: float
    q: float
    trials: int
    failures: int
    rate: float
    ci: tuple
    per_sector: dict
    per_logical: dict

    def to_json(self) -> dict:
        d = asdict(self)
        d["ci"] = list(self.ci)
        return d


def _chunk_worker(args):
    cfg, lo, hi, debug = args
    out = []
    for i in range(lo, hi):
        t = run_trial(cfg, i, debug)
        out.append((i, t.classes, t.debug))
    return out


def _run_all(cfg: PointConfig, jobs: int, debug: bool):
    n = cfg.trials
    if jobs <= 1:
        return _chunk_worker((cfg, 0, n, debug))
    import multiprocessing as mp

    size = max(1, math.ceil(n / (jobs * 8)))
    tasks = [(cfg, lo, min(n, lo + size), debug) for lo in range(0, n, size)]
    with mp.get_context("spawn").Pool(jobs) as pool:
        parts = pool.map(_chunk_worker, tasks)
    return [r for part in parts for r in part]


def estimate_failure_rate(cfg: PointConfig, jobs: int = 1, dump=None) -> FailureEstimate:
    """Run ``cfg.trials`` trials and aggregate them in trial order.

    ``dump`` may be a writable text stream; one JSON line per trial is
    written to it.
    """
    results = sorted(_run_all(cfg, jobs, dump is not None), key=lambda r: r[0])
    failures = 0
    per_sector = {s: 0 for s in cfg.sectors}
    per_logical: dict = {}
    for i, classes, dbg in results:
        failed = False
        for s, bits in classes.items():
            if any(bits):
                per_sector[s] += 1
                failed = True
            for q, b in enumerate(bits, start=1):
                key = f"{s}{q}"
                per_logical[key] = per_logical.get(key, 0) + int(b)
        failures += failed
        if dump is not None:
            rec = {"trial": i, "L": cfg.L, "p": cfg.p, "q": cfg.q, "classes": classes, "failed": failed}
            rec["decode"] = dbg
            dump.write(json.dumps(rec, default=_json_default) + "\n")
    n = cfg.trials
    return FailureEstimate(
        cfg.L, cfg.p, cfg.q, n, failures, failures / n, wilson_interval(failures, n), per_sector, per_logical
    )


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def sweep(cfg: ExperimentConfig, jobs: int = 1, dump=None, progress=None) -> list[FailureEstimate]:
    """Estimate every point of the config's grid."""
    out = []
    for point in cfg.points():
        est = estimate_failure_rate(point, jobs, dump)
        if progress is not None:
            progress(est)
        out.append(est)
    return out


CSV_COLUMNS = ("L", "p", "q", "trials", "failures", "rate", "ci_lo", "ci_hi")


def to_csv_rows(estimates: Iterable[FailureEstimate]) -> list[list]:
    return [[e.L, e.p, e.q, e.trials, e.failures, e.rate, e.ci[0], e.ci[1]] for e in estimates]


# ---------------------------------------------------------------------------
# Threshold location
# ---------------------------------------------------------------------------


@dataclass
class ThresholdEstimate:
    """Pairwise crossings of failure-rate curves."""

    crossings: dict
    mean: float
    spread: float

    def to_json(self) -> dict:
        return {
            "crossings": {f"{a}-{b}": v for (a, b), v in self.crossings.items()},
            "mean": self.mean,
            "spread": self.spread,
        }


def _crossing(ps, fa, fb):
    # fb is the larger code: below threshold it fails less often
    ia, ib = PchipInterpolator(ps, fa), PchipInterpolator(ps, fb)

    def diff(x):
        return float(ib(x) - ia(x))

    d = [diff(x) for x in ps]
    # a crossing needs the larger code to win somewhere first; identical
    # curves (all zero, say) never cross
    for k in range(1, len(ps)):
        if d[k] == 0 and d[k - 1] < 0 and (k == len(ps) - 1 or d[k + 1] >= 0):
            return float(ps[k])
    for k in range(len(ps) - 1):
        if d[k] < 0 < d[k + 1]:
            return float(brentq(diff, ps[k], ps[k + 1], xtol=1e-12))
    return None


def find_threshold(curves: dict) -> ThresholdEstimate:
    """Locate where failure curves of different sizes cross.

    Parameters
    ----------
    curves : dict
        ``L -> (p_values, failure_rates)``, all on the same increasing grid
        of at least four points.

    Each curve is interpolated monotonically (PCHIP); for every pair of
    sizes the first point where the larger code stops beating the smaller
    one is reported.
    """
    if len(curves) < 2:
        raise ValueError("need at least two code sizes")
    Ls = sorted(curves)
    grids = {L: np.asarray(curves[L][0], float) for L in Ls}
    ps = grids[Ls[0]]
    if len(ps) < 4:
        raise ValueError("need at least four grid points")
    if any(not np.array_equal(grids[L], ps) for L in Ls):
        raise ValueError("all curves must share one grid")
    if np.any(np.diff(ps) <= 0):
        raise ValueError("grid must be strictly increasing")
    crossings, missing = {}, []
    for a, b in combinations(Ls, 2):
        x = _crossing(ps, np.asarray(curves[a][1], float), np.asarray(curves[b][1], float))
        if x is None:
            missing.append((a, b))
        else:
            crossings[(a, b)] = x
    if missing:
        raise BracketingError(missing)
    vals = np.array(list(crossings.values()))
    return ThresholdEstimate(crossings, float(vals.mean()), float(vals.max() - vals.min()))


def curves_from_estimates(estimates: Iterable[FailureEstimate]) -> dict:
    by_L: dict = {}
    for e in estimates:
        by_L.setdefault(e.L, []).append((e.p, e.rate))
    return {L: tuple(np.array(v) for v in zip(*sorted(pts))) for L, pts in by_L.items()}
