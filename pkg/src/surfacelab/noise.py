"""Error-history samplers.

Two models are provided:

* phenomenological: in every round each link suffers a bit flip and,
  independently, a phase flip with probability ``p``; every check is misread
  with probability ``q``.
* circuit-level effective model: single errors and misreads plus the
  correlated "hooks" produced by the north-west-south-east measurement
  schedule.  Horizontal hooks flip two links at a right angle; a vertical hook
  flips one link and hides it from the check that was measured first.

Sectors are named after the error they track: the ``"Z"`` sector holds phase
flips seen by site checks, the ``"X"`` sector bit flips seen by plaquette
checks.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Real

import numpy as np
import scipy.sparse as sp

from .code import Chain, PauliErrorState, SurfaceCode

__all__ = [
    "GateRates",
    "EffectiveRates",
    "SpacetimeErrorHistory",
    "HookEvent",
    "derive_circuit_rates",
    "sample_phenomenological",
    "sample_circuit_level",
    "trial_rng",
    "disorder_probability",
]

log = logging.getLogger(__name__)

HORIZONTAL_HOOK = "horizontal_hook"
VERTICAL_HOOK = "vertical_hook"


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based generator for one trial; independent of trial order."""
    ss = np.random.SeedSequence([int(master_seed), int(trial_index)])
    return np.random.Generator(np.random.Philox(ss))


def _check_prob(name, value):
    if not (0 <= value <= 1):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class GateRates:
    """Elementary fault probabilities per gate or time step."""

    p_s: Real = 0.0
    p_CNOT: Real = 0.0
    p_p: Real = 0.0
    p_m: Real = 0.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            _check_prob(k, v)

    def to_json(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}

    @classmethod
    def from_json(cls, data) -> "GateRates":
        return cls(**{k: data[k] for k in ("p_s", "p_CNOT", "p_p", "p_m") if k in data})


@dataclass(frozen=True)
class EffectiveRates:
    """Per-round rates of the effective circuit-level model."""

    p_single: Real = 0.0
    q_single: Real = 0.0
    p_hook: Real = 0.0
    q_hook: Real = 0.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            _check_prob(k, v)

    def to_json(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}

    @classmethod
    def from_json(cls, data) -> "EffectiveRates":
        return cls(
            **{k: data[k] for k in ("p_single", "q_single", "p_hook", "q_hook") if k in data}
        )


def _clip(name, value):
    if value > 1:
        log.warning("first-order %s = %s exceeds 1; clipped", name, value)
        return type(value)(1) if isinstance(value, Fraction) else 1.0
    return value


def derive_circuit_rates(g: GateRates) -> EffectiveRates:
    """First-order effective rates of the parallel NWSE measurement circuit.

    Exact rational inputs (``Fraction``) give exact outputs.
    """
    q_single = g.p_p + 4 * g.p_CNOT + 6 * g.p_s + g.p_m
    q_hook = 3 * g.p_CNOT + 2 * g.p_s
    p_hook = 2 * g.p_CNOT + g.p_s
    p_single = 5 * g.p_CNOT + 7 * g.p_s
    return EffectiveRates(
        p_single=_clip("p_single", p_single),
        q_single=_clip("q_single", q_single),
        p_hook=_clip("p_hook", p_hook),
        q_hook=_clip("q_hook", q_hook),
    )


def disorder_probability(eta, p: float) -> float:
    """Probability of a bond-sign configuration ``eta`` (entries +1/-1) in the
    random-bond model: each bond is antiferromagnetic (-1) with probability p.

    The exponent form ``(1-p)^((1+eta)/2) p^((1-eta)/2)`` is used per bond.
    """
    eta = np.asarray(eta)
    if not np.all(np.isin(eta, (-1, 1))):
        raise ValueError("eta entries must be +1 or -1")
    n_minus = int(np.count_nonzero(eta == -1))
    return float((1 - p) ** (eta.size - n_minus) * p**n_minus)


@dataclass(frozen=True)
class HookEvent:
    round: int
    location: int
    kind: str
    sector: str


@dataclass
class SpacetimeErrorHistory:
    """Errors of T noisy rounds.

    ``z_errors[t]``/``x_errors[t]`` are the phase/bit flips that occur in
    round t, before that round's measurement.  ``site_misreads[t]`` and
    ``plaquette_misreads[t]`` flag the checks read wrongly in round t.
    """

    T: int
    z_errors: np.ndarray
    x_errors: np.ndarray
    site_misreads: np.ndarray
    plaquette_misreads: np.ndarray
    hook_log: list = field(default_factory=list)

    @classmethod
    def empty(cls, code: SurfaceCode, T: int) -> "SpacetimeErrorHistory":
        lat = code.lattice
        n1, n0, n2 = lat.n_cells(1), lat.n_cells(0), lat.n_cells(2)
        return cls(
            T,
            np.zeros((T, n1), bool),
            np.zeros((T, n1), bool),
            np.zeros((T, n0), bool),
            np.zeros((T, n2), bool),
        )

    def qubit_errors(self, t: int) -> PauliErrorState:
        return PauliErrorState(
            x_errors=Chain.from_mask(1, self.x_errors[t]),
            z_errors=Chain.from_mask(1, self.z_errors[t]),
        )

    def measurement_errors(self, t: int) -> tuple[Chain, Chain]:
        return (
            Chain.from_mask(0, self.site_misreads[t]),
            Chain.from_mask(2, self.plaquette_misreads[t]),
        )

    def total_errors(self) -> PauliErrorState:
        """Net qubit error after all rounds."""
        return PauliErrorState(
            x_errors=Chain.from_mask(1, np.bitwise_xor.reduce(self.x_errors, axis=0)),
            z_errors=Chain.from_mask(1, np.bitwise_xor.reduce(self.z_errors, axis=0)),
        )

    def sector(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """``(qubit_errors, misreads)`` arrays for sector ``"Z"`` or ``"X"``."""
        if name == "Z":
            return self.z_errors, self.site_misreads
        if name == "X":
            return self.x_errors, self.plaquette_misreads
        raise ValueError(f"unknown sector {name!r}")

    def is_empty(self) -> bool:
        return not (
            self.z_errors.any()
            or self.x_errors.any()
            or self.site_misreads.any()
            or self.plaquette_misreads.any()
        )

    def __xor__(self, other: "SpacetimeErrorHistory") -> "SpacetimeErrorHistory":
        if self.T != other.T:
            raise ValueError("histories differ in length")
        return SpacetimeErrorHistory(
            self.T,
            self.z_errors ^ other.z_errors,
            self.x_errors ^ other.x_errors,
            self.site_misreads ^ other.site_misreads,
            self.plaquette_misreads ^ other.plaquette_misreads,
            self.hook_log + other.hook_log,
        )


def sample_phenomenological(code: SurfaceCode, p: float, q: float, T: int, rng) -> SpacetimeErrorHistory:
    """Independent qubit errors (rate p per type) and misreads (rate q)."""
    _check_prob("p", p)
    _check_prob("q", q)
    if T < 1:
        raise ValueError("T must be >= 1")
    h = SpacetimeErrorHistory.empty(code, T)
    h.z_errors[:] = rng.random(h.z_errors.shape) < p
    h.x_errors[:] = rng.random(h.x_errors.shape) < p
    h.site_misreads[:] = rng.random(h.site_misreads.shape) < q
    h.plaquette_misreads[:] = rng.random(h.plaquette_misreads.shape) < q
    return h


# ---------------------------------------------------------------------------
# Hook geometry
# ---------------------------------------------------------------------------


def _try_index(lat, k, coords, axes=()):
    try:
        return lat.index(k, coords, axes)
    except KeyError:
        return -1


@dataclass(frozen=True)
class HookGeometry:
    """Lookup tables for the circuit-level model on one code.

    ``zz_pairs[P]``: the north and west links of plaquette P.
    ``xx_pairs[s]``: the north and west links of site s.
    ``z_first[l]``: site check that measures link l first (-1 if virtual).
    ``x_first[l]``: plaquette check that measures link l first (-1 if virtual).
    """

    zz_pairs: np.ndarray
    xx_pairs: np.ndarray
    z_first: np.ndarray
    x_first: np.ndarray


@lru_cache(maxsize=32)
def _geometry_cached(kind: str, L: int) -> HookGeometry:
    from .code import build_planar_code, build_toric_code

    code = build_toric_code(L) if kind == "toric" else build_planar_code(L)
    lat = code.lattice
    zz = np.array(
        [
            (_try_index(lat, 1, (x, y + 1), (0,)), _try_index(lat, 1, (x, y), (1,)))
            for x, y in lat.coords(2)
        ],
        dtype=np.int64,
    ).reshape(-1, 2)
    xx = np.array(
        [
            (_try_index(lat, 1, (x, y), (1,)), _try_index(lat, 1, (x - 1, y), (0,)))
            for x, y in lat.coords(0)
        ],
        dtype=np.int64,
    ).reshape(-1, 2)
    z_first, x_first = [], []
    for (x, y), o in zip(lat.coords(1), lat.orientation_ids(1)):
        if o == 1:  # north-south link: south site, then east plaquette
            z_first.append(_try_index(lat, 0, (x, y)))
            x_first.append(_try_index(lat, 2, (x, y), (0, 1)))
        else:  # east-west link: south plaquette, then east site
            z_first.append(_try_index(lat, 0, (x + 1, y)))
            x_first.append(_try_index(lat, 2, (x, y - 1), (0, 1)))
    return HookGeometry(zz, xx, np.array(z_first, np.int64), np.array(x_first, np.int64))


def hook_geometry(code: SurfaceCode) -> HookGeometry:
    return _geometry_cached(code.kind, code.L)


def _pair_matrix(pairs: np.ndarray, n_links: int):
    rows = np.repeat(np.arange(len(pairs)), 2)
    cols = pairs.ravel()
    keep = cols >= 0
    return sp.csr_matrix(
        (np.ones(keep.sum(), np.int32), (rows[keep], cols[keep])), shape=(len(pairs), n_links)
    )


def _apply_pairs(hooks: np.ndarray, pairs: np.ndarray, n_links: int) -> np.ndarray:
    if not hooks.any():
        return np.zeros((hooks.shape[0], n_links), bool)
    m = _pair_matrix(pairs, n_links)
    return (sp.csr_matrix(hooks.astype(np.int32)) @ m).toarray() % 2 == 1


def sample_circuit_level(code: SurfaceCode, r: EffectiveRates, T: int, rng) -> SpacetimeErrorHistory:
    """Sample the effective circuit-level model for T rounds.

    Per round and sector: single qubit errors (``p_single``), misreads
    (``q_single``), horizontal hooks (``p_hook``; ZZ on the north and west
    links of each plaquette, XX on the north and west links of each site) and
    vertical hooks (``q_hook`` per link).  A hook is logged only when both of
    its parts land on the code; a hook that would touch a missing link or a
    virtual boundary check degenerates to a single qubit error.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    p_single, q_single, p_hook, q_hook = (float(v) for v in asdict(r).values())
    geo = hook_geometry(code)
    h = SpacetimeErrorHistory.empty(code, T)
    n_links = code.n_qubits
    log_entries = []

    h.z_errors[:] = rng.random(h.z_errors.shape) < p_single
    h.x_errors[:] = rng.random(h.x_errors.shape) < p_single
    h.site_misreads[:] = rng.random(h.site_misreads.shape) < q_single
    h.plaquette_misreads[:] = rng.random(h.plaquette_misreads.shape) < q_single

    for sector, pairs, qubits in (
        ("Z", geo.zz_pairs, h.z_errors),
        ("X", geo.xx_pairs, h.x_errors),
    ):
        hooks = rng.random((T, len(pairs))) < p_hook
        qubits ^= _apply_pairs(hooks, pairs, n_links)
        whole = (pairs >= 0).all(axis=1)
        for t, loc in zip(*np.nonzero(hooks & whole)):
            log_entries.append(HookEvent(int(t), int(loc), HORIZONTAL_HOOK, sector))

    for sector, first, qubits, misreads in (
        ("Z", geo.z_first, h.z_errors, h.site_misreads),
        ("X", geo.x_first, h.x_errors, h.plaquette_misreads),
    ):
        hooks = rng.random((T, n_links)) < q_hook
        qubits ^= hooks
        ts, ls = np.nonzero(hooks)
        checks = first[ls]
        real = checks >= 0
        # np.add.at handles two hooks hiding from the same check
        flips = np.zeros(misreads.shape, np.int64)
        np.add.at(flips, (ts[real], checks[real]), 1)
        misreads ^= flips % 2 == 1
        for t, loc in zip(ts[real], ls[real]):
            log_entries.append(HookEvent(int(t), int(loc), VERTICAL_HOOK, sector))

    log_entries.sort(key=lambda e: (e.round, e.sector, e.kind, e.location))
    h.hook_log = log_entries
    return h
