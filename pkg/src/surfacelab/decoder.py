"""Decoders: minimum-weight matching in 2D and spacetime, an exhaustive
maximum-likelihood oracle, overlapping-window recovery and destructive
readout.

Every decoder works on one sector at a time.  The ``"Z"`` sector pairs site
defects and returns a phase-flip correction; the ``"X"`` sector pairs
plaquette defects on the dual lattice and returns a bit-flip correction.

Edge weights follow the log-likelihood metric

    w = H * log((1-p)/p) + V * log((1-q)/q)

for a path with H space-like and V time-like steps.  Both log ratios are
scaled by 1e6 and rounded half-to-even before use, so the matcher compares
exact integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .code import SurfaceCode, build_planar_code, build_toric_code
from .homology import Chain, HomologyClass, cut_masks
from .matching import min_weight_perfect_matching_dense
from .syndrome import MonopoleSet, incidence

__all__ = [
    "DecoderConfig",
    "WindowState",
    "DecodeResult",
    "sector_geometry",
    "decode_2d",
    "decode_3d",
    "decode_ml",
    "exact_failure_probability",
    "window_step",
    "window_flush",
    "decode_windowed",
    "readout_logical",
    "coset_label",
]

WEIGHT_SCALE = 10**6
ML_MAX_QUBITS = 16


def scaled_weight(prob: float) -> int:
    """``round(1e6 * log((1-prob)/prob))``, half-to-even."""
    return round(WEIGHT_SCALE * math.log((1 - prob) / prob))


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder priors.

    ``q = 0`` means measurements are trusted completely: time-like steps get
    infinite weight and are left out of the matching graph.
    """

    p: float = 0.1
    q: float = 0.0
    window_T: int | None = None

    def __post_init__(self):
        if not (0 < self.p < 0.5):
            raise ValueError(f"decoder prior p must lie in (0, 1/2), got {self.p}")
        if not (0 <= self.q < 0.5):
            raise ValueError(f"decoder prior q must lie in [0, 1/2), got {self.q}")
        if self.window_T is not None and self.window_T < 1:
            raise ValueError("window_T must be >= 1")

    @property
    def weight_h(self) -> float:
        return math.log((1 - self.p) / self.p)

    @property
    def weight_v(self) -> float:
        return math.inf if self.q == 0 else math.log((1 - self.q) / self.q)

    @property
    def int_weight_h(self) -> int:
        return scaled_weight(self.p)

    @property
    def int_weight_v(self) -> int | None:
        return None if self.q == 0 else scaled_weight(self.q)


# ---------------------------------------------------------------------------
# Sector geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SectorGeometry:
    """Check positions on a rectangular grid plus the link crossed by each
    unit step.

    ``grid[i]`` is the grid position of check i; ``extent`` the grid size.
    ``cross[a][o, c + 1]`` is the link crossed stepping along axis ``a`` from
    coordinate c to c+1 at other-coordinate o; on the open axis of a planar
    code, c = -1 and c = n-1 step to and from the virtual boundary.
    """

    sector: str
    periodic: bool
    boundary_axis: int | None
    grid: np.ndarray
    extent: tuple[int, int]
    cross: tuple
    n_links: int

    @property
    def n_checks(self) -> int:
        return len(self.grid)

    def _axis_steps(self, axis, a, b):
        n = self.extent[axis]
        d = b - a
        if self.periodic:
            d %= n
            if d > n - d:
                d -= n
        return d

    def spatial_distance(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        gi, gj = self.grid[i], self.grid[j]
        total = 0
        for axis in (0, 1):
            d = np.abs(gi[..., axis] - gj[..., axis])
            if self.periodic:
                d = np.minimum(d, self.extent[axis] - d)
            total = total + d
        return total

    def boundary_distance(self, i: np.ndarray) -> np.ndarray | None:
        if self.boundary_axis is None:
            return None
        c = self.grid[i, self.boundary_axis]
        n = self.extent[self.boundary_axis]
        return np.minimum(c + 1, n - c)

    def _walk(self, axis, other, start, steps, out):
        table = self.cross[axis]
        n = self.extent[axis]
        c = start
        for _ in range(abs(steps)):
            if steps > 0:
                idx = c if not self.periodic else c % n
                out.append(table[other, idx + 1])
                c += 1
            else:
                idx = c - 1 if not self.periodic else (c - 1) % n
                out.append(table[other, idx + 1])
                c -= 1
        return c

    def path(self, i: int, j: int) -> list[int]:
        """Links of the canonical shortest path from check i to check j:
        first along x, then along y; positive direction on periodic ties."""
        (ax, ay), (bx, by) = self.grid[i], self.grid[j]
        out: list[int] = []
        self._walk(0, ay, ax, self._axis_steps(0, ax, bx), out)
        self._walk(1, bx, ay, self._axis_steps(1, ay, by), out)
        return out

    def boundary_path(self, i: int) -> list[int]:
        """Links from check i straight to the nearer open edge (the lower
        edge on ties)."""
        axis = self.boundary_axis
        c = int(self.grid[i, axis])
        other = int(self.grid[i, 1 - axis])
        n = self.extent[axis]
        out: list[int] = []
        if c + 1 <= n - c:
            self._walk(axis, other, c, -(c + 1), out)
        else:
            self._walk(axis, other, c, n - c, out)
        return out


def _try(lat, coords, axes):
    try:
        return lat.index(1, coords, axes)
    except KeyError:
        return -1


@lru_cache(maxsize=64)
def _geometry(kind: str, L: int, sector: str) -> SectorGeometry:
    code = build_toric_code(L) if kind == "toric" else build_planar_code(L)
    lat = code.lattice
    periodic = kind == "toric"
    if sector == "Z":
        pos = lat.coords(0).copy()
        y_off = 0 if periodic else 1
        pos[:, 1] -= y_off
        extent = (L, L if periodic else L - 1)
        boundary_axis = None if periodic else 1

        def link(axis, other, c):
            if axis == 0:
                return _try(lat, (c, other + y_off), (0,))
            return _try(lat, (other, c + y_off), (1,))

    elif sector == "X":
        pos = lat.coords(2).copy()
        extent = (L if periodic else L - 1, L)
        boundary_axis = None if periodic else 0

        def link(axis, other, c):
            if axis == 0:
                return _try(lat, (c + 1, other), (1,))
            return _try(lat, (other, c + 1), (0,))

    else:
        raise ValueError(f"unknown sector {sector!r}")

    cross = []
    for axis in (0, 1):
        n, n_other = extent[axis], extent[1 - axis]
        table = np.full((n_other, n + 1), -1, dtype=np.int64)
        for o in range(n_other):
            for c in range(-1, n):
                if periodic and c == -1:
                    continue
                table[o, c + 1] = link(axis, o, c)
        cross.append(table)
    return SectorGeometry(sector, periodic, boundary_axis, pos, extent, tuple(cross), lat.n_cells(1))


def sector_geometry(code: SurfaceCode, sector: str) -> SectorGeometry:
    return _geometry(code.kind, code.L, sector)


def _sector_of_chain(chain: Chain) -> str:
    if chain.degree == 0:
        return "Z"
    if chain.degree == 2:
        return "X"
    raise ValueError("defects must be a 0-chain (sites) or 2-chain (plaquettes)")


# ---------------------------------------------------------------------------
# Matching with optional boundary nodes
# ---------------------------------------------------------------------------


def _match(dist: np.ndarray, bcost: np.ndarray | None) -> list[tuple[int, int]]:
    """Pair nodes given real-real costs (-1 for forbidden) and per-node
    boundary costs (-1 for forbidden).  Returns ``(i, j)`` pairs with
    ``j = -1`` for a boundary match."""
    k = dist.shape[0]
    if k == 0:
        return []
    if bcost is None:
        if k % 2:
            raise ValueError(f"odd number of defects ({k}) without a boundary")
        m = min_weight_perfect_matching_dense(dist)
        return list(m.pairs)
    w = np.full((2 * k, 2 * k), -1, dtype=np.int64)
    w[:k, :k] = dist
    w[k:, k:] = 0
    idx = np.arange(k)
    w[idx, k + idx] = bcost
    w[k + idx, idx] = bcost
    np.fill_diagonal(w, -1)
    m = min_weight_perfect_matching_dense(w)
    out = []
    for a, b in m.pairs:
        if b < k:
            out.append((a, b))
        elif a < k:
            out.append((a, -1))
    return out


@dataclass
class DecodeResult:
    """Correction mask plus the matched pairs (indices into ``events``;
    partner -1 means the spatial boundary, -2 the time boundary)."""

    correction: np.ndarray
    events: np.ndarray
    pairs: list = field(default_factory=list)

    def chain(self) -> Chain:
        return Chain.from_mask(1, self.correction)


def _apply_pairs(geo: SectorGeometry, checks, pairs) -> np.ndarray:
    flips = []
    for a, b in pairs:
        if b == -1:
            flips.extend(geo.boundary_path(int(checks[a])))
        elif b >= 0:
            flips.extend(geo.path(int(checks[a]), int(checks[b])))
    corr = np.bincount(np.asarray(flips, dtype=np.int64), minlength=geo.n_links) % 2 == 1
    return corr


def _spacetime_costs(geo, checks, rounds, wh, wv):
    ii, jj = np.meshgrid(np.arange(len(checks)), np.arange(len(checks)), indexing="ij")
    ds = geo.spatial_distance(checks[ii], checks[jj]).astype(np.int64)
    dt = np.abs(rounds[ii] - rounds[jj]).astype(np.int64)
    if wv is None:
        dist = np.where(dt == 0, ds * wh, -1)
    else:
        dist = ds * wh + dt * wv
    np.fill_diagonal(dist, -1)
    return dist.astype(np.int64)


def decode_2d(code: SurfaceCode, defects, cfg: DecoderConfig | None = None, sector: str | None = None) -> Chain:
    """Minimum-weight correction for a perfectly measured syndrome.

    Parameters
    ----------
    defects : Chain or array of check indices
        Site defects (0-chain) or plaquette defects (2-chain).  With a plain
        index array, ``sector`` must be given.
    """
    return _decode_2d(code, defects, cfg, sector).chain()


def _decode_2d(code, defects, cfg, sector) -> DecodeResult:
    if isinstance(defects, Chain):
        sector = _sector_of_chain(defects)
        checks = np.asarray(defects.cells, dtype=np.int64)
    else:
        if sector is None:
            raise ValueError("sector required with raw defect indices")
        checks = np.asarray(defects, dtype=np.int64)
    geo = sector_geometry(code, sector)
    wh = cfg.int_weight_h if cfg is not None else 1
    zeros = np.zeros(len(checks), np.int64)
    dist = _spacetime_costs(geo, checks, zeros, wh, None)
    bd = geo.boundary_distance(checks)
    bcost = None if bd is None else (bd * wh).astype(np.int64)
    pairs = _match(dist, bcost)
    ev = np.stack([checks, zeros], axis=1) if len(checks) else np.zeros((0, 2), np.int64)
    return DecodeResult(_apply_pairs(geo, checks, pairs), ev, pairs)


def decode_3d(code: SurfaceCode, events: MonopoleSet, cfg: DecoderConfig, sector: str = "Z") -> Chain:
    """Spacetime matching of detection events; returns the horizontal
    projection of the matched chains (links covered an odd number of times).

    The history must be closed by a perfect final round, so on a toric code
    the number of events is even.
    """
    return decode_events(code, events.sector(sector), cfg, sector).chain()


def decode_events(code: SurfaceCode, ev: np.ndarray, cfg: DecoderConfig, sector: str) -> DecodeResult:
    """:func:`decode_3d` on a raw ``(k, 2)`` array of ``(check, round)``."""
    ev = np.asarray(ev, dtype=np.int64).reshape(-1, 2)
    geo = sector_geometry(code, sector)
    checks, rounds = ev[:, 0], ev[:, 1]
    wh, wv = cfg.int_weight_h, cfg.int_weight_v
    dist = _spacetime_costs(geo, checks, rounds, wh, wv)
    bd = geo.boundary_distance(checks)
    bcost = None if bd is None else (bd * wh).astype(np.int64)
    pairs = _match(dist, bcost)
    return DecodeResult(_apply_pairs(geo, checks, pairs), ev, pairs)


# ---------------------------------------------------------------------------
# Exhaustive maximum likelihood
# ---------------------------------------------------------------------------


def _cut_list(code: SurfaceCode, sector: str) -> list[np.ndarray]:
    # phase-flip chains are read against the primal cuts, bit flips against
    # the dual ones
    return cut_masks(code.lattice, 1, dual=(sector == "X"))


def coset_label(code: SurfaceCode, chain: Chain, sector: str = "Z") -> HomologyClass:
    """Cut parities of an arbitrary 1-chain.

    Two chains with the same boundary get the same label iff their sum is a
    trivial cycle, so the label names the homology coset of a correction.
    """
    mask = chain.mask(code.n_qubits)
    return HomologyClass(tuple(int(np.count_nonzero(mask & m) % 2) for m in _cut_list(code, sector)))


@lru_cache(maxsize=8)
def _pattern_table(kind: str, L: int, sector: str):
    code = build_toric_code(L) if kind == "toric" else build_planar_code(L)
    n = code.n_qubits
    if n > ML_MAX_QUBITS:
        raise ValueError(f"exhaustive decoding limited to {ML_MAX_QUBITS} qubits, code has {n}")
    patterns = np.arange(2**n, dtype=np.int64)
    bits = ((patterns[:, None] >> np.arange(n)) & 1).astype(np.int64)
    inc = incidence(code, "site" if sector == "Z" else "plaquette").toarray().astype(np.int64)
    synd = (bits @ inc.T) % 2
    synd_id = synd @ (1 << np.arange(inc.shape[0], dtype=np.int64))
    cuts = np.stack(_cut_list(code, sector)).astype(np.int64)
    cls = (bits @ cuts.T) % 2
    cls_id = cls @ (1 << np.arange(len(cuts), dtype=np.int64))
    weight = bits.sum(axis=1)
    return code, synd_id, cls_id, weight, len(cuts), inc.shape[0]


def _coset_probabilities(code: SurfaceCode, p: float, sector: str):
    _, synd_id, cls_id, weight, n_cls, n_checks = _pattern_table(code.kind, code.L, sector)
    n = code.n_qubits
    prob = np.power(p, weight) * np.power(1 - p, n - weight)
    table = np.zeros((2**n_checks, 2**n_cls))
    np.add.at(table, (synd_id, cls_id), prob)
    return table, n_cls


def _argmax_trivial(row: np.ndarray) -> int:
    best = row.max()
    tied = np.flatnonzero(row >= best * (1 - 1e-12))
    return int(tied[0])


def _labels(cid: int, n_cls: int) -> tuple[int, ...]:
    return tuple((cid >> k) & 1 for k in range(n_cls))


def decode_ml(code: SurfaceCode, syndrome: Chain, p: float) -> HomologyClass:
    """Most probable homology coset of the error given a perfect syndrome.

    Sums ``p^|E| (1-p)^(n-|E|)`` over every error pattern E with the given
    syndrome, grouped by :func:`coset_label`.  Ties go to the all-zero label
    (then to the smallest label).  Only for codes with at most 16 qubits.
    """
    if not (0 <= p <= 1):
        raise ValueError("p must lie in [0, 1]")
    sector = _sector_of_chain(syndrome)
    table, n_cls = _coset_probabilities(code, p, sector)
    sid = sum(1 << c for c in syndrome.cells)
    return HomologyClass(_labels(_argmax_trivial(table[sid]), n_cls))


def exact_failure_probability(code: SurfaceCode, p: float, decoder: str = "ml", sector: str = "Z") -> float:
    """Exact logical failure probability of one sector by full enumeration.

    ``decoder`` is ``"ml"`` or ``"mwpm"``; recovery fails when the decoder's
    coset differs from the coset of the actual error.
    """
    table, n_cls = _coset_probabilities(code, p, sector)
    n_checks = table.shape[0].bit_length() - 1
    ok = 0.0
    cfg = DecoderConfig(p=min(max(p, 1e-9), 0.5 - 1e-9))
    for sid in np.flatnonzero(table.sum(axis=1) > 0):
        row = table[sid]
        if decoder == "ml":
            cid = _argmax_trivial(row)
        elif decoder == "mwpm":
            checks = [c for c in range(n_checks) if (sid >> c) & 1]
            corr = decode_2d(code, np.array(checks, np.int64), cfg, sector)
            cid = sum(b << k for k, b in enumerate(coset_label(code, corr, sector).labels))
        else:
            raise ValueError(f"unknown decoder {decoder!r}")
        ok += row[cid]
    return float(1.0 - ok)


# ---------------------------------------------------------------------------
# Overlapping-window recovery
# ---------------------------------------------------------------------------


@dataclass
class WindowState:
    """Events still awaiting a decision, with absolute round stamps, and the
    number of rounds consumed so far."""

    T: int
    sector: str = "Z"
    events: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), np.int64))
    t_end: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("window T must be >= 1")
        self.events = np.asarray(self.events, dtype=np.int64).reshape(-1, 2)


def window_step(
    state: WindowState, code: SurfaceCode, new_events, cfg: DecoderConfig, n_rounds: int | None = None
) -> tuple[Chain, WindowState]:
    """One step of overlapping recovery.

    ``new_events`` holds the events of the next ``n_rounds`` (default T)
    rounds, stamped in ``[state.t_end, state.t_end + n_rounds)``.  Retained
    and new events are matched together; any event may instead end on the
    current final time slice at cost ``(t_end - t) * w_v``, or on a spatial
    boundary.  Chains whose monopoles all predate the newly added rounds and
    that do not reach the final slice are finalized: their projection is
    returned and their events forgotten.  The rest stay in the state.
    """
    n_rounds = state.T if n_rounds is None else n_rounds
    new_events = np.asarray(new_events, dtype=np.int64).reshape(-1, 2)
    t_new_end = state.t_end + n_rounds
    if len(new_events) and (
        new_events[:, 1].min() < state.t_end or new_events[:, 1].max() >= t_new_end
    ):
        raise ValueError("new events fall outside the incoming rounds")
    ev = np.concatenate([state.events, new_events])
    geo = sector_geometry(code, state.sector)
    checks, rounds = ev[:, 0], ev[:, 1]
    wh, wv = cfg.int_weight_h, cfg.int_weight_v
    dist = _spacetime_costs(geo, checks, rounds, wh, wv)

    k = len(ev)
    space = geo.boundary_distance(checks)
    space_cost = None if space is None else space.astype(np.int64) * wh
    time_cost = None if wv is None else (t_new_end - rounds).astype(np.int64) * wv
    if space_cost is None and time_cost is None:
        bcost, to_time = None, None
    elif time_cost is None:
        bcost, to_time = space_cost, np.zeros(k, bool)
    elif space_cost is None:
        bcost, to_time = time_cost, np.ones(k, bool)
    else:
        to_time = time_cost < space_cost
        bcost = np.where(to_time, time_cost, space_cost)

    pairs = _match(dist, bcost)
    final_pairs, keep = [], []
    for a, b in pairs:
        members = [a] if b == -1 else [a, b]
        old = all(rounds[m] < state.t_end for m in members)
        if old and not (b == -1 and to_time[a]):
            final_pairs.append((a, b))
        else:
            keep.extend(members)
    corr = _apply_pairs(geo, checks, final_pairs)
    kept = ev[sorted(keep)] if keep else np.zeros((0, 2), np.int64)
    order = np.lexsort((kept[:, 0], kept[:, 1])) if len(kept) else []
    new_state = WindowState(state.T, state.sector, kept[order], t_new_end)
    return Chain.from_mask(1, corr), new_state


def window_flush(state: WindowState, code: SurfaceCode, final_events, cfg: DecoderConfig) -> Chain:
    """Decode every retained event together with the events of a closing
    perfect round; nothing may end on the time boundary."""
    final_events = np.asarray(final_events, dtype=np.int64).reshape(-1, 2)
    ev = np.concatenate([state.events, final_events])
    return decode_events(code, ev, cfg, state.sector).chain()


def decode_windowed(code: SurfaceCode, events: MonopoleSet, cfg: DecoderConfig, sector: str = "Z") -> Chain:
    """Overlapping recovery over a history closed by a perfect final round."""
    T = cfg.window_T or code.L
    ev = events.sector(sector)
    last = events.rounds - 1
    state = WindowState(T, sector)
    total = np.zeros(code.n_qubits, bool)
    while state.t_end < last:
        n = min(T, last - state.t_end)
        sel = (ev[:, 1] >= state.t_end) & (ev[:, 1] < state.t_end + n)
        corr, state = window_step(state, code, ev[sel], cfg, n_rounds=n)
        total ^= corr.mask(code.n_qubits)
    corr = window_flush(state, code, ev[ev[:, 1] == last], cfg)
    total ^= corr.mask(code.n_qubits)
    return Chain.from_mask(1, total)


# ---------------------------------------------------------------------------
# Destructive readout
# ---------------------------------------------------------------------------


def readout_logical(
    code: SurfaceCode, measured_bits, cfg: DecoderConfig | None = None, basis: str = "Z", qubit: int = 0
) -> int:
    """Logical outcome of a transversal single-qubit measurement.

    The check parities implied by the bits locate defects, a 2D matching
    removes them, and the parity along a logical representative is returned.
    ``basis="Z"`` reads Z-bar (bit flips matter, plaquette parities);
    ``basis="X"`` reads X-bar from X-basis outcomes (site parities).
    """
    bits = np.asarray(measured_bits).astype(bool)
    if bits.shape != (code.n_qubits,):
        raise ValueError(f"expected {code.n_qubits} bits, got shape {bits.shape}")
    if basis == "Z":
        sector, check_type, rep = "X", "plaquette", code.logical_z[qubit]
    elif basis == "X":
        sector, check_type, rep = "Z", "site", code.logical_x[qubit]
    else:
        raise ValueError(f"unknown basis {basis!r}")
    parities = incidence(code, check_type) @ bits.astype(np.int64) % 2
    defects = np.flatnonzero(parities)
    corr = _decode_2d(code, defects, cfg, sector).correction
    fixed = bits ^ corr
    return int(np.count_nonzero(fixed[list(rep.cells)]) % 2)
