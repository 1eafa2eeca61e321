"""Four-dimensional toric code with a local recovery rule.

Qubits sit on the plaquettes of the periodic 4D hypercubic lattice and each
link carries a six-plaquette check.  A set of flipped plaquettes E has the
link syndrome ``boundary(E)``: a closed "string" that recovery must shrink.
Only this one sector is simulated; the cube-check sector is its mirror image.

The local rule looks at one plaquette and the number n of its four links
carrying string: always flip for n >= 3, never for n <= 1, and flip with
probability 1/2 for n = 2.  Plaquettes are updated in link-disjoint sets so
that every update in a set sees a consistent syndrome.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import expit

from .homology import Chain, Lattice, build_lattice, cut_masks, homology_class

__all__ = [
    "FourDState",
    "UpdateSchedule",
    "RelaxationResult",
    "build_4d_toric",
    "build_schedule",
    "local_update_round",
    "heat_bath_round",
    "heat_bath_flip_probability",
    "cleanup",
    "is_frozen",
    "relaxation_experiment",
]

L_RANGE = (2, 5)


@dataclass(frozen=True, eq=False)
class UpdateSchedule:
    """Link-disjoint plaquette sets, applied round-robin."""

    sets: tuple

    def __len__(self) -> int:
        return len(self.sets)


@lru_cache(maxsize=8)
def _lattice(L: int) -> Lattice:
    return build_lattice(4, L, "periodic")


def build_schedule(lattice: Lattice) -> UpdateSchedule:
    """Color each plaquette by its orientation and the parity of its base
    coordinate along each of its two axes.

    Plaquettes of one orientation that share a link are neighbours along one
    of their own axes, so they differ in that coordinate's color.  On odd L
    the last coordinate gets a third color so the wrap-around neighbours
    differ too.  Even L gives 6 x 4 = 24 sets.
    """
    L = lattice.L
    coords = lattice.coords(2)
    orient = lattice.orientation_ids(2)
    colors = coords % 2
    if L % 2:
        colors = np.where(coords == L - 1, 2, colors)
    n_col = 2 if L % 2 == 0 else 3
    sets = []
    for oi, (a, b) in enumerate(lattice.orientations(2)):
        for ca in range(n_col):
            for cb in range(n_col):
                m = (orient == oi) & (colors[:, a] == ca) & (colors[:, b] == cb)
                if m.any():
                    sets.append(np.flatnonzero(m))
    return UpdateSchedule(tuple(sets))


@dataclass
class FourDState:
    """Plaquette flips and their link syndrome.

    ``plaquettes[i]`` is the net flip of plaquette i relative to the encoded
    state; ``string[l]`` is the syndrome on link l, kept equal to the
    boundary of ``plaquettes``.
    """

    L: int
    plaquettes: np.ndarray
    string: np.ndarray
    schedule: UpdateSchedule
    step: int = 0
    faces: np.ndarray = field(default=None, repr=False)

    @property
    def lattice(self) -> Lattice:
        return _lattice(self.L)

    @property
    def string_length(self) -> int:
        return int(np.count_nonzero(self.string))

    def flip(self, plaquettes) -> None:
        """Flip plaquettes (repeats cancel) and update the string."""
        idx = np.asarray(plaquettes, dtype=np.int64).ravel()
        odd = np.bincount(idx, minlength=len(self.plaquettes)) % 2 == 1
        self.plaquettes ^= odd
        links = self.faces[np.flatnonzero(odd)].ravel()
        self.string ^= np.bincount(links, minlength=len(self.string)) % 2 == 1

    def check_cycle(self) -> bool:
        """Every site touches an even number of string links."""
        lat = self.lattice
        ends = lat.faces(1)[np.flatnonzero(self.string)].ravel()
        return not (np.bincount(ends, minlength=lat.n_cells(0)) % 2).any()

    def copy(self) -> "FourDState":
        return FourDState(
            self.L, self.plaquettes.copy(), self.string.copy(), self.schedule, self.step, self.faces
        )


def build_4d_toric(L: int) -> FourDState:
    """All-zero state on the L^4 torus (6 L^4 plaquettes, 4 L^4 links)."""
    if not (L_RANGE[0] <= L <= L_RANGE[1]):
        raise ValueError(f"L must be in [{L_RANGE[0]}, {L_RANGE[1]}], got {L}")
    lat = _lattice(L)
    return FourDState(
        L,
        np.zeros(lat.n_cells(2), bool),
        np.zeros(lat.n_cells(1), bool),
        build_schedule(lat),
        0,
        lat.faces(2),
    )


def _string_counts(state: FourDState, idx: np.ndarray) -> np.ndarray:
    return state.string[state.faces[idx]].sum(axis=1)


def _apply_set(state: FourDState, idx: np.ndarray, flip_prob: np.ndarray, rng) -> None:
    n = _string_counts(state, idx)
    prob = flip_prob[n]
    u = rng.random(len(idx))
    chosen = idx[u < prob]
    # sets are link-disjoint, so plain XOR is exact
    state.plaquettes[chosen] ^= True
    state.string[state.faces[chosen].ravel()] ^= True
    state.step += 1


LOCAL_RULE = np.array([0.0, 0.0, 0.5, 1.0, 1.0])


def local_update_round(state: FourDState, rng) -> FourDState:
    """Apply the local rule to the next schedule set (in place)."""
    idx = state.schedule.sets[state.step % len(state.schedule)]
    _apply_set(state, idx, LOCAL_RULE, rng)
    return state


def heat_bath_flip_probability(beta: float) -> np.ndarray:
    """Flip probability by string count n = 0..4.

    Flipping changes the string length by ``4 - 2n``; the heat-bath choice
    ``P(flip) = w / (1 + w)`` with ``w = exp(-beta (4 - 2n))`` makes the
    flip/stay ratio exactly the Boltzmann factor.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    n = np.arange(5)
    return expit(-beta * (4 - 2 * n))


def heat_bath_round(state: FourDState, beta: float, rng) -> FourDState:
    """Heat-bath update of the next schedule set (in place)."""
    idx = state.schedule.sets[state.step % len(state.schedule)]
    _apply_set(state, idx, heat_bath_flip_probability(beta), rng)
    return state


def is_frozen(state: FourDState) -> bool:
    """True when no plaquette holds two or more string links, so the local
    rule can never move the string again."""
    return not (state.string[state.faces].sum(axis=1) >= 2).any()


def _straight_lines(state: FourDState):
    # a frozen string has no corners, so it is a union of straight lines
    # that each wind the torus once
    lat = state.lattice
    L = state.L
    links = np.flatnonzero(state.string)
    coords = lat.coords(1)[links]
    axis = lat.orientation_ids(1)[links]  # 1-cell orientation id == axis
    lines = {}
    for c, a in zip(coords, axis):
        key = (int(a), tuple(int(v) for i, v in enumerate(c) if i != a))
        lines[key] = lines.get(key, 0) + 1
    if any(n != L for n in lines.values()):
        raise RuntimeError("frozen string is not a union of straight lines")
    return sorted(lines)


def _sweep_line(state: FourDState, a: int, point: list, b: int, direction: int) -> list:
    # Flip the strip of (a, b) plaquettes next to the line, moving it one
    # step along b.  Returns the new transverse position.
    lat = state.lattice
    L = state.L
    others = [i for i in range(4) if i != a]
    base = [0] * 4
    for i, v in zip(others, point):
        base[i] = v
    j = others.index(b)
    if direction < 0:
        base[b] = (base[b] - 1) % L
    strip = []
    for xa in range(L):
        base[a] = xa
        strip.append(lat.index(2, base, (a, b)))
    state.flip(strip)
    moved = list(point)
    moved[j] = (moved[j] + direction) % L
    return moved


def _fill_lines(state: FourDState) -> None:
    from .matching import min_weight_perfect_matching_dense

    L = state.L
    by_axis = {}
    for a, point in _straight_lines(state):
        by_axis.setdefault(a, []).append(point)
    for a, points in by_axis.items():
        if len(points) % 2:
            raise RuntimeError("odd number of parallel lines cannot bound a surface")
        pts = np.array(points)
        d = np.abs(pts[:, None, :] - pts[None, :, :])
        dist = np.minimum(d, L - d).sum(axis=2)
        np.fill_diagonal(dist, -1)
        others = [i for i in range(4) if i != a]
        for i, j in min_weight_perfect_matching_dense(dist).pairs:
            cur, target = list(points[i]), list(points[j])
            for k, b in enumerate(others):
                step = (target[k] - cur[k]) % L
                direction = 1 if step <= L - step else -1
                for _ in range(step if direction > 0 else L - step):
                    cur = _sweep_line(state, a, cur, b, direction)


def _gf2_solve(faces: np.ndarray, n_rows: int, rhs: np.ndarray) -> np.ndarray:
    # Solve A x = rhs over GF(2), where column c of A has ones at faces[c].
    # Rows are bit-packed into uint64 words with rhs as the last column.
    n_cols = len(faces)
    m = np.zeros((n_rows, (n_cols + 64) // 64), dtype=np.uint64)
    cols = np.arange(n_cols)
    bits = np.left_shift(np.uint64(1), (cols % 64).astype(np.uint64))
    for j in range(faces.shape[1]):
        np.bitwise_xor.at(m, (faces[:, j], cols // 64), bits)
    m[np.flatnonzero(rhs), n_cols // 64] ^= np.uint64(1) << np.uint64(n_cols % 64)

    def column(c, start=0):
        return (m[start:, c // 64] >> np.uint64(c % 64)) & np.uint64(1)

    row, pivots = 0, []
    for c in range(n_cols):
        nz = np.flatnonzero(column(c, row))
        if not len(nz):
            continue
        r = row + nz[0]
        if r != row:
            m[[row, r]] = m[[r, row]]
        hit = np.flatnonzero(column(c))
        hit = hit[hit != row]
        m[hit] ^= m[row]
        pivots.append(c)
        row += 1
        if row == n_rows:
            break
    b = column(n_cols).astype(bool)
    if b[row:].any():
        raise RuntimeError("string is not a boundary")
    x = np.zeros(n_cols, dtype=bool)
    x[pivots] = b[: len(pivots)]
    return x


def _descend(surface: np.ndarray, cubes: np.ndarray) -> np.ndarray:
    # greedy weight reduction by adding cube boundaries, which keeps both
    # the boundary and the homology class of the surface
    s = surface.copy()
    changed = True
    while changed:
        changed = False
        for c in np.flatnonzero(s[cubes].sum(axis=1) >= 4):
            if s[cubes[c]].sum() >= 4:
                s[cubes[c]] ^= True
                changed = True
    return s


def _membrane_fill(state: FourDState) -> None:
    """Flip a small surface whose boundary is the current string.

    This is the classical fallback for strings the local rule cannot shrink.
    One filling comes from a GF(2) solve; the other 63 differ from it by
    nontrivial 2-cycles.  Each candidate is reduced by cube moves and the
    lightest is applied (ties go to the lowest class index).
    """
    lat = state.lattice
    x = _gf2_solve(state.faces, len(state.string), state.string)
    cubes = lat.faces(3)
    sheets = cut_masks(lat, 2, dual=True)
    best = None
    for combo in range(1 << len(sheets)):
        s = x.copy()
        for i, sheet in enumerate(sheets):
            if combo >> i & 1:
                s ^= sheet
        s = _descend(s, cubes)
        if best is None or s.sum() < best.sum():
            best = s
    state.flip(np.flatnonzero(best))


def cleanup(state: FourDState, rng, max_rounds: int = 20000, patience: int = 20) -> bool:
    """Reliable noiseless cleanup.

    Runs the local rule until the string vanishes.  If it freezes first
    (only straight winding lines remain, which the rule never moves), the
    lines are paired by minimum total distance and swept into each other.
    The rule can also stall without freezing, for instance on loops that
    are confined to parallel planes and can never meet.  When the length has
    not dropped for ``patience`` schedule periods the string is filled by a
    membrane computed classically.  Returns ``False`` only if
    ``max_rounds`` pass with a string still present.
    """
    period = len(state.schedule)
    best, since = state.string_length, 0
    for r in range(max_rounds):
        if not state.string.any():
            return True
        if r % period == 0:
            if is_frozen(state):
                try:
                    _fill_lines(state)
                except RuntimeError:
                    _membrane_fill(state)
                return not state.string.any()
            n = state.string_length
            if n < best:
                best, since = n, 0
            else:
                since += 1
            if since > patience:
                _membrane_fill(state)
                return not state.string.any()
        local_update_round(state, rng)
    return not state.string.any()


@dataclass
class RelaxationResult:
    """String length after every noisy round and the final verdict.

    ``failed`` is true when the cleaned-up error is a nontrivial 2-cycle, or
    when cleanup hit its round cap (then ``converged`` is false and the class
    is unknown).
    """

    string_length: np.ndarray
    failed: bool
    converged: bool
    homology: tuple | None
    cleanup_rounds: int

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out)
        w.writerow(["round", "string_length"])
        for t, n in enumerate(self.string_length):
            w.writerow([t, int(n)])
        return out.getvalue()

    def mean_length(self, burn_in: int = 0) -> float:
        return float(np.mean(self.string_length[burn_in:]))


def relaxation_experiment(
    L: int,
    rate: float,
    n_rounds: int,
    rng,
    initial: FourDState | None = None,
    max_cleanup_rounds: int = 20000,
) -> RelaxationResult:
    """Noise then recovery, ``n_rounds`` times, followed by a reliable
    cleanup and a homology check.

    Each round flips every plaquette independently with probability
    ``rate`` and then applies the local rule to one schedule set.
    """
    if not (0 <= rate <= 1):
        raise ValueError("rate must lie in [0, 1]")
    state = build_4d_toric(L) if initial is None else initial.copy()
    series = np.empty(n_rounds, np.int64)
    n_p = len(state.plaquettes)
    for t in range(n_rounds):
        if rate > 0:
            hit = np.flatnonzero(rng.random(n_p) < rate)
            if len(hit):
                state.flip(hit)
        local_update_round(state, rng)
        series[t] = state.string_length
    start = state.step
    converged = cleanup(state, rng, max_cleanup_rounds)
    cls = None
    failed = True
    if converged:
        cls = homology_class(Chain.from_mask(2, state.plaquettes), state.lattice).labels
        failed = any(cls)
    return RelaxationResult(series, failed, converged, cls, state.step - start)
