"""Z2 chain complexes on hypercubic lattices.

A :class:`Lattice` is a cell complex in which a k-cell is identified by its
base coordinates and the set of k axes it spans.  Cells of each degree are
numbered row-major by coordinates, then by orientation (the sorted axis tuple,
in lexicographic order).  That numbering is frozen: serialized chains are
plain sorted index lists.

Two layouts are supported:

* ``periodic``: the d-torus, d in {2, 3, 4}.
* ``planar``: the 2D surface-code sheet with rough north/south sides and
  smooth east/west sides.  Sites sit at ``y in [1, L-1]``; the rows ``y = 0``
  and ``y = L`` are the rough edges and are not part of the complex, so
  boundaries computed here are automatically relative to the rough edges.
  Coboundaries (the dual picture) are automatically relative to the smooth
  edges because the plaquettes beyond ``x = 0`` and ``x = L-1`` do not exist.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "Lattice",
    "Chain",
    "HomologyClass",
    "NotACycleError",
    "build_lattice",
    "boundary",
    "coboundary",
    "homology_class",
]

PERIODIC = "periodic"
PLANAR = "planar"
DEFAULT_PLANAR_LABELS = {"N": "rough", "S": "rough", "E": "smooth", "W": "smooth"}


class NotACycleError(ValueError):
    """Raised when a chain that must be a (relative) cycle has a boundary."""

    def __init__(self, cell: int, degree: int, dual: bool = False):
        self.cell = cell
        self.degree = degree
        kind = "coboundary" if dual else "boundary"
        super().__init__(f"chain is not a cycle: {kind} contains {degree}-cell {cell}")


@dataclass(frozen=True, eq=False)
class Lattice:
    """Hypercubic cell complex.

    Attributes
    ----------
    dimension : int
    extents : tuple of int
        Number of unit steps per axis.
    boundary_kind : {"periodic", "planar"}
    edge_labels : mapping or None
        Side label (``"rough"``/``"smooth"``) for planar lattices.
    """

    dimension: int
    extents: tuple[int, ...]
    boundary_kind: str
    edge_labels: Mapping[str, str] | None = None
    # per degree k: (n_k, d) coordinates and (n_k,) orientation ids
    _coords: tuple = field(default=(), repr=False)
    _orient: tuple = field(default=(), repr=False)
    _faces: tuple = field(default=(), repr=False)

    @property
    def periodic(self) -> bool:
        return self.boundary_kind == PERIODIC

    @property
    def L(self) -> int:
        return max(self.extents)

    def orientations(self, k: int) -> list[tuple[int, ...]]:
        return list(itertools.combinations(range(self.dimension), k))

    def n_cells(self, k: int) -> int:
        return len(self._orient[k])

    def coords(self, k: int) -> np.ndarray:
        return self._coords[k]

    def orientation_ids(self, k: int) -> np.ndarray:
        return self._orient[k]

    def faces(self, k: int) -> np.ndarray:
        """``(n_k, 2k)`` array of (k-1)-cell indices; -1 where the face is
        outside the complex (rough edge)."""
        return self._faces[k]

    @cached_property
    def _index_maps(self):
        maps = []
        for k in range(self.dimension + 1):
            lookup = {}
            for i, (c, o) in enumerate(zip(self._coords[k], self._orient[k])):
                lookup[(tuple(int(v) for v in c), int(o))] = i
            maps.append(lookup)
        return maps

    def index(self, k: int, coords: Iterable[int], axes: Iterable[int] = ()) -> int:
        """Index of the k-cell with base ``coords`` spanning ``axes``."""
        axes = tuple(sorted(axes))
        if len(axes) != k:
            raise ValueError(f"a {k}-cell spans exactly {k} axes")
        coords = tuple(int(c) for c in coords)
        if self.periodic:
            coords = tuple(c % e for c, e in zip(coords, self.extents))
        o = self.orientations(k).index(axes)
        try:
            return self._index_maps[k][(coords, o)]
        except KeyError:
            raise KeyError(f"no {k}-cell at {coords} spanning {axes}") from None

    def cell(self, k: int, index: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Inverse of :meth:`index`: ``(coords, axes)``."""
        c = tuple(int(v) for v in self._coords[k][index])
        return c, self.orientations(k)[int(self._orient[k][index])]

    @cached_property
    def _cofaces(self):
        out = [None]
        for k in range(1, self.dimension + 1):
            f = self._faces[k]
            n_low = self.n_cells(k - 1)
            lists = [[] for _ in range(n_low)]
            for i, row in enumerate(f):
                for j in row:
                    if j >= 0:
                        lists[j].append(i)
            width = 2 * (self.dimension - k + 1)
            arr = np.full((n_low, width), -1, dtype=np.int64)
            for j, cells in enumerate(lists):
                arr[j, : len(cells)] = cells
            out.append(arr)
        return out

    def cofaces(self, k: int) -> np.ndarray:
        """``(n_k, 2(d-k))`` array of (k+1)-cells containing each k-cell; -1
        padding where a coface is absent (smooth edge)."""
        return self._cofaces[k + 1]


def _enumerate_cells(dimension, extents, valid):
    coords_by_k, orient_by_k = [], []
    ranges = [range(-1, e + 1) for e in extents] if valid else [range(e) for e in extents]
    for k in range(dimension + 1):
        orients = list(itertools.combinations(range(dimension), k))
        cs, os_ = [], []
        for c in itertools.product(*ranges):
            for oi, axes in enumerate(orients):
                if valid is None or valid(k, c, axes):
                    cs.append(c)
                    os_.append(oi)
        coords_by_k.append(np.array(cs, dtype=np.int64).reshape(-1, dimension))
        orient_by_k.append(np.array(os_, dtype=np.int64))
    return coords_by_k, orient_by_k


def _face_table(dimension, extents, periodic, coords_by_k, orient_by_k):
    faces_by_k = [np.zeros((len(orient_by_k[0]), 0), dtype=np.int64)]
    for k in range(1, dimension + 1):
        lower = {}
        lower_orients = list(itertools.combinations(range(dimension), k - 1))
        for i, (c, o) in enumerate(zip(coords_by_k[k - 1], orient_by_k[k - 1])):
            lower[(tuple(int(v) for v in c), int(o))] = i
        orients = list(itertools.combinations(range(dimension), k))
        table = np.full((len(orient_by_k[k]), 2 * k), -1, dtype=np.int64)
        for i, (c, o) in enumerate(zip(coords_by_k[k], orient_by_k[k])):
            axes = orients[int(o)]
            col = 0
            for a in axes:
                rest = tuple(b for b in axes if b != a)
                ro = lower_orients.index(rest)
                for shift in (0, 1):
                    cc = [int(v) for v in c]
                    cc[a] += shift
                    if periodic:
                        cc = [v % e for v, e in zip(cc, extents)]
                    table[i, col] = lower.get((tuple(cc), ro), -1)
                    col += 1
        faces_by_k.append(table)
    return faces_by_k


def _planar_valid(L):
    # open grid x in [0, L-1], y in [0, L]; sites strictly inside in y
    def valid(k, c, axes):
        x, y = c
        if k == 0:
            return 0 <= x <= L - 1 and 1 <= y <= L - 1
        if k == 1:
            if axes == (0,):
                return 0 <= x < L - 1 and 1 <= y <= L - 1
            return 0 <= x <= L - 1 and 0 <= y < L
        return 0 <= x < L - 1 and 0 <= y < L

    return valid


def build_lattice(
    d: int,
    L: int,
    boundary_kind: str = PERIODIC,
    edge_labels: Mapping[str, str] | None = None,
) -> Lattice:
    """Construct a d-dimensional hypercubic complex of linear size ``L``.

    Planar lattices are 2D only, with rough north/south and smooth east/west
    sides; ``edge_labels`` must be given for (and only for) planar lattices.
    """
    if d not in (2, 3, 4):
        raise ValueError(f"dimension must be 2, 3 or 4, got {d}")
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    if boundary_kind == PERIODIC:
        if edge_labels is not None:
            raise ValueError("edge labels only apply to planar lattices")
        extents = (L,) * d
        coords, orient = _enumerate_cells(d, extents, None)
        faces = _face_table(d, extents, True, coords, orient)
        return Lattice(d, extents, PERIODIC, None, tuple(coords), tuple(orient), tuple(faces))
    if boundary_kind != PLANAR:
        raise ValueError(f"unknown boundary kind {boundary_kind!r}")
    if d != 2:
        raise ValueError("planar layout is defined for d=2 only")
    if edge_labels is None:
        raise ValueError("planar lattice needs edge_labels")
    labels = {k.upper(): v.lower() for k, v in dict(edge_labels).items()}
    if labels != DEFAULT_PLANAR_LABELS:
        raise ValueError(
            "planar lattice supports rough N/S and smooth E/W sides, got " f"{edge_labels}"
        )
    extents = (L - 1, L)
    coords, orient = _enumerate_cells(2, extents, _planar_valid(L))
    faces = _face_table(2, extents, False, coords, orient)
    return Lattice(2, extents, PLANAR, dict(labels), tuple(coords), tuple(orient), tuple(faces))


# ---------------------------------------------------------------------------
# Chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chain:
    """Sparse Z2 k-chain: the sorted set of k-cell indices with coefficient 1."""

    degree: int
    cells: tuple[int, ...] = ()

    def __post_init__(self):
        arr = np.unique(np.asarray(self.cells, dtype=np.int64))
        object.__setattr__(self, "cells", tuple(int(c) for c in arr))

    @classmethod
    def from_mask(cls, degree: int, mask: np.ndarray) -> "Chain":
        return cls(degree, tuple(np.flatnonzero(mask)))

    def mask(self, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=bool)
        out[list(self.cells)] = True
        return out

    def __add__(self, other: "Chain") -> "Chain":
        if not isinstance(other, Chain):
            return NotImplemented
        if other.degree != self.degree:
            raise ValueError(f"cannot add {self.degree}-chain and {other.degree}-chain")
        return Chain(self.degree, tuple(set(self.cells) ^ set(other.cells)))

    def __len__(self) -> int:
        return len(self.cells)

    def __bool__(self) -> bool:
        return bool(self.cells)

    def to_json(self) -> dict:
        return {"degree": self.degree, "cells": list(self.cells)}

    @classmethod
    def from_json(cls, data: Mapping) -> "Chain":
        return cls(int(data["degree"]), tuple(data["cells"]))


def _odd(indices: np.ndarray, n: int) -> np.ndarray:
    indices = indices[indices >= 0]
    return np.bincount(indices, minlength=n) % 2 == 1


def boundary(chain: Chain, lattice: Lattice) -> Chain:
    """Boundary of a k-chain (k >= 1); on planar lattices, relative to the
    rough edges."""
    k = chain.degree
    if k < 1:
        raise ValueError("boundary of a 0-chain is not defined here")
    if not chain.cells:
        return Chain(k - 1)
    f = lattice.faces(k)[list(chain.cells)].ravel()
    return Chain.from_mask(k - 1, _odd(f, lattice.n_cells(k - 1)))


def coboundary(chain: Chain, lattice: Lattice) -> Chain:
    """Coboundary of a k-chain: the (k+1)-cells with odd incidence.  This is
    the boundary in the dual complex; on planar lattices, relative to the
    smooth edges."""
    k = chain.degree
    if k >= lattice.dimension:
        raise ValueError("coboundary of a top-dimensional chain is not defined")
    if not chain.cells:
        return Chain(k + 1)
    f = lattice.cofaces(k)[list(chain.cells)].ravel()
    return Chain.from_mask(k + 1, _odd(f, lattice.n_cells(k + 1)))


# ---------------------------------------------------------------------------
# Homology classes via transversal cuts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HomologyClass:
    """Winding parities, one bit per homology generator."""

    labels: tuple[int, ...]

    @property
    def trivial(self) -> bool:
        return not any(self.labels)

    def __xor__(self, other: "HomologyClass") -> "HomologyClass":
        return HomologyClass(tuple(a ^ b for a, b in zip(self.labels, other.labels)))


def cut_masks(lattice: Lattice, k: int, dual: bool = False) -> list[np.ndarray]:
    """Boolean masks over k-cells, one per homology generator.

    Periodic, primal: for each k-subset S of axes, the cells spanning S with
    ``x_a = 0`` for every ``a in S``.  Periodic, dual: the cells spanning S
    with ``x_a = 0`` for every ``a not in S``.  Planar (k = 1): primal cut is
    the row of vertical links at ``y = 0``; dual cut is the column of vertical
    links at ``x = 0``.
    """
    coords = lattice.coords(k)
    orient = lattice.orientation_ids(k)
    if lattice.periodic:
        masks = []
        for oi, axes in enumerate(lattice.orientations(k)):
            pinned = axes if not dual else [a for a in range(lattice.dimension) if a not in axes]
            m = orient == oi
            for a in pinned:
                m &= coords[:, a] == 0
            masks.append(m)
        return masks
    if k != 1:
        raise ValueError("planar homology is defined for 1-chains only")
    vertical = orient == 1
    if dual:
        return [vertical & (coords[:, 0] == 0)]
    return [vertical & (coords[:, 1] == 0)]


def homology_class(cycle: Chain, lattice: Lattice, dual: bool = False) -> HomologyClass:
    """Classify a (relative) cycle by its intersection parity with fixed cuts.

    With ``dual=True`` the k-chain is read as a (d-k)-chain on the dual
    lattice and must have empty coboundary.
    """
    k = cycle.degree
    if dual:
        check = coboundary(cycle, lattice) if k < lattice.dimension else Chain(k + 1)
    else:
        check = boundary(cycle, lattice) if k >= 1 else Chain(-1)
    if check.cells:
        raise NotACycleError(check.cells[0], check.degree, dual)
    mask = cycle.mask(lattice.n_cells(k))
    return HomologyClass(tuple(int(np.count_nonzero(mask & m) % 2) for m in cut_masks(lattice, k, dual)))
