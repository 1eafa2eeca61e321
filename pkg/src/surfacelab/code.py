"""Toric and planar surface codes built on :mod:`surfacelab.homology`.

Qubits live on links.  Site stars (X-type) detect phase flips and plaquette
boundaries (Z-type) detect bit flips.  Checks are kept as link-index tuples;
the toric code keeps all of its redundant checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .homology import (
    DEFAULT_PLANAR_LABELS,
    Chain,
    Lattice,
    boundary,
    build_lattice,
    coboundary,
    homology_class,
)

__all__ = [
    "SurfaceCode",
    "PauliErrorState",
    "LogicalAction",
    "build_toric_code",
    "build_planar_code",
    "syndrome_of",
    "logical_effect",
]


@dataclass(frozen=True, eq=False)
class SurfaceCode:
    """A surface code on a 2D lattice.

    Attributes
    ----------
    lattice : Lattice
    x_checks : tuple of tuple of int
        Site stars, one per site, as sorted link indices.
    z_checks : tuple of tuple of int
        Plaquette boundaries, one per plaquette.
    logical_z, logical_x : tuple of Chain
        Representatives, indexed by encoded qubit.  ``logical_z[i]`` and
        ``logical_x[i]`` overlap on an odd number of links; all other pairs
        overlap evenly.
    """

    lattice: Lattice
    x_checks: tuple
    z_checks: tuple
    logical_z: tuple
    logical_x: tuple
    distance: int
    _xz_masks: tuple = field(default=(), repr=False)

    @property
    def n_qubits(self) -> int:
        return self.lattice.n_cells(1)

    @property
    def n_logical(self) -> int:
        return len(self.logical_z)

    @property
    def L(self) -> int:
        return self.lattice.L

    @property
    def kind(self) -> str:
        return "toric" if self.lattice.periodic else "planar"

    def check_matrix(self, which: str) -> np.ndarray:
        """Dense 0/1 matrix of the X (``"x"``) or Z (``"z"``) checks."""
        checks = self.x_checks if which == "x" else self.z_checks
        m = np.zeros((len(checks), self.n_qubits), dtype=np.uint8)
        for i, c in enumerate(checks):
            m[i, list(c)] = 1
        return m

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "L": self.L,
                "n_qubits": self.n_qubits,
                "x_checks": [list(c) for c in self.x_checks],
                "z_checks": [list(c) for c in self.z_checks],
                "logical_z": [list(c.cells) for c in self.logical_z],
                "logical_x": [list(c.cells) for c in self.logical_x],
                "distance": self.distance,
            }
        )


@dataclass
class PauliErrorState:
    """Bit-flip and phase-flip chains on the links.  A Y error is a link in
    both chains."""

    x_errors: Chain = field(default_factory=lambda: Chain(1))
    z_errors: Chain = field(default_factory=lambda: Chain(1))

    def __post_init__(self):
        if self.x_errors.degree != 1 or self.z_errors.degree != 1:
            raise ValueError("error chains must be 1-chains")


@dataclass(frozen=True)
class LogicalAction:
    """Pauli acting on each encoded qubit, as a string from ``"IXYZ"``."""

    paulis: tuple[str, ...]

    @property
    def identity(self) -> bool:
        return all(p == "I" for p in self.paulis)

    @classmethod
    def from_bits(cls, x_bits, z_bits) -> "LogicalAction":
        table = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
        return cls(tuple(table[(int(a), int(b))] for a, b in zip(x_bits, z_bits)))

    def __str__(self) -> str:
        return "".join(self.paulis)


def _checks(lattice: Lattice):
    cof = lattice.cofaces(0)
    x_checks = tuple(tuple(sorted(int(j) for j in row if j >= 0)) for row in cof)
    f = lattice.faces(2)
    z_checks = tuple(tuple(sorted(int(j) for j in row if j >= 0)) for row in f)
    return x_checks, z_checks


def _links(lattice: Lattice, axis: int, **pinned) -> Chain:
    coords = lattice.coords(1)
    m = lattice.orientation_ids(1) == axis
    for name, val in pinned.items():
        m &= coords[:, "xy".index(name)] == val
    return Chain.from_mask(1, m)


def build_toric_code(L: int) -> SurfaceCode:
    """Toric code on the L x L torus: 2L^2 qubits, 2 encoded qubits."""
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    lat = build_lattice(2, L, "periodic")
    xc, zc = _checks(lat)
    # Z1 winds x, Z2 winds y; X_i is the dual loop crossing Z_i once
    logical_z = (_links(lat, 0, y=0), _links(lat, 1, x=0))
    logical_x = (_links(lat, 0, x=0), _links(lat, 1, y=0))
    return SurfaceCode(lat, xc, zc, logical_z, logical_x, L)


def build_planar_code(L: int) -> SurfaceCode:
    """Planar code with rough north/south and smooth east/west sides:
    L^2 + (L-1)^2 qubits, one encoded qubit."""
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    lat = build_lattice(2, L, "planar", DEFAULT_PLANAR_LABELS)
    xc, zc = _checks(lat)
    logical_z = (_links(lat, 1, x=0),)  # rough to rough
    logical_x = (_links(lat, 1, y=0),)  # smooth to smooth, on the dual
    return SurfaceCode(lat, xc, zc, logical_z, logical_x, L)


def syndrome_of(code: SurfaceCode, errors: PauliErrorState) -> tuple[Chain, Chain]:
    """Site defects (from phase flips) and plaquette defects (from bit flips)."""
    return boundary(errors.z_errors, code.lattice), coboundary(errors.x_errors, code.lattice)


def logical_effect(code: SurfaceCode, residual_z: Chain, residual_x: Chain) -> LogicalAction:
    """Logical action of residual chains that have no syndrome.

    A phase-flip cycle acts as Z on qubit i when it crosses ``logical_x[i]``
    an odd number of times; a bit-flip cycle acts as X on qubit i when it
    crosses ``logical_z[i]`` oddly.
    """
    z_bits = homology_class(residual_z, code.lattice).labels
    x_bits = homology_class(residual_x, code.lattice, dual=True).labels
    return LogicalAction.from_bits(x_bits, z_bits)
