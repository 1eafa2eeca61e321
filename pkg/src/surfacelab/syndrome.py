"""Measured syndrome histories and their detection events.

A record is the bit read out for each check in each round.  Detection events
("monopoles") sit where a check's record changes between consecutive rounds,
with an implicit all-trivial record before round 0.  The events are the
boundary of the spacetime error chain, which is all the decoder needs.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .code import SurfaceCode
from .noise import SpacetimeErrorHistory

__all__ = [
    "SyndromeHistory",
    "MonopoleSet",
    "measure_history",
    "extract_monopoles",
    "incidence",
    "dump_history",
    "load_history",
]

FORMAT_VERSION = 1
CHECK_TYPES = ("site", "plaquette")
SECTOR_CHECKS = {"Z": "site", "X": "plaquette"}


@lru_cache(maxsize=64)
def _incidence_cached(kind: str, L: int, check_type: str):
    from .code import build_planar_code, build_toric_code

    code = build_toric_code(L) if kind == "toric" else build_planar_code(L)
    return _build_incidence(code, check_type)


def _build_incidence(code: SurfaceCode, check_type: str) -> sp.csr_matrix:
    checks = code.x_checks if check_type == "site" else code.z_checks
    rows = np.repeat(np.arange(len(checks)), [len(c) for c in checks])
    cols = np.concatenate([np.asarray(c, np.int64) for c in checks])
    return sp.csr_matrix(
        (np.ones(len(cols), np.int32), (rows, cols)), shape=(len(checks), code.n_qubits)
    )


def incidence(code: SurfaceCode, check_type: str) -> sp.csr_matrix:
    """Sparse check-by-link incidence matrix for ``"site"`` or ``"plaquette"``
    checks."""
    if check_type not in CHECK_TYPES:
        raise ValueError(f"unknown check type {check_type!r}")
    return _incidence_cached(code.kind, code.L, check_type)


@dataclass
class SyndromeHistory:
    """Readout records, shape ``(rounds, n_checks)`` per check type.

    When ``final_round_perfect`` is set the last row is an extra error-free
    readout, so ``rounds = T + 1``.
    """

    site: np.ndarray
    plaquette: np.ndarray
    final_round_perfect: bool
    L: int
    kind: str = "toric"

    @property
    def rounds(self) -> int:
        return self.site.shape[0]

    def records(self, check_type: str) -> np.ndarray:
        return getattr(self, check_type)


@dataclass
class MonopoleSet:
    """Detection events as ``(check, round)`` integer arrays of shape
    ``(k, 2)``, sorted by round then check."""

    site: np.ndarray
    plaquette: np.ndarray
    rounds: int

    def events(self, check_type: str) -> np.ndarray:
        return getattr(self, check_type)

    def sector(self, name: str) -> np.ndarray:
        return self.events(SECTOR_CHECKS[name])

    def as_set(self, check_type: str) -> set:
        return {(int(c), int(t)) for c, t in self.events(check_type)}

    def __len__(self) -> int:
        return len(self.site) + len(self.plaquette)


def _syndromes(inc: sp.csr_matrix, errors: np.ndarray) -> np.ndarray:
    if not errors.any():
        return np.zeros((errors.shape[0], inc.shape[0]), bool)
    acc = np.bitwise_xor.accumulate(errors, axis=0)
    return (sp.csr_matrix(acc.astype(np.int32)) @ inc.T).toarray() % 2 == 1


def measure_history(
    code: SurfaceCode, history: SpacetimeErrorHistory, final_round_perfect: bool = True
) -> SyndromeHistory:
    """Readout of each round: syndrome of the accumulated qubit errors XOR the
    round's misreads.  Optionally append one misread-free round with no new
    qubit errors (a destructive final readout)."""
    out = {}
    for check_type, errors, misreads in (
        ("site", history.z_errors, history.site_misreads),
        ("plaquette", history.x_errors, history.plaquette_misreads),
    ):
        rec = _syndromes(incidence(code, check_type), errors) ^ misreads
        if final_round_perfect:
            last = _syndromes(incidence(code, check_type), errors)[-1:]
            rec = np.vstack([rec, last])
        out[check_type] = rec
    return SyndromeHistory(out["site"], out["plaquette"], final_round_perfect, code.L, code.kind)


def _events(rec: np.ndarray) -> np.ndarray:
    diff = rec.copy()
    diff[1:] ^= rec[:-1]
    t, c = np.nonzero(diff)
    return np.stack([c, t], axis=1).astype(np.int64) if len(t) else np.zeros((0, 2), np.int64)


def extract_monopoles(sh: SyndromeHistory) -> MonopoleSet:
    """Events at every change of a check's record."""
    return MonopoleSet(_events(sh.site), _events(sh.plaquette), sh.rounds)


# ---------------------------------------------------------------------------
# Binary export: 4-byte big-endian header length, UTF-8 JSON header, then the
# record matrix packed row-major with numpy.packbits.
# ---------------------------------------------------------------------------


def dump_history(sh: SyndromeHistory, check_type: str) -> bytes:
    rec = sh.records(check_type)
    header = json.dumps(
        {
            "version": FORMAT_VERSION,
            "L": sh.L,
            "T": int(rec.shape[0]),
            "n_checks": int(rec.shape[1]),
            "check_type": check_type,
            "kind": sh.kind,
            "final_round_perfect": sh.final_round_perfect,
        },
        sort_keys=True,
    ).encode()
    buf = io.BytesIO()
    buf.write(struct.pack(">I", len(header)))
    buf.write(header)
    buf.write(np.packbits(rec.astype(np.uint8), axis=None).tobytes())
    return buf.getvalue()


def load_history(data: bytes) -> tuple[dict, np.ndarray]:
    """Inverse of :func:`dump_history`: ``(header, records)``."""
    (n,) = struct.unpack(">I", data[:4])
    header = json.loads(data[4 : 4 + n].decode())
    if header.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported history format version {header.get('version')}")
    size = header["T"] * header["n_checks"]
    bits = np.unpackbits(np.frombuffer(data[4 + n :], np.uint8), count=size)
    return header, bits.reshape(header["T"], header["n_checks"]).astype(bool)
