"""
A phase-flip chain on the torus
===============================

Build a small toric code, drop a few phase flips on it, look at the defects
they leave, repair them with minimum-weight matching and ask what the
leftover cycle does to the encoded qubits.
"""

import numpy as np

from surfacelab import (
    Chain,
    DecoderConfig,
    PauliErrorState,
    build_toric_code,
    decode_2d,
    logical_effect,
    syndrome_of,
)

code = build_toric_code(6)
lat = code.lattice
print(f"L=6 torus: {code.n_qubits} qubits, distance {code.distance}")

# a short horizontal run of phase flips along y=2
errors = Chain(1, [lat.index(1, (x, 2), (0,)) for x in range(3)])
site_defects, _ = syndrome_of(code, PauliErrorState(z_errors=errors))
print("site defects at", [lat.coords(0)[s].tolist() for s in sorted(site_defects.cells)])

# the matching pairs the two endpoints and closes the chain
correction = decode_2d(code, site_defects, DecoderConfig(p=0.05))
print("correction links:", sorted(correction.cells))
residual = errors + correction
print("logical action:", logical_effect(code, residual, Chain(1)))

# %%
# A chain longer than half the lattice is repaired the short way round,
# which completes a winding cycle: a logical error.

long = Chain(1, [lat.index(1, (x, 2), (0,)) for x in range(4)])
site_defects, _ = syndrome_of(code, PauliErrorState(z_errors=long))
residual = long + decode_2d(code, site_defects, DecoderConfig(p=0.05))
print("4-link chain leaves:", logical_effect(code, residual, Chain(1)))

# %%
# Random errors below threshold are mostly harmless.

rng = np.random.default_rng(1)
bad = 0
for _ in range(200):
    z = Chain.from_mask(1, rng.random(code.n_qubits) < 0.05)
    defects, _ = syndrome_of(code, PauliErrorState(z_errors=z))
    bad += not logical_effect(code, z + decode_2d(code, defects, DecoderConfig(p=0.05)), Chain(1)).identity
print(f"p=0.05: {bad}/200 logical failures")
