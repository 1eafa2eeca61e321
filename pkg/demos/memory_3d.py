"""
Storage with faulty measurements
================================

With misreads the syndrome history itself is noisy, so defects live in
spacetime.  Here one history is decoded twice: once in a single batch and
once with overlapping windows of L rounds, as a memory that runs forever
would have to.
"""

import numpy as np

from surfacelab import DecoderConfig, build_toric_code, decode_3d, extract_monopoles, measure_history
from surfacelab.decoder import coset_label, decode_windowed
from surfacelab.homology import Chain
from surfacelab.noise import sample_phenomenological, trial_rng

L, T, p = 8, 24, 0.02
code = build_toric_code(L)
cfg = DecoderConfig(p=p, q=p, window_T=L)

agree = fail_batch = fail_window = 0
n = 40
for i in range(n):
    history = sample_phenomenological(code, p, p, T, trial_rng(5, i))
    events = extract_monopoles(measure_history(code, history))
    net = np.bitwise_xor.reduce(history.z_errors, axis=0)
    batch = decode_3d(code, events, cfg, "Z").mask(code.n_qubits)
    window = decode_windowed(code, events, cfg, "Z").mask(code.n_qubits)
    fb = coset_label(code, Chain.from_mask(1, net ^ batch), "Z").labels
    fw = coset_label(code, Chain.from_mask(1, net ^ window), "Z").labels
    agree += fb == fw
    fail_batch += any(fb)
    fail_window += any(fw)

print(f"L={L}, {T} noisy rounds, p=q={p}")
print(f"batch failures {fail_batch}/{n}, windowed failures {fail_window}/{n}, same class {agree}/{n}")
