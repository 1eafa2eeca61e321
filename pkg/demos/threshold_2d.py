"""
Where the curves cross
======================

Sweep the toric code with perfect syndrome measurement over a grid of flip
rates and locate the crossing of the failure curves.  Small trial counts
keep this under a minute; the acceptance test uses 2e4 per point.
"""

from surfacelab.harness import ExperimentConfig, curves_from_estimates, find_threshold, sweep

cfg = ExperimentConfig(
    code="toric",
    L=[6, 10],
    noise={"model": "phenomenological", "p": 0.1, "q": 0.0},
    p_grid=[0.08, 0.09, 0.10, 0.11, 0.12, 0.13],
    trials=1500,
    seed=11,
    sectors=["Z"],  # the X sector is the same problem on the dual lattice
)

estimates = sweep(cfg)
for e in estimates:
    print(f"L={e.L:2d} p={e.p:.3f}  {e.failures:4d}/{e.trials}  [{e.ci[0]:.3f}, {e.ci[1]:.3f}]")

th = find_threshold(curves_from_estimates(estimates))
print(f"crossing near p = {th.mean:.4f}")
