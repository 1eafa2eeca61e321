"""
Counting arguments
==================

The analytic storage bounds follow from counting self-avoiding polygons.
This prints every bound the package knows, then counts polygons on the
square lattice and extrapolates their growth constant.
"""

from surfacelab.bounds import all_reports, enumerate_saps, growth_constant

for r in all_reports():
    print(f"{r.name:32s} {r.value:.4g}  pass={r.passed}")

res = enumerate_saps(2, 14)
for length, rooted in res.counts.items():
    if rooted:
        print(f"length {length:2d}: {rooted:6d} rooted polygons, {rooted // length} per site")
print(f"growth constant estimate {growth_constant(res.counts):.4f}")
