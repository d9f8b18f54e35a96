"""How well do the small-disk formulas describe a tiny obstacle?

A sound-hard disk of radius r sits at the origin in free space, with a
source at (2, 0) and a receiver at (-2, 0). We compare three small-r
formulas with the boundary element solution:

* the far-field correction of the Neumann function,
* the same correction evaluated on the disk boundary,
* the constant that seeds radius inflation.

Halving r should cut the first two errors by about 2^3 and the seed error by
about 2^1 (up to log factors).

Run: python3 demos/small_disk_asymptotics.py  (a few seconds)
"""

import numpy as np

from helmneumann.asymptotics import seed_constant
from helmneumann.experiments import perturb_orders

radii = (0.08, 0.04, 0.02, 0.01)
res = perturb_orders(radii, k=1.0, nc=64)

print(f"{'r':>6}  {'far':>10}  {'boundary':>10}  {'seed':>10}  seed value")
for i, r in enumerate(radii):
    print(f"{r:6.2f}  {res['far'][i]:10.2e}  {res['boundary'][i]:10.2e}  "
          f"{res['seed'][i]:10.2e}  {seed_constant(1.0, r):.4f}")

print("\nlog-log slopes:", {k: round(v, 2) for k, v in res["slopes"].items()})

# a ratio near 8 per halving means third order; larger is better
ratios = np.array(res["far"][:-1]) / np.array(res["far"][1:])
print("far-error ratio per halving:", np.round(ratios, 1))
