"""Grow a disk by radius inflation and check it against the BEM.

The boundary data of a disk at the origin are seeded at r = 0.01 from the
small-disk formula and then marched outward to r = 0.3, next to a unit disk
centred at (1, 2.5). Each step uses the background Neumann function of the
unit disk only, never a solve on the growing circle.

At the end we compare the smooth part of the boundary table with a direct
BEM computation at the final radius. With only 64 modes and a short march
the error of a single run is a sum of terms of both signs, so one step size
can land on a lucky cancellation (dr = 0.01 does here); the fitted order over
all three runs is still about one. The full benchmark (march to r = 1 with
256 modes, monotone errors) is ``helmneumann inflate-convergence``; this demo
is a cheap preview.

Run: python3 demos/grow_a_disk.py  (about a minute)
"""

import logging

from helmneumann.experiments import FAR_DISK, inflate_sweep
from helmneumann.geometry import Disk, DiskDomain

logging.basicConfig(level=logging.INFO, format="%(message)s")

domain = DiskDomain((Disk((0.0, 0.0), 0.3), FAR_DISK), 1.0)
rows, slope, final = inflate_sweep((0.02, 0.01, 0.005), domain, nf=64, nc=512)

for r in rows:
    print(f"dr={r.dr:<6g} steps={r.steps:<4d} mean error {r.mean_error:.2e}  "
          f"max error {r.max_error:.2e}  symmetry {r.symmetry:.1e}  ({r.seconds:.1f} s)")
print(f"observed order in dr: {slope:.2f}")
