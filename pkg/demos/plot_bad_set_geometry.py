"""
Bad time-t measures at strong repulsion
=======================================

At beta = 5 the set of spin-flip evolved empirical measures that admit two
competing histories changes shape with time. We print a coarse text picture
of the set in (magnetization, occupation) coordinates for a few times.
"""

import numpy as np

from wrgibbs import two_layer as tl
from wrgibbs.measures import ModelParams, symmetric_alpha

params = ModelParams(5.0, symmetric_alpha(1 / 3))
grid = 100


def picture(bad, rows=20, cols=41):
    canvas = np.full((rows, cols), ".")
    for p in bad.points:
        r = int(round((1 - p.x) * (rows - 1) / 0.6))
        c = int(round((p.m + 1) / 2 * (cols - 1)))
        if 0 <= r < rows:
            canvas[r, c] = "#"
    return "\n".join("".join(row) for row in canvas)


for t in (0.02, 0.06, 0.1, 0.3, 0.6):
    bad = tl.wiro_bad_set(params, t, grid=grid)
    branches = {b: sum(p.branch == b for p in bad.points) for b in ("stem", "upper", "lower")}
    print(f"\nt = {t}: {len(bad)} bad points {branches}   (top row x = 1, bottom x = 0.4)")
    print(picture(bad))

# The direct computation and the Ising pull-back agree point by point.
rep = tl.mapping_check(params, 0.1, grid=grid)
print(f"\nmapping check at t=0.1: ok={rep.ok}, {len(rep.wiro)} vs {len(rep.ising)} points")

# Typical evolved equilibrium measures stay away from the bad set.
ok, dist = tl.atypicality_check(ModelParams(4.0, symmetric_alpha(1 / 3)), 0.2)
print(f"beta=4, t=0.2: typical measures atypical-free: {ok} (distance {dist:.4f})")
