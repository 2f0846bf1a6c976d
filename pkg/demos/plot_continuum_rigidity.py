"""
Sign rigidity in the continuum model
====================================

Plus and minus discs may not overlap, so every overlapping cluster carries a
single sign. Once clusters cross the box, flipping marks in time has to fight
this rigidity.
"""

import numpy as np

from wrgibbs import continuum as ct

states = ct.wr_mcmc_trace(2.0, 2.0, 0.5, 10.0, burn_in=20000, n_states=200, thin=500, seed=1)
print("monochromatic clusters in every state:", all(ct.sign_rigidity_check(c) for c in states))
sizes = [ct.percolation(c).sizes.max() for c in states if len(c)]
print(f"largest cluster size: mean {np.mean(sizes):.1f}")

for lam in (1.0, 2.0, 3.0):
    p, se = ct.crossing_probability(lam, 0.5, 10.0, 40, 50000, seed=int(lam))
    print(f"lambda={lam}: crossing probability {p:.2f} +- {se:.2f}")

evolved = ct.evolve_cloud(states[-1], 0.3, seed=2)
print("valid after evolution:", evolved.is_valid)
print(f"reentrance time for intensities (3, 1): {ct.reentrance_time(3, 1):.5f}")
