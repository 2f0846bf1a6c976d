"""
Boundary laws on the Cayley tree
================================

Splitting Gibbs measures on the regular tree correspond to fixed points of a
two-dimensional recursion. Counting fixed points as the repulsion grows
locates the onset of phase coexistence.
"""

from wrgibbs import tree as tr
from wrgibbs.measures import symmetric_alpha

alpha = symmetric_alpha(0.05)
for beta in (0.5, 1.5, 3.0):
    params = tr.TreeParams(2, beta, alpha)
    fps = tr.find_fixed_points(params)
    print(f"k=2 beta={beta}: {len(fps)} fixed point(s): "
          + ", ".join(f"({f.l_minus:.3f}, {f.l_plus:.3f})" for f in fps))

for k in (2, 3):
    rows = tr.critical_scan(k, [0.02, 0.05, 0.1])
    print(f"k={k} onset of multiplicity: " + ", ".join(f"a0={a:g}: {b:.4f}" for a, b in rows))

# Negative repulsion: coexisting laws that differ in hole density.
params = tr.TreeParams(2, -3.7, symmetric_alpha(0.99))
print("antiferro hole probabilities:",
      [round(tr.hole_probability(f, params), 3) for f in tr.find_fixed_points(params)])
