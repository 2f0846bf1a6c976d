"""
Where the Dobrushin condition holds
===================================

The interdependence coefficient of the lattice soft-core model is computed by
enumerating neighbour counts. The satisfied region shrinks as the repulsion
grows, but small neighbourhoods of the pure phases always survive.
"""

from wrgibbs import dobrushin as db
from wrgibbs.measures import ModelParams, SpinMeasure

for beta in (0.49, 0.75, 1.05, 2.0):
    region = db.dobrushin_region(beta, 4, grid=100)
    print(f"beta={beta}: satisfied on {region.satisfied.mean():.3f} of the simplex grid, "
          f"{len(region.boundary)} boundary points")
    for key, (coef, res) in list(region.conic_fits().items())[:2]:
        print(f"   conic arc {key}: residual {res:.2e}")

# Close to the all-plus phase the coefficient is small even at beta = 2.
for eps in (1e-6, 1e-5, 1e-4):
    alpha = SpinMeasure(eps / 2, eps / 2, 1 - eps)
    print(f"eps={eps:g}: c = {db.dobrushin_coefficient(ModelParams(2.0, alpha), 4).c_value:.4f}")

# Time evolution: the constrained first-layer model obeys the condition only for short times.
params = ModelParams(2.0, SpinMeasure.uniform())
print(f"first-layer threshold time at beta=2: {db.first_layer_threshold(params, 4):.3e}")
for hardcore in (False, True):
    rep = db.first_layer_dobrushin(params, 0.5, 4, hardcore=hardcore)
    print(f"hardcore={hardcore}: largest first-layer entry {rep.max_entry:.4f}")
