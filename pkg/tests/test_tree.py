import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import fsolve

from wrgibbs import tree as tr
from wrgibbs.measures import DomainError, SpinMeasure, symmetric_alpha

laws = st.tuples(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6)).map(lambda p: tr.BoundaryLaw(*p))


def pitchfork_beta(k, a0):
    """Symmetric-branch instability: tangent of the antisymmetric mode equals one."""
    c = (1 - a0) / 2 / a0

    def eqs(v):
        l, beta = math.exp(v[0]), v[1]
        q = math.exp(-beta)
        return [math.log(l) - math.log(c) - k * math.log((l * (1 + q) + 1) / (1 + 2 * l)),
                k * l * (1 - q) / (1 + l * (1 + q)) - 1]

    sol = fsolve(eqs, [math.log(c * 2), 1.5], xtol=1e-13)
    return sol[1]


def test_validation():
    with pytest.raises(DomainError):
        tr.BoundaryLaw(0.0, 1.0)
    with pytest.raises(DomainError):
        tr.TreeParams(0, 1.0, SpinMeasure.uniform())
    with pytest.raises(DomainError):
        tr.TreeParams(2, 1.0, SpinMeasure(0.5, 0.0, 0.5))
    with pytest.raises(DomainError):
        tr.critical_scan(1, [0.1])


def test_beta_zero_one_step():
    alpha = SpinMeasure(0.2, 0.5, 0.3)
    p = tr.TreeParams(3, 0.0, alpha)
    out = tr.recursion_step(tr.BoundaryLaw(7.0, 0.01), p)
    assert out.l_minus == pytest.approx(0.4, rel=1e-14) and out.l_plus == pytest.approx(0.6, rel=1e-14)
    fps = tr.find_fixed_points(p)
    assert len(fps) == 1
    assert abs(fps[0].l_minus - 0.4) < 1e-14 and abs(fps[0].l_plus - 0.6) < 1e-14


def test_hand_step():
    out = tr.recursion_step(tr.BoundaryLaw(1.0, 1.0), tr.TreeParams(2, 1.0, SpinMeasure.uniform()))
    want = ((2 + math.exp(-1)) / 3) ** 2
    assert out.l_minus == pytest.approx(want, rel=1e-14) and out.l_plus == pytest.approx(want, rel=1e-14)


@given(laws, st.floats(-5, 5), st.integers(1, 4), st.floats(0.01, 0.98))
@settings(max_examples=100, deadline=None)
def test_positivity_and_equivariance(l, beta, k, a0):
    p = tr.TreeParams(k, beta, symmetric_alpha(a0))
    out = tr.recursion_step(l, p)
    assert out.l_minus > 0 and out.l_plus > 0
    sw = tr.recursion_step(l.swap(), p)
    np.testing.assert_allclose(sw.as_array(), out.swap().as_array(), rtol=1e-12)


def test_no_overflow_large_laws():
    out = tr.recursion_step(tr.BoundaryLaw(1e300, 1e-300), tr.TreeParams(4, 50.0, SpinMeasure.uniform()))
    assert math.isfinite(out.l_minus) and math.isfinite(out.l_plus)


def test_ferro_multiplicity():
    alpha = symmetric_alpha(0.05)
    assert tr.multiplicity(tr.TreeParams(2, 0.5, alpha)) == 1
    fps = tr.find_fixed_points(tr.TreeParams(2, 3.0, alpha))
    assert len(fps) >= 3
    sym = [f for f in fps if abs(f.l_plus - f.l_minus) < 1e-8 * f.l_plus]
    asym = [f for f in fps if f not in sym]
    assert len(sym) == 1 and len(asym) == 2
    np.testing.assert_allclose(asym[0].swap().as_array(), asym[1].as_array(), rtol=1e-7)


@pytest.mark.parametrize("k,beta,a0", [(2, 3.0, 0.05), (3, 2.0, 0.2), (2, -3.7, 0.99), (4, 1.5, 1 / 3)])
def test_fixed_point_residuals(k, beta, a0):
    p = tr.TreeParams(k, beta, symmetric_alpha(a0))
    for f in tr.find_fixed_points(p):
        assert np.max(np.abs(tr.recursion_step(f, p).as_array() - f.as_array())) < 1e-10


def test_antiferro_hole_density_transition():
    alpha = symmetric_alpha(0.99)
    assert tr.multiplicity(tr.TreeParams(2, -2.0, alpha)) == 1
    p = tr.TreeParams(2, -3.7, alpha)
    fps = tr.find_fixed_points(p)
    assert len(fps) >= 3
    holes = sorted(tr.hole_probability(f, p) for f in fps)
    assert holes[-1] - holes[0] > 0.5


def test_hole_probability_beta_zero():
    alpha = SpinMeasure(0.2, 0.5, 0.3)
    p = tr.TreeParams(2, 0.0, alpha)
    assert tr.hole_probability(tr.find_fixed_points(p)[0], p) == pytest.approx(0.5, rel=1e-13)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("a0", [0.05, 1 / 3, 0.9])
@pytest.mark.parametrize("beta", [-4.0, -1.0, 0.5, 2.0, 6.0])
def test_symmetric_iteration_converges(k, a0, beta):
    law, last = tr.iterate_from_symmetric(tr.TreeParams(k, beta, symmetric_alpha(a0)))
    assert last < 1e-10


@pytest.mark.parametrize("k,a0", [(2, 0.02), (2, 0.05), (2, 0.1), (3, 0.05), (3, 0.2)])
def test_critical_beta_matches_pitchfork(k, a0):
    (_, crit), = tr.critical_scan(k, [a0])
    assert abs(crit - pitchfork_beta(k, a0)) < 1e-3


def test_critical_scan_shape():
    ladder = [0.02, 0.05, 0.1]
    k2 = [b for _, b in tr.critical_scan(2, ladder)]
    k3 = [b for _, b in tr.critical_scan(3, ladder)]
    assert all(x < y for x, y in zip(k2, k2[1:]))
    assert all(b3 <= b2 for b2, b3 in zip(k2, k3))
    for a0, b in zip(ladder, k2):
        assert tr.multiplicity(tr.TreeParams(2, b - 0.01, symmetric_alpha(a0))) == 1


def test_critical_beta_bisection_stable():
    alpha = symmetric_alpha(0.05)
    a = tr.critical_beta(2, alpha, 1.0, 2.0, tol=1e-5)
    b = tr.critical_beta(2, alpha, 0.5, 3.0, tol=1e-5)
    assert abs(a - b) < 1e-4
    with pytest.raises(DomainError):
        tr.critical_beta(2, alpha, 2.0, 3.0)


def test_uniform_alpha_k2_no_transition():
    (_, crit), = tr.critical_scan(2, [1 / 3], beta_max=10)
    assert math.isnan(crit)
