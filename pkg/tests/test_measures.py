import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wrgibbs.measures import (
    DomainError,
    OccCoords,
    SpinMeasure,
    SupportError,
    ZeroComponentError,
    field_coords,
    from_occ_coords,
    occ_entropy,
    relative_entropy,
    spin_entropy,
    symmetric_alpha,
    to_occ_coords,
)
from wrgibbs.measures import spin_entropy_prime


def simplex_points(n):
    for i in range(n + 1):
        for j in range(n + 1 - i):
            yield SpinMeasure(i / n, j / n, (n - i - j) / n)


measures = st.tuples(st.floats(1e-6, 1), st.floats(1e-6, 1), st.floats(1e-6, 1)).map(
    lambda w: SpinMeasure.from_array(w, normalize=True))


def test_spin_measure_validation():
    with pytest.raises(DomainError):
        SpinMeasure(0.5, 0.5, 0.1)
    with pytest.raises(DomainError):
        SpinMeasure(-0.1, 0.6, 0.5)
    with pytest.raises(DomainError):
        SpinMeasure(math.nan, 0.5, 0.5)


@pytest.mark.parametrize("nu, x, m", [
    ((0.25, 0.5, 0.25), 0.5, 0.0),
    ((0.1, 0.4, 0.5), 0.6, 2 / 3),
])
def test_to_occ_coords_examples(nu, x, m):
    c = to_occ_coords(SpinMeasure(*nu))
    assert c.x == pytest.approx(x, abs=1e-15)
    assert c.m == pytest.approx(m, abs=1e-15)
    assert not c.degenerate


def test_all_holes_is_degenerate():
    c = to_occ_coords(SpinMeasure(0, 1, 0))
    assert (c.x, c.m, c.degenerate) == (0.0, 0.0, True)
    assert from_occ_coords(c).as_array().tolist() == [0, 1, 0]


def test_from_occ_coords_examples():
    assert np.allclose(from_occ_coords(OccCoords(1.0, 1.0)).as_array(), [0, 0, 1])
    assert np.allclose(from_occ_coords(OccCoords(0.6, 2 / 3)).as_array(), [0.1, 0.4, 0.5], atol=1e-15)


def test_occ_coords_validation():
    with pytest.raises(DomainError):
        OccCoords(1.2, 0.0)
    with pytest.raises(DomainError):
        OccCoords(0.5, 1.5)


def test_round_trip_on_simplex_grid():
    err = 0.0
    for nu in simplex_points(49):
        if nu.p_zero == 1.0:
            continue
        back = from_occ_coords(to_occ_coords(nu))
        err = max(err, float(np.max(np.abs(back.as_array() - nu.as_array()))))
    assert err < 1e-12


def test_field_coords():
    fc = field_coords(SpinMeasure.uniform())
    assert fc.h == 0.0 and fc.l == pytest.approx(math.log(2), abs=1e-15)
    assert field_coords(symmetric_alpha(0.5)).l == pytest.approx(0.0, abs=1e-15)
    assert field_coords(symmetric_alpha(0.3, h=0.2)).h == pytest.approx(0.2, abs=1e-14)
    with pytest.raises(ZeroComponentError):
        field_coords(SpinMeasure(0.5, 0.5, 0.0))


def test_relative_entropy_examples():
    u = SpinMeasure.uniform()
    assert relative_entropy(u, u) == 0.0
    assert relative_entropy(SpinMeasure.delta(1), u) == pytest.approx(math.log(3), abs=1e-15)
    assert relative_entropy(SpinMeasure(0.5, 0, 0.5), u) == pytest.approx(math.log(1.5), abs=1e-15)
    with pytest.raises(SupportError):
        relative_entropy(u, SpinMeasure(0.5, 0.5, 0.0))


def test_relative_entropy_zero_iff_equal():
    rng = np.random.default_rng(4)
    for _ in range(100):
        a = SpinMeasure.from_array(rng.dirichlet(np.ones(3)))
        b = SpinMeasure.from_array(rng.dirichlet(np.ones(3)))
        assert relative_entropy(a, a) < 1e-12
        assert relative_entropy(b, a) > 1e-12


@given(measures, measures)
@settings(max_examples=200, deadline=None)
def test_relative_entropy_nonnegative(nu, alpha):
    assert relative_entropy(nu, alpha) >= -1e-15


def test_spin_entropy_values_and_symmetry():
    assert spin_entropy(0.0) == pytest.approx(-math.log(2), abs=1e-15)
    assert spin_entropy(1.0) == 0.0 and spin_entropy(-1.0) == 0.0
    m = np.linspace(-1, 1, 401)
    assert np.array_equal(spin_entropy(m), spin_entropy(-m))
    with pytest.raises(DomainError):
        spin_entropy(1.01)


def test_spin_entropy_derivative():
    m = np.linspace(-0.99, 0.99, 199)
    h = 1e-6
    fd = (spin_entropy(m + h) - spin_entropy(m - h)) / (2 * h)
    assert np.max(np.abs(fd - np.arctanh(m))) < 1e-6
    assert np.allclose(spin_entropy_prime(m), np.arctanh(m))


def test_occ_entropy_values():
    assert occ_entropy(2 / 3) == pytest.approx(0.0, abs=1e-15)
    assert occ_entropy(1 / 3) == pytest.approx(math.log(2) / 3, abs=1e-15)
    assert occ_entropy(0.0) == pytest.approx(math.log(3), abs=1e-15)
    with pytest.raises(DomainError):
        occ_entropy(-0.1)


def test_symmetric_alpha():
    a = symmetric_alpha(0.2)
    assert a.is_symmetric and a.p_zero == 0.2
    with pytest.raises(DomainError):
        symmetric_alpha(1.5)
