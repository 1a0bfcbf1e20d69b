from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from foliation_lab.scalars import EXACT, FLOAT, GaussianRational, ModeError
from foliation_lab.series import (
    CompositionError,
    DimensionError,
    Multidegree,
    TruncatedSeries,
    monomials_of_degree,
    monomials_up_to,
    wedge,
)

small = st.fractions(min_value=-5, max_value=5, max_denominator=4)
gauss = st.builds(GaussianRational, small, small)


@st.composite
def series(draw, nvars=2, cap=4, min_degree=0):
    keys = monomials_up_to(nvars, cap, start=min_degree)
    chosen = draw(st.lists(st.sampled_from(keys), max_size=5, unique=True))
    return TruncatedSeries(nvars, cap, {k: draw(small) for k in chosen})


# ---- scalars ---------------------------------------------------------------


@given(gauss, gauss, gauss)
def test_gaussian_field_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    if b:
        assert (a / b) * b == a


def test_gaussian_i_squared():
    i = GaussianRational(0, 1)
    assert i * i == GaussianRational(-1)
    assert complex(GaussianRational(Fraction(1, 2), 3)) == 0.5 + 3j
    assert i ** -1 == GaussianRational(0, -1)


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        GaussianRational(1) / GaussianRational(0)


# ---- series ---------------------------------------------------------------


def test_monomial_orders():
    assert monomials_of_degree(2, 2) == [(0, 2), (1, 1), (2, 0)]
    assert len(monomials_up_to(3, 2, start=1)) == 3 + 6
    assert Multidegree((1, 2)).total == 3
    assert Multidegree((0, 1)) < Multidegree((2, 0))


@given(series(), series(), series())
@settings(max_examples=60)
def test_ring_laws(f, g, h):
    assert (f + g) * h == f * h + g * h
    assert (f * g) * h == f * (g * h)
    assert f * g == g * f
    assert f - f == TruncatedSeries.zero(2, 4)


def test_truncation_drops_high_degree():
    x, y = TruncatedSeries.variables(2, 3)
    p = (x + y) ** 4
    assert p.is_zero()
    q = (1 + x) ** 3
    assert q.coefficient((3, 0)) == 1 and q.coefficient((2, 0)) == 3


@given(series(min_degree=1))
@settings(max_examples=40)
def test_reciprocal_of_unit(f):
    u = 1 + f
    assert u * u.reciprocal() == TruncatedSeries.constant(1, 2, 4)


def test_reciprocal_needs_unit():
    x = TruncatedSeries.variable(0, 2, 3)
    with pytest.raises(ZeroDivisionError):
        x.reciprocal()


def test_compose_substitutes():
    x, y = TruncatedSeries.variables(2, 4)
    f = x * y + x ** 2
    g = f.compose([x + y ** 2, y])
    assert g == (x + y ** 2) * y + (x + y ** 2) ** 2


def test_compose_requires_no_constant_term_when_truncating():
    x, y = TruncatedSeries.variables(2, 3)
    with pytest.raises(CompositionError):
        (x ** 2).compose([1 + x, y])


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        TruncatedSeries.variable(0, 2, 3) + TruncatedSeries.variable(0, 3, 3)


def test_mode_mixing_rejected():
    a = TruncatedSeries.variable(0, 2, 3)
    with pytest.raises(ModeError):
        a + a.to_float()


@given(series(), st.tuples(st.integers(-3, 3), st.integers(-3, 3)))
@settings(max_examples=40)
def test_exact_and_float_evaluation_agree(f, p):
    exact = complex(f.evaluate_exact(list(p)))
    assert abs(exact - f.to_float().evaluate(np.asarray(p, dtype=complex))) <= 1e-9 * (1 + abs(exact))


@given(series())
@settings(max_examples=30)
def test_json_round_trip(f):
    assert TruncatedSeries.from_json(f.to_json()) == f
    g = f.to_float()
    assert TruncatedSeries.from_json(g.to_json(), FLOAT).allclose(g, 0)


def test_derivative_product_rule():
    x, y = TruncatedSeries.variables(2, 5)
    f, g = x * y + y ** 3, 1 + x ** 2
    assert (f * g).diff(0) == f.diff(0) * g + f * g.diff(0)


def test_wedge_of_coordinates_is_volume():
    xs = TruncatedSeries.variables(3, 3)
    form = wedge(xs)
    assert [idx for idx, _ in form.items()] == [(0, 1, 2)]
    assert form.coefficient((0, 1, 2)) == TruncatedSeries.constant(1, 3, 3)


def test_wedge_is_alternating():
    x, y, z = TruncatedSeries.variables(3, 4)
    f, g = x * z, y * z + x ** 2
    assert wedge([f, g]) == -wedge([g, f])
    assert wedge([f, f]).is_zero()


def test_exact_mode_default():
    assert TruncatedSeries.zero(2, 2).mode == EXACT
