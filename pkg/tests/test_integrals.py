import math

import numpy as np
import pytest
import sympy

from foliation_lab.integrals import (
    FirstIntegralSet,
    ReconstructionError,
    first_integral_kernel,
    form_vanishes_on_line,
    greedy_independent,
    independence_test,
    monomial_integrals,
    nonsingular_fraction,
    reconstruct_coordinates,
    singular_directions,
    transported_integrals,
    vanishing_order,
)
from foliation_lab.normalform import poincare_dulac
from foliation_lab.series import TruncatedSeries
from foliation_lab.vectorfields import FormalDiffeo, VectorField, apply_derivation, invert_diffeo, pushforward
from oracles import jacobian_minors, subset_directions


def saddle(cap=4):
    return VectorField.diagonal((1, 1, -1), cap)


def power_sums(n=4, cap=3):
    xs = TruncatedSeries.variables(n, cap)
    return [sum((x ** p for x in xs[1:]), xs[0] ** p) for p in (2, 3)]


# ---- kernel ---------------------------------------------------------------


def test_kernel_saddle():
    x, y, z = TruncatedSeries.variables(3, 2)
    assert first_integral_kernel(saddle(), 2) == [x * z, y * z]


def test_kernel_single_invariant_monomial():
    X = VectorField.diagonal((-1, -2, 3), 3)
    assert first_integral_kernel(X, 3) == [TruncatedSeries.monomial((1, 1, 1), 1, 3)]


def test_kernel_poincare_domain_empty():
    assert first_integral_kernel(VectorField.diagonal((1, 2, 3), 4), 4) == []


def test_kernel_float_mode_spans_same_space():
    basis = first_integral_kernel(saddle().to_float(), 2)
    assert len(basis) == 2
    for f in basis:
        Xf = VectorField([c.with_cap(2) for c in saddle().to_float()])
        assert apply_derivation(Xf, f).max_abs() <= 1e-12
        assert set(k for k, c in f.terms.items() if abs(c) > 1e-12) <= {(1, 0, 1), (0, 1, 1)}


def test_kernel_is_modulo_degree():
    # x z is an integral of X_0, and of X_0 + x^2 z d/dx only modulo degree 4
    X = VectorField.diagonal((1, 1, -1), 4) + VectorField.from_terms(3, 4, {0: {(2, 0, 1): 1}})
    X3 = VectorField([c.with_cap(3) for c in X])
    kernel = first_integral_kernel(X, 3)
    assert kernel
    for f in kernel:
        assert apply_derivation(X3, f).is_zero()


# ---- independence -------------------------------------------------------------


def test_independence_saddle_witness():
    x, y, z = TruncatedSeries.variables(3, 4)
    v = independence_test([x * z, y * z])
    assert v.independent
    assert v.witness_indices == (0, 1) and v.witness == z ** 2
    assert v.to_json()["witness"]["dx"] == [1, 2]


def test_dependent_pair():
    x, y, z = TruncatedSeries.variables(3, 4)
    f = x * z + y
    assert not independence_test([f, f ** 2]).independent


def test_too_many_functions():
    x, y = TruncatedSeries.variables(2, 3)
    with pytest.raises(ValueError):
        independence_test([x, y, x * y])


def test_power_sum_wedge_matches_sympy_minors():
    f = power_sums()
    form = independence_test(f).form
    minors, syms = jacobian_minors(f, 4)
    assert {idx for idx, _ in form.items()} == set(minors)
    for idx, c in form.items():
        ours = sympy.Poly(sum(sympy.Rational(str(v.re)) * sympy.Mul(*[s ** e for s, e in zip(syms, k)])
                              for k, v in c.terms.items()), *syms)
        assert ours == minors[idx]


def test_power_sum_singular_lines():
    form = independence_test(power_sums()).form
    lines = set(subset_directions(4))
    assert len(lines) == 15
    assert all(form_vanishes_on_line(form, v) for v in lines)
    # no other primitive direction with small entries lies in the singular locus
    assert set(singular_directions(form, bound=2)) == lines


def test_power_sum_generic_points_nonsingular():
    form = independence_test(power_sums()).form
    pts = np.random.default_rng(1).normal(size=(100, 4))
    assert nonsingular_fraction(form, pts) == 1.0


def test_greedy_selection_skips_dependent():
    x, y, z = TruncatedSeries.variables(3, 6)
    cands = [x * z, (x * z) ** 2, y * z]
    assert greedy_independent(cands, 2) == [0, 2]


# ---- monomial and transported integrals -----------------------------------------


@pytest.mark.parametrize("lam", [(-1, -1, 1), (-1, -2, 3), (-2, -3, 5)])
def test_monomial_integrals(lam):
    fis = monomial_integrals(lam, 8)
    assert fis.annihilated_by(VectorField.diagonal(lam, 8))
    verdict = fis.check_independence()
    assert verdict.independent
    assert fis.provenance == ["monomial"] * 2
    # the witness is the lowest coefficient of the untruncated wedge
    assert verdict.witness.degree() == sum(f.degree() for f in fis) - 2


def test_transported_integrals_via_normal_form():
    g = TruncatedSeries.monomial((1, 0, 1), 1, 6)
    X = VectorField.diagonal((-1, -1, 1), 6).times(1 + g) + VectorField.from_terms(3, 6, {0: {(0, 2, 0): 1}})
    cert = poincare_dulac(X)
    assert cert.unit_factor is not None
    fis = transported_integrals((-1, -1, 1), cert.transform)
    assert fis.annihilated_by(X)
    assert fis.check_independence().independent


def test_transport_rejects_non_members():
    with pytest.raises(ValueError):
        transported_integrals((-1, -1, 1), FormalDiffeo.identity(3, 4), exponents=[(1, 0, 0)])


def test_provenance_validated():
    with pytest.raises(ValueError):
        FirstIntegralSet([TruncatedSeries.variable(0, 2, 2)], ["guessed"])


# ---- vanishing order ---------------------------------------------------------


@pytest.mark.parametrize(
    "f, g, order",
    [({(2, 1, 0): 1}, {(1, 0, 0): 1}, 2), ({(1, 0, 1): 1}, {(0, 0, 1): 1}, 1),
     ({(1, 0, 0): 1, (0, 1, 0): 1}, {(1, 0, 0): 1}, 0),
     ({(3, 0, 0): 1, (2, 1, 0): 1}, {(1, 0, 0): 1, (0, 1, 0): 1}, 1)],
)
def test_vanishing_order(f, g, order):
    F = TruncatedSeries(3, 8, f)
    G = TruncatedSeries(3, 8, g)
    assert vanishing_order(F, G) == order


def test_vanishing_order_of_zero():
    assert vanishing_order(TruncatedSeries.zero(2, 3), TruncatedSeries.variable(0, 2, 3)) == math.inf


# ---- reconstruction ---------------------------------------------------------


def test_reconstruct_linear_model():
    lam = (-1, -2, 3)
    X = VectorField.diagonal(lam, 8)
    rec = reconstruct_coordinates(X, monomial_integrals(lam, 8))
    assert rec.linearized
    assert rec.transform == FormalDiffeo.identity(3, 8)


def test_reconstruct_unit_multiple():
    lam = (-1, -1, 1)
    g = TruncatedSeries.monomial((1, 0, 1), 1, 6)
    X = VectorField.diagonal(lam, 6).times(1 + g)
    rec = reconstruct_coordinates(X, monomial_integrals(lam, 6))
    assert rec.linearized and rec.transform == FormalDiffeo.identity(3, 6)
    assert rec.unit_factor == g.truncate(rec.valid_degree - 1)


def test_reconstruct_round_trip():
    lam, cap = (-1, -1, 1), 6
    x1, x2, x3 = TruncatedSeries.variables(3, cap)
    phi = FormalDiffeo([x1 + x1 ** 2 * x3 + x2 ** 2, x2 + x1 * x2 * x3, x3])
    X = pushforward(phi, VectorField.diagonal(lam, cap))
    phi_inv = invert_diffeo(phi)
    ints = [phi_inv(m) for m in monomial_integrals(lam, cap)]
    assert all(apply_derivation(X, f).is_zero() for f in ints)
    rec = reconstruct_coordinates(X, ints)
    assert rec.linearized
    d = rec.valid_degree
    for a, b in zip(rec.transform, phi_inv):
        assert a.truncate(d) == b.truncate(d)


def test_reconstruct_shape_error():
    lam = (-1, -1, 1)
    X = VectorField.diagonal(lam, 5)
    x1, x2, x3 = TruncatedSeries.variables(3, 5)
    with pytest.raises(ReconstructionError) as info:
        reconstruct_coordinates(X, [x1 * x3, x2])
    assert info.value.witness == [0, 1, 0]
