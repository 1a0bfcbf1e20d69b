import numpy as np
import pytest
from hypothesis import given, settings

from foliation_lab.scalars import FLOAT, ModeError
from foliation_lab.series import TruncatedSeries
from foliation_lab.vectorfields import (
    FormalDiffeo,
    NonInvertibleError,
    SingularityError,
    VectorField,
    apply_derivation,
    compose_diffeo,
    exp_formal,
    invert_diffeo,
    lie_bracket,
    lie_series_pullback,
    pushforward,
    pushforward_exp,
)
from strategies import fields, nilpotent_generators, series

LIE = settings(max_examples=100, deadline=None)
GROUP = settings(max_examples=30, deadline=None)


def identity(n=3, cap=6):
    return FormalDiffeo.identity(n, cap)


# ---- Lie algebra identities (exact) ----------------------------------------


@given(fields(), fields())
@LIE
def test_bracket_antisymmetry(X, Y):
    assert lie_bracket(X, Y) == -lie_bracket(Y, X)


@given(fields(), fields(), fields())
@LIE
def test_jacobi_identity(X, Y, Z):
    total = (lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X))
             + lie_bracket(Z, lie_bracket(X, Y)))
    assert total.is_zero()


@given(fields(), series(), series())
@LIE
def test_leibniz_rule(X, f, g):
    assert apply_derivation(X, f * g) == apply_derivation(X, f) * g + f * apply_derivation(X, g)


@given(fields(), fields(), series())
@LIE
def test_bracket_is_commutator_of_derivations(X, Y, f):
    lhs = apply_derivation(lie_bracket(X, Y), f)
    rhs = apply_derivation(X, apply_derivation(Y, f)) - apply_derivation(Y, apply_derivation(X, f))
    assert lhs == rhs


# ---- group laws (exact at cap) ---------------------------------------------


@given(nilpotent_generators())
@GROUP
def test_exp_inverse_is_exp_of_negative(Y):
    assert compose_diffeo(exp_formal(Y), exp_formal(-Y)) == identity()
    assert invert_diffeo(exp_formal(Y)) == exp_formal(-Y)


@given(nilpotent_generators())
@GROUP
def test_exp_is_one_parameter_group(Y):
    assert compose_diffeo(exp_formal(Y, 1), exp_formal(Y, 2)) == exp_formal(Y, 3)


@given(nilpotent_generators(), nilpotent_generators(), nilpotent_generators())
@GROUP
def test_composition_associative(A, B, C):
    a, b, c = exp_formal(A), exp_formal(B), exp_formal(C)
    assert compose_diffeo(compose_diffeo(a, b), c) == compose_diffeo(a, compose_diffeo(b, c))


@given(nilpotent_generators(), nilpotent_generators())
@GROUP
def test_inverse_of_composition(A, B):
    a, b = exp_formal(A), exp_formal(B)
    ab = compose_diffeo(a, b)
    assert invert_diffeo(ab) == compose_diffeo(invert_diffeo(b), invert_diffeo(a))
    assert compose_diffeo(ab, invert_diffeo(ab)) == identity()


@given(nilpotent_generators(), fields())
@GROUP
def test_lie_series_matches_chain_rule_pushforward(Y, X):
    # two independent routes: closed-form ad-series and (D phi . X) o phi^-1
    assert pushforward_exp(Y, X) == pushforward(exp_formal(Y), X)
    assert lie_series_pullback(Y, X) == pushforward(exp_formal(-Y), X)


@given(nilpotent_generators(), fields(), fields())
@GROUP
def test_pushforward_preserves_brackets(Y, A, B):
    phi = exp_formal(Y)
    assert pushforward(phi, lie_bracket(A, B)) == lie_bracket(pushforward(phi, A), pushforward(phi, B))


@given(nilpotent_generators(), nilpotent_generators(), fields())
@GROUP
def test_pushforward_is_functorial(A, B, X):
    a, b = exp_formal(A), exp_formal(B)
    assert pushforward(compose_diffeo(a, b), X) == pushforward(a, pushforward(b, X))


def test_general_inverse_with_linear_part():
    x, y = TruncatedSeries.variables(2, 5)
    phi = FormalDiffeo([2 * x + y ** 2, x + y + x * y])
    assert compose_diffeo(phi, invert_diffeo(phi)) == FormalDiffeo.identity(2, 5)


def test_non_invertible_linear_part():
    x, y = TruncatedSeries.variables(2, 3)
    with pytest.raises(NonInvertibleError):
        invert_diffeo(FormalDiffeo([x + y, 2 * x + 2 * y], check=False))


def test_exp_with_linear_part_uses_float_flow():
    X = VectorField.diagonal([1, -2], 4)
    with pytest.raises(ModeError):
        exp_formal(X)
    phi = exp_formal(X.to_float(), 0.5)
    lin = np.asarray(phi.linear_part, dtype=complex)
    assert np.allclose(lin, np.diag([np.exp(0.5), np.exp(-1.0)]), atol=1e-10)


def test_flow_of_quadratic_field_float():
    # x' = x^2 has flow x / (1 - t x) = x + t x^2 + t^2 x^3 + ...
    x = TruncatedSeries.variable(0, 1, 5, FLOAT)
    Y = VectorField([x ** 2])
    phi = exp_formal(Y, 0.5)
    expected = [0.5 ** (d - 1) for d in range(1, 6)]
    assert np.allclose([complex(phi[0].coefficient((d,))) for d in range(1, 6)], expected, atol=1e-12)


def test_singularity_required():
    x = TruncatedSeries.variable(0, 1, 3)
    with pytest.raises(SingularityError):
        VectorField([1 + x])
    assert VectorField([1 + x], allow_regular=True)[0].constant_term() == 1


def test_from_terms_and_terms_round_trip():
    X = VectorField.from_terms(3, 4, {0: {(1, 0, 0): -1, (2, 0, 2): 1}, 2: {(0, 0, 1): 1}})
    assert sorted(X.terms()) == sorted([(0, (1, 0, 0), -1), (0, (2, 0, 2), 1), (2, (0, 0, 1), 1)])
