from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from confsym import expr as E
from confsym.curvature import scalar
from confsym.quantize import (
    DiffOp,
    ExcludedDelta,
    NotKilling,
    Weights,
    adjoint,
    beta_coeffs,
    beta_formulas,
    commutator,
    compose,
    degree1_coefficient,
    factorization_check,
    lie_density,
    principal_symbol,
    quantize_killing,
    quantize_order2,
    transport,
    yamabe,
)
from confsym.symbols import PolySymbol
from confsym.tensor import UP, TensorField


def _flat(fixtures):
    return fixtures("flat3")[1]


def _sym2(g, comps):
    return PolySymbol.from_components(g, 2, comps)


# -- coefficients ----------------------------------------------------------------------


def test_beta_at_zero_delta_sympy_oracle():
    n, lam = sympy.symbols("n lambda", positive=True)
    b = beta_formulas(n, lam, lam)
    assert sympy.simplify(b[2] - 2 * b[3] - n**2 * lam * (1 - lam) / ((n + 1) * (n + 2))) == 0


@pytest.mark.parametrize("n", [3, 4, 5, 7])
def test_beta_exact_matches_sympy(n):
    for lam, mu in [(Fraction(1, 3), Fraction(1, 3)), (Fraction(1, 6), Fraction(5, 6)), (Fraction(2, 7), Fraction(1, 5))]:
        w = Weights(lam, mu)
        try:
            ours = beta_coeffs(n, w)
        except ExcludedDelta:
            continue
        theirs = beta_formulas(sympy.Integer(n), sympy.Rational(lam.numerator, lam.denominator), sympy.Rational(mu.numerator, mu.denominator))
        assert all(sympy.Rational(o.numerator, o.denominator) == sympy.nsimplify(t) for o, t in zip(ours, theirs))


def test_excluded_deltas_raise():
    for d in (Fraction(2, 3), Fraction(5, 6), Fraction(1), Fraction(4, 3), Fraction(5, 3)):
        with pytest.raises(ExcludedDelta):
            beta_coeffs(3, Weights(0, d))


def test_degree1_coefficients():
    assert degree1_coefficient(3, Weights.l0l0(3)) == Fraction(1, 6)
    # (lambda_0, mu_0): lambda_0 / (1 - delta_0) = 1/2 for every n
    for n in (3, 4, 5, 8):
        assert degree1_coefficient(n, Weights.l0m0(n)) == Fraction(1, 2)


# -- operators -------------------------------------------------------------------------


def test_flat_quantization_of_p3_squared(fixtures):
    g = _flat(fixtures)
    op = quantize_order2(g, K=_sym2(g, {(2, 2): E.ONE}), weights=Weights.l0l0(3))
    assert op.equals(DiffOp.partial(g, 2, 2, weights=Weights.l0l0(3)))


def test_vector_quantization_divergence_term(fixtures):
    g = _flat(fixtures)
    x1 = E.coord("x1")
    X = PolySymbol(TensorField(g, UP, [x1, E.ZERO, E.ZERO]))
    op = quantize_order2(g, X=X, weights=Weights.l0l0(3))
    assert (op.coeff((1, 0, 0)) - x1).is_zero()
    assert (op.coeff((0, 0, 0)) - Fraction(1, 6)).is_zero()  # (n-2)/(2n) * div X


def test_quantize_killing_flat_cross_term(fixtures):
    g = _flat(fixtures)
    K = _sym2(g, {(0, 1): E.ONE})  # K^12 = K^21 = 1, i.e. the symbol 2 p1 p2
    op = quantize_killing(g, K)
    assert op.equals(DiffOp.partial(g, 0, 1, weights=Weights.l0l0(3)).scale(2))


def test_quantize_killing_agrees_with_general_formula(fixtures):
    spec, g = fixtures("dipirro")
    K = PolySymbol.from_decl(g, spec.symbols["K"])
    assert quantize_killing(g, K).equals(quantize_order2(g, K=K, weights=Weights.l0l0(3)))


def test_killing_formula_satisfies_obstruction_identity(fixtures):
    from confsym.obstruction import obs

    spec, g = fixtures("dipirro")
    K = PolySymbol.from_decl(g, spec.symbols["K"])
    Q = quantize_killing(g, K)
    rhs = quantize_order2(g, X=obs(K), weights=Weights.l0m0(3))
    assert (compose(yamabe(g), Q, check_weights=False) - compose(Q, yamabe(g), check_weights=False) - rhs).is_zero()


def test_quantize_killing_rejects_non_killing(fixtures):
    spec, g = fixtures("stackel")
    with pytest.raises(NotKilling):
        quantize_killing(g, PolySymbol.from_decl(g, spec.symbols["K"]))


def test_principal_symbol_roundtrip(fixtures):
    spec, g = fixtures("dipirro")
    K = PolySymbol.from_decl(g, spec.symbols["K"])
    assert (principal_symbol(quantize_killing(g, K), 2).tensor - K.tensor).is_zero()


def test_yamabe_flat_and_scalar_coefficient(fixtures):
    g = _flat(fixtures)
    lap = DiffOp.partial(g, 0, 0) + DiffOp.partial(g, 1, 1) + DiffOp.partial(g, 2, 2)
    assert yamabe(g).equals(lap.with_weights(Weights.l0m0(3)))
    s = fixtures("sphere3")[1]
    assert (yamabe(s).coeff((0, 0, 0)) + scalar(s) / 8).is_zero()


def test_yamabe_conformal_covariance(fixtures):
    g = _flat(fixtures)
    U = E.function("U", g.coords)
    hat = g.scaled(E.exp(U * 2))
    moved = transport(yamabe(g), U, target=hat)
    assert moved.equals(yamabe(hat))


def test_compose_against_nested_application(fixtures):
    g = fixtures("dipirro")[1]
    A = yamabe(g)
    B = lie_density(g, [E.coord("x2"), E.ONE, E.ZERO], Weights.lambda0(3))
    phi = E.function("phi", g.coords)
    lhs = compose(A, B, check_weights=False).apply(phi)
    rhs = A.apply(B.apply(phi))
    assert (lhs - rhs).is_zero()


def test_adjoint_of_partial_flat(fixtures):
    g = _flat(fixtures)
    d = DiffOp.partial(g, 0)
    assert adjoint(d).equals(-d)
    assert adjoint(adjoint(yamabe(g))).equals(yamabe(g))


def test_yamabe_is_formally_selfadjoint(fixtures):
    g = fixtures("dipirro")[1]
    assert adjoint(yamabe(g)).equals(yamabe(g).with_weights(Weights.l0m0(3)))


def test_dilation_intertwines_flat_laplacian(fixtures):
    g = _flat(fixtures)
    X = [E.coord(c) for c in g.coords]
    n = 3
    Dy = yamabe(g)
    lhs = compose(lie_density(g, X, Weights.mu0(n)), Dy, check_weights=False)
    rhs = compose(Dy, lie_density(g, X, Weights.lambda0(n)), check_weights=False)
    assert (lhs - rhs).is_zero()


@pytest.mark.parametrize("name", ["flat3", "dipirro"])
def test_factorization(fixtures, name):
    g = fixtures(name)[1]
    r1, r2 = factorization_check(g, E.ONE)
    assert r1.is_zero() and r2.is_zero()


def test_killing_operator_commutes_with_yamabe_on_dipirro(fixtures):
    spec, g = fixtures("dipirro")
    K = PolySymbol.from_decl(g, spec.symbols["K"])
    Q = quantize_killing(g, K)
    assert principal_symbol(commutator(yamabe(g), Q), 3).is_zero()


@given(st.fractions(min_value=-2, max_value=2, max_denominator=6), st.fractions(min_value=-2, max_value=2, max_denominator=6))
def test_adjoint_weights_are_dual(lam, mu):
    w = Weights(lam, mu)
    assert w.dual().dual() == w
    assert w.dual().delta == w.delta
