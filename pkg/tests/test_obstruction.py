from fractions import Fraction

import pytest

from confsym import expr as E
from confsym.curvature import cotton_york
from confsym.obstruction import (
    DegreeTooLow,
    NotTraceFree,
    classify,
    classify_hatted,
    conformal_killing_op,
    exterior_d,
    f_operator,
    flat,
    higher_order_xy,
    obs,
    obs_coefficient,
    qdelta_residual,
    solve_potential,
)
from confsym.symbols import PolySymbol, hamiltonian_symbol
from confsym.tensor import DOWN, UP, TensorField


def _decl(fixtures, name, s="K"):
    spec, g = fixtures(name)
    return PolySymbol.from_decl(g, spec.symbols[s])


# -- conformal Killing operator ----------------------------------------------------------


def test_g_of_constant_is_zero(fixtures):
    g = fixtures("dipirro")[1]
    assert conformal_killing_op(PolySymbol.scalar(g, E.const(3))).is_zero()


def test_g_of_rotation_and_translation(fixtures):
    g = fixtures("flat3")[1]
    x1, x2 = E.coord("x1"), E.coord("x2")
    rot = PolySymbol(TensorField(g, UP, [-x2, x1, E.ZERO]))
    assert conformal_killing_op(rot).is_zero()
    dil = PolySymbol(TensorField(g, UP, [E.coord(c) for c in g.coords]))
    assert conformal_killing_op(dil).is_zero()
    shear = PolySymbol(TensorField(g, UP, [x2, E.ZERO, E.ZERO]))
    assert not conformal_killing_op(shear).is_zero()


def test_g_of_stackel_is_zero(fixtures):
    assert conformal_killing_op(_decl(fixtures, "stackel")).is_zero()


def test_g_of_scalar_is_tracefree_gradient(fixtures):
    g = fixtures("flat3")[1]
    G = conformal_killing_op(PolySymbol.scalar(g, E.coord("x1") ** 2))
    assert G.degree == 1 and (G[(0,)] - E.coord("x1") * 2).is_zero()


# -- F and Obs ----------------------------------------------------------------------------


def test_obs_coefficient():
    assert obs_coefficient(3) == Fraction(-1, 6)
    assert obs_coefficient(4) == Fraction(-4, 15)


def test_obs_vanishes_on_flat_and_conformally_flat(fixtures):
    g = fixtures("flat3")[1]
    x1, x2 = E.coord("x1"), E.coord("x2")
    K = PolySymbol.from_components(g, 2, {(0, 0): x2 * x2, (1, 1): x1 * x1, (0, 1): -x1 * x2})
    assert obs(K).is_zero()
    g2 = fixtures("conformally_flat3")[1]
    assert obs(hamiltonian_symbol(g2)).is_zero()


def test_obs_in_dimension_three_is_cotton_contraction(fixtures):
    """With the Weyl tensor absent, Obs reduces to a multiple of the Cotton-York contraction."""
    K = _decl(fixtures, "stackel")
    g = K.geom
    K0 = K.tensor.tracefree_project()
    A = cotton_york(g)  # A[a, b, c] = nabla_b P_ca - nabla_c P_ba
    O = flat(obs(K))
    n = g.n

    def comp(i):
        (a,) = i
        s = E.expr_sum(A[(b, a, c)] * K0[(b, c)] for b in range(n) for c in range(n))
        return s * Fraction(-1, 2)

    assert not O.is_zero()
    assert (O - TensorField.build(g, DOWN, comp)).is_zero()


def test_f_operator_errors(fixtures):
    g = fixtures("stackel")[1]
    with pytest.raises(DegreeTooLow):
        f_operator(PolySymbol(TensorField(g, UP, [E.ONE, E.ZERO, E.ZERO])))
    with pytest.raises(NotTraceFree):
        f_operator(hamiltonian_symbol(g))


def test_higher_order_coefficients_vanish_below_two():
    assert higher_order_xy(3, 1) == (0, 0)
    x, y = higher_order_xy(5, 3)
    assert x == Fraction(3 * 2 * 5, 3 * 9 * 8) and y == Fraction(3 * 2, 3 * 9 * 8)


# -- forms and potentials -------------------------------------------------------------------


def test_exterior_d_examples(fixtures):
    g = fixtures("flat3")[1]
    x1, x2 = E.coord("x1"), E.coord("x2")
    w = TensorField(g, DOWN, [-x2, x1, E.ZERO])
    dw = exterior_d(w)
    assert (dw[(0, 1)] - 2).is_zero() and (dw[(1, 0)] + 2).is_zero() and dw[(0, 2)].is_zero()
    exact = TensorField(g, DOWN, [x2, x1, E.ZERO])
    assert exterior_d(exact).is_zero()


def test_solve_potential_zero_form(fixtures):
    K = _decl(fixtures, "dipirro")
    pr = solve_potential(TensorField(K.geom, DOWN, [E.ZERO] * 3), K)
    assert pr.found and pr.potential.is_zero()


def test_solve_potential_not_closed(fixtures):
    g = fixtures("flat3")[1]
    x1, x2 = E.coord("x1"), E.coord("x2")
    K = hamiltonian_symbol(g)
    pr = solve_potential(TensorField(g, DOWN, [-x2, x1, E.ZERO]), K)
    assert not pr.found and pr.status == "not-closed"


def test_dipirro_potential_in_rescaled_metric(fixtures):
    spec, g = fixtures("dipirro")
    K = PolySymbol.from_decl(g, spec.symbols["K"])
    rep = classify_hatted(K, 1 / ((E.function("gamma", ["x1", "x2"]) + E.function("c", ["x3"])) * 2), g)
    assert rep.potential is not None
    assert rep.verdict == "symmetry"
    assert rep.potential_coefficients.get("Ric(K)") == Fraction(3, 16)


# -- identities and classification ----------------------------------------------------------


def test_qdelta_degree_one_flat(fixtures):
    g = fixtures("flat3")[1]
    X = PolySymbol(TensorField(g, UP, [E.function("X%d" % i, g.coords) for i in range(3)]))
    assert qdelta_residual(X).is_zero()


def test_qdelta_dipirro(fixtures):
    assert qdelta_residual(_decl(fixtures, "dipirro")).is_zero()


def test_classify_verdicts(fixtures):
    assert classify(_decl(fixtures, "stackel")).verdict == "obstructed"
    g = fixtures("flat3")[1]
    x1, x2 = E.coord("x1"), E.coord("x2")
    L = PolySymbol.from_components(g, 2, {(0, 0): x2 * x2, (1, 1): x1 * x1, (0, 1): -x1 * x2})
    assert classify(L).verdict == "symmetry"
    shear = PolySymbol.from_components(g, 2, {(0, 1): x1})
    assert classify(shear).verdict == "not-conformal-killing"
