import itertools
import random
from fractions import Fraction

import pytest
import sympy

from confsym import expr as E
from confsym.curvature import (
    christoffel,
    cotton_york,
    ricci,
    riemann,
    scalar,
    schouten,
    transform_residuals,
    weyl,
)
from confsym.geometry import Geometry
from confsym.tensor import TensorField
from tests.conftest import to_sympy


def _diag(coords, entries):
    n = len(coords)
    return Geometry(coords, [[entries[i] if i == j else E.ZERO for j in range(n)] for i in range(n)])


def test_flat_curvature_vanishes(fixtures):
    g = fixtures("flat3")[1]
    assert christoffel(g).is_zero() and riemann(g).is_zero() and ricci(g).is_zero() and scalar(g).is_zero()
    P, J = schouten(g)
    assert P.is_zero() and J.is_zero() and cotton_york(g).is_zero()
    assert weyl(fixtures("flat4")[1]).is_zero()


def test_polar_christoffel():
    r = E.coord("r")
    g = _diag(("r", "th", "z"), [E.ONE, r**2, E.ONE])
    G = christoffel(g)  # G[a, b, c] = Gamma^a_bc
    assert (G[(0, 1, 1)] + r).is_zero()
    assert (G[(1, 0, 1)] - 1 / r).is_zero()


def test_lemma_christoffel_pattern(fixtures):
    G = christoffel(fixtures("lemma_product")[1])
    for i, j, k in itertools.product(range(4), repeat=3):
        if max(i, j, k) >= 2:
            assert G[(i, j, k)].is_zero()


def test_two_sphere_stereographic():
    x, y = E.coord("x"), E.coord("y")
    w = 4 / (1 + x**2 + y**2) ** 2
    g = Geometry(("x", "y"), [[w, 0], [0, w]])
    assert (scalar(g) - 2).is_zero()


def test_three_sphere(fixtures):
    assert (scalar(fixtures("sphere3")[1]) - 6).is_zero()


def test_lemma_scalar_curvature_is_that_of_the_plane(fixtures):
    g = fixtures("lemma_product")[1]
    h = E.function("h", ["x1", "x2"])
    plane = Geometry(("x1", "x2"), [[1 / h, 0], [0, 1]], functions={"h": ("x1", "x2")})
    assert (scalar(g) - scalar(plane)).is_zero()


@pytest.mark.parametrize("name", ["dipirro", "stackel", "lemma_product", "minkowski_reduction", "conformally_flat3"])
def test_j_is_normalized_scalar(fixtures, name):
    g = fixtures(name)[1]
    assert (schouten(g)[1] - scalar(g) / (2 * (g.n - 1))).is_zero()


def test_schouten_divergence_identity(fixtures):
    g = fixtures("dipirro")[1]
    P, J = schouten(g)
    div = P.covariant_derivative().raise_(0).contract(0, 1).with_weight(0)
    grad = TensorField.build(g, "d", lambda i: E.diff(J, g.coords[i[0]]))
    assert (div - grad).is_zero()


@pytest.mark.parametrize("name", ["dipirro", "stackel", "minkowski_reduction", "conformally_flat3", "sphere3"])
def test_weyl_vanishes_in_dimension_three(fixtures, name):
    assert weyl(fixtures(name)[1]).is_zero()


def test_lemma_weyl_and_cotton_bianchi(fixtures):
    g = fixtures("lemma_product")[1]
    C = weyl(g)
    assert not C.is_zero()
    n = g.n
    nC = C.covariant_derivative()  # nC[r, b, c, s, a] = nabla_r C_bc^s_a
    A = cotton_york(g)  # A[a, b, c] = nabla_b P_ca - nabla_c P_ba

    def comp(i):
        a, b, c = i
        div = E.expr_sum(nC[(r, b, c, r, a)] for r in range(n))
        return A[(a, b, c)] * (n - 3) - div

    assert TensorField.build(g, "ddd", comp).is_zero()


def test_conformally_flat_cotton_vanishes(fixtures):
    assert cotton_york(fixtures("conformally_flat3")[1]).is_zero()


def test_lemma_cotton_contraction(fixtures):
    g = fixtures("lemma_product")[1]
    A = cotton_york(g)
    sc = scalar(g)
    n = g.n
    for i in range(n):
        # the contraction A_ijk K^jk with K = p3^2 in the (i, j, k) ordering of the identity
        assert (A[(2, i, 2)] + E.diff(sc, g.coords[i]) * Fraction(1, 2 * (n - 1) * (n - 2))).is_zero()


def test_trivial_rescaling_residuals(fixtures):
    g = fixtures("lemma_product")[1]
    assert transform_residuals(g, E.ZERO).ok()


def test_schouten_law_flat_abstract(fixtures):
    g = fixtures("flat3")[1]
    rep = transform_residuals(g, E.function("U", g.coords), include_weyl_gradient=False)
    assert rep.residuals["P"].is_zero() and rep.residuals["A"].is_zero()


# -- sympy oracle: random diagonal polynomial metrics ----------------------------------------


def _sympy_curvature(entries, X):
    n = len(X)
    gm = sympy.diag(*entries)
    gi = gm.inv()
    Gam = [[[sum(gi[a, d] * (sympy.diff(gm[d, b], X[c]) + sympy.diff(gm[d, c], X[b]) - sympy.diff(gm[b, c], X[d])) for d in range(n)) / 2 for c in range(n)] for b in range(n)] for a in range(n)]

    def R(a, b, c, d):  # R^a_bcd, [nabla_c, nabla_d] v^a = R^a_bcd v^b
        return (
            sympy.diff(Gam[a][d][b], X[c])
            - sympy.diff(Gam[a][c][b], X[d])
            + sum(Gam[a][c][e] * Gam[e][d][b] - Gam[a][d][e] * Gam[e][c][b] for e in range(n))
        )

    Ric = sympy.Matrix(n, n, lambda b, d: sum(R(a, b, a, d) for a in range(n)))
    Sc = sum(gi[b, d] * Ric[b, d] for b in range(n) for d in range(n))
    return Gam, Ric, Sc


@pytest.mark.parametrize("seed", [0, 1])
def test_sympy_oracle_random_metric(seed):
    rng = random.Random(seed)
    coords = ("x1", "x2", "x3")
    X = sympy.symbols(coords)
    ours_entries, sym_entries = [], []
    for i in range(3):
        a, b = rng.randint(1, 3), rng.randint(-2, 2)
        j = rng.randrange(3)
        ours_entries.append(E.const(a) + E.coord(coords[j]) ** 2 * b * b + E.coord(coords[(j + 1) % 3]) ** 2)
        sym_entries.append(a + X[j] ** 2 * b * b + X[(j + 1) % 3] ** 2)
    g = _diag(coords, ours_entries)
    Gam, Ric, Sc = _sympy_curvature(sym_entries, X)
    G = christoffel(g)
    for a, b, c in itertools.product(range(3), repeat=3):
        assert sympy.simplify(to_sympy(G[(a, b, c)]) - Gam[a][b][c]) == 0
    Rc = ricci(g)
    for a, b in itertools.product(range(3), repeat=2):
        assert sympy.simplify(to_sympy(Rc[(a, b)]) - Ric[a, b]) == 0
    assert sympy.simplify(to_sympy(scalar(g)) - Sc) == 0
