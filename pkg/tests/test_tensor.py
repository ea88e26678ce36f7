import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from confsym import expr as E
from confsym.curvature import riemann
from confsym.tensor import DOWN, UP, TensorField


def _flat(fixtures):
    return fixtures("flat3")[1]


def _vec(g, comps, variance=UP):
    return TensorField(g, variance, [E.const(c) if not isinstance(c, E.Expr) else c for c in comps])


def test_antisymmetrize_symmetric_is_zero(fixtures):
    g = _flat(fixtures)
    v = _vec(g, [1, 2, 3])
    assert v.outer(v).antisymmetrize().is_zero()


def test_wedge_component(fixtures):
    g = _flat(fixtures)
    v, w = _vec(g, [1, 0, 0]), _vec(g, [0, 1, 0])
    t = v.outer(w).antisymmetrize()
    assert (t[(0, 1)] - Fraction(1, 2)).is_zero() and (t[(1, 0)] + Fraction(1, 2)).is_zero()


def test_symmetrize_weights(fixtures):
    g = _flat(fixtures)
    e = [_vec(g, [1 if j == i else 0 for j in range(3)]) for i in range(3)]
    t = e[0].outer(e[1]).outer(e[2]).symmetrize()
    assert all((t[p] - Fraction(1, 6)).is_zero() for p in [(0, 1, 2), (2, 1, 0), (1, 0, 2)])
    assert sum(1 for _, c in t.items() if not c.is_zero()) == 6


def test_raise_lower_roundtrip(fixtures):
    g = fixtures("dipirro")[1]
    t = TensorField.build(g, DOWN * 2, lambda i: E.function("t%d%d" % (i[0] + 1, i[1] + 1), g.coords))
    back = t.raise_(1).lower(1)
    assert (back - t).is_zero() and back.weight == t.weight


def test_raise_metric_gives_inverse(fixtures):
    g = fixtures("dipirro")[1]
    up = TensorField.metric(g).raise_(0).raise_(1)
    inv = TensorField.inverse_metric(g)
    assert all((p - q).is_zero() for p, q in zip(up.comps, inv.comps))


def test_tracefree_projection(fixtures):
    g = _flat(fixtures)
    assert TensorField.inverse_metric(g).tracefree_project().is_zero()
    v, w = _vec(g, [1, 0, 0]), _vec(g, [0, 1, 0])
    s = v.outer(w).symmetrize()
    assert (s.tracefree_project() - s).is_zero()


def test_trace_decomposition_random(fixtures):
    g = _flat(fixtures)
    rng = random.Random(5)
    vals = {}
    for i in range(3):
        for j in range(i, 3):
            vals[(i, j)] = vals[(j, i)] = E.const(rng.randint(-9, 9))
    S = TensorField.build(g, UP * 2, lambda i: vals[i])
    tr = S.lower(1).contract(0, 1).value()
    recon = S.tracefree_project() + TensorField.inverse_metric(g).scale(tr / 3)
    assert (recon - S).is_zero()


@pytest.mark.parametrize("name", ["flat3", "dipirro", "stackel", "lemma_product", "minkowski_reduction", "sphere3"])
def test_metric_compatibility(fixtures, name):
    g = fixtures(name)[1]
    assert TensorField.metric(g).covariant_derivative().is_zero()


def test_gradient_of_scalar(fixtures):
    g = fixtures("dipirro")[1]
    f = E.function("f", g.coords)
    d = TensorField.scalar(g, f).covariant_derivative()
    assert all((d[(i,)] - E.diff(f, g.coords[i])).is_zero() for i in range(3))


def test_ricci_identity_on_dipirro(fixtures):
    """[nabla_a, nabla_b] v^c = R_ab^c_d v^d for an abstract vector field."""
    g = fixtures("dipirro")[1]
    v = TensorField(g, UP, [E.function("v%d" % i, g.coords) for i in range(3)])
    nn = v.covariant_derivative().covariant_derivative()  # nn[a, b, c] = nabla_a nabla_b v^c
    R = riemann(g)
    n = g.n

    def comp(i):
        a, b, c = i
        rv = E.expr_sum(R[(a, b, c, d)] * v[(d,)] for d in range(n))
        return nn[(a, b, c)] - nn[(b, a, c)] - rv

    assert TensorField.build(g, "ddu", comp).is_zero()


@given(st.lists(st.integers(-3, 3), min_size=9, max_size=9), st.permutations([0, 1, 2]))
def test_permute_and_contract(entries, perm):
    from confsym.geometry import Geometry

    g = Geometry(("x1", "x2", "x3"), [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    t = TensorField(g, DOWN * 2, [E.const(e) for e in entries])
    assert (t.transpose(0, 1).transpose(0, 1) - t).is_zero()
    assert (t.symmetrize() + t.antisymmetrize() - t).is_zero()
    tr = t.raise_(0).contract(0, 1).value()
    assert (tr - sum(entries[4 * i] for i in range(3))).is_zero()
