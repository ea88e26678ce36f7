import random

from hypothesis import given
from hypothesis import strategies as st

from confsym import expr as E
from confsym.symbols import (
    PolySymbol,
    conformal_killing_residual,
    hamiltonian_symbol,
    in_ideal_H,
    is_conformal_killing,
    is_killing,
    poisson,
)
from confsym.tensor import UP, TensorField


def _sym(fixtures, name, s="K"):
    spec, g = fixtures(name)
    return PolySymbol.from_decl(g, spec.symbols[s])


def test_poisson_basic(fixtures):
    g = fixtures("flat3")[1]
    H = hamiltonian_symbol(g)
    assert poisson(H, H).is_zero()
    p1 = PolySymbol(TensorField(g, UP, [E.ONE, E.ZERO, E.ZERO]))
    x1 = PolySymbol.scalar(g, E.coord("x1"))
    b = poisson(p1, x1)
    assert b.degree == 0 and (b.tensor.value() - 1).is_zero()


def test_flat_hamiltonian(fixtures):
    H = hamiltonian_symbol(fixtures("flat3")[1])
    assert H.monomials() == {(2, 0, 0): E.ONE, (0, 2, 0): E.ONE, (0, 0, 2): E.ONE}


def test_dipirro_hamiltonian_and_killing(fixtures):
    spec, g = fixtures("dipirro")
    a, b, c, gamma = (E.function(n, spec.functions[n]) for n in ("a", "b", "c", "gamma"))
    H = hamiltonian_symbol(g)
    m = H.monomials()
    half = 1 / ((gamma + c) * 2)
    assert (m[(2, 0, 0)] - a * half).is_zero() and (m[(0, 2, 0)] - b * half).is_zero() and (m[(0, 0, 2)] - half).is_zero()
    K = _sym(fixtures, "dipirro")
    assert poisson(H, K).is_zero() and is_killing(K)


def test_stackel_hamiltonian(fixtures):
    spec, g = fixtures("stackel")
    Q, u, v = (E.function(n, spec.functions[n]) for n in ("Q", "u", "v"))
    m = hamiltonian_symbol(g).monomials()
    assert (m[(2, 0, 0)] - 1 / Q).is_zero()
    assert (m[(0, 2, 0)] - 1 / (Q * (u + v))).is_zero() and (m[(0, 0, 2)] - m[(0, 2, 0)]).is_zero()


def test_hamiltonian_is_killing(fixtures):
    for name in ("dipirro", "stackel", "lemma_product"):
        assert is_killing(hamiltonian_symbol(fixtures(name)[1]))


def test_stackel_conformal_killing_not_killing(fixtures):
    K = _sym(fixtures, "stackel")
    assert not is_killing(K)
    assert is_conformal_killing(K) and conformal_killing_residual(K).is_zero()
    assert in_ideal_H(poisson(hamiltonian_symbol(K.geom), K))


def test_ideal_membership(fixtures):
    g = fixtures("flat3")[1]
    H = hamiltonian_symbol(g)
    X = PolySymbol(TensorField(g, UP, [E.coord("x2"), E.ONE, E.coord("x1") ** 2]))
    assert in_ideal_H(H.product(X))
    tf = PolySymbol.from_components(g, 2, {(0, 1): E.ONE})
    assert not in_ideal_H(tf)


def _random_symbol(rng, g, degree):
    xs = [E.coord(c) for c in g.coords]

    def poly():
        return E.const(rng.randint(-2, 2)) + rng.choice(xs) * rng.randint(-2, 2) + rng.choice(xs) * rng.choice(xs)

    if degree == 0:
        return PolySymbol.scalar(g, poly())
    import itertools

    comps = {idx: poly() for idx in itertools.combinations_with_replacement(range(g.n), degree)}
    return PolySymbol.from_components(g, degree, comps)


@given(st.integers(0, 10_000), st.integers(0, 2), st.integers(0, 2))
def test_poisson_antisymmetry(seed, k1, k2):
    from confsym.geometry import Geometry

    g = Geometry(("x1", "x2", "x3"), [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    rng = random.Random(seed)
    a, b = _random_symbol(rng, g, k1), _random_symbol(rng, g, k2)
    s = poisson(a, b).tensor + poisson(b, a).tensor
    assert s.is_zero()


@given(st.integers(0, 10_000))
def test_poisson_leibniz(seed):
    from confsym.geometry import Geometry

    g = Geometry(("x1", "x2", "x3"), [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    rng = random.Random(seed)
    a = _random_symbol(rng, g, 1)
    b, c = (_random_symbol(rng, g, rng.randint(0, 1)) for _ in range(2))
    lhs = poisson(a, b.product(c)).tensor
    rhs = poisson(a, b).product(c).tensor + b.product(poisson(a, c)).tensor
    assert (lhs - rhs).is_zero()
