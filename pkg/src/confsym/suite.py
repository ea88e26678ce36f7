"""The acceptance checks run by ``confsym paper-suite`` and ``tests/test_acceptance.py``.

Every check is a pure function returning an :class:`Outcome`: a set of
residual objects (expressions, tensors, operators, symbols) that must vanish,
or a verdict that must match.  Symbolic mode normalizes residuals exactly;
numeric mode evaluates every residual component at seeded random points with
seeded realizations of the abstract functions.

Check kinds:

* ``criterion`` - one acceptance criterion (or one part of it) as stated;
* ``diagnostic`` - a supporting identity that explains a criterion's outcome.
"""

from __future__ import annotations

import functools
import hashlib
import itertools
import math
import os
import random
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from . import expr as E
from . import fixture_path, load_fixture
from .curvature import (
    cotton_york,
    decomposition_terms,
    ricci,
    riemann,
    scalar,
    schouten,
    transform_residuals,
    weyl,
)
from .expr import Expr
from .geometry import Geometry
from .obstruction import (
    classify,
    conformal_killing_op,
    exterior_d,
    f_operator,
    flat,
    higher_order_xy,
    obs,
    obs_coefficient,
    qdelta_residual,
    sigma3_residual,
    solve_potential,
)
from .quantize import (
    DiffOp,
    Weights,
    _second_order_part,
    _vector_op,
    adjoint,
    beta_coeffs,
    beta_formulas,
    commutator,
    compose,
    divergence_sym2,
    divergence_vector,
    factorization_check,
    gradient_up,
    metric_trace,
    principal_symbol,
    quantize_killing,
    quantize_order2,
    ricci_contraction,
    transport,
    yamabe,
)
from .symbols import PolySymbol, hamiltonian_symbol, is_killing, poisson
from .tensor import DOWN, UP, TensorField

__all__ = ["Check", "Outcome", "CheckResult", "CHECKS", "run_checks", "fixtures_digest"]

Residual = object  # Expr | TensorField | DiffOp | PolySymbol


@dataclass
class Outcome:
    """What a check produced.

    ``residuals`` must all vanish.  ``references`` (same length, optional) give
    the size of the quantities being compared, for relative numeric tolerance.
    ``verdict``/``expected_verdict`` are used by classification checks.
    """

    residuals: list = field(default_factory=list)
    references: list = field(default_factory=list)
    verdict: str | None = None
    expected_verdict: str | None = None
    domain: dict[str, tuple[float, float]] = field(default_factory=dict)
    constants: dict[str, tuple[float, float]] = field(default_factory=dict)


@dataclass(frozen=True)
class Check:
    name: str
    criterion: str
    kind: str
    description: str
    run: Callable[[], Outcome]


@dataclass
class CheckResult:
    name: str
    criterion: str
    kind: str
    description: str
    status: str  # "pass" | "fail" | "verdict:<v>"
    residual: str
    wall_ms: float = 0.0
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def as_dict(self, timings: bool = False) -> dict:
        d = {
            "name": self.name,
            "criterion": self.criterion,
            "kind": self.kind,
            "status": self.status,
            "residual": self.residual,
        }
        if self.error:
            d["error"] = self.error
        if timings:
            d["wall_ms"] = round(self.wall_ms, 1)
        return d


# ---------------------------------------------------------------------------
# residual plumbing


def _components(obj) -> Iterable[Expr]:
    if obj is None:
        return
    if isinstance(obj, Expr):
        yield obj
    elif isinstance(obj, TensorField):
        yield from obj.comps
    elif isinstance(obj, PolySymbol):
        yield from obj.tensor.comps
    elif isinstance(obj, DiffOp):
        for _, c in obj.items():
            yield c
    elif isinstance(obj, (list, tuple)):
        for o in obj:
            yield from _components(o)
    else:
        raise TypeError("unsupported residual type %r" % type(obj))


def _is_zero(obj) -> bool:
    return all(c.is_zero() for c in _components(obj))


def _summary(obj, limit: int = 240) -> str:
    for c in _components(obj):
        if not c.is_zero():
            s = c.to_str()
            return s if len(s) <= limit else s[: limit - 3] + "..."
    return "0"


def _generators(exprs: Iterable[Expr]):
    seen = {}
    for e in exprs:
        for g in e.generators():
            seen.setdefault(g, None)
            if isinstance(g, E.Atom):
                for h in _generators([g.arg]):
                    seen.setdefault(h, None)
    return list(seen)


def _realization(name: str, args: Sequence[str], rng: random.Random, constants) -> Expr:
    if not args:
        lo, hi = constants.get(name, (0.25, 0.5))
        return E.const(Fraction(rng.uniform(lo, hi)).limit_denominator(1000))
    # integer exponents keep every derivative inside the exact exp representation
    lin = E.expr_sum([E.coord(a) * rng.randint(-1, 1) for a in args])
    quad = E.coord(args[0]) * E.coord(args[-1]) * rng.randint(-1, 1)
    return E.const(Fraction(3, 2)) + E.exp(lin + quad) * Fraction(1, 4)


def _numeric_zero(out: Outcome, tol: float, seed: int, points: int = 20) -> tuple[bool, str]:
    res = list(_components(out.residuals))
    refs = list(_components(out.references)) if out.references else []
    nz = [e for e in res if not e.is_zero()]
    if not nz:
        return True, "0"
    rng = random.Random(seed)
    gens = _generators(nz + refs)
    fns = {}
    for g in gens:
        if isinstance(g, E.FnDeriv):
            fns.setdefault(g.name, g.args)
    coords = sorted({g.name for g in gens if isinstance(g, E.Coord)} | {a for args in fns.values() for a in args})
    realizations = {nm: _realization(nm, args, rng, out.constants) for nm, args in sorted(fns.items())}
    worst = 0.0
    good = 0
    attempts = 0
    while good < points:
        attempts += 1
        if attempts > 50 * points:
            return False, "no admissible evaluation points"
        pt = {c: rng.uniform(*out.domain.get(c, (0.6, 1.4))) for c in coords}
        ctx = E.NumericContext(pt, realizations)
        try:
            scale = max([1.0] + [abs(E.eval_numeric(r, E.NumericContext(pt, realizations))) for r in refs])
            vals = [abs(E.eval_numeric(e, ctx)) for e in nz]
        except (E.GuardViolation, E.NonFinite, ZeroDivisionError, OverflowError):
            continue
        good += 1
        worst = max(worst, max(vals) / scale)
    return worst <= tol, "max relative residual %.3e over %d points" % (worst, points)


# ---------------------------------------------------------------------------
# fixtures (cached per process)


@functools.lru_cache(maxsize=None)
def _fixture(name: str):
    spec = load_fixture(name)
    return spec, spec.geometry()


def _symbol(name: str, sym: str = "K") -> PolySymbol:
    spec, geom = _fixture(name)
    return PolySymbol.from_decl(geom, spec.symbols[sym])


@functools.lru_cache(maxsize=None)
def _dipirro_hat():
    spec, geom = _fixture("dipirro")
    U = spec.conformal[1]
    hat = geom.scaled(E.exp(U * 2))
    K = _symbol("dipirro").on(hat)
    f = (ricci_contraction(hat, K) * 3 - scalar(hat) * metric_trace(hat, K)) * Fraction(1, 16)
    return hat, K, f, U


def _abstract(name: str, geom: Geometry) -> Expr:
    return E.function(name, geom.coords)


def _two_form(geom: Geometry, i: int, j: int, value: Expr) -> TensorField:
    def f(idx):
        if idx == (i, j):
            return value
        if idx == (j, i):
            return -value
        return E.ZERO

    return TensorField.build(geom, DOWN * 2, f)


# ---------------------------------------------------------------------------
# criterion 1: the Di Pirro symmetry


def c1_killing() -> Outcome:
    spec, g = _fixture("dipirro")
    K = _symbol("dipirro")
    return Outcome([poisson(hamiltonian_symbol(g), K)], [K])


def c1_potential() -> Outcome:
    hat, K, f, _ = _dipirro_hat()
    w = flat(obs(K))
    res = TensorField.build(hat, DOWN, lambda i: w[i] + E.diff(f, hat.coords[i[0]]) * 2)
    return Outcome([res], [w])


def c1_potential_solver() -> Outcome:
    hat, K, f, _ = _dipirro_hat()
    pr = solve_potential(flat(obs(K)), K, hat)
    if not pr.found:
        return Outcome([E.ONE])
    return Outcome([pr.potential - f], [f])


def _dipirro_operator(hat, K, f, weights) -> DiffOp:
    return (quantize_order2(hat, K=K, weights=weights) + DiffOp.multiplication(hat, f)).with_weights(weights)


def _display_form(geom: Geometry, K: PolySymbol, divdiv=Fraction(-1, 16)) -> DiffOp:
    """``nabla_a K^ab nabla_b + divdiv nabla_a nabla_b K^ab - (1/8) Ric_ab K^ab`` (displayed: ``divdiv = -1/16``)."""
    divK = divergence_sym2(geom, K)
    zeroth = divergence_vector(geom, divK) * divdiv - ricci_contraction(geom, K) * Fraction(1, 8)
    return _second_order_part(geom, K) + _vector_op(geom, divK) + DiffOp.multiplication(geom, zeroth)


def c1_display_forms() -> Outcome:
    hat, K, f, _ = _dipirro_hat()
    D = _dipirro_operator(hat, K, f, Weights.l0l0(3))
    disp = _display_form(hat, K)
    return Outcome([(disp - D).with_weights(None)], [D])


def c1_display_arithmetic() -> Outcome:
    """The second display, with the ``nabla nabla K`` sign reversed, equals ``Q(K) + f`` in ``g`` (where ``K`` is Killing)."""
    spec, g = _fixture("dipirro")
    K = _symbol("dipirro")
    f = (ricci_contraction(g, K) * 3 - scalar(g) * metric_trace(g, K)) * Fraction(1, 16)
    D = quantize_killing(g, K) + DiffOp.multiplication(g, f)
    disp = _display_form(g, K, Fraction(1, 16))
    return Outcome([(disp - D).with_weights(None)], [D])


def c1_commutator() -> Outcome:
    """Density-level commutator in ``g_hat``: ``Delta_Y o D`` on ``lambda_0`` minus ``D o Delta_Y`` on ``mu_0``."""
    hat, K, f, _ = _dipirro_hat()
    Y = yamabe(hat)
    D1 = _dipirro_operator(hat, K, f, Weights.l0l0(3))
    D2 = _dipirro_operator(hat, K, f, Weights.m0m0(3))
    return Outcome([compose(Y, D1) - compose(D2, Y)], [compose(Y, D1)])


def c1_commutator_in_g() -> Outcome:
    hat, K, f, U = _dipirro_hat()
    spec, g = _fixture("dipirro")
    D = transport(_dipirro_operator(hat, K, f, Weights.l0l0(3)), -U, Weights.l0l0(3), g)
    return Outcome([commutator(yamabe(g), D)], [compose(yamabe(g), D, check_weights=False)])


# ---------------------------------------------------------------------------
# criteria 2 and 3: the Staeckel and Minkowski-reduction obstructions


def _stackel_expected(geom: Geometry) -> TensorField:
    L = E.log(E.function("u", ["x2"]) + E.function("v", ["x3"]))
    val = (E.diff(L, "x2", "x2", "x2", "x3") + E.diff(L, "x2", "x3", "x3", "x3")) * Fraction(-1, 4)
    return _two_form(geom, 1, 2, val)


def c2_conformal_killing() -> Outcome:
    return Outcome([conformal_killing_op(_symbol("stackel"))], [_symbol("stackel")])


def c2_dobs() -> Outcome:
    spec, g = _fixture("stackel")
    dw = exterior_d(flat(obs(_symbol("stackel"))))
    ex = _stackel_expected(g)
    return Outcome([dw - ex], [ex])


def c2_dobs_reversed() -> Outcome:
    spec, g = _fixture("stackel")
    dw = exterior_d(flat(obs(_symbol("stackel"))))
    ex = _stackel_expected(g)
    return Outcome([dw + ex], [ex])


def _qdelta(name: str) -> Callable[[], Outcome]:
    def run() -> Outcome:
        K = _symbol(name)
        return Outcome([qdelta_residual(K)], [yamabe(K.geom)])

    return run


def _verdict(name: str, expected: str) -> Callable[[], Outcome]:
    def run() -> Outcome:
        rep = classify(_symbol(name))
        return Outcome(verdict=rep.verdict, expected_verdict=expected)

    return run


MINKOWSKI_DOMAIN = {"r": (0.5, 1.0), "z": (2.0, 3.0), "phi": (0.0, 1.0)}
MINKOWSKI_CONSTANTS = {"a": (0.2, 0.6)}


def _minkowski_expected(geom: Geometry) -> TensorField:
    a, r, z = E.function("a"), E.coord("r"), E.coord("z")
    val = (a + a**3) * Fraction(3, 2) * ((z + a * r) ** -4 - (z - a * r) ** -4)
    return _two_form(geom, 0, 2, val)


def c3_dobs() -> Outcome:
    spec, g = _fixture("minkowski_reduction")
    dw = exterior_d(flat(obs(_symbol("minkowski_reduction"))))
    ex = _minkowski_expected(g)
    return Outcome([dw - ex], [ex], domain=MINKOWSKI_DOMAIN, constants=MINKOWSKI_CONSTANTS)


def c3_dobs_reversed() -> Outcome:
    spec, g = _fixture("minkowski_reduction")
    dw = exterior_d(flat(obs(_symbol("minkowski_reduction"))))
    ex = _minkowski_expected(g)
    return Outcome([dw + ex], [ex], domain=MINKOWSKI_DOMAIN, constants=MINKOWSKI_CONSTANTS)


# ---------------------------------------------------------------------------
# criterion 4: the product-geometry lemma


def c4_quantization() -> Outcome:
    spec, g = _fixture("lemma_product")
    Q = quantize_order2(g, K=_symbol("lemma_product"), weights=Weights.l0l0(4))
    n = g.n
    expected = DiffOp.partial(g, 2, 2) + DiffOp.multiplication(g, scalar(g) * Fraction(1, 2 * (n - 1) * (n + 1)))
    return Outcome([(Q - expected).with_weights(None)], [expected])


def _grad_sc_symbol(g: Geometry) -> PolySymbol:
    return PolySymbol(TensorField(g, UP, gradient_up(g, scalar(g))))


def c4_commutator() -> Outcome:
    spec, g = _fixture("lemma_product")
    n = g.n
    Q = quantize_order2(g, K=_symbol("lemma_product"), weights=Weights.l0l0(n))
    C = commutator(yamabe(g), Q)
    R = quantize_order2(g, X=_grad_sc_symbol(g).scale(Fraction(1, (n - 1) * (n + 1))), weights=Weights.l0m0(n))
    return Outcome([(C - R).with_weights(None)], [R])


def c4_cotton() -> Outcome:
    spec, g = _fixture("lemma_product")
    n = g.n
    K = _symbol("lemma_product")
    A = cotton_york(g)  # the lemma's A_ijk = 2 nabla_[i P_j]k is A_kij here
    sc = scalar(g)

    def comp(i):
        terms = [A[(k, i[0], j)] * K[(j, k)] for j in range(n) for k in range(n) if not K[(j, k)].is_zero()]
        return E.expr_sum(terms) + E.diff(sc, g.coords[i[0]]) * Fraction(1, 2 * (n - 1) * (n - 2))

    return Outcome([TensorField.build(g, DOWN, comp)], [TensorField.build(g, DOWN, lambda i: E.diff(sc, g.coords[i[0]]))])


def c4_obs() -> Outcome:
    spec, g = _fixture("lemma_product")
    n = g.n
    K = _symbol("lemma_product")
    C = commutator(yamabe(g), quantize_order2(g, K=K, weights=Weights.l0l0(n)))
    R = quantize_order2(g, X=obs(K).with_weight(0), weights=Weights.l0m0(n))
    return Outcome([(C - R).with_weights(None)], [R])


# ---------------------------------------------------------------------------
# criterion 5: the commutator identity


@functools.lru_cache(maxsize=None)
def _cubic_geometry() -> Geometry:
    """``delta + eps * (symmetric cubic)`` on R^3 with a symbolic parameter ``eps``."""
    x1, x2, x3 = (E.coord(c) for c in ("x1", "x2", "x3"))
    eps = E.function("eps")
    c = {
        (0, 0): x1**3,
        (0, 1): x1 * x2 * x3,
        (1, 1): x2**2 * x3,
        (2, 2): x3**3 + x1**2 * x2,
    }
    m = [[(E.ONE if i == j else E.ZERO) + eps * c.get((min(i, j), max(i, j)), E.ZERO) for j in range(3)] for i in range(3)]
    return Geometry(("x1", "x2", "x3"), m, functions={"eps": ()})


def _abstract_symbol(geom: Geometry, degree: int, prefix: str) -> PolySymbol:
    if degree == 0:
        return PolySymbol.scalar(geom, _abstract(prefix, geom))
    if degree == 1:
        return PolySymbol(TensorField(geom, UP, [_abstract("%s%d" % (prefix, i + 1), geom) for i in range(geom.n)]))
    comps = {}
    for i, j in itertools.combinations_with_replacement(range(geom.n), 2):
        comps[(i, j)] = _abstract("%s%d%d" % (prefix, i + 1, j + 1), geom)
    return PolySymbol.from_components(geom, 2, comps)


def _flat3() -> Geometry:
    return _fixture("flat3")[1]


def _qdelta_abstract(geom_fn: Callable[[], Geometry], degree: int) -> Callable[[], Outcome]:
    def run() -> Outcome:
        g = geom_fn()
        S = _abstract_symbol(g, degree, "s" if degree == 0 else "X")
        return Outcome([qdelta_residual(S, g)], [yamabe(g)])

    return run


def _sigma3(geom_fn: Callable[[], Geometry]) -> Callable[[], Outcome]:
    def run() -> Outcome:
        g = geom_fn()
        S = _abstract_symbol(g, 2, "S")
        return Outcome([sigma3_residual(S, g)], [poisson(hamiltonian_symbol(g), S)])

    return run


def c5_dipirro_hat() -> Outcome:
    hat, K, f, _ = _dipirro_hat()
    return Outcome([qdelta_residual(K, hat)], [yamabe(hat)])


# ---------------------------------------------------------------------------
# criterion 6: the beta coefficients


def _displayed_killing_coefficients(n: int) -> tuple[Fraction, Fraction, Fraction]:
    """Coefficients of ``div K . nabla``, ``nabla nabla K`` and ``Ric(K)`` in the displayed ``Q_{l0,l0}(K)``."""
    return Fraction(n, n + 2), Fraction(n * (n - 2), 4 * (n + 2) * (n + 1)), Fraction(-(n + 2), 4 * (n + 1))


def _beta_table(n: int, which: str) -> Callable[[], Outcome]:
    def run() -> Outcome:
        w = Weights.l0l0(n) if which == "l0l0" else Weights.m0m0(n)
        b = beta_coeffs(n, w)
        c1, c3, c5 = _displayed_killing_coefficients(n)
        if which == "m0m0_adjoint":
            # Q_{m0,m0}(K) is the formal adjoint of Q_{l0,l0}(K) (reality condition); expanding the
            # adjoint of the displayed operator gives these coefficients
            c1, c3 = 2 - c1, 1 - c1 + c3
        res = [E.const(b[0] - c1), E.const(b[2] - c3), E.const(b[4] - c5)]
        return Outcome(res, [E.const(c1), E.const(c3), E.const(c5)])

    return run


def _killing_weights_agree(name: str, sym: str = "K") -> Callable[[], Outcome]:
    """``Q_{l0,l0}(K) = Q_{m0,m0}(K)`` for a Killing tensor ``K``."""

    def run() -> Outcome:
        K = _symbol(name, sym)
        g = K.geom
        a = quantize_order2(g, K=K, weights=Weights.l0l0(g.n)).with_weights(None)
        b = quantize_order2(g, K=K, weights=Weights.m0m0(g.n)).with_weights(None)
        return Outcome([a - b], [a])

    return run


def _killing_formula_agrees(name: str, sym: str = "K") -> Callable[[], Outcome]:
    """The specialized Killing-tensor quantization equals the general formula at ``(lambda_0, lambda_0)``."""

    def run() -> Outcome:
        K = _symbol(name, sym)
        g = K.geom
        a = quantize_order2(g, K=K, weights=Weights.l0l0(g.n))
        return Outcome([quantize_killing(g, K) - a], [a])

    return run


def c6_beta_identity() -> Outcome:
    n, lam = E.coord("n"), E.coord("lam")
    b = beta_formulas(n, lam, lam)
    return Outcome([b[0] - b[1] * 2 - 1])


# ---------------------------------------------------------------------------
# criterion 7: conformal transformation laws


@functools.lru_cache(maxsize=None)
def _transform(name: str):
    spec, g = _fixture(name)
    U = E.function("U", g.coords)
    return transform_residuals(g, U)


def _law(name: str, law: str) -> Callable[[], Outcome]:
    def run() -> Outcome:
        return Outcome([_transform(name).residuals[law]])

    return run


# ---------------------------------------------------------------------------
# criterion 8: structural properties


def _bianchi1(name: str) -> Callable[[], Outcome]:
    def run() -> Outcome:
        g = _fixture(name)[1]
        R = riemann(g).lower(2).with_weight(0)  # R_abcd
        t = TensorField.build(
            g, DOWN * 4, lambda i: R[(i[0], i[1], i[2], i[3])] + R[(i[1], i[2], i[0], i[3])] + R[(i[2], i[0], i[1], i[3])]
        )
        return Outcome([t])

    return run


def _bianchi2(name: str) -> Callable[[], Outcome]:
    def run() -> Outcome:
        g = _fixture(name)[1]
        dR = riemann(g).covariant_derivative()  # nabla_e R_ab^c_d
        t = TensorField.build(
            g,
            "dddud",
            lambda i: dR[(i[0], i[1], i[2], i[3], i[4])] + dR[(i[1], i[2], i[0], i[3], i[4])] + dR[(i[2], i[0], i[1], i[3], i[4])],
        )
        return Outcome([t])

    return run


def _contracted_bianchi(name: str) -> Callable[[], Outcome]:
    """``nabla^a P_ab = nabla_b J`` and ``A_a^a_b``-type trace of Cotton-York vanishes."""

    def run() -> Outcome:
        g = _fixture(name)[1]
        P, J = schouten(g)
        divP = P.covariant_derivative().raise_(0).contract(0, 1)
        gradJ = TensorField.build(g, DOWN, lambda i: E.diff(J, g.coords[i[0]]))
        A = cotton_york(g)
        trA = A.raise_(0).contract(0, 1)  # A^a_ab
        return Outcome([divP.with_weight(0) - gradJ, trA])

    return run


def _decomposition(name: str) -> Callable[[], Outcome]:
    def run() -> Outcome:
        g = _fixture(name)[1]
        C = weyl(g)
        recon = C + decomposition_terms(g) - riemann(g)
        traces = [C.contract(1, 2), C.contract(0, 2)]
        return Outcome([recon] + traces)

    return run


def _weyl3(name: str) -> Callable[[], Outcome]:
    def run() -> Outcome:
        return Outcome([weyl(_fixture(name)[1])])

    return run


REALITY_WEIGHTS = Weights(Fraction(1, 3), Fraction(1, 2))


def _reality(name: str, degree: int) -> Callable[[], Outcome]:
    def run() -> Outcome:
        g = _fixture(name)[1]
        S = _abstract_symbol(g, degree, "r")
        kw = {0: "f", 1: "X", 2: "K"}[degree]
        arg = S.tensor.value() if degree == 0 else S
        w = REALITY_WEIGHTS
        lhs = adjoint(quantize_order2(g, weights=w, **{kw: arg}))
        rhs = quantize_order2(g, weights=w.dual(), **{kw: arg}).scale((-1) ** degree)
        return Outcome([(lhs - rhs).with_weights(None)], [rhs])

    return run


def _factorization(name: str) -> Callable[[], Outcome]:
    def run() -> Outcome:
        g = _fixture(name)[1]
        r1, r2 = factorization_check(g, _abstract("s", g))
        return Outcome([r1.with_weights(None), r2.with_weights(None)])

    return run


def _selfadjoint(name: str, hat: bool = False) -> Callable[[], Outcome]:
    def run() -> Outcome:
        g = _dipirro_hat()[0] if hat else _fixture(name)[1]
        Y = yamabe(g)
        return Outcome([(adjoint(Y) - Y).with_weights(None)], [Y])

    return run


def _random_poly(rng: random.Random, coords: Sequence[str], degree: int = 2) -> Expr:
    xs = [E.coord(c) for c in coords]
    terms = [E.const(rng.randint(-3, 3))]
    for _ in range(3):
        mono = E.ONE
        for _ in range(rng.randint(1, degree)):
            mono = mono * rng.choice(xs)
        terms.append(mono * rng.randint(-3, 3))
    return E.expr_sum(terms)


def _random_op(rng: random.Random, g: Geometry, order: int) -> DiffOp:
    coeffs = {}
    for alpha in itertools.product(range(order + 1), repeat=g.n):
        if sum(alpha) <= order and (sum(alpha) == order or rng.random() < 0.3):
            coeffs[alpha] = _random_poly(rng, g.coords) + _abstract("h", g) * rng.randint(0, 1)
    return DiffOp(g, coeffs)


def _sigma_maps(seed: int = 7, trials: int = 4) -> Callable[[], Outcome]:
    def run() -> Outcome:
        rng = random.Random(seed)
        res = []
        for name in ("flat3", "lemma_product"):
            g = _fixture(name)[1]
            for _ in range(trials):
                k1, k2 = rng.randint(1, 2), rng.randint(1, 2)
                A, B = _random_op(rng, g, k1), _random_op(rng, g, k2)
                sA, sB = principal_symbol(A, k1), principal_symbol(B, k2)
                prod = principal_symbol(compose(A, B, False), k1 + k2)
                res.append(prod - sA.product(sB))
                br = principal_symbol(commutator(A, B), k1 + k2 - 1)
                res.append(br - poisson(sA.with_weight(0), sB.with_weight(0)))
        return Outcome(res)

    return run


def _random_symbol(rng: random.Random, g: Geometry, degree: int) -> PolySymbol:
    comps = {}
    for idx in itertools.combinations_with_replacement(range(g.n), degree):
        if degree == 0 or rng.random() < 0.6:
            comps[idx] = _random_poly(rng, g.coords)
    return PolySymbol.from_components(g, degree, comps) if degree else PolySymbol.scalar(g, _random_poly(rng, g.coords))


def _jacobi(seed: int = 11, trials: int = 5) -> Callable[[], Outcome]:
    def run() -> Outcome:
        rng = random.Random(seed)
        g = _fixture("flat3")[1]
        res = []
        for _ in range(trials):
            a, b, c = (_random_symbol(rng, g, rng.randint(0, 2)) for _ in range(3))
            j = poisson(a, poisson(b, c)).tensor
            parts = [j, poisson(b, poisson(c, a)).tensor, poisson(c, poisson(a, b)).tensor]
            ranks = {p.rank for p in parts}
            if len(ranks) != 1:
                continue
            total = parts[0] + parts[1] + parts[2]
            res.append(total)
        return Outcome(res)

    return run


def _finite_difference(seed: int = 3, h: float = 1e-4) -> Callable[[], Outcome]:
    """Exact derivatives of curvature scalars against central differences (relative error <= 1e-6)."""

    def run() -> Outcome:
        rng = random.Random(seed)
        worst = 0.0
        for name in ("conformally_flat3", "sphere3"):
            g = _fixture(name)[1]
            f = scalar(g)
            for _ in range(5):
                pt = {c: rng.uniform(-0.5, 0.5) for c in g.coords}
                for x in g.coords:
                    exact = E.eval_numeric(E.diff(f, x), E.NumericContext(pt))
                    up, dn = dict(pt), dict(pt)
                    up[x] += h
                    dn[x] -= h
                    fd = (E.eval_numeric(f, E.NumericContext(up)) - E.eval_numeric(f, E.NumericContext(dn))) / (2 * h)
                    worst = max(worst, abs(fd - exact) / max(1.0, abs(exact)))
        ok = worst <= 1e-6
        return Outcome([] if ok else [E.const(Fraction(worst).limit_denominator(10**12))])

    return run


def _xy_identity(normalization: str) -> Callable[[], Outcome]:
    """At ``k = 2``: ``x F1 + y F2`` against ``2(n-2)/(3(n+1)) F`` for ``n = 3..12``."""

    def run() -> Outcome:
        res = []
        for n in range(3, 13):
            x, y = higher_order_xy(n, 2)
            scale = (n + 2) if normalization == "generator" else 1
            res.append(E.const(x * scale - Fraction(2 * (n - 2), 3 * (n + 1))))
            res.append(E.const(y))
        return Outcome(res)

    return run


def _f_invariance(variant: str) -> Callable[[], Outcome]:
    """``F1``/``F2`` on a trace-free degree-3 symbol are unchanged by ``g -> e^{2U} g`` (mixed form)."""

    def run() -> Outcome:
        g = _fixture("lemma_product")[1]
        x = [E.coord(c) for c in g.coords]
        S = PolySymbol.from_components(g, 3, {(0, 1, 2): x[2], (0, 0, 0): x[3] * x[0], (1, 2, 3): E.ONE, (2, 2, 3): x[1]})
        S = PolySymbol(S.tensor.tracefree_project())
        hat = g.scaled(E.exp((x[2] * x[3] + x[0]) * 2))
        a = f_operator(S, variant).tensor.lower(1)
        b = f_operator(S.on(hat), variant).tensor.lower(1)
        return Outcome([TensorField(g, a.variance, [p - q for p, q in zip(a.comps, b.comps)])], [a])

    return run


def _obs_invariance(name: str) -> Callable[[], Outcome]:
    """``Obs(K)^flat`` (weight 0) is the same for ``g`` and ``e^{2U} g``."""

    def run() -> Outcome:
        g = _fixture(name)[1]
        K = _symbol(name)
        x = [E.coord(c) for c in g.coords]
        hat = g.scaled(E.exp((x[0] * x[1] + x[-1]) * 2))
        a, b = flat(obs(K)), flat(obs(K.on(hat)))
        return Outcome([TensorField(g, DOWN, [p - q for p, q in zip(a.comps, b.comps)])], [a])

    return run


def _carter(name: str, sym: str) -> Callable[[], Outcome]:
    def run() -> Outcome:
        K = _symbol(name, sym)
        g = K.geom
        return Outcome([commutator(yamabe(g), quantize_order2(g, K=K, weights=Weights.l0l0(g.n)))])

    return run


# ---------------------------------------------------------------------------
# registry


def _c(name, criterion, kind, description, run) -> Check:
    return Check(name, criterion, kind, description, run)


CHECKS: list[Check] = [
    # 1. Di Pirro
    _c("dipirro.killing", "1(i)", "criterion", "K is a Killing tensor of g: {H, K} = 0", c1_killing),
    _c("dipirro.potential", "1(ii)", "criterion", "Obs(K)^flat + 2 df = 0 in g_hat with f = (3 Ric - Sc g)(K)/16", c1_potential),
    _c("dipirro.potential_solver", "1(ii)", "diagnostic", "the potential search recovers f", c1_potential_solver),
    _c("dipirro.display_forms", "1(iii)", "criterion", "the two displayed forms of D agree (in g_hat)", c1_display_forms),
    _c("dipirro.display_arithmetic", "1(iii)", "diagnostic", "second form with reversed nabla-nabla-K sign = Killing-tensor quantization + f, in g", c1_display_arithmetic),
    _c("dipirro.commutator", "1(iv)", "criterion", "[Delta_Y, D] = 0 on densities, computed in g_hat", c1_commutator),
    _c("dipirro.commutator_in_g", "1(iv)", "diagnostic", "D transported to g commutes with Delta_Y(g)", c1_commutator_in_g),
    # 2. Staeckel
    _c("stackel.conformal_killing", "2", "criterion", "G(K) = 0", c2_conformal_killing),
    _c("stackel.dobs", "2", "criterion", "d(Obs(K)^flat) + (1/4)(d2^2+d3^2) d2 d3 log(u+v) dx2^dx3 = 0", c2_dobs),
    _c("stackel.dobs_reversed_sign", "2", "diagnostic", "d(Obs(K)^flat) - (1/4)(d2^2+d3^2) d2 d3 log(u+v) dx2^dx3 = 0", c2_dobs_reversed),
    _c("stackel.qdelta", "2", "diagnostic", "commutator identity with Obs(K) on the Staeckel fixture", _qdelta("stackel")),
    _c("stackel.verdict", "2", "criterion", "classification verdict", _verdict("stackel", "obstructed")),
    _c("stackel4.qdelta", "2", "diagnostic", "commutator identity on the four-dimensional extension (Weyl term active)", _qdelta("stackel4")),
    _c("stackel4.verdict", "2", "diagnostic", "four-dimensional extension is obstructed", _verdict("stackel4", "obstructed")),
    # 3. Minkowski reduction
    _c("minkowski.dobs", "3", "criterion", "d(Obs(K)^flat) - (3/2)(a+a^3)((z+ar)^-4 - (z-ar)^-4) dr^dz = 0", c3_dobs),
    _c("minkowski.dobs_reversed_sign", "3", "diagnostic", "d(Obs(K)^flat) + (3/2)(a+a^3)((z+ar)^-4 - (z-ar)^-4) dr^dz = 0", c3_dobs_reversed),
    _c("minkowski.qdelta", "3", "diagnostic", "commutator identity with Obs(K) on the Minkowski reduction", _qdelta("minkowski_reduction")),
    _c("minkowski.verdict", "3", "criterion", "classification verdict", _verdict("minkowski_reduction", "obstructed")),
    # 4. product lemma
    _c("lemma.quantization", "4", "criterion", "Q_{l0,l0}(p3^2) = d3^2 + Sc/30", c4_quantization),
    _c("lemma.commutator", "4", "criterion", "[Delta_Y, Q(p3^2)] = (1/15) Q_{l0,m0}(grad Sc)", c4_commutator),
    _c("lemma.cotton", "4", "criterion", "A_ijk K^jk + (1/12) d_i Sc = 0", c4_cotton),
    _c("lemma.obs", "4", "diagnostic", "[Delta_Y, Q(p3^2)] = Q_{l0,m0}(Obs(K))", c4_obs),
    # 5. commutator identity
    _c("qdelta.flat3.degree0", "5(a)", "criterion", "abstract function on flat R^3", _qdelta_abstract(_flat3, 0)),
    _c("qdelta.flat3.degree1", "5(a)", "criterion", "abstract vector field on flat R^3", _qdelta_abstract(_flat3, 1)),
    _c("qdelta.cubic.degree0", "5(a)", "criterion", "abstract function on delta + eps*cubic", _qdelta_abstract(_cubic_geometry, 0)),
    _c("qdelta.cubic.degree1", "5(a)", "criterion", "abstract vector field on delta + eps*cubic", _qdelta_abstract(_cubic_geometry, 1)),
    _c("qdelta.flat3.K12", "5(b)", "criterion", "p1 p2 on flat R^3", lambda: Outcome([qdelta_residual(_symbol("flat3", "K12"))])),
    _c("qdelta.stackel", "5(b)", "criterion", "Staeckel conformal Killing tensor", _qdelta("stackel")),
    _c("qdelta.minkowski", "5(b)", "criterion", "Minkowski-reduction Killing tensor", _qdelta("minkowski_reduction")),
    _c("qdelta.dipirro", "5(b)", "criterion", "Di Pirro Killing tensor in g", _qdelta("dipirro")),
    _c("qdelta.dipirro_hat", "5(b)", "criterion", "Di Pirro tensor in g_hat (conformal Killing only)", c5_dipirro_hat),
    _c("qdelta.lemma", "5(b)", "criterion", "p3^2 on the product geometry", _qdelta("lemma_product")),
    _c("qdelta.sigma3.flat3", "5(c)", "criterion", "order-3 symbol of [Delta_Y, Q(S)] = {H, S} for abstract S on flat R^3", _sigma3(_flat3)),
    _c("qdelta.sigma3.cubic", "5(c)", "criterion", "order-3 symbol of [Delta_Y, Q(S)] = {H, S} for abstract S on delta + eps*cubic", _sigma3(_cubic_geometry)),
    # 6. beta table
    _c("beta.n3.l0l0", "6", "criterion", "beta_1, beta_3, beta_5 at (3, l0, l0) vs the displayed Q_{l0,l0}(K)", _beta_table(3, "l0l0")),
    _c("beta.n4.l0l0", "6", "criterion", "beta_1, beta_3, beta_5 at (4, l0, l0) vs the displayed Q_{l0,l0}(K)", _beta_table(4, "l0l0")),
    _c("beta.n3.m0m0", "6", "criterion", "beta_1, beta_3, beta_5 at (3, m0, m0) vs the displayed Q_{l0,l0}(K) coefficients", _beta_table(3, "m0m0")),
    _c("beta.n3.m0m0_adjoint", "6", "diagnostic", "beta_1, beta_3, beta_5 at (3, m0, m0) vs the formal adjoint of the displayed operator", _beta_table(3, "m0m0_adjoint")),
    _c("beta.killing_weights_agree.dipirro", "6", "diagnostic", "Q_{l0,l0}(K) = Q_{m0,m0}(K) for the Di Pirro Killing tensor", _killing_weights_agree("dipirro")),
    _c("beta.killing_formula.dipirro", "6", "diagnostic", "specialized Killing-tensor formula = general formula at (l0,l0), Di Pirro", _killing_formula_agrees("dipirro")),
    _c("beta.killing_formula.flat4", "6", "diagnostic", "specialized Killing-tensor formula = general formula at (l0,l0), flat R^4", _killing_formula_agrees("flat4", "L")),
    _c("beta.killing_weights_agree.flat4", "6", "diagnostic", "Q_{l0,l0}(K) = Q_{m0,m0}(K) for a Killing tensor on flat R^4", _killing_weights_agree("flat4", "L")),
    _c("beta.identity", "6", "criterion", "beta_1 - 2 beta_2 = 1 at delta = 0, symbolically in n and lambda", c6_beta_identity),
    # 7. transformation laws
]

for _name in ("flat3", "lemma_product"):
    for _law_name, _desc in (
        ("P", "Schouten tensor"),
        ("J", "Schouten trace"),
        ("A", "Cotton-York tensor"),
        ("nablaP", "trace-free symmetrized gradient of P, coefficients as displayed (4, -2)"),
        ("nablaJ", "gradient of J"),
        ("nablaC", "trace-free symmetrized gradient of the Weyl tensor"),
        ("C", "Weyl tensor"),
    ):
        CHECKS.append(_c("transform.%s.%s" % (_name, _law_name), "7", "criterion", _desc, _law(_name, _law_name)))
    CHECKS.append(
        _c(
            "transform.%s.nablaP_rederived" % _name,
            "7",
            "diagnostic",
            "gradient-of-P law with coefficients (6, -4)",
            _law(_name, "nablaP_rederived"),
        )
    )

CHECKS += [
    _c("structure.bianchi1.stackel", "8", "criterion", "R_[abc]^d = 0", _bianchi1("stackel")),
    _c("structure.bianchi1.lemma", "8", "criterion", "R_[abc]^d = 0", _bianchi1("lemma_product")),
    _c("structure.bianchi2.dipirro", "8", "criterion", "nabla_[e R_ab]^c_d = 0", _bianchi2("dipirro")),
    _c("structure.bianchi2.lemma", "8", "criterion", "nabla_[e R_ab]^c_d = 0", _bianchi2("lemma_product")),
    _c("structure.contracted_bianchi.stackel", "8", "criterion", "nabla^a P_ab = nabla_b J and A^a_ab = 0", _contracted_bianchi("stackel")),
    _c("structure.contracted_bianchi.lemma", "8", "criterion", "nabla^a P_ab = nabla_b J and A^a_ab = 0", _contracted_bianchi("lemma_product")),
    _c("structure.decomposition.lemma", "8", "criterion", "R = C + Schouten terms with C totally trace-free", _decomposition("lemma_product")),
    _c("structure.decomposition.stackel4", "8", "criterion", "R = C + Schouten terms with C totally trace-free", _decomposition("stackel4")),
    _c("structure.weyl3.stackel", "8", "criterion", "Weyl tensor vanishes at n = 3", _weyl3("stackel")),
    _c("structure.weyl3.dipirro", "8", "criterion", "Weyl tensor vanishes at n = 3", _weyl3("dipirro")),
    _c("structure.weyl3.minkowski", "8", "criterion", "Weyl tensor vanishes at n = 3", _weyl3("minkowski_reduction")),
    _c("structure.reality.degree0", "8", "criterion", "Q(S)* = Q_{1-mu,1-lambda}(S), degree 0", _reality("lemma_product", 0)),
    _c("structure.reality.degree1", "8", "criterion", "Q(S)* = -Q_{1-mu,1-lambda}(S), degree 1", _reality("lemma_product", 1)),
    _c("structure.reality.degree2", "8", "criterion", "Q(S)* = Q_{1-mu,1-lambda}(S), degree 2", _reality("flat3", 2)),
    _c("structure.factorization.lemma", "8", "criterion", "Q(|Vol|^d0 H S0) = Q(S0) o Delta_Y and Delta_Y o Q(S0)", _factorization("lemma_product")),
    _c("structure.factorization.stackel", "8", "criterion", "Q(|Vol|^d0 H S0) = Q(S0) o Delta_Y and Delta_Y o Q(S0)", _factorization("stackel")),
    _c("structure.selfadjoint.lemma", "8", "criterion", "Delta_Y is formally self-adjoint", _selfadjoint("lemma_product")),
    _c("structure.selfadjoint.dipirro", "8", "criterion", "Delta_Y is formally self-adjoint", _selfadjoint("dipirro")),
    _c("structure.selfadjoint.dipirro_hat", "8", "criterion", "Delta_Y is formally self-adjoint", _selfadjoint("dipirro", hat=True)),
    _c("structure.sigma_maps", "8", "criterion", "sigma(AB) = sigma(A) sigma(B), sigma([A,B]) = {sigma A, sigma B}", _sigma_maps()),
    _c("structure.poisson_jacobi", "8", "criterion", "Jacobi identity of the Poisson bracket", _jacobi()),
    _c("structure.finite_difference", "8", "criterion", "exact derivatives vs central differences (1e-6)", _finite_difference()),
    _c("structure.carter.flat4", "8", "criterion", "[Delta_Y, Q(K)] = 0 for Killing K on flat R^4", _carter("flat4", "L")),
    _c("structure.carter.flat3", "8", "criterion", "[Delta_Y, Q(K)] = 0 for Killing K on flat R^3", _carter("flat3", "K33")),
    _c("structure.f_invariance.F1", "8", "diagnostic", "F1 is conformally invariant (k = 3, n = 4)", _f_invariance("F1")),
    _c("structure.f_invariance.F2", "8", "diagnostic", "F2 is conformally invariant (k = 3, n = 4)", _f_invariance("F2")),
    _c("structure.obs_invariance.stackel", "8", "diagnostic", "Obs(K)^flat is conformally invariant", _obs_invariance("stackel")),
    _c("structure.obs_invariance.stackel4", "8", "diagnostic", "Obs(K)^flat is conformally invariant", _obs_invariance("stackel4")),
    _c("structure.xy_coefficients", "8", "criterion", "x F1 + y F2 = 2(n-2)/(3(n+1)) F at k = 2, F1 as displayed", _xy_identity("displayed")),
    _c("structure.xy_coefficients_generator", "8", "diagnostic", "same with F1 scaled by n + 2k - 2", _xy_identity("generator")),
]


# ---------------------------------------------------------------------------
# running


def _run_one(args) -> CheckResult:
    check_name, numeric, tol, seed = args
    check = next(c for c in CHECKS if c.name == check_name)
    t0 = time.perf_counter()
    try:
        out = check.run()
        if out.expected_verdict is not None:
            status = "verdict:%s" % out.verdict if out.verdict == out.expected_verdict else "fail"
            residual = "verdict %s (expected %s)" % (out.verdict, out.expected_verdict)
        elif numeric:
            ok, residual = _numeric_zero(out, tol, seed)
            status = "pass" if ok else "fail"
        else:
            ok = _is_zero(out.residuals)
            status = "pass" if ok else "fail"
            residual = _summary(out.residuals)
        err = None
    except Exception as exc:  # a crashing check is a failing check
        status, residual, err = "fail", "error", "%s: %s" % (type(exc).__name__, exc)
    return CheckResult(
        check.name, check.criterion, check.kind, check.description, status, residual, (time.perf_counter() - t0) * 1000, err
    )


def select(pattern: str | None = None) -> list[Check]:
    if not pattern:
        return list(CHECKS)
    rx = re.compile(pattern)
    return [c for c in CHECKS if rx.search(c.name)]


def _pool_size() -> int:
    env = os.environ.get("CONFSYM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


def run_checks(
    checks: Sequence[Check],
    numeric: bool = False,
    tol: float = 1e-8,
    seed: int = 0,
    workers: int | None = None,
) -> list[CheckResult]:
    """Run ``checks`` (in a process pool when ``workers > 1``); results are ordered by check name."""
    workers = _pool_size() if workers is None else workers
    jobs = [(c.name, numeric, tol, seed) for c in checks]
    if workers <= 1 or len(jobs) <= 1:
        results = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            results = list(ex.map(_run_one, jobs))
    return sorted(results, key=lambda r: r.name)


def fixtures_digest() -> str:
    h = hashlib.sha256()
    for name in sorted(
        ("conformally_flat3", "dipirro", "flat3", "flat4", "lemma_product", "minkowski_reduction", "sphere3", "stackel", "stackel4")
    ):
        with open(fixture_path(name), "rb") as fh:
            h.update(name.encode() + b"\0" + fh.read())
    return h.hexdigest()
