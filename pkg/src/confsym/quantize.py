"""Differential operators in the metric trivialization and the order <= 2 quantization.

A :class:`DiffOp` is ``sum_alpha c_alpha d^alpha`` acting on function
representatives of densities: a ``lambda``-density ``phi |Vol_g|^lambda`` is
represented by ``phi``.  Weights ``(lambda, mu)`` record source and target
density weights; they matter for composition checks and for transport to a
conformally related metric, where a ``w``-density representative picks up the
factor ``e^{-n w Upsilon}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from . import expr as E
from .curvature import ricci, scalar
from .expr import Expr
from .geometry import Geometry
from .symbols import PolySymbol, is_killing
from .tensor import UP, TensorField, christoffel

__all__ = [
    "Weights",
    "DiffOp",
    "QuantizeError",
    "WeightMismatch",
    "OrderCap",
    "ExcludedDelta",
    "NotKilling",
    "ORDER_CAP",
    "beta_formulas",
    "beta_coeffs",
    "excluded_deltas",
    "degree1_coefficient",
    "quantize_order2",
    "quantize_killing",
    "yamabe",
    "compose",
    "commutator",
    "principal_symbol",
    "adjoint",
    "lie_density",
    "factorization_check",
    "transport",
    "conjugate",
]

ORDER_CAP = 4


class QuantizeError(ValueError):
    pass


class WeightMismatch(QuantizeError):
    pass


class OrderCap(QuantizeError):
    pass


class ExcludedDelta(QuantizeError):
    pass


class NotKilling(QuantizeError):
    pass


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class Weights:
    """Source and target density weights ``(lambda, mu)``; ``delta = mu - lambda``."""

    lam: Fraction
    mu: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lam", Fraction(self.lam))
        object.__setattr__(self, "mu", Fraction(self.mu))

    @property
    def delta(self) -> Fraction:
        return self.mu - self.lam

    @staticmethod
    def lambda0(n: int) -> Fraction:
        return Fraction(n - 2, 2 * n)

    @staticmethod
    def mu0(n: int) -> Fraction:
        return Fraction(n + 2, 2 * n)

    @staticmethod
    def delta0(n: int) -> Fraction:
        return Fraction(2, n)

    @classmethod
    def l0l0(cls, n: int) -> "Weights":
        return cls(cls.lambda0(n), cls.lambda0(n))

    @classmethod
    def m0m0(cls, n: int) -> "Weights":
        return cls(cls.mu0(n), cls.mu0(n))

    @classmethod
    def l0m0(cls, n: int) -> "Weights":
        return cls(cls.lambda0(n), cls.mu0(n))

    @classmethod
    def m0l0(cls, n: int) -> "Weights":
        return cls(cls.mu0(n), cls.lambda0(n))

    def dual(self) -> "Weights":
        """Weights of the adjoint: ``(1 - mu, 1 - lambda)``."""
        return Weights(1 - self.mu, 1 - self.lam)

    def __str__(self):
        return "(%s, %s)" % (self.lam, self.mu)


def excluded_deltas(n: int) -> tuple[Fraction, ...]:
    return (Fraction(2, n), Fraction(n + 2, 2 * n), Fraction(1), Fraction(n + 1, n), Fraction(n + 2, n))


def beta_formulas(n, lam, mu):
    """The six coefficients as closed forms; works for any field-like inputs (Fractions, sympy symbols)."""
    d = mu - lam
    b1 = 2 * (n * lam + 1) / (2 + n * (1 - d))
    b2 = n * (lam + mu - 1) / ((2 + n * (1 - d)) * (2 - n * d))
    b3 = n * lam * (n * lam + 1) / ((1 + n * (1 - d)) * (2 + n * (1 - d)))
    b4 = (
        n
        * lam
        * (n**2 * mu * (2 - lam - mu) + 2 * (n * lam + 1) ** 2 - n * (n + 1))
        / ((1 + n * (1 - d)) * (2 + n * (1 - d)) * (2 + n * (1 - 2 * d)) * (2 - n * d))
    )
    b5 = n**2 * lam * (mu - 1) / ((n - 2) * (1 + n * (1 - d)))
    b6 = n**2 * lam * (mu - 1) * (n * d - 2) / ((n - 1) * (n - 2) * (1 + n * (1 - d)) * (2 + n * (1 - 2 * d)))
    return b1, b2, b3, b4, b5, b6


def beta_coeffs(n: int, w: Weights) -> tuple[Fraction, ...]:
    """Exact ``(beta_1, ..., beta_6)``; raises :class:`ExcludedDelta` on the excluded set."""
    if w.delta in excluded_deltas(n):
        raise ExcludedDelta("delta = %s is excluded for n = %d" % (w.delta, n))
    return beta_formulas(Fraction(n), w.lam, w.mu)


def _beta_at_delta0(n: int, w: Weights) -> tuple[Fraction, ...]:
    """beta_1, beta_3, beta_5, beta_6 at ``delta = 2/n`` (finite there); beta_2, beta_4 are undefined."""
    nf, lam, mu = Fraction(n), w.lam, w.mu
    d = mu - lam
    b1 = 2 * (nf * lam + 1) / (2 + nf * (1 - d))
    b3 = nf * lam * (nf * lam + 1) / ((1 + nf * (1 - d)) * (2 + nf * (1 - d)))
    b5 = nf**2 * lam * (mu - 1) / ((nf - 2) * (1 + nf * (1 - d)))
    b6 = nf**2 * lam * (mu - 1) * (nf * d - 2) / ((nf - 1) * (nf - 2) * (1 + nf * (1 - d)) * (2 + nf * (1 - 2 * d)))
    return b1, None, b3, None, b5, b6


def degree1_coefficient(n: int, w: Weights) -> Fraction:
    """``lambda / (1 - delta)``, the divergence coefficient of the degree-1 part."""
    if w.delta == 1:
        raise ExcludedDelta("delta = 1 is excluded")
    return w.lam / (1 - w.delta)


# ---------------------------------------------------------------------------
# differential operators


def _unit(n: int, i: int) -> tuple[int, ...]:
    return tuple(1 if k == i else 0 for k in range(n))


def _add_alpha(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _sub_alpha(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _sub_multi_indices(alpha):
    """All ``gamma <= alpha`` with the multinomial ``binom(alpha, gamma)``."""
    ranges = [range(a + 1) for a in alpha]
    for gamma in itertools.product(*ranges):
        c = 1
        for a, g in zip(alpha, gamma):
            c *= math.comb(a, g)
        yield gamma, c


def _dalpha(e: Expr, coords, alpha) -> Expr:
    for x, k in zip(coords, alpha):
        for _ in range(k):
            e = E.diff(e, x)
            if e.is_zero():
                return e
    return e


class DiffOp:
    """Immutable ``sum_alpha c_alpha d^alpha`` with optional ``(lambda, mu)`` weights."""

    __slots__ = ("geom", "coeffs", "weights")

    def __init__(self, geom: Geometry, coeffs: Mapping[tuple[int, ...], Expr], weights: Weights | None = None):
        self.geom = geom
        clean = {}
        for a, c in coeffs.items():
            c = E.const(c) if not isinstance(c, Expr) else c
            if len(a) != geom.n:
                raise QuantizeError("multi-index %r has wrong length" % (a,))
            if not c.is_zero():
                clean[tuple(a)] = c
        if clean and max(sum(a) for a in clean) > ORDER_CAP:
            raise OrderCap("operator order exceeds %d" % ORDER_CAP)
        self.coeffs = clean
        self.weights = weights

    # -- constructors -----------------------------------------------------------
    @classmethod
    def zero(cls, geom: Geometry, weights: Weights | None = None) -> "DiffOp":
        return cls(geom, {}, weights)

    @classmethod
    def multiplication(cls, geom: Geometry, f, weights: Weights | None = None) -> "DiffOp":
        return cls(geom, {(0,) * geom.n: f}, weights)

    @classmethod
    def partial(cls, geom: Geometry, *coords: int, weights: Weights | None = None) -> "DiffOp":
        alpha = [0] * geom.n
        for i in coords:
            alpha[i] += 1
        return cls(geom, {tuple(alpha): E.ONE}, weights)

    # -- properties -------------------------------------------------------------
    @property
    def order(self) -> int:
        return max((sum(a) for a in self.coeffs), default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, alpha) -> Expr:
        return self.coeffs.get(tuple(alpha), E.ZERO)

    def with_weights(self, w: Weights | None) -> "DiffOp":
        return DiffOp(self.geom, self.coeffs, w)

    def on(self, geom: Geometry) -> "DiffOp":
        return DiffOp(geom, self.coeffs, self.weights)

    def apply(self, f: Expr) -> Expr:
        acc = E.ZERO
        for a, c in self.coeffs.items():
            acc = acc + c * _dalpha(f, self.geom.coords, a)
        return acc

    def map(self, fn: Callable[[Expr], Expr]) -> "DiffOp":
        return DiffOp(self.geom, {a: fn(c) for a, c in self.coeffs.items()}, self.weights)

    def items(self):
        return sorted(self.coeffs.items(), key=lambda kv: (-sum(kv[0]), tuple(-x for x in kv[0])))

    def to_str(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for a, c in self.items():
            d = "*".join(
                ("d%s" % self.geom.coords[i]) if k == 1 else ("d%s^%d" % (self.geom.coords[i], k))
                for i, k in enumerate(a)
                if k
            )
            parts.append("(%s)%s" % (c.to_str(), ("*" + d) if d else ""))
        return " + ".join(parts)

    __str__ = to_str

    def __repr__(self):
        return "DiffOp(order=%d, terms=%d, weights=%s)" % (self.order, len(self.coeffs), self.weights)

    # -- linear structure ---------------------------------------------------------
    def _combine(self, other: "DiffOp", sign: int) -> "DiffOp":
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            c = c if sign > 0 else -c
            out[a] = out[a] + c if a in out else c
        if self.weights is None or other.weights is None:
            w = self.weights or other.weights
        else:
            w = self.weights if self.weights == other.weights else None
        return DiffOp(self.geom, out, w)

    def __add__(self, other: "DiffOp") -> "DiffOp":
        return self._combine(other, 1)

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self._combine(other, -1)

    def __neg__(self) -> "DiffOp":
        return self.map(lambda c: -c)

    def scale(self, s) -> "DiffOp":
        """Left multiplication by a function or constant."""
        s = E.const(s) if not isinstance(s, Expr) else s
        return self.map(lambda c: s * c)

    def __matmul__(self, other: "DiffOp") -> "DiffOp":
        return compose(self, other)

    def equals(self, other: "DiffOp") -> bool:
        return (self - other).is_zero()


def compose(A: DiffOp, B: DiffOp, check_weights: bool = True) -> DiffOp:
    """``A o B`` by the Leibniz rule; weights must chain (``A.lambda == B.mu``)."""
    if check_weights and A.weights is not None and B.weights is not None and A.weights.lam != B.weights.mu:
        raise WeightMismatch("cannot compose: source weight %s != target weight %s" % (A.weights.lam, B.weights.mu))
    if A.order + B.order > ORDER_CAP and A.coeffs and B.coeffs:
        raise OrderCap("composition order %d exceeds %d" % (A.order + B.order, ORDER_CAP))
    coords = A.geom.coords
    buckets: dict[tuple[int, ...], list[Expr]] = {}
    for alpha, a in A.coeffs.items():
        subs = list(_sub_multi_indices(alpha))
        for beta, b in B.coeffs.items():
            for gamma, binom in subs:
                db = _dalpha(b, coords, gamma)
                if db.is_zero():
                    continue
                key = _add_alpha(_sub_alpha(alpha, gamma), beta)
                buckets.setdefault(key, []).append(a * db * binom if binom != 1 else a * db)
    coeffs = {k: E.expr_sum(v) for k, v in buckets.items()}
    w = None
    if A.weights is not None and B.weights is not None:
        w = Weights(B.weights.lam, A.weights.mu)
    return DiffOp(A.geom, coeffs, w)


def commutator(A: DiffOp, B: DiffOp) -> DiffOp:
    """``A o B - B o A`` (weights ignored)."""
    return (compose(A, B, check_weights=False) - compose(B, A, check_weights=False)).with_weights(None)


def principal_symbol(D: DiffOp, k: int | None = None) -> PolySymbol:
    """Order-``k`` symbol: the coefficient of ``d^alpha`` is ``(k!/alpha!) S^alpha``."""
    k = D.order if k is None else k
    geom = D.geom

    def comp(idx):
        alpha = [0] * geom.n
        for i in idx:
            alpha[i] += 1
        c = D.coeff(alpha)
        if c.is_zero():
            return c
        f = Fraction(1, math.factorial(k))
        for a in alpha:
            f *= math.factorial(a)
        return c * f

    t = TensorField.build(geom, UP * k, comp)
    w = D.weights.delta if D.weights is not None else 0
    return PolySymbol(t, w)


def _vector_op(geom: Geometry, V) -> DiffOp:
    """``V^a d_a``."""
    n = geom.n
    return DiffOp(geom, {_unit(n, a): V[a] for a in range(n)})


def _second_order_part(geom: Geometry, K: PolySymbol) -> DiffOp:
    """``K^{ab} nabla_a nabla_b`` on functions: ``K^{ab}(d_a d_b - Gamma^c_ab d_c)``."""
    n = geom.n
    gam = christoffel(geom)
    coeffs: dict[tuple[int, ...], list[Expr]] = {}
    for a in range(n):
        for b in range(a, n):
            kab = K[(a, b)]
            if kab.is_zero():
                continue
            alpha = _add_alpha(_unit(n, a), _unit(n, b))
            coeffs.setdefault(alpha, []).append(kab if a == b else kab * 2)
    for c in range(n):
        terms = []
        for a in range(n):
            for b in range(n):
                kab, g = K[(a, b)], gam[(c, a, b)]
                if not kab.is_zero() and not g.is_zero():
                    terms.append(-(kab * g))
        if terms:
            coeffs.setdefault(_unit(n, c), []).append(E.expr_sum(terms))
    return DiffOp(geom, {k: E.expr_sum(v) for k, v in coeffs.items()})


def divergence_vector(geom: Geometry, V) -> Expr:
    """``nabla_a V^a = d_a V^a + V^a d_a log sqrt|g|``."""
    lvg = geom.log_volume_gradient
    acc = E.ZERO
    for a, x in enumerate(geom.coords):
        if not V[a].is_zero():
            acc = acc + E.diff(V[a], x) + V[a] * lvg[a]
    return acc


def divergence_sym2(geom: Geometry, K: PolySymbol) -> list[Expr]:
    """``(nabla_a K^{ab})_b`` for symmetric ``K``."""
    n, xs = geom.n, geom.coords
    gam = christoffel(geom)
    lvg = geom.log_volume_gradient
    out = []
    for b in range(n):
        acc = E.ZERO
        for a in range(n):
            kab = K[(a, b)]
            if not kab.is_zero():
                acc = acc + E.diff(kab, xs[a]) + lvg[a] * kab
            for d in range(n):
                g = gam[(b, a, d)]
                if g.is_zero():
                    continue
                kad = K[(a, d)]
                if not kad.is_zero():
                    acc = acc + g * kad
        out.append(acc)
    return out


def gradient_up(geom: Geometry, f: Expr) -> list[Expr]:
    gi = geom.ginv
    df = [E.diff(f, x) for x in geom.coords]
    return [E.expr_sum(gi[a][b] * df[b] for b in range(geom.n) if not gi[a][b].is_zero()) for a in range(geom.n)]


def laplacian(geom: Geometry, f: Expr) -> Expr:
    """``nabla_a g^{ab} nabla_b f``."""
    return divergence_vector(geom, gradient_up(geom, f))


def metric_trace(geom: Geometry, K: PolySymbol) -> Expr:
    g = geom.g
    return E.expr_sum(
        g[a][b] * K[(a, b)] for a in range(geom.n) for b in range(geom.n) if not g[a][b].is_zero() and not K[(a, b)].is_zero()
    )


def ricci_contraction(geom: Geometry, K: PolySymbol) -> Expr:
    ric = ricci(geom)
    return E.expr_sum(
        ric[(a, b)] * K[(a, b)]
        for a in range(geom.n)
        for b in range(geom.n)
        if not ric[(a, b)].is_zero() and not K[(a, b)].is_zero()
    )


def _as_symbol(geom: Geometry, s, degree: int) -> PolySymbol | None:
    if s is None:
        return None
    if isinstance(s, PolySymbol):
        if s.degree != degree:
            raise QuantizeError("expected a degree-%d symbol, got degree %d" % (degree, s.degree))
        return s.on(geom) if s.geom is not geom else s
    if degree == 0:
        return PolySymbol.scalar(geom, s)
    if degree == 1:
        return PolySymbol(TensorField(geom, UP, list(s)))
    raise QuantizeError("unsupported symbol input")


def quantize_order2(
    geom: Geometry,
    K: PolySymbol | None = None,
    X: PolySymbol | None = None,
    f=None,
    weights: Weights | None = None,
) -> DiffOp:
    """``Q_{lambda,mu}(K + X + f)`` for symbols of degree 2, 1 and 0.

    On ``delta = 2/n`` a degree-2 part is accepted only when ``nabla Tr K``
    vanishes identically: the two coefficients that are singular there
    multiply ``nabla Tr K`` only, and the remaining ones are finite.
    """
    if weights is None:
        raise QuantizeError("weights are required")
    n = geom.n
    K = _as_symbol(geom, K, 2)
    X = _as_symbol(geom, X, 1)
    f = _as_symbol(geom, f, 0)
    out = DiffOp.zero(geom)
    if K is not None and not K.is_zero():
        trK = metric_trace(geom, K)
        grad_tr_zero = all(E.diff(trK, x).is_zero() for x in geom.coords)
        if weights.delta == Weights.delta0(n) and grad_tr_zero:
            b1, b2, b3, b4, b5, b6 = _beta_at_delta0(n, weights)
        else:
            b1, b2, b3, b4, b5, b6 = beta_coeffs(n, weights)
        out = out + _second_order_part(geom, K)
        divK = divergence_sym2(geom, K)
        first = [divK[b] * b1 for b in range(n)]
        zeroth = [divergence_vector(geom, divK) * b3, ricci_contraction(geom, K) * b5]
        if not grad_tr_zero:
            gT = gradient_up(geom, trK)
            first = [first[b] + gT[b] * b2 for b in range(n)]
            zeroth.append(laplacian(geom, trK) * b4)
        if not trK.is_zero() and b6 != 0:
            zeroth.append(scalar(geom) * trK * b6)
        out = out + _vector_op(geom, first) + DiffOp.multiplication(geom, E.expr_sum(zeroth))
    if X is not None and not X.is_zero():
        c = degree1_coefficient(n, weights)
        V = [X[(a,)] for a in range(n)]
        out = out + _vector_op(geom, V) + DiffOp.multiplication(geom, divergence_vector(geom, V) * c)
    if f is not None:
        out = out + DiffOp.multiplication(geom, f.tensor.value())
    return out.with_weights(weights)


def quantize_killing(geom: Geometry, K: PolySymbol, check: bool = True) -> DiffOp:
    """The specialized formula for a Killing 2-tensor (weights ``(lambda_0, lambda_0)``).

    For Killing ``K`` one has ``nabla Tr K = -2 div K``, so the general formula
    collapses to ``(beta_1 - 2 beta_2) = 1`` on ``div K . nabla`` and
    ``(beta_3 - 2 beta_4) = (n-2)/(4(n+1))`` on ``nabla_a nabla_b K^ab``.
    """
    K = _as_symbol(geom, K, 2)
    if check and not is_killing(K):
        raise NotKilling("symbol is not a Killing tensor")
    n = geom.n
    divK = divergence_sym2(geom, K)
    trK = metric_trace(geom, K)
    zeroth = E.expr_sum(
        [
            divergence_vector(geom, divK) * Fraction(n - 2, 4 * (n + 1)),
            ricci_contraction(geom, K) * Fraction(-(n + 2), 4 * (n + 1)),
            scalar(geom) * trK * Fraction(1, 2 * (n - 1) * (n + 1)),
        ]
    )
    op = _second_order_part(geom, K) + _vector_op(geom, divK) + DiffOp.multiplication(geom, zeroth)
    return op.with_weights(Weights.l0l0(n))


def yamabe(geom: Geometry) -> DiffOp:
    """``Delta_Y = nabla_a g^{ab} nabla_b - (n-2)/(4(n-1)) Sc`` with weights ``(lambda_0, mu_0)``."""

    def build():
        n = geom.n
        gi = geom.ginv
        lvg = geom.log_volume_gradient
        coeffs: dict[tuple[int, ...], Expr] = {}
        for a in range(n):
            for b in range(a, n):
                if gi[a][b].is_zero():
                    continue
                alpha = _add_alpha(_unit(n, a), _unit(n, b))
                coeffs[alpha] = gi[a][b] if a == b else gi[a][b] * 2
        for b in range(n):
            terms = []
            for a in range(n):
                if gi[a][b].is_zero():
                    continue
                terms.append(E.diff(gi[a][b], geom.coords[a]) + lvg[a] * gi[a][b])
            c = E.expr_sum(terms)
            if not c.is_zero():
                coeffs[_unit(n, b)] = c
        sc = scalar(geom)
        if not sc.is_zero():
            coeffs[(0,) * n] = sc * Fraction(-(n - 2), 4 * (n - 1))
        return DiffOp(geom, coeffs, Weights.l0m0(n))

    return geom.cached("yamabe", build)


def adjoint(D: DiffOp) -> DiffOp:
    """Formal adjoint for the pairing ``int phi psi |Vol_g|``: ``(c d^alpha)* = (-1)^|alpha| (d + l)^alpha o c``."""
    geom = D.geom
    n = geom.n
    lvg = geom.log_volume_gradient
    shifted = [DiffOp(geom, {_unit(n, i): E.ONE, (0,) * n: lvg[i]}) for i in range(n)]
    powers: dict[tuple[int, ...], DiffOp] = {(0,) * n: DiffOp.multiplication(geom, E.ONE)}

    def power(alpha):
        op = powers.get(alpha)
        if op is not None:
            return op
        i = next(k for k, a in enumerate(alpha) if a)
        prev = list(alpha)
        prev[i] -= 1
        op = compose(shifted[i], power(tuple(prev)), check_weights=False)
        powers[alpha] = op
        return op

    out = DiffOp.zero(geom)
    for alpha, c in D.coeffs.items():
        term = compose(power(alpha), DiffOp.multiplication(geom, c), check_weights=False)
        out = out + (term if sum(alpha) % 2 == 0 else -term)
    return out.with_weights(D.weights.dual() if D.weights is not None else None)


def lie_density(geom: Geometry, X, lam) -> DiffOp:
    """``L_X^lambda = X^a d_a + lambda nabla_a X^a`` in the ``|Vol_g|`` trivialization."""
    V = [X[(a,)] for a in range(geom.n)] if isinstance(X, PolySymbol) else list(X)
    lam = Fraction(lam)
    op = _vector_op(geom, V)
    if lam != 0:
        op = op + DiffOp.multiplication(geom, divergence_vector(geom, V) * lam)
    return op.with_weights(Weights(lam, lam))


def factorization_check(geom: Geometry, S0) -> tuple[DiffOp, DiffOp]:
    """Residuals of the two factorization identities for a degree-0 symbol ``S0``."""
    n = geom.n
    S0 = S0.tensor.value() if isinstance(S0, PolySymbol) else E.const(S0) if not isinstance(S0, Expr) else S0
    HS = PolySymbol(TensorField.inverse_metric(geom).scale(S0).with_weight(0))
    Dy = yamabe(geom)
    q = DiffOp.multiplication(geom, S0, Weights.m0l0(n))
    r1 = quantize_order2(geom, K=HS, weights=Weights.l0l0(n)) - compose(q, Dy)
    r2 = quantize_order2(geom, K=HS, weights=Weights.m0m0(n)) - compose(Dy, q)
    return r1, r2


# ---------------------------------------------------------------------------
# conformal transport


def conjugate(D: DiffOp, upsilon: Expr, k) -> DiffOp:
    """``e^{-k Upsilon} o D o e^{k Upsilon}``: replace ``d_i`` by ``d_i + k Upsilon_i``."""
    geom = D.geom
    n = geom.n
    k = Fraction(k)
    if k == 0:
        return D
    shifted = [
        DiffOp(geom, {_unit(n, i): E.ONE, (0,) * n: E.diff(upsilon, geom.coords[i]) * k}) for i in range(n)
    ]
    powers: dict[tuple[int, ...], DiffOp] = {(0,) * n: DiffOp.multiplication(geom, E.ONE)}

    def power(alpha):
        op = powers.get(alpha)
        if op is not None:
            return op
        i = next(j for j, a in enumerate(alpha) if a)
        prev = list(alpha)
        prev[i] -= 1
        op = compose(shifted[i], power(tuple(prev)), check_weights=False)
        powers[alpha] = op
        return op

    out = DiffOp.zero(geom)
    for alpha, c in D.coeffs.items():
        out = out + power(alpha).scale(c)
    return out.with_weights(D.weights)


def transport(D: DiffOp, upsilon: Expr, weights: Weights | None = None, target: Geometry | None = None) -> DiffOp:
    """Express ``D`` (trivialized with ``g``) in the trivialization of ``e^{2 Upsilon} g``.

    ``D_hat = e^{-n mu Upsilon} o D o e^{n lambda Upsilon}``.
    """
    w = weights or D.weights
    if w is None:
        raise QuantizeError("transport needs weights")
    n = D.geom.n
    right = n * w.lam
    left = -n * w.mu
    op = conjugate(D, upsilon, right)
    if left + right != 0:
        op = op.scale(E.exp(upsilon * (left + right)))
    op = op.with_weights(w)
    return op.on(target) if target is not None else op


def sum_ops(ops: Iterable[DiffOp], geom: Geometry) -> DiffOp:
    out = DiffOp.zero(geom)
    for o in ops:
        out = out + o
    return out
