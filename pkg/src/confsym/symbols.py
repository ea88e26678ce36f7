"""Fiberwise-polynomial symbols on the cotangent bundle.

A degree-``k`` symbol ``S = S^{i_1...i_k} p_{i_1}...p_{i_k}`` is stored as its
fully symmetric contravariant component tensor plus a density weight.  The
polynomial in ``p`` only appears when printing.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction
from typing import Mapping, Sequence

from . import expr as E
from .expr import Expr
from .geometry import Geometry
from .tensor import DOWN, UP, RankUnsupported, TensorError, TensorField

__all__ = [
    "PolySymbol",
    "SymbolError",
    "WeightedOperand",
    "poisson",
    "hamiltonian_symbol",
    "killing_residual",
    "is_killing",
    "conformal_killing_residual",
    "is_conformal_killing",
    "in_ideal_H",
]


class SymbolError(ValueError):
    pass


class WeightedOperand(SymbolError):
    pass


class PolySymbol:
    """Symmetric contravariant tensor of rank ``degree`` with density weight ``weight``."""

    __slots__ = ("tensor", "weight")

    def __init__(self, tensor: TensorField, weight=0):
        if set(tensor.variance) - {UP}:
            raise SymbolError("symbol components must be contravariant")
        self.tensor = tensor
        self.weight = Fraction(weight)

    # -- construction -----------------------------------------------------------
    @classmethod
    def from_components(
        cls, geom: Geometry, degree: int, comps: Mapping[tuple[int, ...], Expr], weight=0
    ) -> "PolySymbol":
        """Build from components keyed by sorted index tuples (symmetric partners implied)."""
        norm = {}
        for k, v in comps.items():
            if len(k) != degree:
                raise SymbolError("component %r does not have %d indices" % (k, degree))
            norm[tuple(sorted(k))] = E.const(v) if not isinstance(v, Expr) else v
        t = TensorField.build(geom, UP * degree, lambda i: norm.get(tuple(sorted(i)), E.ZERO))
        return cls(t, weight)

    @classmethod
    def scalar(cls, geom: Geometry, value, weight=0) -> "PolySymbol":
        return cls(TensorField.scalar(geom, value), weight)

    @classmethod
    def from_tensor(cls, t: TensorField, weight=None) -> "PolySymbol":
        return cls(t.all_up().with_weight(0) if set(t.variance) - {UP} else t, t.weight if weight is None else weight)

    @classmethod
    def zero(cls, geom: Geometry, degree: int, weight=0) -> "PolySymbol":
        return cls(TensorField.zeros(geom, UP * degree), weight)

    @classmethod
    def from_decl(cls, geom: Geometry, decl) -> "PolySymbol":
        return cls.from_components(geom, decl.degree, decl.components)

    # -- access ---------------------------------------------------------------------
    @property
    def geom(self) -> Geometry:
        return self.tensor.geom

    @property
    def degree(self) -> int:
        return self.tensor.rank

    @property
    def n(self) -> int:
        return self.tensor.n

    def __getitem__(self, idx) -> Expr:
        return self.tensor[idx]

    def is_zero(self) -> bool:
        return self.tensor.is_zero()

    def is_symmetric(self) -> bool:
        return self.tensor.is_symmetric()

    def monomials(self) -> dict[tuple[int, ...], Expr]:
        """Coefficient of ``p^alpha`` keyed by the exponent vector ``alpha``."""
        out = {}
        k = self.degree
        for idx in itertools.combinations_with_replacement(range(self.n), k):
            c = self.tensor[idx]
            if c.is_zero():
                continue
            cnt = Counter(idx)
            alpha = tuple(cnt.get(i, 0) for i in range(self.n))
            mult = math.factorial(k)
            for a in alpha:
                mult //= math.factorial(a)
            out[alpha] = c * mult
        return out

    def to_str(self) -> str:
        terms = []
        names = self.geom.coords
        for alpha, c in sorted(self.monomials().items(), reverse=True):
            p = "*".join(
                ("p_%s" % names[i]) if a == 1 else ("p_%s^%d" % (names[i], a)) for i, a in enumerate(alpha) if a
            )
            terms.append("(%s)%s" % (c.to_str(), ("*" + p) if p else ""))
        return " + ".join(terms) if terms else "0"

    __str__ = to_str

    def __repr__(self):
        return "PolySymbol(degree=%d, weight=%s)" % (self.degree, self.weight)

    # -- algebra ----------------------------------------------------------------------
    def __add__(self, other: "PolySymbol") -> "PolySymbol":
        if self.degree != other.degree:
            raise SymbolError("cannot add symbols of different degree")
        return PolySymbol(self.tensor + other.tensor, self.weight)

    def __sub__(self, other: "PolySymbol") -> "PolySymbol":
        if self.degree != other.degree:
            raise SymbolError("cannot subtract symbols of different degree")
        return PolySymbol(self.tensor - other.tensor, self.weight)

    def __neg__(self) -> "PolySymbol":
        return PolySymbol(-self.tensor, self.weight)

    def scale(self, s) -> "PolySymbol":
        return PolySymbol(self.tensor.scale(s), self.weight)

    def __mul__(self, other):
        if isinstance(other, PolySymbol):
            return self.product(other)
        return self.scale(other)

    __rmul__ = scale

    def product(self, other: "PolySymbol") -> "PolySymbol":
        """Pointwise product on ``T*M``: symmetrized tensor product."""
        t = self.tensor.outer(other.tensor)
        if t.rank > 1:
            t = t.symmetrize()
        return PolySymbol(t.with_weight(0), self.weight + other.weight)

    def with_weight(self, w) -> "PolySymbol":
        return PolySymbol(self.tensor, w)

    def trace(self) -> Expr | "PolySymbol":
        """Metric trace ``g_ab S^{ab...}`` (degree drops by 2)."""
        if self.degree < 2:
            raise SymbolError("trace needs degree >= 2")
        t = self.tensor.contract(0, 1).with_weight(0)
        return PolySymbol(t, self.weight)

    def tracefree(self) -> "PolySymbol":
        return PolySymbol(self.tensor.tracefree_project(), self.weight)

    def lower(self) -> TensorField:
        """All-lower component tensor (the flat ``S_{ab...}``)."""
        return self.tensor.all_down().with_weight(0)

    def on(self, geom: Geometry) -> "PolySymbol":
        """Same components regarded on another metric over the same chart."""
        return PolySymbol(TensorField(geom, self.tensor.variance, self.tensor.comps), self.weight)


def _check_unweighted(*syms: PolySymbol) -> None:
    for s in syms:
        if s.weight != 0:
            raise WeightedOperand("Poisson bracket is defined on unweighted symbols")


def poisson(s1: PolySymbol, s2: PolySymbol) -> PolySymbol:
    """``{S1, S2} = (d_{p_i} S1)(d_{x^i} S2) - (d_{p_i} S2)(d_{x^i} S1)``."""
    _check_unweighted(s1, s2)
    geom = s1.geom
    n, k1, k2 = geom.n, s1.degree, s2.degree
    if k1 + k2 == 0:
        return PolySymbol.zero(geom, 0)
    d1 = s1.tensor.partial()  # d1[i, a...] = d_i S1^{a...}
    d2 = s2.tensor.partial()

    def half(sa: PolySymbol, ka: int, db: TensorField, kb: int):
        # ka * S_a^{i a_2..} d_i S_b^{b..}, slots (a_2.., b..)
        if ka == 0:
            return None

        def f(idx):
            rest_a, rest_b = idx[: ka - 1], idx[ka - 1 :]
            acc = E.ZERO
            for i in range(n):
                c = sa.tensor[(i,) + rest_a]
                if c.is_zero():
                    continue
                t = db[(i,) + rest_b]
                if not t.is_zero():
                    acc = acc + c * t
            return acc * ka

        return TensorField.build(geom, UP * (ka - 1 + kb), f)

    a = half(s1, k1, d2, k2)
    b = half(s2, k2, d1, k1)
    if a is None:
        t = -b
    elif b is None:
        t = a
    else:
        # slot orders differ (a_2.., b..) vs (b_2.., a..); full symmetrization makes that irrelevant
        t = a - b
    if t.rank > 1:
        t = t.symmetrize()
    return PolySymbol(t.with_weight(0))


def hamiltonian_symbol(geom: Geometry) -> PolySymbol:
    """``H = g^{ij} p_i p_j``."""
    return PolySymbol(TensorField.inverse_metric(geom))


def symmetrized_gradient(s: PolySymbol) -> TensorField:
    """``nabla^{(a_0} S^{a_1...a_k)}`` (all upper)."""
    t = s.tensor.with_weight(0).covariant_derivative().raise_(0).with_weight(0)
    return t.symmetrize() if t.rank > 1 else t


def killing_residual(s: PolySymbol) -> TensorField:
    if s.weight != 0:
        raise WeightedOperand("Killing test needs an unweighted symbol")
    return symmetrized_gradient(s)


def is_killing(s: PolySymbol) -> bool:
    return killing_residual(s).is_zero()


def conformal_killing_residual(s: PolySymbol) -> TensorField:
    """``Pi_0`` of the symmetrized gradient; vanishes exactly for conformal Killing tensors."""
    t = symmetrized_gradient(s)
    if t.rank > 3:
        raise RankUnsupported("conformal Killing test implemented up to degree 2")
    return t.tracefree_project()


def is_conformal_killing(s: PolySymbol) -> bool:
    return conformal_killing_residual(s).is_zero()


def in_ideal_H(s: PolySymbol) -> bool:
    """Whether ``S = H * S'`` for a symbol ``S'``: the trace-free part of ``S`` vanishes."""
    if s.weight != 0:
        raise WeightedOperand("ideal membership is tested on unweighted symbols")
    if s.degree > 3:
        raise RankUnsupported("ideal membership implemented up to degree 3")
    if s.degree < 2:
        return s.is_zero()
    return s.tracefree().is_zero()


def symbol_from_vector(geom: Geometry, comps: Sequence[Expr], weight=0) -> PolySymbol:
    return PolySymbol(TensorField(geom, UP, [E.const(c) if not isinstance(c, Expr) else c for c in comps]), weight)


def flat_to_symbol(omega: TensorField) -> PolySymbol:
    """``omega^sharp`` as a degree-1 symbol."""
    if omega.variance != DOWN:
        raise TensorError("expected a one-form")
    return PolySymbol(omega.raise_(0).with_weight(0), omega.weight + Fraction(2, omega.n))
