"""Dense symbolic tensor fields with variance, density weight and Levi-Civita calculus.

Components live in the ``|Vol_g|`` trivialization: a weight-``w`` object is
stored as the component array of the density divided by ``|Vol_g|^w``.
Because ``|Vol_g|`` is parallel, covariant differentiation acts on the array
classically; the weight is metadata that moves by ``+2/n`` when a slot is
raised with the conformal metric and by ``-2/n`` when it is lowered.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from . import expr as E
from .expr import Expr
from .geometry import Geometry

__all__ = [
    "TensorField",
    "TensorError",
    "MixedVariance",
    "RankUnsupported",
    "UP",
    "DOWN",
    "christoffel",
]

UP = "u"
DOWN = "d"


class TensorError(ValueError):
    pass


class MixedVariance(TensorError):
    pass


class RankUnsupported(TensorError):
    pass


def _expr_sum(terms: Iterable[Expr]) -> Expr:
    out = E.ZERO
    for t in terms:
        if not t.is_zero():
            out = out + t
    return out


class TensorField:
    """Immutable component array over a :class:`Geometry`.

    ``variance`` is a string over ``{"u", "d"}``, one letter per slot.
    Components are addressed with coordinate-position tuples.
    """

    __slots__ = ("geom", "variance", "weight", "comps", "n")

    def __init__(self, geom: Geometry, variance: str, comps: Sequence[Expr], weight=0):
        self.geom = geom
        self.n = geom.n
        self.variance = variance
        if any(v not in (UP, DOWN) for v in variance):
            raise TensorError("variance letters must be 'u' or 'd'")
        self.comps = tuple(comps)
        if len(self.comps) != self.n ** len(variance):
            raise TensorError("expected %d components, got %d" % (self.n ** len(variance), len(self.comps)))
        self.weight = Fraction(weight)

    # -- construction -----------------------------------------------------------
    @classmethod
    def build(cls, geom: Geometry, variance: str, fn: Callable[[tuple[int, ...]], Expr], weight=0) -> "TensorField":
        comps = []
        for idx in itertools.product(range(geom.n), repeat=len(variance)):
            v = fn(idx)
            comps.append(E.const(v) if not isinstance(v, Expr) else v)
        return cls(geom, variance, comps, weight)

    @classmethod
    def zeros(cls, geom: Geometry, variance: str, weight=0) -> "TensorField":
        return cls(geom, variance, [E.ZERO] * geom.n ** len(variance), weight)

    @classmethod
    def scalar(cls, geom: Geometry, value, weight=0) -> "TensorField":
        return cls(geom, "", [E.const(value) if not isinstance(value, Expr) else value], weight)

    @classmethod
    def metric(cls, geom: Geometry) -> "TensorField":
        """``g_ab`` with weight 0; conformal-metric weight shifts happen in :meth:`raise_`/:meth:`lower`."""
        return cls.build(geom, DOWN + DOWN, lambda i: geom.g[i[0]][i[1]])

    @classmethod
    def inverse_metric(cls, geom: Geometry) -> "TensorField":
        return cls.build(geom, UP + UP, lambda i: geom.ginv[i[0]][i[1]])

    @classmethod
    def identity(cls, geom: Geometry) -> "TensorField":
        return cls.build(geom, UP + DOWN, lambda i: E.ONE if i[0] == i[1] else E.ZERO)

    # -- access -------------------------------------------------------------------
    @property
    def rank(self) -> int:
        return len(self.variance)

    def _offset(self, idx: Sequence[int]) -> int:
        o = 0
        for i in idx:
            o = o * self.n + i
        return o

    def __getitem__(self, idx) -> Expr:
        if isinstance(idx, int):
            idx = (idx,)
        return self.comps[self._offset(idx)]

    def indices(self):
        return itertools.product(range(self.n), repeat=self.rank)

    def items(self):
        return zip(self.indices(), self.comps)

    def value(self) -> Expr:
        if self.rank:
            raise TensorError("not a scalar")
        return self.comps[0]

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.comps)

    def nonzero(self):
        return [(i, c) for i, c in self.items() if not c.is_zero()]

    def with_weight(self, w) -> "TensorField":
        return TensorField(self.geom, self.variance, self.comps, w)

    def map(self, fn: Callable[[Expr], Expr]) -> "TensorField":
        return TensorField(self.geom, self.variance, [fn(c) for c in self.comps], self.weight)

    # -- linear structure ---------------------------------------------------------------
    def _check_same(self, other: "TensorField") -> None:
        if self.variance != other.variance or self.n != other.n:
            raise TensorError("tensor shapes differ: %s vs %s" % (self.variance, other.variance))

    def __add__(self, other: "TensorField") -> "TensorField":
        self._check_same(other)
        return TensorField(self.geom, self.variance, [a + b for a, b in zip(self.comps, other.comps)], self.weight)

    def __sub__(self, other: "TensorField") -> "TensorField":
        self._check_same(other)
        return TensorField(self.geom, self.variance, [a - b for a, b in zip(self.comps, other.comps)], self.weight)

    def __neg__(self) -> "TensorField":
        return self.map(lambda c: -c)

    def scale(self, s) -> "TensorField":
        s = E.const(s) if not isinstance(s, Expr) else s
        return self.map(lambda c: s * c)

    __mul__ = scale
    __rmul__ = scale

    def outer(self, other: "TensorField") -> "TensorField":
        comps = [a * b for a in self.comps for b in other.comps]
        return TensorField(self.geom, self.variance + other.variance, comps, self.weight + other.weight)

    def permute(self, perm: Sequence[int]) -> "TensorField":
        """Return ``T'`` with ``T'[i_0..] = T[i_{perm^{-1}}...]``: slot ``k`` of ``T`` becomes slot ``perm[k]``."""
        r = self.rank
        inv = [0] * r
        for k, p in enumerate(perm):
            inv[p] = k
        var = "".join(self.variance[inv[p]] for p in range(r))

        def f(idx):
            src = [0] * r
            for k in range(r):
                src[k] = idx[perm[k]]
            return self[tuple(src)]

        return TensorField.build(self.geom, var, f, self.weight)

    def transpose(self, a: int, b: int) -> "TensorField":
        perm = list(range(self.rank))
        perm[a], perm[b] = b, a
        return self.permute(perm)

    # -- symmetrization -------------------------------------------------------------------
    def _sym(self, slots: Sequence[int], signed: bool) -> "TensorField":
        slots = list(slots)
        if len(set(self.variance[s] for s in slots)) > 1:
            raise MixedVariance("cannot symmetrize slots of mixed variance")
        if len(slots) < 2:
            return self
        perms = list(itertools.permutations(range(len(slots))))
        norm = Fraction(1, math.factorial(len(slots)))

        def sign(p):
            s = 1
            p = list(p)
            for i in range(len(p)):
                while p[i] != i:
                    j = p[i]
                    p[i], p[j] = p[j], p[i]
                    s = -s
            return s

        def f(idx):
            acc = E.ZERO
            base = list(idx)
            vals = [idx[s] for s in slots]
            for p in perms:
                src = list(base)
                for k, s in enumerate(slots):
                    src[s] = vals[p[k]]
                c = self[tuple(src)]
                if c.is_zero():
                    continue
                acc = acc + c if (not signed or sign(p) > 0) else acc - c
            return acc * norm

        return TensorField.build(self.geom, self.variance, f, self.weight)

    def symmetrize(self, slots: Sequence[int] | None = None) -> "TensorField":
        return self._sym(range(self.rank) if slots is None else slots, signed=False)

    def antisymmetrize(self, slots: Sequence[int] | None = None) -> "TensorField":
        return self._sym(range(self.rank) if slots is None else slots, signed=True)

    # -- metric operations --------------------------------------------------------------------
    def raise_(self, slot: int) -> "TensorField":
        if self.variance[slot] != DOWN:
            raise TensorError("slot %d is already upper" % slot)
        gi = self.geom.ginv
        return self._contract_matrix(slot, gi, UP, Fraction(2, self.n))

    def lower(self, slot: int) -> "TensorField":
        if self.variance[slot] != UP:
            raise TensorError("slot %d is already lower" % slot)
        return self._contract_matrix(slot, self.geom.g, DOWN, Fraction(-2, self.n))

    def _contract_matrix(self, slot: int, mat, new_var: str, dw: Fraction) -> "TensorField":
        var = self.variance[:slot] + new_var + self.variance[slot + 1 :]
        n = self.n

        def f(idx):
            i = idx[slot]
            src = list(idx)
            acc = E.ZERO
            for m in range(n):
                c = mat[i][m]
                if c.is_zero():
                    continue
                src[slot] = m
                t = self[tuple(src)]
                if not t.is_zero():
                    acc = acc + c * t
            return acc

        return TensorField.build(self.geom, var, f, self.weight + dw)

    def all_up(self) -> "TensorField":
        t = self
        for s, v in enumerate(self.variance):
            if v == DOWN:
                t = t.raise_(s)
        return t

    def all_down(self) -> "TensorField":
        t = self
        for s, v in enumerate(self.variance):
            if v == UP:
                t = t.lower(s)
        return t

    def contract(self, a: int, b: int) -> "TensorField":
        """Trace over slots ``a`` and ``b``; opposite variances use the pairing, equal ones the metric."""
        if a == b:
            raise TensorError("need two distinct slots")
        a, b = sorted((a, b))
        va, vb = self.variance[a], self.variance[b]
        if va == vb:
            mat = self.geom.ginv if va == DOWN else self.geom.g
            dw = Fraction(2 if va == DOWN else -2, self.n)
        else:
            mat = None
            dw = Fraction(0)
        var = "".join(v for k, v in enumerate(self.variance) if k not in (a, b))
        n = self.n

        def f(idx):
            rest = list(idx)
            acc = E.ZERO
            for i in range(n):
                for j in range(n):
                    if mat is None:
                        if i != j:
                            continue
                        c = E.ONE
                    else:
                        c = mat[i][j]
                        if c.is_zero():
                            continue
                    src = rest[:a] + [i] + rest[a : b - 1] + [j] + rest[b - 1 :]
                    t = self[tuple(src)]
                    if not t.is_zero():
                        acc = acc + c * t
            return acc

        return TensorField.build(self.geom, var, f, self.weight + dw)

    trace = contract

    def tracefree_project(self, slots: Sequence[int] | None = None) -> "TensorField":
        """Trace-free part ``Pi_0`` over ``slots`` (default: all) of a tensor symmetric in them.

        At most three slots of a common variance are supported; other slots
        are spectators.  Two slots: ``S - (tr S / n) g``; three slots:
        ``S - 3/(n+2) g_(ab T_c)`` with ``T`` the metric trace.
        """
        slots = list(range(self.rank)) if slots is None else list(slots)
        if len(slots) > 3:
            raise RankUnsupported("trace-free projection implemented up to rank 3")
        if len(set(self.variance[s] for s in slots)) > 1:
            raise MixedVariance("trace-free projection needs uniform variance")
        if len(slots) < 2:
            return self
        n = self.n
        up = self.variance[slots[0]] == UP
        gtr = self.geom.g if up else self.geom.ginv  # contracts two slots of the tensor
        gout = self.geom.ginv if up else self.geom.g  # rebuilds the pure-trace part

        def trace_at(idx, a, b):
            # metric trace over slots a, b with the remaining entries of idx fixed
            src = list(idx)
            acc = E.ZERO
            for i in range(n):
                for j in range(n):
                    c = gtr[i][j]
                    if c.is_zero():
                        continue
                    src[a], src[b] = i, j
                    t = self[tuple(src)]
                    if not t.is_zero():
                        acc = acc + c * t
            return acc

        if len(slots) == 2:
            a, b = slots

            def f(idx):
                c = gout[idx[a]][idx[b]]
                return self[idx] - c * trace_at(idx, a, b) * Fraction(1, n) if not c.is_zero() else self[idx]

        else:
            trio = slots

            def f(idx):
                corr = E.ZERO
                for k in range(3):
                    p, q = [trio[m] for m in range(3) if m != k]
                    c = gout[idx[p]][idx[q]]
                    if c.is_zero():
                        continue
                    # trace over (p, q) keeping slot trio[k] at its value
                    corr = corr + c * trace_at(idx, p, q)
                return self[idx] - corr * Fraction(1, n + 2)

        return TensorField.build(self.geom, self.variance, f, self.weight)

    def is_symmetric(self) -> bool:
        return (self - self.symmetrize()).is_zero()

    # -- calculus ------------------------------------------------------------------------------
    def partial(self) -> "TensorField":
        """Coordinate derivative with the new slot first (not covariant)."""
        xs = self.geom.coords
        rank = self.rank

        def f(idx):
            return E.diff(self[idx[1:]], xs[idx[0]]) if rank else E.diff(self.comps[0], xs[idx[0]])

        return TensorField.build(self.geom, DOWN + self.variance, f, self.weight)

    def covariant_derivative(self) -> "TensorField":
        """Levi-Civita ``nabla_a T``; the new lower slot is slot 0."""
        gam = christoffel(self.geom)
        d = self.partial()
        n, var = self.n, self.variance
        if not var:
            return d

        def f(idx):
            a, rest = idx[0], list(idx[1:])
            acc = d[idx]
            for s, v in enumerate(var):
                orig = rest[s]
                for m in range(n):
                    if v == UP:
                        c = gam[(orig, a, m)]
                    else:
                        c = gam[(m, a, orig)]
                    if c.is_zero():
                        continue
                    rest[s] = m
                    t = self[tuple(rest)]
                    rest[s] = orig
                    if t.is_zero():
                        continue
                    acc = acc + c * t if v == UP else acc - c * t
            return acc

        return TensorField.build(self.geom, DOWN + var, f, self.weight)

    nabla = covariant_derivative

    def divergence(self, slot: int = 0) -> "TensorField":
        """``nabla_a T^{..a..}`` contracting the derivative with an upper ``slot``."""
        if self.variance[slot] != UP:
            raise TensorError("divergence needs an upper slot")
        return self.covariant_derivative().contract(0, slot + 1)

    def __repr__(self):
        return "TensorField(variance=%r, weight=%s, nonzero=%d)" % (
            self.variance,
            self.weight,
            sum(1 for c in self.comps if not c.is_zero()),
        )


def christoffel(geom: Geometry) -> TensorField:
    """``Gamma^i_{jk} = 1/2 g^{il}(d_j g_{lk} + d_k g_{jl} - d_l g_{jk})``, variance ``udd``."""

    def build():
        n, xs, g, gi = geom.n, geom.coords, geom.g, geom.ginv
        dg = [[[E.diff(g[i][j], xs[k]) for k in range(n)] for j in range(n)] for i in range(n)]
        low = {}
        for l in range(n):
            for j in range(n):
                for k in range(j, n):
                    v = dg[l][k][j] + dg[j][l][k] - dg[j][k][l]
                    low[(l, j, k)] = low[(l, k, j)] = v * Fraction(1, 2)
        comps = {}

        def f(idx):
            i, j, k = idx
            if k < j:
                return comps[(i, k, j)]
            acc = E.ZERO
            for l in range(n):
                c = gi[i][l]
                if c.is_zero():
                    continue
                t = low[(l, j, k)]
                if not t.is_zero():
                    acc = acc + c * t
            comps[(i, j, k)] = acc
            return acc

        return TensorField.build(geom, UP + DOWN + DOWN, f)

    return geom.cached("christoffel", build)
