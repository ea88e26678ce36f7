"""Coordinate-chart pseudo-Riemannian geometry with cached derived data."""

from __future__ import annotations

import threading
from fractions import Fraction
from typing import Mapping, Sequence

from . import expr as E
from .expr import Expr

__all__ = ["Geometry", "determinant", "inverse_matrix", "DegenerateMetricError"]


class DegenerateMetricError(ValueError):
    pass


def determinant(m: Sequence[Sequence[Expr]]) -> Expr:
    """Exact determinant by cofactor expansion along the sparsest row (n <= 4 in practice)."""
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    row = min(range(n), key=lambda r: sum(1 for v in m[r] if not v.is_zero()))
    total = E.ZERO
    for j in range(n):
        v = m[row][j]
        if v.is_zero():
            continue
        minor = [[m[r][c] for c in range(n) if c != j] for r in range(n) if r != row]
        term = v * determinant(minor)
        total = total + term if (row + j) % 2 == 0 else total - term
    return total


def inverse_matrix(m: Sequence[Sequence[Expr]]) -> tuple[tuple[Expr, ...], ...]:
    """Exact inverse by Gauss-Jordan elimination with non-zero pivots."""
    n = len(m)
    a = [list(row) + [E.ONE if i == j else E.ZERO for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not a[r][col].is_zero():
                # prefer pivots that are constants or monomials: keeps denominators small
                if piv is None or len(a[r][col].num) < len(a[piv][col].num):
                    piv = r
        if piv is None:
            raise DegenerateMetricError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col].inverse()
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and not a[r][col].is_zero():
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return tuple(tuple(row[n:]) for row in a)


class Geometry:
    """An immutable chart: coordinates, abstract-function table and metric ``g_ab``.

    Derived data (inverse metric, determinant, curvature) is computed lazily
    and cached; caches are filled under a lock so instances can be shared
    between threads.
    """

    def __init__(
        self,
        coords: Sequence[str],
        metric: Sequence[Sequence[Expr]],
        functions: Mapping[str, Sequence[str]] | None = None,
        signature: str | None = None,
    ):
        self.coords = tuple(coords)
        self.n = len(self.coords)
        self.metric = tuple(tuple(E.const(v) if not isinstance(v, Expr) else v for v in row) for row in metric)
        if len(self.metric) != self.n or any(len(r) != self.n for r in self.metric):
            raise ValueError("metric must be %d x %d" % (self.n, self.n))
        for i in range(self.n):
            for j in range(i):
                if not (self.metric[i][j] - self.metric[j][i]).is_zero():
                    raise ValueError("metric is not symmetric")
        self.functions = dict(functions or {})
        self.signature = signature
        self._lock = threading.RLock()
        self._cache: dict[str, object] = {}

    # -- caching ----------------------------------------------------------
    def cached(self, key: str, build):
        v = self._cache.get(key)
        if v is not None:
            return v
        with self._lock:
            v = self._cache.get(key)
            if v is None:
                v = build()
                self._cache[key] = v
            return v

    # -- metric data ----------------------------------------------------------
    @property
    def g(self) -> tuple[tuple[Expr, ...], ...]:
        return self.metric

    @property
    def det(self) -> Expr:
        def build():
            d = determinant(self.metric)
            if d.is_zero():
                raise DegenerateMetricError("metric determinant is identically zero")
            return d

        return self.cached("det", build)

    @property
    def ginv(self) -> tuple[tuple[Expr, ...], ...]:
        def build():
            self.det  # raises on degeneracy
            if all(self.metric[i][j].is_zero() for i in range(self.n) for j in range(self.n) if i != j):
                return tuple(
                    tuple(self.metric[i][i].inverse() if i == j else E.ZERO for j in range(self.n))
                    for i in range(self.n)
                )
            return inverse_matrix(self.metric)

        return self.cached("ginv", build)

    @property
    def log_volume_gradient(self) -> tuple[Expr, ...]:
        """``d_i log sqrt|det g| = (d_i det) / (2 det)``; rational in the generators."""

        def build():
            d = self.det
            return tuple(E.diff(d, x) / (2 * d) for x in self.coords)

        return self.cached("lvg", build)

    def is_diagonal(self) -> bool:
        return all(self.metric[i][j].is_zero() for i in range(self.n) for j in range(self.n) if i != j)

    def coord_exprs(self) -> tuple[Expr, ...]:
        return tuple(E.coord(x) for x in self.coords)

    def scaled(self, factor: Expr) -> "Geometry":
        """The metric ``factor * g`` on the same chart."""
        return Geometry(
            self.coords,
            [[factor * v for v in row] for row in self.metric],
            functions=self.functions,
            signature=self.signature,
        )

    def curvature(self):
        from .curvature import CurvaturePack

        return self.cached("curv", lambda: CurvaturePack(self))

    def __repr__(self):
        return "Geometry(n=%d, coords=%s)" % (self.n, ",".join(self.coords))


def rational(v) -> Fraction:
    return Fraction(v)
