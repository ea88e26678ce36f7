"""Curvature of a chart metric and the conformal transformation laws.

Conventions: ``[nabla_a, nabla_b] v^c = R_ab^c_d v^d``, ``Ric_bd = R_ab^a_d``,
``Sc = g^ab Ric_ab``, ``P = (Ric - Sc g / (2(n-1))) / (n-2)``, ``J = g^ab P_ab``,
``R = C + 2 delta^c_[a P_b]d + 2 g_d[b P_a]^c`` and ``A_abc = 2 nabla_[b P_c]a``.

Tensors are stored with the variance letters of :mod:`confsym.tensor`;
Riemann and Weyl use the arrangement ``R_ab^c_d`` (variance ``ddud``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import expr as E
from .expr import Expr
from .geometry import Geometry
from .tensor import DOWN, UP, TensorField, christoffel

__all__ = [
    "CurvaturePack",
    "christoffel",
    "riemann",
    "ricci",
    "scalar",
    "schouten",
    "weyl",
    "cotton_york",
    "conformal_rescale",
    "transform_residuals",
    "TransformReport",
]


def _delta(i, j) -> Expr:
    return E.ONE if i == j else E.ZERO


class CurvaturePack:
    """Lazily computed curvature data of one geometry (each field computed once)."""

    def __init__(self, geom: Geometry):
        self.geom = geom

    @property
    def christoffel(self) -> TensorField:
        return christoffel(self.geom)

    @property
    def riemann(self) -> TensorField:
        return riemann(self.geom)

    @property
    def ricci(self) -> TensorField:
        return ricci(self.geom)

    @property
    def scalar(self) -> Expr:
        return scalar(self.geom)

    @property
    def schouten(self) -> TensorField:
        return schouten(self.geom)[0]

    @property
    def J(self) -> Expr:
        return schouten(self.geom)[1]

    @property
    def weyl(self) -> TensorField:
        return weyl(self.geom)

    @property
    def cotton(self) -> TensorField:
        return cotton_york(self.geom)

    @property
    def det(self) -> Expr:
        return self.geom.det


def riemann(geom: Geometry) -> TensorField:
    """``R_ab^c_d = d_a Gamma^c_bd - d_b Gamma^c_ad + Gamma^c_ae Gamma^e_bd - Gamma^c_be Gamma^e_ad``."""

    def build():
        n, xs = geom.n, geom.coords
        gam = christoffel(geom)
        dgam = {}

        def dG(c, b, d, a):
            k = (c, b, d, a)
            v = dgam.get(k)
            if v is None:
                v = dgam[k] = E.diff(gam[(c, b, d)], xs[a])
            return v

        cache = {}

        def f(idx):
            a, b, c, d = idx
            if a == b:
                return E.ZERO
            if a > b:
                return -cache[(b, a, c, d)]
            acc = dG(c, b, d, a) - dG(c, a, d, b)
            for e in range(n):
                t1, t2 = gam[(c, a, e)], gam[(e, b, d)]
                if not t1.is_zero() and not t2.is_zero():
                    acc = acc + t1 * t2
                t3, t4 = gam[(c, b, e)], gam[(e, a, d)]
                if not t3.is_zero() and not t4.is_zero():
                    acc = acc - t3 * t4
            cache[idx] = acc
            return acc

        return TensorField.build(geom, DOWN + DOWN + UP + DOWN, f)

    return geom.cached("riemann", build)


def ricci(geom: Geometry) -> TensorField:
    return geom.cached("ricci", lambda: riemann(geom).contract(0, 2))


def scalar(geom: Geometry) -> Expr:
    def build():
        ric = ricci(geom)
        gi = geom.ginv
        acc = E.ZERO
        for i in range(geom.n):
            for j in range(geom.n):
                if not gi[i][j].is_zero() and not ric[(i, j)].is_zero():
                    acc = acc + gi[i][j] * ric[(i, j)]
        return acc

    return geom.cached("scalar", build)


def schouten(geom: Geometry) -> tuple[TensorField, Expr]:
    """``(P_ab, J)``."""

    def build():
        n = geom.n
        ric, sc = ricci(geom), scalar(geom)
        c = Fraction(1, 2 * (n - 1))
        P = TensorField.build(
            geom, DOWN + DOWN, lambda i: (ric[i] - sc * geom.g[i[0]][i[1]] * c) * Fraction(1, n - 2)
        )
        J = P.contract(0, 1).value()
        return P, J

    return geom.cached("schouten", build)


def schouten_mixed(geom: Geometry) -> TensorField:
    """``P_a^c`` (variance ``du``)."""
    return geom.cached("schouten_mixed", lambda: schouten(geom)[0].raise_(1).with_weight(0))


def decomposition_terms(geom: Geometry) -> TensorField:
    """``2 delta^c_[a P_b]d + 2 g_d[b P_a]^c`` in the ``ddud`` arrangement."""
    P = schouten(geom)[0]
    Pm = schouten_mixed(geom)
    g = geom.g

    def f(idx):
        a, b, c, d = idx
        acc = E.ZERO
        if c == a:
            acc = acc + P[(b, d)]
        if c == b:
            acc = acc - P[(a, d)]
        if not g[d][b].is_zero():
            acc = acc + g[d][b] * Pm[(a, c)]
        if not g[d][a].is_zero():
            acc = acc - g[d][a] * Pm[(b, c)]
        return acc

    return TensorField.build(geom, DOWN + DOWN + UP + DOWN, f)


def weyl(geom: Geometry) -> TensorField:
    return geom.cached("weyl", lambda: riemann(geom) - decomposition_terms(geom))


def cotton_york(geom: Geometry) -> TensorField:
    """``A_abc = nabla_b P_ca - nabla_c P_ba``."""

    def build():
        dP = schouten(geom)[0].covariant_derivative()  # dP[b, c, a] = nabla_b P_ca
        return TensorField.build(geom, DOWN * 3, lambda i: dP[(i[1], i[2], i[0])] - dP[(i[2], i[1], i[0])])

    return geom.cached("cotton", build)


# ---------------------------------------------------------------------------
# conformal rescaling


def conformal_factor(upsilon: Expr, power) -> Expr:
    """``e^{power * Upsilon}`` as an exact expression."""
    return E.exp(upsilon * Fraction(power))


def conformal_rescale(geom: Geometry, upsilon: Expr) -> Geometry:
    """The geometry of ``g_hat = e^{2 Upsilon} g`` on the same chart."""
    return geom.scaled(conformal_factor(upsilon, 2))


@dataclass
class TransformReport:
    """Residual tensors of the conformal transformation laws (all vanish when the laws hold)."""

    residuals: dict[str, TensorField]

    def failing(self) -> list[str]:
        return [k for k, v in self.residuals.items() if not v.is_zero()]

    def ok(self) -> bool:
        return not self.failing()


def _sym3_tf(t: TensorField, slots=(0, 1, 2)) -> TensorField:
    return t.symmetrize(slots).tracefree_project(slots)


def _on(geom: Geometry, t: TensorField) -> TensorField:
    """Re-home a component array onto ``geom`` (same chart)."""
    return TensorField(geom, t.variance, t.comps, t.weight)


def transform_residuals(geom: Geometry, upsilon: Expr, include_weyl_gradient: bool = True) -> TransformReport:
    """Residuals of the transformation laws of P, J, A, nabla P, nabla J, nabla C and C under ``e^{2 Upsilon} g``.

    Hatted quantities of non-zero density weight are converted back to the
    trivialization of ``g`` by the factor ``e^{n w Upsilon}`` before comparison.
    """
    n = geom.n
    hat = conformal_rescale(geom, upsilon)
    g = geom.g
    Ups = TensorField.build(geom, DOWN, lambda i: E.diff(upsilon, geom.coords[i[0]]))
    UpsUp = Ups.raise_(0).with_weight(0)
    nU = Ups.covariant_derivative()  # nU[a, b] = nabla_a Upsilon_b
    sq = E.ZERO
    for i in range(n):
        sq = sq + Ups[(i,)] * UpsUp[(i,)]
    divU = E.ZERO
    for a in range(n):
        for b in range(n):
            if not geom.ginv[a][b].is_zero():
                divU = divU + geom.ginv[a][b] * nU[(a, b)]

    P, J = schouten(geom)
    C = weyl(geom)
    A = cotton_york(geom)
    Ph, Jh = schouten(hat)
    Ah = cotton_york(hat)
    Ch = weyl(hat)
    res: dict[str, TensorField] = {}

    # P_hat = P - nabla Upsilon + Upsilon Upsilon - |Upsilon|^2 g / 2
    res["P"] = TensorField.build(
        geom,
        "dd",
        lambda i: Ph[i]
        - (P[i] - nU[i] + Ups[(i[0],)] * Ups[(i[1],)] - sq * g[i[0]][i[1]] * Fraction(1, 2)),
    )
    # J has weight 2/n: compare e^{2 Upsilon} J_hat with the right-hand side
    e2 = conformal_factor(upsilon, 2)
    res["J"] = TensorField.scalar(geom, e2 * Jh - (J - divU - sq * Fraction(n - 2, 2)))

    # A_hat = A + Upsilon_r C_bc^r_a
    def a_rhs(i):
        a, b, c = i
        acc = A[i]
        for r in range(n):
            t = C[(b, c, r, a)]
            if not t.is_zero():
                acc = acc + Ups[(r,)] * t
        return acc

    res["A"] = TensorField.build(geom, "ddd", lambda i: Ah[i] - a_rhs(i))

    # nabla_(a P_bc)_0
    lhs = _sym3_tf(_on(geom, Ph.covariant_derivative()))
    nnU = nU.covariant_derivative()  # nnU[a,b,c] = nabla_a nabla_b Upsilon_c
    UdU = Ups.outer(nU)
    UUU = Ups.outer(Ups).outer(Ups)
    UP_ = Ups.outer(P)
    base = P.covariant_derivative() - nnU - UUU.scale(4)
    # coefficients as commonly displayed (4, -2) ...
    res["nablaP"] = lhs - _sym3_tf(base + UdU.scale(4) - UP_.scale(2))
    # ... and as they follow from nabla_hat = nabla - 4 Upsilon_(a (.)_bc) on symmetric 2-tensors (6, -4)
    res["nablaP_rederived"] = lhs - _sym3_tf(base + UdU.scale(6) - UP_.scale(4))

    # nabla_a J_hat, converted with e^{2 Upsilon}
    dJh = TensorField.build(geom, "d", lambda i: e2 * E.diff(Jh, geom.coords[i[0]]))
    ndivU = TensorField.build(geom, "d", lambda i: E.diff(divU, geom.coords[i[0]]))
    U_nU = TensorField.build(
        geom, "d", lambda i: E.expr_sum(UpsUp[(r,)] * nU[(r, i[0])] for r in range(n))
    )
    rhsJ = TensorField.build(
        geom,
        "d",
        lambda i: E.diff(J, geom.coords[i[0]])
        - ndivU[i]
        - U_nU[i] * (n - 2)
        + Ups[i] * divU * 2
        - Ups[i] * J * 2
        + Ups[i] * sq * (n - 2),
    )
    res["nablaJ"] = dJh - rhsJ

    # Weyl invariance in the C_ab^c_d arrangement
    res["C"] = _on(geom, Ch) - C

    if include_weyl_gradient:
        res["nablaC"] = _weyl_gradient_residual(geom, hat, upsilon, Ups)
    return TransformReport(res)


def _weyl_slots(geom: Geometry, C: TensorField) -> TensorField:
    """``C_b^d_c^e`` (variance ``dudu``, density weight ``2/n``) from ``C_ab^c_d``."""
    # lower the upper slot to get C_{bdce}, then raise d and e
    return C.lower(2).raise_(1).raise_(3)


def _weyl_gradient_residual(geom: Geometry, hat: Geometry, upsilon: Expr, Ups: TensorField) -> TensorField:
    n = geom.n
    W = _weyl_slots(geom, weyl(geom))
    What = _weyl_slots(hat, weyl(hat))
    e2 = conformal_factor(upsilon, 2)
    # nabla_a C_b^d_c^e with slots (a, b, d, c, e); symmetrize and project over (a, b, c) = slots (0, 1, 3)
    lhs = _on(geom, What.covariant_derivative()).scale(e2)
    slots = (0, 1, 3)
    lhs = _sym3_tf(lhs, slots)
    nW = W.covariant_derivative()
    UW = Ups.outer(W)  # (a, b, d, c, e)

    def extra(idx):
        # 2 Upsilon_r delta_(a^(d C_b^e)_c)^r ; sym over (a,b,c) lower and (d,e) upper
        a, b, d, c, e = idx
        acc = E.ZERO
        lows = (a, b, c)
        for pa, pb, pc in itertools.permutations(lows):
            for pd, pe in ((d, e), (e, d)):
                if pa != pd:
                    continue
                for r in range(n):
                    u = Ups[(r,)]
                    if u.is_zero():
                        continue
                    t = W[(pb, pe, pc, r)]
                    if not t.is_zero():
                        acc = acc + u * t
        return acc * Fraction(2, 12)

    X = TensorField.build(geom, nW.variance, extra)
    rhs = nW - UW.scale(4) + X
    rhs = _sym3_tf(rhs, slots)
    return lhs - rhs
