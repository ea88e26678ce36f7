"""Conformally invariant operators on symbols and the symmetry classifier.

* ``G``: the conformal Killing operator ``G(f) = Pi_0 nabla^(a0 f^{a1...ak})``.
* ``F``, ``F1``, ``F2``: the curvature operators ``S^{k,0}_0 -> S^{k-1,0}_{2/n}``.
* ``Obs``: the obstruction ``-2(n-2)/(3(n+1)) F`` on degree-2 symbols (sign explained below).
* exterior derivative on forms of rank <= 2, potential search and classification.

Index conventions
-----------------
``C_abcd`` is the Weyl tensor with its third slot lowered (``C_ab^c_d`` is the
commutator arrangement of :mod:`confsym.curvature`) and ``A_abc = nabla_b P_ca -
nabla_c P_ba``.  ``F``, ``F1`` and ``F2`` are built from these exactly as their
defining formulas read.  With these conventions the commutator identity

    Delta_Y Q_{l0,l0}(S) - Q_{m0,m0}(S) Delta_Y = Q_{l0,m0}(2 G(S) + Obs(S))

holds with ``Obs = -2(n-2)/(3(n+1)) F``; :func:`obs` uses that sign, so that
``Obs(K)^flat = -2 df`` characterizes the symmetries.  :data:`OBS_SIGN` records it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from . import expr as E
from .curvature import cotton_york, ricci, scalar, schouten, weyl
from .expr import Expr
from .geometry import Geometry
from .quantize import (
    DiffOp,
    Weights,
    commutator,
    compose,
    divergence_sym2,
    divergence_vector,
    metric_trace,
    principal_symbol,
    quantize_order2,
    ricci_contraction,
    transport,
    yamabe,
)
from .symbols import PolySymbol, hamiltonian_symbol, is_conformal_killing, is_killing, poisson, symmetrized_gradient
from .tensor import DOWN, UP, RankUnsupported, TensorError, TensorField

__all__ = [
    "ObstructionError",
    "NotTraceFree",
    "DegreeTooLow",
    "UnsupportedGenericDegree2",
    "NotClosed",
    "AnsatzExhausted",
    "PotentialResult",
    "ObsReport",
    "conformal_killing_op",
    "f_operator",
    "obs",
    "obs_coefficient",
    "higher_order_xy",
    "flat",
    "sharp",
    "exterior_d",
    "potential_basis",
    "solve_potential",
    "qdelta_residual",
    "sigma3_residual",
    "classify",
    "classify_hatted",
]


class ObstructionError(ValueError):
    pass


class NotTraceFree(ObstructionError):
    pass


class DegreeTooLow(ObstructionError):
    pass


class UnsupportedGenericDegree2(ObstructionError):
    """Raised for degree-2 symbols that are not conformal Killing; use :func:`sigma3_residual`."""


# ---------------------------------------------------------------------------
# the conformal Killing operator


def conformal_killing_op(S: PolySymbol) -> PolySymbol:
    """``G(S)^{a0...ak} = Pi_0 nabla^(a0 S^{a1...ak)}`` (degree ``k+1``, weight ``2/n``)."""
    if S.weight != 0:
        raise ObstructionError("G acts on unweighted symbols")
    if S.degree + 1 > 3:
        raise RankUnsupported("G implemented for degree <= 2")
    t = symmetrized_gradient(S)
    if t.rank >= 2:
        t = t.tracefree_project()
    return PolySymbol(t.with_weight(0), Fraction(2, S.n))


# ---------------------------------------------------------------------------
# curvature operators F, F1, F2


def _weyl_down(geom: Geometry) -> TensorField:
    """``C_abcd`` (all lower)."""
    return geom.cached("weyl_down", lambda: weyl(geom).lower(2).with_weight(0))


def _weyl_uddu(geom: Geometry) -> TensorField:
    """``C^r_st^a``."""
    return geom.cached("weyl_uddu", lambda: _weyl_down(geom).raise_(0).raise_(3).with_weight(0))


def _weyl_udud(geom: Geometry) -> TensorField:
    """``C^a_r^b_s``."""
    return geom.cached("weyl_udud", lambda: _weyl_down(geom).raise_(0).raise_(2).with_weight(0))


def _nabla_weyl_dudud(geom: Geometry) -> TensorField:
    """``nabla_r C_s^a_t^b`` with slots ``(r, s, a, t, b)``."""

    def build():
        W = _weyl_down(geom).raise_(1).raise_(3).with_weight(0)
        return W.covariant_derivative().with_weight(0)

    return geom.cached("nabla_weyl_dudud", build)


def _cotton_operator(geom: Geometry) -> TensorField:
    """``A_st^a`` stored as ``B[a, s, t]`` (the Cotton-York tensor with its last slot raised)."""

    def build():
        A = cotton_york(geom).raise_(2).with_weight(0)  # A_st^a
        return TensorField.build(geom, UP + DOWN * 2, lambda i: A[(i[1], i[2], i[0])])

    return geom.cached("cotton_operator", build)


def _is_tracefree(S: PolySymbol) -> bool:
    if S.degree < 2:
        return True
    return S.trace().is_zero()


def _finish(geom: Geometry, acc: TensorField) -> PolySymbol:
    t = acc
    if t.rank >= 2:
        t = t.symmetrize()
    if t.rank >= 2:
        t = t.tracefree_project()
    return PolySymbol(t.with_weight(0), Fraction(2, geom.n))


def _term_c_nabla(S: PolySymbol) -> TensorField:
    """``C^r_st^(a1 nabla_r f^{a2...)st}`` before symmetrization."""
    geom, n, k = S.geom, S.n, S.degree
    Cu = _weyl_uddu(geom)
    dS = S.tensor.with_weight(0).covariant_derivative()  # slots (r, f...)

    def f(idx):
        a1, rest = idx[0], idx[1:]
        terms = []
        for r, s, t in itertools.product(range(n), repeat=3):
            c = Cu[(r, s, t, a1)]
            if c.is_zero():
                continue
            d = dS[(r,) + rest + (s, t)]
            if not d.is_zero():
                terms.append(c * d)
        return E.expr_sum(terms)

    return TensorField.build(geom, UP * (k - 1), f)


def _term_cotton(S: PolySymbol) -> TensorField:
    """``A^(a1_st f^{a2...)st}`` before symmetrization."""
    geom, n, k = S.geom, S.n, S.degree
    A = _cotton_operator(geom)

    def f(idx):
        a1, rest = idx[0], idx[1:]
        terms = []
        for s, t in itertools.product(range(n), repeat=2):
            c = A[(a1, s, t)]
            if c.is_zero():
                continue
            v = S.tensor[rest + (s, t)]
            if not v.is_zero():
                terms.append(c * v)
        return E.expr_sum(terms)

    return TensorField.build(geom, UP * (k - 1), f)


def _term_c_two_free(S: PolySymbol) -> TensorField:
    """``C^(a1_r^a2_s nabla_t f^{a3...)rst}`` before symmetrization (``k >= 3``)."""
    geom, n, k = S.geom, S.n, S.degree
    Cu = _weyl_udud(geom)
    dS = S.tensor.with_weight(0).covariant_derivative()

    def f(idx):
        a1, a2, rest = idx[0], idx[1], idx[2:]
        terms = []
        for r, s in itertools.product(range(n), repeat=2):
            c = Cu[(a1, r, a2, s)]
            if c.is_zero():
                continue
            # nabla_t f^{rest r s t}: a divergence on the last slot
            for t in range(n):
                d = dS[(t,) + rest + (r, s, t)]
                if not d.is_zero():
                    terms.append(c * d)
        return E.expr_sum(terms)

    return TensorField.build(geom, UP * (k - 1), f)


def _term_nabla_weyl(S: PolySymbol) -> TensorField:
    """``(nabla_r C_s^(a1_t^a2) f^{a3...)rst}`` before symmetrization (``k >= 3``)."""
    geom, n, k = S.geom, S.n, S.degree
    nC = _nabla_weyl_dudud(geom)

    def f(idx):
        a1, a2, rest = idx[0], idx[1], idx[2:]
        terms = []
        for r, s, t in itertools.product(range(n), repeat=3):
            c = nC[(r, s, a1, t, a2)]
            if c.is_zero():
                continue
            v = S.tensor[rest + (r, s, t)]
            if not v.is_zero():
                terms.append(c * v)
        return E.expr_sum(terms)

    return TensorField.build(geom, UP * (k - 1), f)


def f_operator(S: PolySymbol, variant: str = "F") -> PolySymbol:
    """``F``, ``F1`` or ``F2`` applied to a trace-free degree-``k`` symbol (result degree ``k-1``)."""
    if variant not in ("F", "F1", "F2"):
        raise ObstructionError("variant must be one of F, F1, F2")
    k, n = S.degree, S.n
    if k < 2:
        raise DegreeTooLow("F needs a symbol of degree >= 2")
    if variant == "F2" and k < 3:
        raise DegreeTooLow("F2 needs a symbol of degree >= 3")
    if k - 1 > 3:
        raise RankUnsupported("F implemented for degree <= 4")
    if not _is_tracefree(S):
        raise NotTraceFree("F acts on trace-free symbols")
    geom = S.geom
    m = n + 2 * k - 2
    if variant == "F2":
        acc = _term_c_two_free(S).scale(4) + _term_nabla_weyl(S).scale(m) + _term_cotton(S).scale(2 * m)
        return _finish(geom, acc)
    acc = _term_c_nabla(S) - _term_cotton(S).scale(k + 1)
    if variant == "F1" and k >= 3:
        acc = acc + _term_c_two_free(S).scale(Fraction(k - 2, m))
    return _finish(geom, acc)


OBS_SIGN = -1


def obs_coefficient(n: int) -> Fraction:
    """Factor multiplying ``F`` in ``Obs``: ``-2(n-2) / (3(n+1))`` (see the module docstring)."""
    return OBS_SIGN * Fraction(2 * (n - 2), 3 * (n + 1))


def higher_order_xy(n: int, k: int) -> tuple[Fraction, Fraction]:
    """The coefficients ``(x, y)`` of ``x F1 + y F2`` in the higher-order commutator identity."""
    x = Fraction(k * (k - 1) * (n + 2 * k - 6), 3 * (n + 2 * k - 2) * (n + 2 * k - 3))
    y = Fraction(k * (k - 1) * (k - 2), 3 * (n + 2 * k - 2) * (n + 2 * k - 3))
    return x, y


def obs(K: PolySymbol) -> PolySymbol:
    """``Obs(K) = -2(n-2)/(3(n+1)) F(Pi_0 K)`` for a degree-2 symbol ``K``."""
    if K.degree != 2:
        raise ObstructionError("Obs is defined on degree-2 symbols")
    K0 = PolySymbol(K.tensor.with_weight(0).tracefree_project(), 0)
    return f_operator(K0, "F").scale(obs_coefficient(K.n))


# ---------------------------------------------------------------------------
# forms


def flat(V: PolySymbol) -> TensorField:
    """``V^flat``: lower the index of a degree-1 symbol."""
    if V.degree != 1:
        raise ObstructionError("flat expects a degree-1 symbol")
    return V.tensor.with_weight(0).lower(0).with_weight(0)


def sharp(omega: TensorField) -> PolySymbol:
    if omega.variance != DOWN:
        raise TensorError("expected a one-form")
    return PolySymbol(omega.with_weight(0).raise_(0).with_weight(0), 0)


def exterior_d(omega: TensorField) -> TensorField:
    """Exterior derivative of a form of rank 0, 1 or 2 (antisymmetric lower components)."""
    geom = omega.geom
    r = omega.rank
    if set(omega.variance) - {DOWN}:
        raise TensorError("forms must have lower indices")
    if r > 2:
        raise RankUnsupported("exterior derivative implemented for rank <= 2")
    X = geom.coords
    if r == 0:
        v = omega.value()
        return TensorField.build(geom, DOWN, lambda i: E.diff(v, X[i[0]]))
    if r == 1:
        return TensorField.build(geom, DOWN * 2, lambda i: E.diff(omega[(i[1],)], X[i[0]]) - E.diff(omega[(i[0],)], X[i[1]]))

    def f(i):
        a, b, c = i
        if a == b or b == c or a == c:
            return E.ZERO
        return E.diff(omega[(b, c)], X[a]) + E.diff(omega[(c, a)], X[b]) + E.diff(omega[(a, b)], X[c])

    return TensorField.build(geom, DOWN * 3, f)


# ---------------------------------------------------------------------------
# potentials


@dataclass
class PotentialResult:
    """Outcome of :func:`solve_potential`: ``status`` is ``found``, ``not-closed`` or ``ansatz-exhausted``."""

    status: str
    potential: Expr | None = None
    coefficients: dict[str, Fraction] = field(default_factory=dict)
    residual: TensorField | None = None
    d_omega: TensorField | None = None

    @property
    def found(self) -> bool:
        return self.status == "found"


class NotClosed(ObstructionError):
    pass


class AnsatzExhausted(ObstructionError):
    pass


def potential_basis(geom: Geometry, K: PolySymbol, extra: Mapping[str, Expr] | None = None) -> dict[str, Expr]:
    """Candidate scalars ``Ric(K)``, ``Sc Tr K``, ``nabla nabla K``, ``J Tr K`` plus user scalars."""
    K = K.on(geom) if K.geom is not geom else K
    trK = metric_trace(geom, K)
    out = {
        "Ric(K)": ricci_contraction(geom, K),
        "Sc*TrK": scalar(geom) * trK,
        "divdivK": divergence_vector(geom, divergence_sym2(geom, K)),
        "J*TrK": schouten(geom)[1] * trK,
    }
    for k, v in (extra or {}).items():
        out[k] = v
    return out


def _linear_solve(rows: list[dict[int, Fraction]], rhs: list[Fraction], m: int) -> list[Fraction] | None:
    """Exact Gauss-Jordan on a sparse rational system; free variables set to zero."""
    A = [[row.get(j, Fraction(0)) for j in range(m)] + [b] for row, b in zip(rows, rhs)]
    pivots = []
    r = 0
    for c in range(m):
        p = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        pv = A[r][c]
        A[r] = [x / pv for x in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c] != 0:
                fac = A[i][c]
                A[i] = [x - fac * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
    if any(all(x == 0 for x in row[:m]) and row[m] != 0 for row in A):
        return None
    sol = [Fraction(0)] * m
    for i, c in enumerate(pivots):
        sol[c] = A[i][m]
    return sol


def solve_potential(
    omega: TensorField,
    K: PolySymbol,
    geom: Geometry | None = None,
    extra: Mapping[str, Expr] | None = None,
) -> PotentialResult:
    """Find ``f`` in the ansatz span with ``omega + 2 df = 0``."""
    geom = geom or omega.geom
    d_omega = exterior_d(omega)
    if not d_omega.is_zero():
        return PotentialResult("not-closed", d_omega=d_omega)
    if omega.is_zero():
        return PotentialResult("found", E.ZERO, {}, d_omega=d_omega)
    basis = potential_basis(geom, K, extra)
    names = list(basis)
    # unknown coefficients as auxiliary polynomial generators; the residual is linear in them
    unknowns = [E.coord("__potential_c%d" % i) for i in range(len(names))]
    idx = [E._REG.index[E.Coord("__potential_c%d" % i)] for i in range(len(names))]
    trial = E.expr_sum([c * basis[nm] for c, nm in zip(unknowns, names)])
    rows: list[dict[int, Fraction]] = []
    rhs: list[Fraction] = []
    for a, x in enumerate(geom.coords):
        res = omega[(a,)] + E.diff(trial, x) * 2
        if res.is_zero():
            continue
        buckets: dict[tuple, dict[int, int]] = {}
        for mono, c in E._terms(E._lift(res.num)):
            lin = [j for j, g in enumerate(idx) if g < len(mono) and mono[g]]
            key = tuple(0 if (g in idx) else v for g, v in enumerate(mono))
            slot = buckets.setdefault(key, {})
            j = lin[0] if lin else -1
            slot[j] = slot.get(j, 0) + c
        for key, coeffs in buckets.items():
            rows.append({j: Fraction(v) for j, v in coeffs.items() if j >= 0})
            rhs.append(-Fraction(coeffs.get(-1, 0)))
    sol = _linear_solve(rows, rhs, len(names))
    if sol is None:
        return PotentialResult("ansatz-exhausted", residual=omega, d_omega=d_omega)
    f = E.expr_sum([basis[nm] * c for nm, c in zip(names, sol) if c != 0])
    residual = TensorField.build(geom, DOWN, lambda i: omega[i] + E.diff(f, geom.coords[i[0]]) * 2)
    if not residual.is_zero():
        return PotentialResult("ansatz-exhausted", residual=residual, d_omega=d_omega)
    return PotentialResult("found", f, {nm: c for nm, c in zip(names, sol) if c != 0}, residual, d_omega)


# ---------------------------------------------------------------------------
# the commutator identity


def _yamabe_pair(geom: Geometry) -> DiffOp:
    return yamabe(geom)


def qdelta_residual(S: PolySymbol, geom: Geometry | None = None) -> DiffOp:
    """``Delta_Y Q_{l0,l0}(S) - Q_{m0,m0}(S) Delta_Y - Q_{l0,m0}(2G(S) + Obs(S))``."""
    geom = geom or S.geom
    S = S.on(geom) if S.geom is not geom else S
    n, k = geom.n, S.degree
    if k > 2:
        raise ObstructionError("the identity is implemented for degree <= 2")
    if k == 2 and not is_conformal_killing(S):
        raise UnsupportedGenericDegree2("generic degree-2 symbols: use sigma3_residual")
    Y = yamabe(geom)
    kw = {0: "f", 1: "X", 2: "K"}[k]
    arg = S if k else S.tensor.value()
    lhs = compose(Y, quantize_order2(geom, weights=Weights.l0l0(n), **{kw: arg})) - compose(
        quantize_order2(geom, weights=Weights.m0m0(n), **{kw: arg}), Y
    )
    G = conformal_killing_op(S)
    if k == 2:
        rhs = quantize_order2(geom, X=obs(S).with_weight(0), weights=Weights.l0m0(n))
    elif k == 1:
        rhs = quantize_order2(geom, K=G.scale(2).with_weight(0), weights=Weights.l0m0(n))
    else:
        rhs = quantize_order2(geom, X=G.scale(2).with_weight(0), weights=Weights.l0m0(n))
    return (lhs - rhs).with_weights(None)


def _drop_order0(D: DiffOp) -> DiffOp:
    return DiffOp(D.geom, {a: c for a, c in D.items() if sum(a)}, D.weights)


def sigma3_residual(S: PolySymbol, geom: Geometry | None = None) -> PolySymbol:
    """Order-3 symbol of ``[Delta_Y, Q_{l0,l0}(S)]`` minus ``{H, S}`` (generic degree 2)."""
    geom = geom or S.geom
    S = S.on(geom) if S.geom is not geom else S
    n = geom.n
    if S.degree != 2:
        raise ObstructionError("the order-3 check is for degree-2 symbols")
    Y = yamabe(geom)
    Q = quantize_order2(geom, K=S, weights=Weights.l0l0(n))
    # zeroth-order parts of two second-order operators only reach order <= 2 in the commutator
    Y, Q = _drop_order0(Y), _drop_order0(Q)
    lhs = compose(Y, Q, check_weights=False) - compose(Q, Y, check_weights=False)
    return principal_symbol(lhs.with_weights(None), 3).with_weight(0) - poisson(hamiltonian_symbol(geom), S)


# ---------------------------------------------------------------------------
# classification


@dataclass
class ObsReport:
    """Everything the classifier computed for one symbol."""

    obs: PolySymbol
    obs_flat: TensorField
    d_obs_flat: TensorField
    closed: bool
    potential: Expr | None
    verdict: str
    is_conformal_killing: bool
    is_killing: bool
    potential_status: str = ""
    potential_coefficients: dict[str, Fraction] = field(default_factory=dict)
    residuals: dict[str, DiffOp | TensorField] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def residual_zero(self, name: str) -> bool:
        r = self.residuals.get(name)
        return r is None or r.is_zero()


def _symmetry_operator(geom: Geometry, K: PolySymbol, X: PolySymbol | None, f: Expr | None, w: Weights) -> DiffOp:
    D = quantize_order2(geom, K=K, X=X, weights=w)
    if f is not None and not f.is_zero():
        D = D + DiffOp.multiplication(geom, f, w)
    return D.with_weights(w)


def classify(
    K: PolySymbol,
    geom: Geometry | None = None,
    X: PolySymbol | None = None,
    f: Expr | None = None,
    extra_scalars: Mapping[str, Expr] | None = None,
    verify_operator: bool = True,
) -> ObsReport:
    """Decide whether ``K`` is the principal symbol of a (conformal) symmetry of ``Delta_Y``."""
    geom = geom or K.geom
    K = K.on(geom) if K.geom is not geom else K
    if X is not None and X.geom is not geom:
        X = X.on(geom)
    n = geom.n
    ck = is_conformal_killing(K)
    kill = is_killing(K) if ck else False
    O = obs(K)
    w = flat(O)
    dw = exterior_d(w)
    closed = dw.is_zero()
    report = ObsReport(O, w, dw, closed, None, "obstructed", ck, kill)
    if not ck:
        report.verdict = "not-conformal-killing"
        report.notes.append("K is not a conformal Killing tensor")
        return report
    if f is None:
        pr = solve_potential(w, K, geom, extra_scalars)
        report.potential_status = pr.status
        if not pr.found:
            report.notes.append("Obs(K)^flat is not closed" if pr.status == "not-closed" else "no potential in the ansatz span")
            if pr.residual is not None:
                report.residuals["potential"] = pr.residual
            return report
        f = pr.potential
        report.potential_coefficients = pr.coefficients
    else:
        report.potential_status = "supplied"
        res = TensorField.build(geom, DOWN, lambda i: w[i] + E.diff(f, geom.coords[i[0]]) * 2)
        report.residuals["potential"] = res
        if not res.is_zero():
            report.notes.append("supplied potential does not satisfy Obs(K)^flat = -2 df")
            return report
    report.potential = f
    Y = yamabe(geom)
    if kill and (X is None or is_killing(X)):
        D = _symmetry_operator(geom, K, X, f, Weights.l0l0(n))
        if verify_operator:
            report.residuals["commutator"] = commutator(Y, D)
        report.verdict = "symmetry"
    else:
        D1 = _symmetry_operator(geom, K, X, f, Weights.l0l0(n))
        D2 = _symmetry_operator(geom, K, X, f, Weights.m0m0(n))
        if verify_operator:
            report.residuals["intertwining"] = (compose(Y, D1, check_weights=False) - compose(D2, Y, check_weights=False)).with_weights(None)
        report.verdict = "conformal-symmetry"
    for name in ("commutator", "intertwining"):
        if name in report.residuals and not report.residuals[name].is_zero():
            report.notes.append("%s residual does not vanish" % name)
            report.verdict = "unverified"
    return report


def classify_hatted(
    K: PolySymbol,
    factor: Expr,
    geom: Geometry | None = None,
    X: PolySymbol | None = None,
    f: Expr | None = None,
    extra_scalars: Mapping[str, Expr] | None = None,
    verify_operator: bool = True,
) -> ObsReport:
    """Classify ``K`` for ``g`` while computing the obstruction and potential in ``g_hat = factor * g``.

    ``Obs(K)^flat`` is conformally invariant, so the potential found in ``g_hat`` (expressed
    through hatted curvature) serves ``g`` as well.  The operator ``D`` built in ``g_hat`` is
    transported back to ``g``; when ``K`` is Killing for ``g`` the verdict ``symmetry`` requires
    ``[Delta_Y(g), D] = 0`` there.
    """
    geom = geom or K.geom
    hat = geom.scaled(factor)
    report = classify(K.on(hat), hat, X.on(hat) if X is not None else None, f, extra_scalars, verify_operator)
    report.notes.append("obstruction and potential computed in the rescaled metric")
    if report.potential is None:
        return report
    K_g = K.on(geom)
    kill_g = is_killing(K_g) and (X is None or is_killing(X.on(geom)))
    if not kill_g:
        return report
    report.is_killing = True
    n = geom.n
    D_hat = _symmetry_operator(hat, K.on(hat), X.on(hat) if X is not None else None, report.potential, Weights.l0l0(n))
    upsilon = E.log(factor) * Fraction(1, 2)
    D = transport(D_hat, -upsilon, Weights.l0l0(n), geom)
    report.verdict = "symmetry"
    if verify_operator:
        res = commutator(yamabe(geom), D)
        report.residuals["commutator"] = res
        if not res.is_zero():
            report.notes.append("commutator residual does not vanish")
            report.verdict = "unverified"
    return report
