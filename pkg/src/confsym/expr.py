"""Exact scalar expressions over a differential ring.

Every scalar is stored as a reduced quotient ``num/den`` of two integer
polynomials in a process-wide, append-only list of generators:

* coordinates ``x1, x2, ...``;
* partial derivatives ``D[f,(alpha)](args)`` of abstract functions;
* the atoms ``exp``, ``log`` and ``sqrt`` applied to an expression.

Generators are treated as algebraically independent, except for the two
local rewrites ``sqrt(u)^2 -> u`` and ``exp(log u) -> u``.  Polynomial
arithmetic and gcds are delegated to FLINT, so ``normalize`` is simply the
identity on already-constructed values and ``is_zero`` is a numerator test.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

import flint

__all__ = [
    "Expr",
    "ExprError",
    "GuardViolation",
    "InconsistentBinding",
    "MissingRealization",
    "NonFinite",
    "NumericContext",
    "coord",
    "const",
    "function",
    "derived",
    "exp",
    "log",
    "sqrt",
    "diff",
    "normalize",
    "is_zero",
    "substitute",
    "eval_numeric",
    "ZERO",
    "ONE",
]


class ExprError(Exception):
    """Base class for scalar-layer failures."""


class GuardViolation(ExprError):
    pass


class InconsistentBinding(ExprError):
    pass


class MissingRealization(ExprError):
    pass


class NonFinite(ExprError):
    pass


# ---------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class Coord:
    name: str

    def label(self) -> str:
        return self.name


@dataclass(frozen=True)
class FnDeriv:
    """``D^alpha f`` for an abstract function ``f(args)``; alpha is per argument."""

    name: str
    args: tuple[str, ...]
    alpha: tuple[int, ...]

    def label(self) -> str:
        if not self.args:
            return self.name
        call = "(" + ",".join(self.args) + ")"
        if not any(self.alpha):
            return self.name + call
        return "D[%s,(%s)]%s" % (self.name, ",".join(map(str, self.alpha)), call)


@dataclass(frozen=True)
class Atom:
    kind: str  # exp | log | sqrt
    arg_key: tuple
    arg: "Expr"

    def label(self) -> str:
        if self.kind == "exp":
            return "exp((%s)/2)" % self.arg.to_str()
        return "%s(%s)" % (self.kind, self.arg.to_str())

    def __hash__(self):
        return hash((self.kind, self.arg_key))

    def __eq__(self, other):
        return isinstance(other, Atom) and (self.kind, self.arg_key) == (other.kind, other.arg_key)


Generator = Union[Coord, FnDeriv, Atom]


class _Registry:
    """Global generator table and the FLINT context holding all polynomials.

    The context grows by doubling; older polynomials are lifted on demand
    (variable names ``g0, g1, ...`` are a prefix of every later context).
    """

    def __init__(self, capacity: int = 32):
        self.lock = threading.RLock()
        self.gens: list[Generator] = []
        self.index: dict[Generator, int] = {}
        self.sqrt_indices: set[int] = set()
        self.labels: list[str] = []
        self._set_capacity(capacity)

    def _set_capacity(self, cap: int) -> None:
        self.capacity = cap
        self.ctx = flint.fmpz_mpoly_ctx.get(tuple("g%d" % i for i in range(cap)), "degrevlex")
        self.zero = self.ctx.constant(0)
        self.one = self.ctx.constant(1)

    def intern(self, gen: Generator) -> int:
        i = self.index.get(gen)
        if i is not None:
            return i
        with self.lock:
            i = self.index.get(gen)
            if i is not None:
                return i
            i = len(self.gens)
            if i >= self.capacity:
                self._set_capacity(self.capacity * 2)
            self.gens.append(gen)
            self.labels.append(gen.label())
            if isinstance(gen, Atom) and gen.kind == "sqrt":
                self.sqrt_indices.add(i)
            self.index[gen] = i
            return i

    def gen_poly(self, i: int):
        return self.ctx.gen(i)


_REG = _Registry()
_GEN_DIFF: dict[tuple[int, str], "Expr"] = {}


def _lift(p):
    ctx = _REG.ctx
    if p.context() is ctx:
        return p
    return p.project_to_context(ctx)


def _terms(p):
    """Yield ``(exponents, coefficient)`` pairs with plain Python ints."""
    for mono, c in p.to_dict().items():
        yield tuple(int(k) for k in mono), int(c)


def _used(p) -> list[int]:
    return [i for i, d in enumerate(p.degrees()) if d > 0]  # the zero polynomial reports -1


# ---------------------------------------------------------------------------
# the expression type


class Expr:
    """Immutable exact scalar; construct through the module helpers."""

    __slots__ = ("num", "den", "_key", "_dcache", "_str")

    def __init__(self, num, den):
        # callers guarantee: gcd(num, den) == 1 and den has positive leading coefficient
        self.num = num
        self.den = den
        self._key = None
        self._dcache = None
        self._str = None

    # -- construction helpers -------------------------------------------
    @staticmethod
    def _reduced(num, den) -> "Expr":
        if den.is_zero():
            raise ZeroDivisionError("division by an identically zero expression")
        if num.is_zero():
            return ZERO
        num, den = _lift(num), _lift(den)
        if not den.is_one():
            g = num.gcd(den)
            if not g.is_one():
                num = num / g
                den = den / g
            if den.leading_coefficient() < 0:
                num, den = -num, -den
        return _fix_radicals(num, den)

    @staticmethod
    def from_poly(p) -> "Expr":
        return _fix_radicals(_lift(p), _REG.one) if not p.is_zero() else ZERO

    # -- basic predicates -----------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_one()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def as_fraction(self) -> Fraction:
        if not self.is_constant():
            raise ExprError("not a constant: %s" % self.to_str())
        n = int(self.num.leading_coefficient()) if not self.num.is_zero() else 0
        return Fraction(n, int(self.den.leading_coefficient()))

    def generators(self) -> list[Generator]:
        return [_REG.gens[i] for i in sorted(set(_used(_lift(self.num))) | set(_used(_lift(self.den))))]

    def key(self) -> tuple:
        if self._key is None:
            self._key = (str(_lift(self.num)), str(_lift(self.den)))
        return self._key

    def __hash__(self):
        return hash(self.key())

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = _pair(self, other)
        return a.num == b.num and a.den == b.den

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __bool__(self):
        raise TypeError("truth value of an Expr is ambiguous; use is_zero()")

    # -- arithmetic ---------------------------------------------------------
    def __neg__(self):
        if self.num.is_zero():
            return self
        return Expr(-self.num, self.den)

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        a, b = _pair(self, other)
        if a.den == b.den:
            return Expr._reduced(a.num + b.num, a.den)
        g = a.den.gcd(b.den)
        if g.is_one():
            # coprime denominators: the result is already reduced
            return Expr(a.num * b.den + b.num * a.den, a.den * b.den) if not (a.num * b.den + b.num * a.den).is_zero() else ZERO
        da = a.den / g
        db = b.den / g
        num = a.num * db + b.num * da
        if num.is_zero():
            return ZERO
        den = a.den * db
        h = num.gcd(g)
        if not h.is_one():
            num = num / h
            den = den / h
        if den.leading_coefficient() < 0:
            num, den = -num, -den
        return Expr(num, den)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.num.is_zero() or other.num.is_zero():
            return ZERO
        a, b = _pair(self, other)
        if a.den.is_one() and b.den.is_one():
            return _fix_radicals(a.num * b.num, a.den)
        g1 = a.num.gcd(b.den)
        g2 = b.num.gcd(a.den)
        an, bd = (a.num, b.den) if g1.is_one() else (a.num / g1, b.den / g1)
        bn, ad = (b.num, a.den) if g2.is_one() else (b.num / g2, a.den / g2)
        num, den = an * bn, ad * bd
        if den.leading_coefficient() < 0:
            num, den = -num, -den
        return _fix_radicals(num, den)

    __rmul__ = __mul__

    def inverse(self) -> "Expr":
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of zero expression")
        num, den = self.den, self.num
        if den.leading_coefficient() < 0:
            num, den = -num, -den
        return _fix_radicals(_lift(num), _lift(den))

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, k):
        if isinstance(k, flint.fmpz):
            k = int(k)
        if isinstance(k, Fraction) and k.denominator == 1:
            k = k.numerator
        if isinstance(k, Fraction):
            if k.denominator != 2:
                raise ExprError("only integer and half-integer powers are supported")
            return sqrt(self) ** (2 * k)
        if not isinstance(k, int):
            return NotImplemented
        if k == 0:
            return ONE
        if k < 0:
            return self.inverse() ** (-k)
        a = _lift_expr(self)
        return _fix_radicals(a.num ** k, a.den ** k)

    # -- calculus -------------------------------------------------------------
    def diff(self, x: str) -> "Expr":
        return diff(self, x)

    # -- printing -------------------------------------------------------------
    def to_str(self) -> str:
        if self._str is None:
            self._str = _format(self)
        return self._str

    __str__ = to_str

    def __repr__(self):
        return "Expr(%s)" % self.to_str()


def _lift_expr(e: Expr) -> Expr:
    ctx = _REG.ctx
    if e.num.context() is ctx and e.den.context() is ctx:
        return e
    return Expr(_lift(e.num), _lift(e.den))


def _pair(a: Expr, b: Expr) -> tuple[Expr, Expr]:
    ca = a.num.context()
    if ca is b.num.context() and ca is a.den.context() and ca is b.den.context():
        return a, b
    return _lift_expr(a), _lift_expr(b)


def _coerce(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return const(v)
    return NotImplemented


def const(v) -> Expr:
    """Exact rational constant; floats are rejected."""
    if isinstance(v, Expr):
        return v
    if isinstance(v, bool) or not isinstance(v, (int, Fraction)):
        raise TypeError("Expr constants must be int or Fraction, got %r" % (v,))
    f = Fraction(v)
    if f == 0:
        return ZERO
    ctx = _REG.ctx
    return Expr(ctx.constant(f.numerator), ctx.constant(f.denominator))


def _gen_expr(gen: Generator) -> Expr:
    i = _REG.intern(gen)
    return Expr(_REG.gen_poly(i), _REG.one)


def coord(name: str) -> Expr:
    return _gen_expr(Coord(name))


def function(name: str, args: Iterable[str] = ()) -> Expr:
    args = tuple(args)
    if len(set(args)) != len(args):
        raise ExprError("repeated argument in %s%r" % (name, args))
    return _gen_expr(FnDeriv(name, args, (0,) * len(args)))


def derived(name: str, args: Iterable[str], alpha: Iterable[int]) -> Expr:
    args, alpha = tuple(args), tuple(alpha)
    if len(args) != len(alpha) or any(a < 0 for a in alpha):
        raise ExprError("bad multi-index %r for %s%r" % (alpha, name, args))
    return _gen_expr(FnDeriv(name, args, alpha))


# ---------------------------------------------------------------------------
# atoms


def _primitive_split(e: Expr) -> tuple[Fraction, Expr]:
    """Write ``e = c * p`` with ``p`` primitive and positively signed."""
    cn = int(e.num.content())
    cd = int(e.den.content())
    sign = -1 if e.num.leading_coefficient() < 0 else 1
    num = e.num / (sign * cn)
    den = e.den / cd
    return Fraction(sign * cn, cd), Expr(num, den)


def _single_generator(e: Expr) -> Generator | None:
    if not e.den.is_one() or len(e.num) != 1 or e.num.leading_coefficient() != 1:
        return None
    used = _used(e.num)
    if len(used) != 1 or e.num.degrees()[used[0]] != 1:
        return None
    return _REG.gens[used[0]]


def exp(e) -> Expr:
    """``exp(e)``; polynomial exponents are split into one factor per monomial.

    Each monomial ``c m`` (``m`` monic) becomes ``exp(m/2)^(2c)``, so ``2c`` must be an
    integer; this makes ``exp(a) exp(b) = exp(a + b)`` hold on normalization.
    """
    e = _lift_expr(const(e) if not isinstance(e, Expr) else e)
    if e.is_zero():
        return ONE
    if e.den.is_constant() and len(e.num) > 1:
        d = int(e.den.leading_coefficient())
        out = ONE
        for mono, coeff in _terms(e.num):
            out = out * _exp_single(Expr._reduced(_REG.ctx.from_dict({mono: coeff}), _REG.ctx.constant(d)))
        return out
    return _exp_single(e)


def _exp_single(e: Expr) -> Expr:
    c, p = _primitive_split(e)
    g = _single_generator(p)
    if isinstance(g, Atom) and g.kind == "log":
        # exp(c log u) = u^c
        return g.arg ** c
    k = 2 * c
    if k.denominator != 1:
        raise ExprError("exp exponent %s is not a half-integer multiple of a primitive term" % c)
    base = _gen_expr(Atom("exp", p.key(), p))
    return base ** int(k)


def log(e) -> Expr:
    e = _lift_expr(const(e) if not isinstance(e, Expr) else e)
    if e.is_constant():
        v = e.as_fraction()
        if v <= 0:
            raise GuardViolation("log of non-positive constant %s" % v)
        if v == 1:
            return ZERO
    # log(prod exp(p_i/2)^k_i) = sum k_i p_i / 2
    if e.den.is_one() and len(e.num) == 1 and e.num.leading_coefficient() == 1:
        used = _used(e.num)
        gens = [_REG.gens[i] for i in used]
        if used and all(isinstance(g, Atom) and g.kind == "exp" for g in gens):
            degs = e.num.degrees()
            return expr_sum(g.arg * Fraction(int(degs[i]), 2) for i, g in zip(used, gens))
    return _gen_expr(Atom("log", e.key(), e))


def sqrt(e) -> Expr:
    e = _lift_expr(const(e) if not isinstance(e, Expr) else e)
    if e.is_zero():
        return ZERO
    if e.is_constant():
        v = e.as_fraction()
        if v < 0:
            raise GuardViolation("sqrt of negative constant %s" % v)
        rn, rd = math.isqrt(v.numerator), math.isqrt(v.denominator)
        if rn * rn == v.numerator and rd * rd == v.denominator:
            return const(Fraction(rn, rd))
    return _gen_expr(Atom("sqrt", e.key(), e))


def _fix_radicals(num, den) -> Expr:
    """Apply ``sqrt(u)^2 -> u`` wherever a sqrt generator has degree >= 2."""
    if _REG.sqrt_indices:
        dn, dd = num.degrees(), den.degrees()
        hits = [i for i in _REG.sqrt_indices if i < len(dn) and (dn[i] >= 2 or dd[i] >= 2)]
        if hits:
            return _reduce_sqrt(num, den, hits[0])
    return Expr(num, den)


def _reduce_sqrt(num, den, i) -> Expr:
    atom = _REG.gens[i]
    u = atom.arg
    s = Expr(_REG.gen_poly(i), _REG.one)

    def collapse(p) -> Expr:
        ctx = _REG.ctx
        out = ZERO
        for mono, c in _terms(p):
            q, r = divmod(mono[i], 2)
            m = list(mono)
            m[i] = r
            term = Expr(ctx.from_dict({tuple(m): c}), _REG.one)
            out = out + term * (u ** q)
        return out

    num, den = _lift(num), _lift(den)
    n_e = collapse(num)
    d_e = collapse(den)
    del s
    return n_e / d_e


# ---------------------------------------------------------------------------
# differentiation


def _gen_diff(i: int, x: str) -> Expr:
    k = (i, x)
    r = _GEN_DIFF.get(k)
    if r is not None:
        return r
    g = _REG.gens[i]
    if isinstance(g, Coord):
        r = ONE if g.name == x else ZERO
    elif isinstance(g, FnDeriv):
        if x in g.args:
            pos = g.args.index(x)
            alpha = list(g.alpha)
            alpha[pos] += 1
            r = derived(g.name, g.args, alpha)
        else:
            r = ZERO
    elif g.kind == "exp":
        r = Expr(_REG.gen_poly(i), _REG.one) * diff(g.arg, x) * Fraction(1, 2)
    elif g.kind == "log":
        r = diff(g.arg, x) / g.arg
    else:  # sqrt
        r = diff(g.arg, x) / (2 * Expr(_REG.gen_poly(i), _REG.one))
    _GEN_DIFF[k] = r
    return r


def _poly_diff(p, x: str) -> Expr:
    # generator derivatives may intern new generators (and grow the context),
    # so collect them before lifting the polynomial
    dgs = [(i, _gen_diff(i, x)) for i in _used(p)]
    p = _lift(p)
    acc_poly = _lift(_REG.zero)
    acc_rat = ZERO
    for i, dg in dgs:
        if dg.is_zero():
            continue
        dg = _lift_expr(dg)
        part = p.derivative(i)
        if dg.den.is_one():
            acc_poly = acc_poly + part * dg.num
        else:
            acc_rat = acc_rat + Expr.from_poly(part) * dg
    return Expr.from_poly(acc_poly) + acc_rat


def diff(e: Expr, x: str, *more: str) -> Expr:
    """Total derivative with respect to the coordinate named ``x``."""
    if more:
        return diff(diff(e, x), *more)
    cache = e._dcache
    if cache is not None:
        r = cache.get(x)
        if r is not None:
            return r
    else:
        cache = e._dcache = {}
    if e.num.is_constant():
        if e.den.is_constant():
            r = ZERO
        else:
            r = -e * _poly_diff(e.den, x) / Expr.from_poly(_lift(e.den))
    elif e.den.is_one():
        r = _poly_diff(e.num, x)
    else:
        a = _lift_expr(e)
        dn = _poly_diff(a.num, x)
        dd = _poly_diff(a.den, x)
        n_e = Expr.from_poly(a.num)
        d_e = Expr.from_poly(a.den)
        r = (dn * d_e - n_e * dd) / Expr.from_poly(a.den * a.den)
    cache[x] = r
    return r


def normalize(e: Expr) -> Expr:
    """Canonical form; values are kept canonical on construction."""
    return _lift_expr(e)


def is_zero(e) -> bool:
    return _coerce(e).is_zero()


# ---------------------------------------------------------------------------
# substitution


def _bound_image(g: Generator, bindings: Mapping, memo: dict) -> Expr | None:
    if isinstance(g, Coord):
        return bindings.get(g.name)
    if isinstance(g, FnDeriv):
        if g.name not in bindings:
            return None
        img = bindings[g.name]
        for arg, k in zip(g.args, g.alpha):
            for _ in range(k):
                img = diff(img, arg)
        return img
    arg = substitute(g.arg, bindings, _memo=memo)
    if arg == g.arg:
        return None
    return {"exp": lambda a: exp(a * Fraction(1, 2)), "log": log, "sqrt": sqrt}[g.kind](arg)


def _eval_poly(p, images: dict[int, Expr]) -> Expr:
    p = _lift(p)
    if all(img.den.is_one() for img in images.values()):
        ctx = _REG.ctx
        polys = [ctx.gen(i) for i in range(ctx.nvars())]
        for i, img in images.items():
            polys[i] = _lift(img.num)
        return Expr.from_poly(p.compose(*polys)) if not p.is_zero() else ZERO
    out = ZERO
    powers: dict[tuple[int, int], Expr] = {}
    ctx = _REG.ctx
    for mono, c in _terms(p):
        kept = [0] * len(mono)
        term = const(int(c))
        for i, k in enumerate(mono):
            if not k:
                continue
            if i in images:
                pk = powers.get((i, k))
                if pk is None:
                    pk = powers[(i, k)] = images[i] ** k
                term = term * pk
            else:
                kept[i] = k
        if any(kept):
            term = term * Expr(ctx.from_dict({tuple(kept): 1}), _REG.one)
        out = out + term
    return out


def substitute(e: Expr, bindings: Mapping, _memo: dict | None = None) -> Expr:
    """Simultaneous substitution of coordinates and abstract functions.

    Keys are coordinate or function names (``str``) or generator expressions
    such as ``derived("u", ["x2"], [1])``.  Binding a function also binds all
    of its derived symbols, computed by differentiating the binding.
    """
    memo = {} if _memo is None else _memo
    names: dict[str, Expr] = {}
    explicit: dict[Generator, Expr] = {}
    for k, v in bindings.items():
        v = const(v) if not isinstance(v, Expr) else v
        if isinstance(k, str):
            names[k] = v
        else:
            g = _single_generator(_lift_expr(k))
            if g is None:
                raise InconsistentBinding("binding key is not a symbol: %s" % k)
            explicit[g] = v
    for g, v in explicit.items():
        if isinstance(g, FnDeriv) and g.name in names:
            implied = _bound_image(g, names, memo)
            if not (implied - v).is_zero():
                raise InconsistentBinding("derived symbol %s bound inconsistently with %s" % (g.label(), g.name))
    if _memo is None:
        bound_coords = {k for k, v in names.items() if Coord(k) in _REG.index}
    else:
        bound_coords = set()
    a = _lift_expr(e)
    images: dict[int, Expr] = {}
    for i in sorted(set(_used(a.num)) | set(_used(a.den))):
        g = _REG.gens[i]
        if g in explicit:
            images[i] = explicit[g]
            continue
        if isinstance(g, FnDeriv) and g.name not in names and bound_coords & set(g.args):
            raise InconsistentBinding("coordinate substitution inside arguments of %s" % g.label())
        img = _bound_image(g, names, memo)
        if img is not None:
            images[i] = img
    if not images:
        return a
    return _eval_poly(a.num, images) / _eval_poly(a.den, images)


# ---------------------------------------------------------------------------
# numeric evaluation


@dataclass
class NumericContext:
    """A point plus numeric realizations of every abstract function.

    ``realizations`` maps a function name to an ``Expr`` in the coordinates
    (its partial derivatives are obtained with :func:`diff`) or to a callable
    ``f(alpha, point) -> float``.
    """

    point: Mapping[str, float]
    realizations: Mapping[str, object] = None
    check_guards: bool = True

    def __post_init__(self):
        if self.realizations is None:
            self.realizations = {}
        self._cache: dict[int, float] = {}


def _eval_gen(i: int, ctx: NumericContext) -> float:
    if i in ctx._cache:
        return ctx._cache[i]
    g = _REG.gens[i]
    if isinstance(g, Coord):
        if g.name not in ctx.point:
            raise MissingRealization("no value for coordinate %s" % g.name)
        v = float(ctx.point[g.name])
    elif isinstance(g, FnDeriv):
        real = ctx.realizations.get(g.name)
        if real is None:
            raise MissingRealization("no realization for function %s" % g.name)
        if callable(real) and not isinstance(real, Expr):
            v = float(real(g.alpha, ctx.point))
        else:
            img = real if isinstance(real, Expr) else const(real)
            for arg, k in zip(g.args, g.alpha):
                for _ in range(k):
                    img = diff(img, arg)
            v = eval_numeric(img, ctx)
    else:
        a = eval_numeric(g.arg, ctx)
        if g.kind == "exp":
            v = math.exp(a / 2)
        elif g.kind == "log":
            if a <= 0 and ctx.check_guards:
                raise GuardViolation("log argument %r is not positive" % a)
            v = math.log(a) if a > 0 else math.log(abs(a))
        else:
            if a < 0 and ctx.check_guards:
                raise GuardViolation("sqrt argument %r is negative" % a)
            v = math.sqrt(abs(a))
    ctx._cache[i] = v
    return v


def _eval_poly_float(p, ctx: NumericContext) -> float:
    p = _lift(p)
    vals = {i: _eval_gen(i, ctx) for i in _used(p)}
    total = 0.0
    for mono, c in _terms(p):
        t = float(int(c))
        for i, k in enumerate(mono):
            if k:
                t *= vals[i] ** k
        total += t
    return total


def eval_numeric(e: Expr, ctx: NumericContext) -> float:
    n = _eval_poly_float(e.num, ctx)
    d = _eval_poly_float(e.den, ctx)
    if d == 0.0:
        raise NonFinite("denominator vanishes at the evaluation point")
    v = n / d
    if not math.isfinite(v):
        raise NonFinite("non-finite value %r" % v)
    return v


# ---------------------------------------------------------------------------
# printing


def _gen_label(i: int) -> str:
    return _REG.labels[i]


def _format_poly(p) -> tuple[str, int]:
    """Return the infix string and the number of terms."""
    p = _lift(p)
    terms = []
    for mono, c in _terms(p):
        factors = sorted((_gen_label(i), k) for i, k in enumerate(mono) if k)
        deg = sum(k for _, k in factors)
        terms.append((-deg, factors, int(c)))
    terms.sort(key=lambda t: (t[0], t[1]))
    parts = []
    for _, factors, c in terms:
        body = "*".join(f if k == 1 else "%s^%d" % (_wrap_factor(f), k) for f, k in factors)
        if not body:
            s = str(abs(c))
        elif abs(c) == 1:
            s = body
        else:
            s = "%d*%s" % (abs(c), body)
        parts.append(("-" if c < 0 else "+", s))
    if not parts:
        return "0", 0
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, s in parts[1:]:
        out += " %s %s" % (sign, s)
    return out, len(parts)


def _wrap_factor(label: str) -> str:
    return label


def _format(e: Expr) -> str:
    num, nterms = _format_poly(e.num)
    if e.den.is_one():
        return num
    den, dterms = _format_poly(e.den)
    if nterms > 1 or num.startswith("-") and nterms > 1:
        num = "(" + num + ")"
    if dterms > 1 or "*" in den or "^" in den:
        den = "(" + den + ")"
    return "%s/%s" % (num, den)


ZERO = Expr(_REG.zero, _REG.one)
ONE = Expr(_REG.one, _REG.one)


def expr_sum(items: Iterable[Expr]) -> Expr:
    """Sum that merges equal denominators before combining."""
    by_den: dict[str, list[Expr]] = {}
    polys = _REG.zero
    for it in items:
        it = _lift_expr(_coerce(it))
        if it.num.is_zero():
            continue
        if it.den.is_one():
            polys = _lift(polys) + it.num
            continue
        by_den.setdefault(str(it.den), []).append(it)
    out = Expr.from_poly(_lift(polys)) if not _lift(polys).is_zero() else ZERO
    for group in by_den.values():
        den = group[0].den
        num = _REG.zero
        for g in group:
            num = _lift(num) + _lift(g.num)
        if not num.is_zero():
            out = out + Expr._reduced(_lift(num), _lift(den))
    return out


Evaluator = Callable[[tuple, Mapping[str, float]], float]
