"""Parser and printer for the ``.geo`` geometry-definition language.

A file is a sequence of blocks; ``#`` starts a comment that runs to the end
of the line::

    manifold { dim = 3; coords = [x1, x2, x3]; signature = "+++"; }
    functions { a(x1, x2); c(x3); eps; }        # zero-arity names are constants
    metric g { g[x1,x1] = 2*(gamma + c)/a; g[2,2] = 1; }
    symbol K degree 2 { K[x1,x1] = a; K[x3,x3] = 1; }
    scalar f = x1^2 + 1/2;
    conformal U = -log(2*(gamma + c))/2;

Metric and symbol indices are coordinate names or 1-based integers; entries
not listed are zero and the symmetric partner of an entry is implied.
Expressions use ``+ - * / ^``, parentheses, integer and decimal literals,
``exp``/``log``/``sqrt``, ``diff(e, x, ...)`` and the printed form
``D[f,(alpha)](args)`` of a partial derivative of an abstract function.  A
bare declared function name stands for the function applied to its declared
arguments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from . import expr as E
from .expr import Expr

__all__ = [
    "GeometrySpec",
    "SymbolDecl",
    "GeomDSLError",
    "DSLSyntaxError",
    "UndeclaredSymbol",
    "AsymmetricMetric",
    "DegenerateMetric",
    "DimensionTooSmall",
    "parse_geometry",
    "parse_expr",
    "print_geometry",
    "load_geometry",
]


class GeomDSLError(ValueError):
    """Diagnostic carrying a 1-based source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        where = "%d:%d: " % (line, col) if line else ""
        super().__init__(where + message)


class DSLSyntaxError(GeomDSLError):
    pass


class UndeclaredSymbol(GeomDSLError):
    pass


class AsymmetricMetric(GeomDSLError):
    pass


class DegenerateMetric(GeomDSLError):
    pass


class DimensionTooSmall(GeomDSLError):
    pass


@dataclass
class SymbolDecl:
    """A declared symbol: degree and upper-index components keyed by index tuple."""

    name: str
    degree: int
    components: dict[tuple[int, ...], Expr] = field(default_factory=dict)


@dataclass
class GeometrySpec:
    dim: int
    coords: tuple[str, ...]
    functions: dict[str, tuple[str, ...]]
    metric: tuple[tuple[Expr, ...], ...]
    metric_name: str = "g"
    signature: str | None = None
    symbols: dict[str, SymbolDecl] = field(default_factory=dict)
    scalars: dict[str, Expr] = field(default_factory=dict)
    conformal: tuple[str, Expr] | None = None

    def geometry(self):
        from .geometry import Geometry

        return Geometry(self.coords, self.metric, functions=self.functions, signature=self.signature)


# ---------------------------------------------------------------------------
# lexer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<str>"[^"\n]*")
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[{}\[\]();,=+\-*/^])
    """,
    re.VERBOSE,
)


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> list[Tok]:
    toks: list[Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DSLSyntaxError("unexpected character %r" % text[pos], line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(Tok(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Stream:
    def __init__(self, toks: list[Tok]):
        self.toks = toks
        self.i = 0

    def peek(self, k: int = 0) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Tok:
        t = self.peek()
        self.i += 1
        return t

    def accept(self, text: str) -> Tok | None:
        if self.peek().text == text and self.peek().kind in ("op", "ident"):
            return self.next()
        return None

    def expect(self, text: str) -> Tok:
        t = self.peek()
        if t.text != text or t.kind not in ("op", "ident"):
            raise DSLSyntaxError("expected %r, found %r" % (text, t.text or "end of input"), t.line, t.col)
        return self.next()

    def ident(self) -> Tok:
        t = self.peek()
        if t.kind != "ident":
            raise DSLSyntaxError("expected identifier, found %r" % (t.text or "end of input"), t.line, t.col)
        return self.next()

    def integer(self) -> int:
        t = self.peek()
        if t.kind != "num" or "." in t.text:
            raise DSLSyntaxError("expected integer, found %r" % (t.text or "end of input"), t.line, t.col)
        self.next()
        return int(t.text)


# ---------------------------------------------------------------------------
# expressions

_BUILTINS = {"exp", "log", "sqrt", "diff", "D"}
_MAX_DEPTH = 200


class _Env:
    def __init__(self, coords, functions, scalars=None):
        self.coords = tuple(coords)
        self.functions = dict(functions)
        self.scalars = dict(scalars or {})


def _wrap(fn, tok: Tok):
    try:
        return fn()
    except GeomDSLError:
        raise
    except (E.ExprError, ZeroDivisionError, ValueError, TypeError, OverflowError) as exc:
        raise DSLSyntaxError("invalid expression: %s" % exc, tok.line, tok.col) from None


class _ExprParser:
    def __init__(self, s: _Stream, env: _Env):
        self.s = s
        self.env = env
        self.depth = 0

    def parse(self) -> Expr:
        self.depth += 1
        if self.depth > _MAX_DEPTH:
            t = self.s.peek()
            raise DSLSyntaxError("expression nested too deeply", t.line, t.col)
        try:
            return self._sum()
        finally:
            self.depth -= 1

    def _sum(self) -> Expr:
        out = self._product()
        while True:
            t = self.s.peek()
            if self.s.accept("+"):
                rhs = self._product()
                out = _wrap(lambda: out + rhs, t)
            elif self.s.accept("-"):
                rhs = self._product()
                out = _wrap(lambda: out - rhs, t)
            else:
                return out

    def _product(self) -> Expr:
        out = self._unary()
        while True:
            t = self.s.peek()
            if self.s.accept("*"):
                rhs = self._unary()
                out = _wrap(lambda: out * rhs, t)
            elif self.s.accept("/"):
                rhs = self._unary()
                if rhs.is_zero():
                    raise DSLSyntaxError("division by zero", t.line, t.col)
                out = _wrap(lambda: out / rhs, t)
            else:
                return out

    def _unary(self) -> Expr:
        if self.s.accept("-"):
            return -self._unary()
        if self.s.accept("+"):
            return self._unary()
        return self._power()

    def _power(self) -> Expr:
        base = self._atom()
        t = self.s.peek()
        if self.s.accept("^"):
            self.depth += 1
            if self.depth > _MAX_DEPTH:
                raise DSLSyntaxError("expression nested too deeply", t.line, t.col)
            try:
                ex = self._unary()
            finally:
                self.depth -= 1
            if not ex.is_constant():
                raise DSLSyntaxError("exponent must be a rational constant", t.line, t.col)
            k = ex.as_fraction()
            if k.denominator not in (1, 2) or abs(k) > 64:
                raise DSLSyntaxError("exponent must be an integer or half-integer of size <= 64", t.line, t.col)
            if base.is_zero() and k <= 0:
                raise DSLSyntaxError("zero raised to a non-positive power", t.line, t.col)
            return _wrap(lambda: base ** k, t)
        return base

    def _atom(self) -> Expr:
        t = self.s.peek()
        if t.kind == "num":
            self.s.next()
            return E.const(Fraction(t.text))
        if self.s.accept("("):
            e = self.parse()
            self.s.expect(")")
            return e
        if t.kind != "ident":
            raise DSLSyntaxError("expected expression, found %r" % (t.text or "end of input"), t.line, t.col)
        name = self.s.next().text
        if name == "D" and self.s.peek().text == "[":
            return self._derived(t)
        if name in ("exp", "log", "sqrt") and self.s.peek().text == "(":
            self.s.expect("(")
            arg = self.parse()
            self.s.expect(")")
            fn = {"exp": E.exp, "log": E.log, "sqrt": E.sqrt}[name]
            return _wrap(lambda: fn(arg), t)
        if name == "diff" and self.s.peek().text == "(":
            self.s.expect("(")
            e = self.parse()
            xs = []
            while self.s.accept(","):
                xt = self.s.ident()
                if xt.text not in self.env.coords:
                    raise UndeclaredSymbol("unknown coordinate %r" % xt.text, xt.line, xt.col)
                xs.append(xt.text)
            self.s.expect(")")
            if not xs:
                raise DSLSyntaxError("diff needs at least one coordinate", t.line, t.col)
            return E.diff(e, *xs)
        if name in self.env.coords:
            return E.coord(name)
        if name in self.env.functions:
            args = self.env.functions[name]
            if self.s.peek().text == "(" and args:
                self._call_args(name, args, t)
            return E.function(name, args)
        if name in self.env.scalars:
            return self.env.scalars[name]
        raise UndeclaredSymbol("undeclared symbol %r" % name, t.line, t.col)

    def _call_args(self, name, args, t: Tok) -> None:
        self.s.expect("(")
        got = [self.s.ident().text]
        while self.s.accept(","):
            got.append(self.s.ident().text)
        self.s.expect(")")
        if tuple(got) != tuple(args):
            raise DSLSyntaxError(
                "%s is declared with arguments (%s), got (%s)" % (name, ",".join(args), ",".join(got)), t.line, t.col
            )

    def _derived(self, t: Tok) -> Expr:
        self.s.expect("[")
        ft = self.s.ident()
        if ft.text not in self.env.functions:
            raise UndeclaredSymbol("undeclared function %r" % ft.text, ft.line, ft.col)
        args = self.env.functions[ft.text]
        self.s.expect(",")
        self.s.expect("(")
        alpha = [self.s.integer()]
        while self.s.accept(","):
            alpha.append(self.s.integer())
        self.s.expect(")")
        self.s.expect("]")
        if len(alpha) != len(args):
            raise DSLSyntaxError("multi-index length does not match arity of %s" % ft.text, ft.line, ft.col)
        self._call_args(ft.text, args, t)
        return E.derived(ft.text, args, alpha)


# ---------------------------------------------------------------------------
# blocks


def _index(s: _Stream, coords: tuple[str, ...]) -> int:
    t = s.peek()
    if t.kind == "num":
        k = s.integer()
        if not 1 <= k <= len(coords):
            raise DSLSyntaxError("index %d out of range 1..%d" % (k, len(coords)), t.line, t.col)
        return k - 1
    name = s.ident().text
    if name not in coords:
        raise UndeclaredSymbol("unknown coordinate index %r" % name, t.line, t.col)
    return coords.index(name)


def _indices(s: _Stream, coords) -> tuple[tuple[int, ...], Tok]:
    t = s.expect("[")
    if s.accept("]"):
        return (), t
    idx = [_index(s, coords)]
    while s.accept(","):
        idx.append(_index(s, coords))
    s.expect("]")
    return tuple(idx), t


def _parse(text: str, validate: bool = True) -> GeometrySpec:
    s = _Stream(_lex(text))
    dim = None
    coords: tuple[str, ...] | None = None
    signature = None
    functions: dict[str, tuple[str, ...]] = {}
    metric: dict[tuple[int, int], tuple[Expr, Tok]] = {}
    metric_name = None
    symbols: dict[str, SymbolDecl] = {}
    scalars: dict[str, Expr] = {}
    conformal = None
    env = None

    def need_manifold(t: Tok):
        if coords is None:
            raise DSLSyntaxError("the manifold block must come first", t.line, t.col)

    while s.peek().kind != "eof":
        kw = s.ident()
        if kw.text == "manifold":
            if coords is not None:
                raise DSLSyntaxError("duplicate manifold block", kw.line, kw.col)
            s.expect("{")
            while not s.accept("}"):
                key = s.ident()
                s.expect("=")
                if key.text == "dim":
                    dim_tok = s.peek()
                    dim = s.integer()
                elif key.text == "coords":
                    s.expect("[")
                    names = [s.ident().text]
                    while s.accept(","):
                        names.append(s.ident().text)
                    s.expect("]")
                    coords = tuple(names)
                elif key.text == "signature":
                    st = s.next()
                    if st.kind != "str":
                        raise DSLSyntaxError("signature must be a quoted string", st.line, st.col)
                    signature = st.text[1:-1]
                else:
                    raise DSLSyntaxError("unknown manifold key %r" % key.text, key.line, key.col)
                s.expect(";")
            if dim is None or coords is None:
                raise DSLSyntaxError("manifold block needs dim and coords", kw.line, kw.col)
            if dim < 3:
                raise DimensionTooSmall("dimension must be at least 3, got %d" % dim, dim_tok.line, dim_tok.col)
            if len(coords) != dim:
                raise DSLSyntaxError("dim = %d but %d coordinates given" % (dim, len(coords)), kw.line, kw.col)
            if len(set(coords)) != dim or set(coords) & _BUILTINS:
                raise DSLSyntaxError("coordinate names must be distinct and not reserved", kw.line, kw.col)
            env = _Env(coords, functions)
        elif kw.text == "functions":
            need_manifold(kw)
            s.expect("{")
            while not s.accept("}"):
                ft = s.ident()
                if ft.text in functions or ft.text in coords or ft.text in _BUILTINS:
                    raise DSLSyntaxError("name %r already in use" % ft.text, ft.line, ft.col)
                args: list[str] = []
                if s.accept("("):
                    if not s.accept(")"):
                        at = s.ident()
                        args.append(at.text)
                        while s.accept(","):
                            at = s.ident()
                            args.append(at.text)
                        s.expect(")")
                        for a in args:
                            if a not in coords:
                                raise UndeclaredSymbol("unknown coordinate %r" % a, ft.line, ft.col)
                        if len(set(args)) != len(args):
                            raise DSLSyntaxError("repeated argument", ft.line, ft.col)
                functions[ft.text] = tuple(args)
                s.expect(";")
            env = _Env(coords, functions, scalars)
        elif kw.text == "metric":
            need_manifold(kw)
            if metric_name is not None:
                raise DSLSyntaxError("duplicate metric block", kw.line, kw.col)
            metric_name = s.ident().text
            s.expect("{")
            while not s.accept("}"):
                nt = s.ident()
                if nt.text != metric_name:
                    raise DSLSyntaxError("expected %s[...]" % metric_name, nt.line, nt.col)
                idx, it = _indices(s, coords)
                if len(idx) != 2:
                    raise DSLSyntaxError("metric entries take two indices", it.line, it.col)
                s.expect("=")
                val = _ExprParser(s, env).parse()
                s.expect(";")
                for key in {idx, idx[::-1]}:
                    if key in metric and not (metric[key][0] - val).is_zero():
                        raise AsymmetricMetric(
                            "entry [%d,%d] conflicts with an earlier entry" % (idx[0] + 1, idx[1] + 1), it.line, it.col
                        )
                metric[idx] = (val, it)
                metric[idx[::-1]] = (val, it)
        elif kw.text == "symbol":
            need_manifold(kw)
            nt = s.ident()
            if nt.text in symbols:
                raise DSLSyntaxError("duplicate symbol %r" % nt.text, nt.line, nt.col)
            s.expect("degree")
            dt = s.peek()
            deg = s.integer()
            if deg > 4:
                raise DSLSyntaxError("symbol degree must be at most 4", dt.line, dt.col)
            decl = SymbolDecl(nt.text, deg)
            s.expect("{")
            while not s.accept("}"):
                ct = s.ident()
                if ct.text != nt.text:
                    raise DSLSyntaxError("expected %s[...]" % nt.text, ct.line, ct.col)
                idx, it = _indices(s, coords)
                if len(idx) != deg:
                    raise DSLSyntaxError("symbol %s has degree %d" % (nt.text, deg), it.line, it.col)
                s.expect("=")
                val = _ExprParser(s, env).parse()
                s.expect(";")
                key = tuple(sorted(idx))
                if key in decl.components and not (decl.components[key] - val).is_zero():
                    raise DSLSyntaxError("conflicting symmetric entries", it.line, it.col)
                decl.components[key] = val
            symbols[nt.text] = decl
        elif kw.text in ("scalar", "conformal"):
            need_manifold(kw)
            nt = s.ident()
            if nt.text in scalars or nt.text in functions or nt.text in coords or nt.text in _BUILTINS:
                raise DSLSyntaxError("name %r already in use" % nt.text, nt.line, nt.col)
            s.expect("=")
            val = _ExprParser(s, env).parse()
            s.expect(";")
            if kw.text == "scalar":
                scalars[nt.text] = val
                env = _Env(coords, functions, scalars)
            else:
                if conformal is not None:
                    raise DSLSyntaxError("duplicate conformal declaration", nt.line, nt.col)
                conformal = (nt.text, val)
        else:
            raise DSLSyntaxError("unknown block %r" % kw.text, kw.line, kw.col)

    if coords is None:
        raise DSLSyntaxError("missing manifold block", 1, 1)
    if metric_name is None:
        raise DSLSyntaxError("missing metric block", s.peek().line, s.peek().col)
    n = len(coords)
    matrix = tuple(tuple(metric[(i, j)][0] if (i, j) in metric else E.ZERO for j in range(n)) for i in range(n))
    spec = GeometrySpec(
        dim=n,
        coords=coords,
        functions=functions,
        metric=matrix,
        metric_name=metric_name,
        signature=signature,
        symbols=symbols,
        scalars=scalars,
        conformal=conformal,
    )
    if validate:
        from .geometry import determinant

        if determinant(matrix).is_zero():
            raise DegenerateMetric("metric determinant is identically zero", 1, 1)
    return spec


def parse_geometry(text: str) -> GeometrySpec:
    """Parse and validate a geometry file; raises a :class:`GeomDSLError` subclass on failure."""
    try:
        return _parse(text)
    except GeomDSLError:
        raise
    except RecursionError:
        raise DSLSyntaxError("input nested too deeply", 1, 1) from None


def load_geometry(path) -> GeometrySpec:
    with open(path, encoding="utf-8") as fh:
        return parse_geometry(fh.read())


def parse_expr(text: str, env: GeometrySpec) -> Expr:
    """Parse a standalone expression over the symbols declared in ``env``."""
    s = _Stream(_lex(text))
    try:
        e = _ExprParser(s, _Env(env.coords, env.functions, env.scalars)).parse()
    except RecursionError:
        raise DSLSyntaxError("input nested too deeply", 1, 1) from None
    t = s.peek()
    if t.kind != "eof":
        raise DSLSyntaxError("unexpected %r after expression" % t.text, t.line, t.col)
    return e


# ---------------------------------------------------------------------------
# printing


def _fmt(e: Expr) -> str:
    return e.to_str()


def print_geometry(spec: GeometrySpec) -> str:
    """Render ``spec`` back to DSL source; ``parse_geometry`` inverts it."""
    out = ["manifold {", "  dim = %d;" % spec.dim, "  coords = [%s];" % ", ".join(spec.coords)]
    if spec.signature is not None:
        out.append('  signature = "%s";' % spec.signature)
    out.append("}")
    if spec.functions:
        out.append("functions {")
        for name, args in spec.functions.items():
            out.append("  %s(%s);" % (name, ", ".join(args)) if args else "  %s;" % name)
        out.append("}")
    out.append("metric %s {" % spec.metric_name)
    for i in range(spec.dim):
        for j in range(i, spec.dim):
            v = spec.metric[i][j]
            if not v.is_zero():
                out.append("  %s[%s,%s] = %s;" % (spec.metric_name, spec.coords[i], spec.coords[j], _fmt(v)))
    out.append("}")
    for decl in spec.symbols.values():
        out.append("symbol %s degree %d {" % (decl.name, decl.degree))
        for idx in sorted(decl.components):
            v = decl.components[idx]
            if not v.is_zero():
                out.append("  %s[%s] = %s;" % (decl.name, ",".join(spec.coords[i] for i in idx), _fmt(v)))
        out.append("}")
    for name, v in spec.scalars.items():
        out.append("scalar %s = %s;" % (name, _fmt(v)))
    if spec.conformal is not None:
        out.append("conformal %s = %s;" % (spec.conformal[0], _fmt(spec.conformal[1])))
    return "\n".join(out) + "\n"


def iter_tokens(text: str) -> Iterator[Tok]:
    """Expose the lexer (used by tooling and tests)."""
    return iter(_lex(text))
