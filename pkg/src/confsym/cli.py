"""The ``confsym`` command.

Sub-commands::

    confsym curvature FILE --tensor T [--json]
    confsym classify FILE --symbol S [--vector V] [--potential F] [--hat-metric EXPR] [--json]
    confsym obs FILE --symbol S [--json]
    confsym paper-suite [--numeric] [--tol X] [--seed N] [--filter REGEX] [--json] [--timings]

Exit codes: 0 success / all checks pass, 1 a check failed, 2 input error.
JSON reports use the schema ``confsym.report/1`` (see the README).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from typing import Sequence

from . import __version__
from .curvature import christoffel, cotton_york, ricci, riemann, scalar, schouten, weyl
from .dsl import GeomDSLError, load_geometry, parse_expr
from .expr import ExprError
from .obstruction import ObstructionError, classify, classify_hatted, exterior_d, flat, obs
from .quantize import QuantizeError
from .symbols import PolySymbol
from .tensor import TensorError, TensorField

SCHEMA = "confsym.report/1"
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

TENSORS = ("christoffel", "riemann", "ricci", "scalar", "schouten", "weyl", "cotton")


class InputError(Exception):
    """Bad command-line input (unknown symbol, unreadable file, ...)."""


class UnknownSymbol(InputError):
    pass


# ---------------------------------------------------------------------------
# helpers


def _sha256(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _load(path: str):
    try:
        spec = load_geometry(path)
    except OSError as exc:
        raise InputError("cannot read %s: %s" % (path, exc.strerror or exc)) from None
    return spec, spec.geometry()


def _slot_label(t: TensorField, idx: tuple[int, ...]) -> str:
    coords = t.geom.coords
    return ",".join(("^" if v == "u" else "_") + coords[i] for v, i in zip(t.variance, idx))


def tensor_components(t: TensorField) -> list[tuple[str, str]]:
    """Nonzero components as ``(index label, printed expression)`` in lexicographic index order."""
    return [(_slot_label(t, idx), c.to_str()) for idx, c in t.items() if not c.is_zero()]


def _monomial_label(coords: Sequence[str], alpha: tuple[int, ...]) -> str:
    parts = ["p_%s%s" % (c, "^%d" % a if a > 1 else "") for c, a in zip(coords, alpha) if a]
    return "*".join(parts) or "1"


def _symbol_components(s: PolySymbol) -> list[tuple[str, str]]:
    """``(monomial, coefficient)`` pairs of ``S = sum_alpha c_alpha p^alpha``."""
    mons = s.monomials() if s.degree else {(): s.tensor.value()}
    return [(_monomial_label(s.geom.coords, a), c.to_str()) for a, c in sorted(mons.items(), reverse=True) if not c.is_zero()]


def _form_components(t: TensorField) -> list[tuple[str, str]]:
    """Nonzero components of an antisymmetric covariant tensor with strictly increasing indices."""
    return [
        (_slot_label(t, idx), c.to_str())
        for idx, c in t.items()
        if all(a < b for a, b in zip(idx, idx[1:])) and not c.is_zero()
    ]


def _emit(report: dict, as_json: bool, text: str) -> None:
    if as_json:
        sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _base_report(command: str, path: str | None, digest: str | None = None) -> dict:
    return {
        "schema": SCHEMA,
        "engine_version": __version__,
        "command": command,
        "input_sha256": digest if digest is not None else (_sha256(path) if path else None),
    }


def _get_symbol(spec, geom, name: str, degree: int | None = None) -> PolySymbol:
    decl = spec.symbols.get(name)
    if decl is None:
        raise UnknownSymbol("no symbol named %r (declared: %s)" % (name, ", ".join(sorted(spec.symbols)) or "none"))
    if degree is not None and decl.degree != degree:
        raise InputError("symbol %r has degree %d, expected %d" % (name, decl.degree, degree))
    return PolySymbol.from_decl(geom, decl)


# ---------------------------------------------------------------------------
# sub-commands


def cmd_curvature(args) -> int:
    spec, geom = _load(args.file)
    name = args.tensor
    if name == "scalar":
        value = scalar(geom)
        comps = [] if value.is_zero() else [("", value.to_str())]
        variance = ""
    else:
        t = {
            "christoffel": christoffel,
            "riemann": riemann,
            "ricci": ricci,
            "schouten": lambda g: schouten(g)[0],
            "weyl": weyl,
            "cotton": cotton_york,
        }[name](geom)
        comps = tensor_components(t)
        variance = t.variance
    report = _base_report("curvature", args.file)
    report.update({"tensor": name, "variance": variance, "components": [{"index": i, "value": v} for i, v in comps]})
    lines = ["%s (%s) on %s" % (name, variance or "scalar", args.file)]
    if not comps:
        lines.append("all components zero")
    for i, v in comps:
        lines.append("  %s[%s] = %s" % (name, i, v) if i else "  %s = %s" % (name, v))
    _emit(report, args.json, "\n".join(lines))
    return EXIT_OK


def _residual_summary(obj) -> str:
    if isinstance(obj, TensorField):
        comps = [c for c in obj.comps if not c.is_zero()]
    else:
        comps = [c for _, c in obj.items()]
    return comps[0].to_str() if comps else "0"


def cmd_classify(args) -> int:
    spec, geom = _load(args.file)
    K = _get_symbol(spec, geom, args.symbol, 2)
    X = _get_symbol(spec, geom, args.vector, 1) if args.vector else None
    f = None
    if args.potential:
        if args.potential not in spec.scalars:
            raise UnknownSymbol("no scalar named %r" % args.potential)
        f = spec.scalars[args.potential]
    if args.hat_metric:
        factor = parse_expr(args.hat_metric, spec)
        rep = classify_hatted(K, factor, geom, X=X, f=f)
    else:
        rep = classify(K, geom, X=X, f=f)
    report = _base_report("classify", args.file)
    report.update(
        {
            "symbol": args.symbol,
            "hat_metric": args.hat_metric,
            "verdict": rep.verdict,
            "conformal_killing": rep.is_conformal_killing,
            "killing": rep.is_killing,
            "obs": [{"monomial": m, "value": v} for m, v in _symbol_components(rep.obs)],
            "obs_flat": [{"index": i, "value": v} for i, v in tensor_components(rep.obs_flat)],
            "d_obs_flat": [{"index": i, "value": v} for i, v in _form_components(rep.d_obs_flat)],
            "closed": rep.closed,
            "potential_status": rep.potential_status,
            "potential": rep.potential.to_str() if rep.potential is not None else None,
            "potential_coefficients": {k: str(v) for k, v in sorted(rep.potential_coefficients.items())},
            "residuals": {k: _residual_summary(v) for k, v in sorted(rep.residuals.items())},
            "notes": list(rep.notes),
        }
    )
    lines = [
        "symbol %s on %s%s" % (args.symbol, args.file, " (g_hat = (%s) g)" % args.hat_metric if args.hat_metric else ""),
        "verdict: %s" % rep.verdict,
        "conformal Killing: %s   Killing: %s" % (rep.is_conformal_killing, rep.is_killing),
        "Obs(K):",
    ]
    lines += ["  %s : %s" % mv for mv in _symbol_components(rep.obs)] or ["  0"]
    lines.append("d(Obs(K)^flat):")
    d_comps = _form_components(rep.d_obs_flat)
    lines += ["  [%s] = %s" % iv for iv in d_comps] or ["  0 (closed)"]
    if rep.potential is not None:
        lines.append("potential f = %s" % rep.potential.to_str())
        for k, v in sorted(rep.potential_coefficients.items()):
            if v:
                lines.append("  %s: %s" % (k, v))
    elif rep.potential_status:
        lines.append("potential: %s" % rep.potential_status)
    for k, v in sorted(rep.residuals.items()):
        lines.append("residual %s: %s" % (k, _residual_summary(v)))
    lines += ["note: %s" % n for n in rep.notes]
    _emit(report, args.json, "\n".join(lines))
    return EXIT_FAIL if rep.verdict == "unverified" else EXIT_OK


def cmd_obs(args) -> int:
    spec, geom = _load(args.file)
    K = _get_symbol(spec, geom, args.symbol, 2)
    O = obs(K)
    w = flat(O)
    dw = exterior_d(w)
    report = _base_report("obs", args.file)
    report.update(
        {
            "symbol": args.symbol,
            "obs": [{"monomial": m, "value": v} for m, v in _symbol_components(O)],
            "obs_flat": [{"index": i, "value": v} for i, v in tensor_components(w)],
            "d_obs_flat": [{"index": i, "value": v} for i, v in _form_components(dw)],
            "closed": dw.is_zero(),
        }
    )
    lines = ["Obs(%s) on %s:" % (args.symbol, args.file)]
    lines += ["  %s : %s" % mv for mv in _symbol_components(O)] or ["  0"]
    lines.append("Obs^flat:")
    lines += ["  [%s] = %s" % iv for iv in tensor_components(w)] or ["  0"]
    lines.append("d(Obs^flat):")
    lines += ["  [%s] = %s" % iv for iv in _form_components(dw)] or ["  0 (closed)"]
    _emit(report, args.json, "\n".join(lines))
    return EXIT_OK


def cmd_paper_suite(args) -> int:
    from .suite import fixtures_digest, run_checks, select

    checks = select(args.filter)
    results = run_checks(checks, numeric=args.numeric, tol=args.tol, seed=args.seed)
    failed = [r for r in results if not r.passed]
    report = _base_report("paper-suite", None, fixtures_digest())
    report.update(
        {
            "mode": "numeric" if args.numeric else "symbolic",
            "tol": args.tol if args.numeric else None,
            "seed": args.seed if args.numeric else None,
            "filter": args.filter,
            "checks": [r.as_dict(args.timings) for r in results],
            "summary": {"total": len(results), "failed": len(failed)},
        }
    )
    width = max([len(r.name) for r in results] + [10])
    lines = []
    for r in results:
        status = r.status.upper() if r.status in ("pass", "fail") else r.status
        extra = "  (%.0f ms)" % r.wall_ms if args.timings else ""
        tail = "" if r.status != "fail" else "  residual: " + (r.error or r.residual)[:160]
        lines.append("%-*s  %-8s %-10s %s%s%s" % (width, r.name, r.criterion, r.kind, status, extra, tail))
    lines.append("%d checks, %d failed" % (len(results), len(failed)))
    _emit(report, args.json, "\n".join(lines))
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="confsym", description="Conformal symmetries of the Yamabe Laplacian.")
    p.add_argument("--version", action="version", version="confsym %s" % __version__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("curvature", help="print a curvature tensor of a geometry file")
    c.add_argument("file")
    c.add_argument("--tensor", required=True, choices=TENSORS)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_curvature)

    c = sub.add_parser("classify", help="classify a degree-2 symbol")
    c.add_argument("file")
    c.add_argument("--symbol", required=True)
    c.add_argument("--vector", help="degree-1 symbol added to the operator")
    c.add_argument("--potential", help="scalar declared in the file to use as the potential f")
    c.add_argument("--hat-metric", help="conformal factor phi: compute in g_hat = phi * g")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_classify)

    c = sub.add_parser("obs", help="print Obs(K), its flat and d(Obs^flat)")
    c.add_argument("file")
    c.add_argument("--symbol", required=True)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_obs)

    c = sub.add_parser("paper-suite", help="run the acceptance checks")
    c.add_argument("--numeric", action="store_true", help="evaluate residuals at seeded random points")
    c.add_argument("--tol", type=float, default=1e-8)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--filter", help="regular expression on check names")
    c.add_argument("--json", action="store_true")
    c.add_argument("--timings", action="store_true", help="include wall times (JSON is then not reproducible)")
    c.set_defaults(func=cmd_paper_suite)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except GeomDSLError as exc:
        sys.stderr.write("confsym: %s: %s\n" % (getattr(args, "file", "input"), exc))
    except (InputError, ObstructionError, QuantizeError, TensorError, ExprError) as exc:
        sys.stderr.write("confsym: %s: %s\n" % (type(exc).__name__, exc))
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
