"""Shared helpers: a sympy oracle for printed expressions and Hypothesis profiles."""

from __future__ import annotations

import os
import re

import pytest
from hypothesis import HealthCheck, settings

from confsym import expr as E
from confsym import load_fixture

settings.register_profile(
    "default",
    max_examples=int(os.environ.get("CONFSYM_HYPOTHESIS_EXAMPLES", "40")),
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

_DERIV = re.compile(r"D\[(\w+),\(([\d,]+)\)\]\(([\w,]*)\)")


def to_sympy(e: E.Expr):
    """Independent re-reading of an :class:`Expr` through its printed form."""
    import sympy

    text = e.to_str()

    def deriv(m):
        name, alpha, args = m.group(1), m.group(2).split(","), m.group(3).split(",")
        spec = ", ".join("(%s, %s)" % (a, k) for a, k in zip(args, alpha) if int(k))
        return "Derivative(%s(%s), %s)" % (name, ",".join(args), spec)

    text = _DERIV.sub(deriv, text).replace("^", "**")
    return sympy.sympify(text, locals={"Derivative": sympy.Derivative})


@pytest.fixture(scope="session")
def fixtures():
    cache = {}

    def get(name):
        if name not in cache:
            spec = load_fixture(name)
            cache[name] = (spec, spec.geometry())
        return cache[name]

    return get



def pytest_terminal_summary(terminalreporter):
    """Print one PASS/FAIL line per acceptance criterion (criterion-kind checks only)."""
    import sys

    mod = next((m for n, m in list(sys.modules.items()) if n.endswith("test_acceptance") and hasattr(m, "RESULTS")), None)
    RESULTS = getattr(mod, "RESULTS", None)
    if not RESULTS:
        return
    tr = terminalreporter
    by_criterion: dict[str, list] = {}
    for r in RESULTS:
        if r.kind == "criterion":
            by_criterion.setdefault(r.criterion, []).append(r)
    tr.write_sep("=", "acceptance criteria")

    def key(c):
        m = re.match(r"(\d+)(.*)", c)
        return (int(m.group(1)), m.group(2)) if m else (999, c)

    for crit in sorted(by_criterion, key=key):
        rs = by_criterion[crit]
        bad = [r.name for r in rs if not r.passed]
        status = "FAIL" if bad else "PASS"
        tr.write_line("criterion %-6s %s  (%d checks%s)" % (crit, status, len(rs), "; failing: " + ", ".join(bad) if bad else ""))
    diag = [r for r in RESULTS if r.kind == "diagnostic"]
    if diag:
        tr.write_line("diagnostics: %d/%d pass" % (sum(r.passed for r in diag), len(diag)))
