"""Acceptance suite: one pytest item per registered check.

Every check is exact (symbolic zero test) unless the numeric mode is requested
with ``CONFSYM_ACCEPTANCE_NUMERIC=1``; numeric runs use 20 seeded points and a
relative tolerance of 1e-8.  A per-criterion PASS/FAIL table is printed at the
end of the session (see ``conftest.py``).
"""

from __future__ import annotations

import os

import pytest

from confsym.suite import CHECKS, _run_one

NUMERIC = os.environ.get("CONFSYM_ACCEPTANCE_NUMERIC") == "1"
TOL = 1e-8
SEED = 0

RESULTS: list = []


@pytest.mark.acceptance
@pytest.mark.parametrize("name", [c.name for c in CHECKS])
def test_check(name):
    r = _run_one((name, NUMERIC, TOL, SEED))
    RESULTS.append(r)
    line = "%-42s %-8s %-10s %s" % (r.name, r.criterion, r.kind, "PASS" if r.passed else "FAIL")
    print(line)
    assert r.passed, "%s: %s" % (r.description, r.error or r.residual[:400])
