#!/usr/bin/env python3
"""Classify every degree-2 symbol declared in the bundled fixtures and print a table.

    python3 scripts/classify_fixtures.py
"""

from __future__ import annotations

import time

from confsym import expr as E
from confsym import load_fixture
from confsym.obstruction import classify, classify_hatted
from confsym.symbols import PolySymbol

FIXTURES = ("flat3", "flat4", "sphere3", "conformally_flat3", "dipirro", "stackel", "stackel4", "minkowski_reduction", "lemma_product")

# fixtures whose obstruction is best computed in a rescaled metric
HAT = {"dipirro": lambda: 1 / ((E.function("gamma", ["x1", "x2"]) + E.function("c", ["x3"])) * 2)}


def main() -> None:
    print("%-20s %-4s %-24s %-6s %-7s %s" % ("fixture", "sym", "verdict", "closed", "killing", "time"))
    for name in FIXTURES:
        spec = load_fixture(name)
        g = spec.geometry()
        for sname, decl in sorted(spec.symbols.items()):
            if decl.degree != 2:
                continue
            K = PolySymbol.from_decl(g, decl)
            t0 = time.perf_counter()
            rep = classify_hatted(K, HAT[name](), g) if name in HAT else classify(K, g)
            dt = time.perf_counter() - t0
            print("%-20s %-4s %-24s %-6s %-7s %.1fs" % (name, sname, rep.verdict, rep.closed, rep.is_killing, dt))
            if rep.potential is not None and not rep.potential.is_zero():
                print("    potential f = %s" % rep.potential.to_str()[:200])


if __name__ == "__main__":
    main()
