#!/usr/bin/env python3
"""Run the acceptance checks and write a JSON report (symbolic and, optionally, numeric).

    python3 scripts/run_paper_suite.py                # symbolic, writes results/suite_symbolic.json
    python3 scripts/run_paper_suite.py --numeric      # also writes results/suite_numeric.json
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from confsym.suite import fixtures_digest, run_checks, select


def run(numeric: bool, seed: int, pattern: str | None, out_dir: str) -> int:
    results = run_checks(select(pattern), numeric=numeric, tol=1e-8, seed=seed)
    mode = "numeric" if numeric else "symbolic"
    report = {
        "mode": mode,
        "seed": seed if numeric else None,
        "fixtures_sha256": fixtures_digest(),
        "checks": [r.as_dict(timings=True) for r in results],
    }
    path = os.path.join(out_dir, "suite_%s.json" % mode)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    failed = [r for r in results if not r.passed]
    for r in results:
        print("%-42s %-8s %-10s %-5s %8.0f ms" % (r.name, r.criterion, r.kind, "PASS" if r.passed else "FAIL", r.wall_ms))
    print("%s: %d checks, %d failed -> %s" % (mode, len(results), len(failed), path))
    return len(failed)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--numeric", action="store_true", help="also run the numeric mode")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--filter")
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    failed = run(False, args.seed, args.filter, args.out)
    if args.numeric:
        failed += run(True, args.seed, args.filter, args.out)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
