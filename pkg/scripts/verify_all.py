#!/usr/bin/env python3
"""Run every lemma verification suite and print a one-line summary per check.

Usage: python3 scripts/verify_all.py [suite]
"""

import sys

from marginlab import harness

suite = sys.argv[1] if len(sys.argv) > 1 else "all"
passed, report = harness.verify_lemmas(suite)
for name, checks in report.items():
    for c in checks:
        status = "ok  " if c["passed"] else "FAIL"
        print(f"[{status}] {name}/{c['check']}")
        if not c["passed"]:
            print(f"       counterexample: {c['detail']}")
print("all passed" if passed else "FAILURES above")
sys.exit(0 if passed else 2)
