"""Exhaustive canonicality check: term counts and timing per depth.

For every depth up to ``--depth`` this enumerates all well-typed coeffect
terms in context ``x : Unit`` and compares the checker with the derivation
oracle.  Prints a small table; exits 2 on any disagreement.
"""
from __future__ import annotations

import argparse

from gradium.generate import GenConfig
from gradium.harness import run_suite


def main() -> int:
    p = argparse.ArgumentParser(description="exhaustive canonicality check")
    p.add_argument("--depth", type=int, default=4)
    args = p.parse_args()
    print(f"{'depth':>5} {'terms':>9} {'underivable':>11} {'failures':>8} {'seconds':>8}")
    bad = 0
    for depth in range(2, args.depth + 1):
        r = run_suite("canonical", GenConfig(max_depth=depth))
        bad += len(r.failures)
        print(f"{depth:>5} {r.stats['terms']:>9} {r.stats['underivable']:>11} {len(r.failures):>8} {r.seconds:>8.1f}")
        for c in r.failures[:3]:
            print(f"      {c.shrunk}: {c.message}")
    return 2 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
