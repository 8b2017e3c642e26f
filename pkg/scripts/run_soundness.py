"""Run every property suite and write one JSON summary.

    python3 scripts/run_soundness.py --trials 1000 --out results/soundness.json
"""
from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from gradium.generate import GenConfig
from gradium.harness import SUITES, run_suite

COEFFECT_SUITES = {"subcoeff", "co-sound", "res-sound"}


@dataclass(frozen=True)
class Experiment:
    trials: int = 1000
    seed: int = 0
    depth: int = 4
    include_canonical: bool = False


def configs(exp: Experiment):
    base = GenConfig(seed=exp.seed, trials=exp.trials, max_depth=exp.depth)
    for suite in SUITES:
        if suite == "canonical" and not exp.include_canonical:
            continue
        if suite == "determinism":
            yield suite, base
            yield suite, GenConfig(**{**asdict(base), "mode": "coeffect", "algebra": "nat-usage"})
        elif suite in COEFFECT_SUITES:
            for algebra in ("nat-usage", "nat-exact", "zero-one-many"):
                yield suite, GenConfig(**{**asdict(base), "mode": "coeffect", "algebra": algebra})
        else:
            yield suite, base


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--canonical", action="store_true", help="also run the exhaustive depth-bounded oracle")
    p.add_argument("--out", type=Path, default=Path("results/soundness.json"))
    args = p.parse_args()
    exp = Experiment(args.trials, args.seed, args.depth, args.canonical)

    rows = []
    for suite, cfg in configs(exp):
        result = run_suite(suite, cfg)
        row = result.to_json()
        rows.append(row)
        status = "ok" if result.ok else f"{len(result.failures)} FAILED"
        print(f"{suite:22s} {result.algebra:14s} {result.trials:6d} trials  {result.seconds:7.2f}s  {status}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps({"experiment": asdict(exp), "suites": rows}, indent=2) + "\n")
    return 0 if all(r["ok"] for r in rows) else 2


if __name__ == "__main__":
    raise SystemExit(main())
