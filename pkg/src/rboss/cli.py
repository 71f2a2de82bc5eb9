"""Command-line experiment runner.

Example::

    rboss --synthetic "n=30,m=128,counts=1:4" --variant rboss-filtered-cawpe \
        --resamples 5 --out results/
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from rboss.data import load_dataset
from rboss.exceptions import RbossError
from rboss.experiment import VARIANTS, ExperimentConfig, run_experiment
from rboss.synthetic import generate_synthetic, parse_synthetic_spec


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rboss",
        description="Run resampled BOSS / RBOSS experiments and report accuracy and build time.",
    )
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help="dataset file: label,x1,...,xm per line")
    src.add_argument("--synthetic", metavar="SPEC", help='e.g. "n=30,m=128,counts=1:4,pattern=16,noise=0.5"')
    ap.add_argument(
        "--variant",
        action="append",
        choices=sorted(VARIANTS),
        help="classifier variant; repeat to run several (default rboss-filtered-cawpe)",
    )
    ap.add_argument("--k", type=int, help="number of parameter sets to try")
    ap.add_argument("--max-ensemble", type=int, help="maximum retained members")
    ap.add_argument("--contract-minutes", type=float, help="build time budget; replaces --k")
    ap.add_argument("--member-cap", type=int, default=500, help="member limit under a contract")
    ap.add_argument("--subsample-fraction", type=float)
    ap.add_argument("--max-train", type=int, help="stratified cap on each member's train set")
    ap.add_argument("--fast-estimate-per-class", type=int)
    ap.add_argument("--cawpe-exponent", type=float, default=4.0)
    ap.add_argument("--resamples", type=int, default=30)
    ap.add_argument("--train-fraction", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0, help="base seed; resample r uses seed + r")
    ap.add_argument("--checkpoint", type=Path, help="checkpoint path prefix")
    ap.add_argument("--checkpoint-every", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    overrides = {
        "k": args.k,
        "max_ensemble": args.max_ensemble,
        "contract_seconds": None if args.contract_minutes is None else 60.0 * args.contract_minutes,
        "member_cap": args.member_cap,
        "subsample_fraction": args.subsample_fraction,
        "max_train": args.max_train,
        "fast_estimate_per_class": args.fast_estimate_per_class,
        "cawpe_exponent": args.cawpe_exponent,
    }
    try:
        if args.data is not None:
            data, name = load_dataset(args.data), args.data.stem
        else:
            data = generate_synthetic(parse_synthetic_spec(args.synthetic), args.seed)
            name = "synthetic"
        cfg = ExperimentConfig(
            dataset=data,
            dataset_name=name,
            variants=args.variant or ["rboss-filtered-cawpe"],
            overrides=overrides,
            resamples=args.resamples,
            base_seed=args.seed,
            train_fraction=args.train_fraction,
            out_dir=args.out,
            checkpoint=args.checkpoint,
            checkpoint_every=args.checkpoint_every,
        )
        records = run_experiment(cfg)
    except (RbossError, OSError) as exc:
        print(f"rboss: error: {exc}", file=sys.stderr)
        return 2
    for variant, recs in records.items():
        if recs:
            mean = sum(r.accuracy for r in recs) / len(recs)
            secs = sum(r.build_seconds for r in recs)
            print(f"{variant}: {len(recs)}/{cfg.resamples} resamples, mean accuracy {mean:.4f}, build {secs:.2f}s")
        else:
            print(f"{variant}: no resamples completed (see errors.log)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
