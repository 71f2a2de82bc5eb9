"""Resampled train/test experiments over named classifier variants."""

from __future__ import annotations

import csv
import logging
import statistics
import time
import traceback
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from rboss.checkpoint import load_checkpoint
from rboss.data import Fraction, LabeledDataset, MaxTotal, stratified_resample
from rboss.ensemble import EnsembleModel, FastLoocv, FullLoocv, RbossConfig, build_grid_boss
from rboss.exceptions import CheckpointNotFoundError, ConfigError
from rboss.randomised import RbossBuilder

__all__ = [
    "VARIANTS",
    "RESULT_HEADER",
    "ExperimentConfig",
    "ResultRecord",
    "variant_config",
    "build_variant",
    "run_experiment",
]

logger = logging.getLogger(__name__)

RESULT_HEADER = [
    "dataset",
    "variant",
    "resample",
    "accuracy",
    "build_seconds",
    "ensemble_size",
    "params_tried",
    "peak_bags",
]

GRID = "grid-boss"

# Presets for the experiment arms. None marks the grid-search ensemble.
VARIANTS = {
    GRID: None,
    "rboss": RbossConfig(ensemble_size=100),
    "rboss-subsample": RbossConfig(ensemble_size=100, subsample_policy=Fraction(0.7)),
    "rboss-cawpe": RbossConfig(ensemble_size=100, use_cawpe=True, estimate=FullLoocv()),
    "rboss-filtered": RbossConfig(ensemble_size=250, max_ensemble_size=50, estimate=FullLoocv()),
    "rboss-filtered-cawpe": RbossConfig(
        ensemble_size=250,
        max_ensemble_size=50,
        use_cawpe=True,
        estimate=FullLoocv(),
        subsample_policy=Fraction(0.7),
    ),
    "rboss-fast-estimate": RbossConfig(
        ensemble_size=250, max_ensemble_size=50, estimate=FastLoocv(50)
    ),
    "rboss-max-train": RbossConfig(
        ensemble_size=250, max_ensemble_size=50, estimate=FullLoocv(), subsample_policy=MaxTotal(500)
    ),
    "rboss-contract": RbossConfig(ensemble_size=None, time_budget=600.0),
}


@dataclass
class ExperimentConfig:
    dataset: LabeledDataset
    dataset_name: str
    variants: Sequence[str] = ("rboss-filtered-cawpe",)
    overrides: dict = field(default_factory=dict)
    resamples: int = 30
    base_seed: int = 0
    train_fraction: float = 0.5
    out_dir: Path = Path("results")
    checkpoint: Optional[Path] = None
    checkpoint_every: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.resamples < 1:
            raise ConfigError("resamples must be at least 1")
        unknown = [v for v in self.variants if v not in VARIANTS]
        if unknown:
            raise ConfigError(f"unknown variants {unknown}; choose from {sorted(VARIANTS)}")
        for v in self.variants:
            if v != GRID:
                variant_config(v, self.overrides).validate()
        return self


@dataclass(frozen=True)
class ResultRecord:
    dataset: str
    variant: str
    resample: int
    accuracy: float
    build_seconds: float
    ensemble_size: int
    params_tried: int
    peak_bags: int

    def row(self) -> list:
        # repr keeps floats round-trippable through the CSV.
        return [
            self.dataset,
            self.variant,
            self.resample,
            repr(self.accuracy),
            repr(self.build_seconds),
            self.ensemble_size,
            self.params_tried,
            self.peak_bags,
        ]


def variant_config(name: str, overrides: Optional[dict] = None, seed: int = 0) -> RbossConfig:
    """Preset for ``name`` with command-line style ``overrides`` applied.

    Recognised override keys: ``k``, ``max_ensemble``, ``contract_seconds``,
    ``member_cap``, ``subsample_fraction``, ``max_train``,
    ``fast_estimate_per_class``, ``cawpe_exponent``.
    """
    base = VARIANTS[name]
    if base is None:
        raise ConfigError(f"{name} is not a randomised variant")
    o = {k: v for k, v in (overrides or {}).items() if v is not None}
    changes = {"seed": seed}
    if "contract_seconds" in o:
        changes.update(time_budget=float(o["contract_seconds"]), ensemble_size=None)
    elif "k" in o:
        changes.update(ensemble_size=int(o["k"]), time_budget=None)
    if "max_ensemble" in o:
        changes["max_ensemble_size"] = int(o["max_ensemble"])
    elif "k" in o and base.max_ensemble_size is not None:
        changes["max_ensemble_size"] = min(base.max_ensemble_size, int(o["k"]))
    if "member_cap" in o:
        changes["contract_member_cap"] = int(o["member_cap"])
    if "subsample_fraction" in o:
        changes["subsample_policy"] = Fraction(float(o["subsample_fraction"]))
    if "max_train" in o:
        changes["subsample_policy"] = MaxTotal(int(o["max_train"]))
    if "fast_estimate_per_class" in o:
        changes["estimate"] = FastLoocv(int(o["fast_estimate_per_class"]))
    if "cawpe_exponent" in o:
        changes["cawpe_exponent"] = float(o["cawpe_exponent"])
    return replace(base, **changes)


def build_variant(
    name: str, train: LabeledDataset, overrides=None, seed=0, checkpoint=None, checkpoint_every=1
) -> EnsembleModel:
    """Build ``name`` on ``train``; resumes from ``checkpoint`` when that file exists."""
    if name == GRID:
        return build_grid_boss(train)
    if checkpoint is not None:
        try:
            state = load_checkpoint(checkpoint)
        except CheckpointNotFoundError:
            pass
        else:
            logger.info("resuming %s from %s", name, checkpoint)
            return RbossBuilder.from_checkpoint(train, state, checkpoint, checkpoint_every).run()
    cfg = variant_config(name, overrides, seed)
    return RbossBuilder(train, cfg, checkpoint, checkpoint_every).run()


def _summarise(records):
    accs = [r.accuracy for r in records]
    return {
        "mean_accuracy": statistics.fmean(accs) if accs else float("nan"),
        "std_accuracy": statistics.stdev(accs) if len(accs) > 1 else 0.0,
        "total_build_seconds": sum(r.build_seconds for r in records),
        "completed": len(records),
    }


def run_experiment(cfg: ExperimentConfig, builder: Callable = build_variant) -> dict:
    """Run every variant over ``cfg.resamples`` seeded stratified splits.

    Resample ``r`` uses seed ``base_seed + r`` for the split and the build, so
    every variant sees the same splits. Writes ``results_<variant>.csv``,
    ``splits_<variant>.csv``, ``summary.csv`` and ``errors.log`` into
    ``cfg.out_dir`` and returns the records per variant.
    """
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    errors_path = out / "errors.log"
    errors_path.write_text("", encoding="utf-8")
    all_records = {}

    for variant in cfg.variants:
        records = []
        results_path = out / f"results_{variant}.csv"
        splits_path = out / f"splits_{variant}.csv"
        with open(results_path, "w", newline="", encoding="utf-8") as rf, open(
            splits_path, "w", newline="", encoding="utf-8"
        ) as sf:
            results = csv.writer(rf)
            splits = csv.writer(sf)
            results.writerow(RESULT_HEADER)
            splits.writerow(["resample", "seed", "train_indices"])
            for r in range(cfg.resamples):
                seed = cfg.base_seed + r
                try:
                    split = stratified_resample(cfg.dataset, cfg.train_fraction, seed, r)
                    splits.writerow([r, seed, " ".join(map(str, split.train_indices))])
                    ckpt = None
                    if cfg.checkpoint is not None:
                        ckpt = Path(f"{cfg.checkpoint}.{variant}.r{r}")
                    start = time.perf_counter()
                    model = builder(
                        variant, split.train, cfg.overrides, seed, ckpt, cfg.checkpoint_every
                    )
                    build_seconds = time.perf_counter() - start
                    pred = model.predict(split.test.series)
                    correct = int(np.count_nonzero(pred == split.test.labels))
                    rec = ResultRecord(
                        cfg.dataset_name,
                        variant,
                        r,
                        correct / split.test.n,
                        build_seconds,
                        len(model),
                        model.metadata.params_tried,
                        model.metadata.peak_bags,
                    )
                except Exception as exc:  # one failed resample must not end the run
                    logger.error("%s resample %d failed: %s", variant, r, exc)
                    with open(errors_path, "a", encoding="utf-8") as ef:
                        ef.write(f"variant={variant} resample={r} error={exc!r}\n")
                        ef.write(traceback.format_exc())
                    continue
                results.writerow(rec.row())
                rf.flush()
                records.append(rec)
        all_records[variant] = records

    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["dataset", "variant", "resamples", "completed", "mean_accuracy", "std_accuracy", "total_build_seconds"]
        )
        for variant, records in all_records.items():
            s = _summarise(records)
            w.writerow(
                [
                    cfg.dataset_name,
                    variant,
                    cfg.resamples,
                    s["completed"],
                    repr(s["mean_accuracy"]),
                    repr(s["std_accuracy"]),
                    repr(s["total_build_seconds"]),
                ]
            )
    return all_records
