"""Randomised BOSS (RBOSS): ensembles over uniformly drawn parameter sets.

Parameter sets are drawn without replacement by walking a seeded permutation
of the parameter space, so the draw sequence can be replayed from the seed
alone. Member ``i`` (1-based ordinal) draws its subsample and any fast
estimate from seed ``cfg.seed + i``.
"""

from __future__ import annotations

import logging
import time
from pathlib import Path
from typing import Optional

import numpy as np

from rboss.boss import build_base_boss, fast_loocv_estimate, loocv_estimate
from rboss.checkpoint import (
    BuildCheckpoint,
    DatasetFingerprint,
    save_checkpoint,
)
from rboss.data import LabeledDataset, subsample
from rboss.ensemble import (
    BuildMetadata,
    Combiner,
    EnsembleMember,
    EnsembleModel,
    FastLoocv,
    FullLoocv,
    MemberPool,
    RbossConfig,
    cawpe_weight,
    enumerate_parameter_space,
)
from rboss.exceptions import BuildError, CheckpointError, ConfigError

__all__ = ["RbossBuilder", "build_rboss", "build_rboss_contracted"]

logger = logging.getLogger(__name__)


class RbossBuilder:
    """Incremental RBOSS build that can be stepped, snapshotted and resumed.

    Parameters
    ----------
    train : LabeledDataset
    cfg : RbossConfig
    checkpoint_path : path-like, optional
        Where to write snapshots during :meth:`run`.
    checkpoint_every : int, default=1
        Snapshot after this many parameter sets have been tried.
    """

    def __init__(
        self,
        train: LabeledDataset,
        cfg: RbossConfig,
        checkpoint_path=None,
        checkpoint_every: Optional[int] = None,
    ):
        self.train = train
        self.cfg = cfg.validate()
        self.space = enumerate_parameter_space(train.m, cfg.max_window_factor)
        if not len(self.space):
            raise BuildError(f"no parameter combinations fit series length {train.m}")
        self.order = np.random.default_rng(cfg.seed).permutation(len(self.space))
        self.pool = MemberPool(cfg.max_ensemble_size)
        self.built = 0
        self.peak_bags = 0
        self._elapsed_before = 0.0
        self._session_start = time.perf_counter()
        self.checkpoint_path = None if checkpoint_path is None else Path(checkpoint_path)
        self.checkpoint_every = 1 if checkpoint_every is None else int(checkpoint_every)
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be at least 1")

    @classmethod
    def from_checkpoint(
        cls, train: LabeledDataset, state: BuildCheckpoint, checkpoint_path=None, checkpoint_every=None
    ) -> "RbossBuilder":
        state.validate()
        state.check_dataset(train)
        builder = cls(train, state.config, checkpoint_path, checkpoint_every)
        expected = [int(i) for i in builder.order[: state.members_built]]
        if list(state.drawn_ids) != expected:
            raise CheckpointError("drawn parameter ids do not replay from the stored seed")
        builder.pool = MemberPool(state.config.max_ensemble_size, state.members)
        builder.built = state.members_built
        builder.peak_bags = state.peak_bags
        builder._elapsed_before = state.elapsed_seconds
        return builder

    # ------------------------------------------------------------------

    @property
    def elapsed(self) -> float:
        return self._elapsed_before + (time.perf_counter() - self._session_start)

    @property
    def members(self) -> list:
        return self.pool.members

    def should_continue(self) -> bool:
        if self.built >= len(self.space):
            return False
        cfg = self.cfg
        if cfg.contracted:
            if self.built >= cfg.contract_member_cap:
                return False
            # A fresh build starts at time zero, so any positive budget admits one member.
            if self.built == 0 and self._elapsed_before < cfg.time_budget:
                return True
            return self.elapsed < cfg.time_budget
        return self.built < cfg.ensemble_size

    def step(self) -> bool:
        """Build one member from the next parameter set; return whether it was kept."""
        if self.built >= len(self.space):
            raise BuildError("parameter space exhausted")
        cfg = self.cfg
        ordinal = self.built + 1
        param_id = int(self.order[self.built])
        params = self.space[param_id]
        sub_seed = cfg.seed + ordinal

        if cfg.subsample_policy is not None:
            data, indices = subsample(self.train, cfg.subsample_policy, sub_seed)
        else:
            data, indices = self.train, None
        model = build_base_boss(data, params)

        if isinstance(cfg.estimate, FullLoocv):
            accuracy = loocv_estimate(model).accuracy
        elif isinstance(cfg.estimate, FastLoocv):
            accuracy = fast_loocv_estimate(model, cfg.estimate.per_class_cap, sub_seed).accuracy
        else:
            accuracy = None
        weight = cawpe_weight(accuracy, cfg.cawpe_exponent) if cfg.use_cawpe else 1.0

        stored = sum(m.model.n for m in self.pool.members) + model.n
        self.peak_bags = max(self.peak_bags, stored)
        self.built += 1
        member = EnsembleMember(model, accuracy, weight, indices, param_id, ordinal)
        return self.pool.offer(member)

    def checkpoint(self) -> BuildCheckpoint:
        return BuildCheckpoint(
            config=self.cfg,
            drawn_ids=[int(i) for i in self.order[: self.built]],
            members=list(self.pool.members),
            members_built=self.built,
            elapsed_seconds=self.elapsed,
            fingerprint=DatasetFingerprint.of(self.train),
            peak_bags=self.peak_bags,
        )

    def _save(self):
        try:
            save_checkpoint(self.checkpoint(), self.checkpoint_path)
        except CheckpointError as exc:
            logger.warning("checkpoint skipped: %s", exc)

    def run(self) -> EnsembleModel:
        while self.should_continue():
            self.step()
            if self.checkpoint_path is not None and self.built % self.checkpoint_every == 0:
                self._save()
        if self.checkpoint_path is not None:
            self._save()
        return self.finalize()

    def finalize(self) -> EnsembleModel:
        if not self.pool.members:
            raise BuildError("no members built")
        combiner = Combiner.WEIGHTED_PROBABILITY if self.cfg.use_cawpe else Combiner.MAJORITY_VOTE
        meta = BuildMetadata(
            seed=self.cfg.seed,
            build_seconds=self.elapsed,
            params_tried=self.built,
            peak_bags=self.peak_bags,
            config=self.cfg.to_dict(),
        )
        return EnsembleModel(
            tuple(self.pool.members), combiner, self.train.class_count, self.train.m, meta
        )


def build_rboss(
    train: LabeledDataset, cfg: RbossConfig, checkpoint_path=None, checkpoint_every=None
) -> EnsembleModel:
    """Build an RBOSS ensemble.

    The loop tries parameter sets until ``cfg.ensemble_size`` have been tried
    (or, when contracted, until the time budget is spent or
    ``cfg.contract_member_cap`` sets have been tried), stopping early when the
    parameter space runs out. The time check happens before each member, so a
    contracted build overshoots its budget by at most one member.
    """
    return RbossBuilder(train, cfg, checkpoint_path, checkpoint_every).run()


def build_rboss_contracted(
    train: LabeledDataset, cfg: RbossConfig, checkpoint_path=None, checkpoint_every=None
) -> EnsembleModel:
    if not cfg.contracted or cfg.time_budget <= 0:
        raise ConfigError("a contracted build needs a positive time_budget")
    return build_rboss(train, cfg, checkpoint_path, checkpoint_every)
