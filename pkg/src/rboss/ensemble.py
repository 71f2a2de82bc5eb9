"""BOSS ensembles: parameter grid, grid-search BOSS, member pools and voting."""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from rboss.boss import BaseBossModel, TrainEstimate, build_base_boss, loocv_estimate, predict_batch
from rboss.data import LabeledDataset, SubsamplePolicy, policy_from_dict
from rboss.exceptions import BuildError, ConfigError, ParameterError
from rboss.sfa import SfaParameters

__all__ = [
    "WORD_LENGTHS",
    "ALPHABET_SIZE",
    "MIN_WINDOW",
    "ParameterSpace",
    "enumerate_parameter_space",
    "Combiner",
    "EnsembleMember",
    "EnsembleModel",
    "BuildMetadata",
    "MemberPool",
    "FullLoocv",
    "FastLoocv",
    "RbossConfig",
    "cawpe_weight",
    "combine",
    "predict_ensemble",
    "predict_proba_ensemble",
    "build_grid_boss",
]

WORD_LENGTHS = (16, 14, 12, 10, 8)
ALPHABET_SIZE = 4
MIN_WINDOW = 10
CAWPE_FLOOR = 1e-4


# --------------------------------------------------------------------------
# parameter space


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered, duplicate-free list of base classifier configurations.

    Ordering is window length ascending, then word length descending, then
    normalise ``True`` before ``False``. Parameter ids are list positions.
    """

    params: tuple
    series_length: int
    max_window_factor: float

    def __len__(self):
        return len(self.params)

    def __getitem__(self, i) -> SfaParameters:
        return self.params[i]

    def __iter__(self):
        return iter(self.params)

    @property
    def window_lengths(self) -> list:
        return sorted({p.window_length for p in self.params})


def window_candidates(m: int, factor: float) -> list:
    """``m // 4`` window lengths linearly spaced up to ``floor(m * factor)``.

    Values are rounded half up and deduplicated. The lower end is 10, or the
    upper end itself when that is smaller.
    """
    hi = max(1, int(math.floor(m * factor)))
    lo = min(MIN_WINDOW, hi)
    count = max(1, m // 4)
    if count == 1:
        raw = [float(hi)]
    else:
        raw = [lo + (hi - lo) * i / (count - 1) for i in range(count)]
    out = []
    for v in raw:
        w = int(math.floor(v + 0.5))
        if not out or out[-1] != w:
            out.append(w)
    return out


def enumerate_parameter_space(m: int, factor: float = 1.0) -> ParameterSpace:
    if m < 1:
        raise ParameterError("series length must be positive")
    if factor not in (1.0, 0.5):
        raise ParameterError(f"max window factor must be 1 or 1/2, got {factor}")
    combos = []
    for w in window_candidates(m, factor):
        for l in WORD_LENGTHS:
            for p in (True, False):
                if l <= w - (2 if p else 0):
                    combos.append(SfaParameters(l, ALPHABET_SIZE, w, p))
    return ParameterSpace(tuple(combos), m, float(factor))


# --------------------------------------------------------------------------
# ensemble model


class Combiner(str, enum.Enum):
    MAJORITY_VOTE = "majority_vote"
    WEIGHTED_PROBABILITY = "weighted_probability"


@dataclass(frozen=True, eq=False)
class EnsembleMember:
    model: BaseBossModel
    train_accuracy: Optional[float]
    weight: float
    subsample_indices: Optional[np.ndarray] = None
    param_id: int = -1
    ordinal: int = 0

    @property
    def params(self) -> SfaParameters:
        return self.model.params


@dataclass
class BuildMetadata:
    seed: Optional[int] = None
    build_seconds: float = 0.0
    params_tried: int = 0
    peak_bags: int = 0
    config: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class EnsembleModel:
    members: tuple
    combiner: Combiner
    class_count: int
    series_length: int
    metadata: BuildMetadata = field(default_factory=BuildMetadata)

    def __post_init__(self):
        if not self.members:
            raise BuildError("ensemble has no members")
        if self.combiner is Combiner.MAJORITY_VOTE and any(
            m.weight != 1.0 for m in self.members
        ):
            raise BuildError("majority vote members must all have weight 1")

    def __len__(self):
        return len(self.members)

    @property
    def weights(self) -> np.ndarray:
        return np.array([m.weight for m in self.members])

    @property
    def member_params(self) -> list:
        return [m.params for m in self.members]

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba_ensemble(self, X)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def cawpe_weight(estimate: Union[TrainEstimate, float], exponent: float = 4.0) -> float:
    """Train accuracy raised to ``exponent``, floored at ``1e-4`` before powering."""
    if exponent <= 0:
        raise ConfigError("CAWPE exponent must be positive")
    acc = estimate.accuracy if isinstance(estimate, TrainEstimate) else float(estimate)
    return max(acc, CAWPE_FLOOR) ** exponent


def combine(distributions: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    """Weighted sum of member distributions, normalised to sum to one.

    ``distributions`` has shape (members, ..., classes).
    """
    d = np.asarray(distributions, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    total = np.tensordot(w, d, axes=(0, 0))
    return total / total.sum(axis=-1, keepdims=True)


def predict_proba_ensemble(model: EnsembleModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.series_length:
        raise ParameterError(
            f"series length {X.shape[1]} does not match training length "
            f"{model.series_length}"
        )
    total = np.zeros((X.shape[0], model.class_count))
    for member in model.members:
        _, probs = predict_batch(member.model, X)
        total += member.weight * probs
    return total / total.sum(axis=1, keepdims=True)


def predict_ensemble(model: EnsembleModel, series):
    """Label and distribution for one series; ties go to the lowest class id."""
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1:
        raise ParameterError("predict_ensemble expects a single series")
    probs = predict_proba_ensemble(model, series[None, :])[0]
    return int(np.argmax(probs)), probs


# --------------------------------------------------------------------------
# grid-search BOSS


def build_grid_boss(train: LabeledDataset, retention: float = 0.92) -> EnsembleModel:
    """Evaluate every grid configuration by leave-one-out and keep the good ones.

    A configuration is retained when its accuracy is at least ``retention``
    times the best accuracy found. Members vote with equal weight.
    """
    if train.n < 2:
        raise BuildError("grid BOSS needs at least two training instances")
    start = time.perf_counter()
    space = enumerate_parameter_space(train.m, 1.0)
    if not len(space):
        raise BuildError(f"no parameter combinations fit series length {train.m}")

    kept = []
    best = -1.0
    peak = 0
    for pid, params in enumerate(space):
        model = build_base_boss(train, params)
        acc = loocv_estimate(model).accuracy
        peak = max(peak, sum(k.model.n for k in kept) + model.n)
        # The best only grows, so members below the running threshold never return.
        if acc > best:
            best = acc
            kept = [k for k in kept if k.train_accuracy >= retention * best]
        if acc >= retention * best:
            kept.append(EnsembleMember(model, acc, 1.0, None, pid, pid + 1))

    meta = BuildMetadata(
        seed=None,
        build_seconds=time.perf_counter() - start,
        params_tried=len(space),
        peak_bags=peak,
        config={"variant": "grid-boss", "retention": retention},
    )
    return EnsembleModel(tuple(kept), Combiner.MAJORITY_VOTE, train.class_count, train.m, meta)


# --------------------------------------------------------------------------
# filtered member pool


class MemberPool:
    """Ensemble members, optionally capped at ``capacity``.

    Once full, a newcomer replaces the weakest member only if its accuracy is
    strictly higher. The weakest member is the lowest-accuracy one, and among
    equally weak members the most recently built, so at any point the pool
    holds the ``capacity`` best members seen with earlier builds winning ties.
    Members must expose ``train_accuracy`` and ``ordinal``.
    """

    def __init__(self, capacity: Optional[int] = None, members=()):
        self.capacity = capacity
        self.members = list(members)

    def __len__(self):
        return len(self.members)

    def _weakest(self) -> int:
        return min(
            range(len(self.members)),
            key=lambda i: (self.members[i].train_accuracy, -self.members[i].ordinal),
        )

    def offer(self, member) -> bool:
        """Insert ``member`` if there is room or it beats the weakest; return whether kept."""
        if self.capacity is None or len(self.members) < self.capacity:
            self.members.append(member)
            return True
        i = self._weakest()
        if member.train_accuracy > self.members[i].train_accuracy:
            self.members[i] = member
            return True
        return False


# --------------------------------------------------------------------------
# randomised ensemble configuration


@dataclass(frozen=True)
class FullLoocv:
    def to_dict(self):
        return {"kind": "full"}


@dataclass(frozen=True)
class FastLoocv:
    per_class_cap: int = 50

    def to_dict(self):
        return {"kind": "fast", "per_class_cap": self.per_class_cap}


def _estimate_from_dict(d):
    if d is None:
        return None
    if d["kind"] == "full":
        return FullLoocv()
    if d["kind"] == "fast":
        return FastLoocv(int(d["per_class_cap"]))
    raise ConfigError(f"unknown estimate mode {d['kind']!r}")


@dataclass(frozen=True)
class RbossConfig:
    """Configuration of a randomised BOSS build.

    Exactly one of ``ensemble_size`` (number of parameter sets tried) and
    ``time_budget`` (seconds) controls termination. ``max_ensemble_size``
    caps the number of retained members; ``None`` keeps every member.
    """

    ensemble_size: Optional[int] = None
    max_ensemble_size: Optional[int] = None
    time_budget: Optional[float] = None
    contract_member_cap: int = 500
    subsample_policy: Optional[SubsamplePolicy] = None
    use_cawpe: bool = False
    cawpe_exponent: float = 4.0
    estimate: Union[FullLoocv, FastLoocv, None] = None
    seed: int = 0

    @property
    def contracted(self) -> bool:
        return self.time_budget is not None

    @property
    def max_window_factor(self) -> float:
        return 0.5 if self.estimate is None else 1.0

    def validate(self) -> "RbossConfig":
        k, s = self.ensemble_size, self.max_ensemble_size
        if self.contracted == (k is not None):
            raise ConfigError("set exactly one of ensemble_size and time_budget")
        if k is not None and k < 1:
            raise ConfigError("ensemble_size must be at least 1")
        if self.contracted and self.time_budget < 0:
            raise ConfigError("time_budget must be non-negative")
        if s is not None and s < 1:
            raise ConfigError("max_ensemble_size must be at least 1")
        if s is not None and k is not None and s > k:
            raise ConfigError(f"max_ensemble_size {s} exceeds ensemble_size {k}")
        if self.contract_member_cap < 1:
            raise ConfigError("contract_member_cap must be at least 1")
        if self.cawpe_exponent <= 0:
            raise ConfigError("cawpe_exponent must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        filtering = s is not None and (self.contracted or s < k)
        if (filtering or self.use_cawpe) and self.estimate is None:
            raise ConfigError("filtering and CAWPE weighting need a train accuracy estimate")
        if isinstance(self.estimate, FastLoocv) and self.estimate.per_class_cap < 1:
            raise ConfigError("per_class_cap must be at least 1")
        return self

    def to_dict(self) -> dict:
        return {
            "ensemble_size": self.ensemble_size,
            "max_ensemble_size": self.max_ensemble_size,
            "time_budget": self.time_budget,
            "contract_member_cap": self.contract_member_cap,
            "subsample_policy": None
            if self.subsample_policy is None
            else self.subsample_policy.to_dict(),
            "use_cawpe": self.use_cawpe,
            "cawpe_exponent": self.cawpe_exponent,
            "estimate": None if self.estimate is None else self.estimate.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RbossConfig":
        try:
            return cls(
                ensemble_size=d["ensemble_size"],
                max_ensemble_size=d["max_ensemble_size"],
                time_budget=d["time_budget"],
                contract_member_cap=int(d["contract_member_cap"]),
                subsample_policy=policy_from_dict(d["subsample_policy"]),
                use_cawpe=bool(d["use_cawpe"]),
                cawpe_exponent=float(d["cawpe_exponent"]),
                estimate=_estimate_from_dict(d["estimate"]),
                seed=int(d["seed"]),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed configuration: {exc}") from None
