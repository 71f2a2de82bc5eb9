"""Labelled univariate datasets: text ingestion, normalisation and resampling.

The text format is one instance per line, ``label,x1,x2,...,xm``. Labels may
be integers or arbitrary strings and are remapped to contiguous 0-based ids
in order of first appearance. Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from rboss.exceptions import FormatError, PolicyError, StratificationError

__all__ = [
    "EPS_STD",
    "LabeledDataset",
    "ResampleSplit",
    "Fraction",
    "MaxTotal",
    "SubsamplePolicy",
    "parse_dataset",
    "load_dataset",
    "format_dataset",
    "z_normalize",
    "stratified_resample",
    "subsample",
]

EPS_STD = 1e-8


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Fixed-length real-valued series with integer class labels.

    Parameters
    ----------
    series : array-like of shape (n, m)
    labels : array-like of shape (n,)
        Class ids in ``[0, class_count)``.
    class_count : int, optional
        Defaults to ``max(labels) + 1``.
    class_names : tuple of str, optional
        Original label tokens, indexed by class id.
    """

    series: np.ndarray
    labels: np.ndarray
    class_count: int = 0
    class_names: tuple = field(default=())

    def __post_init__(self):
        series = np.asarray(self.series, dtype=np.float64)
        if series.ndim == 1:
            series = series.reshape(1, -1)
        if series.ndim != 2 or series.shape[0] < 1 or series.shape[1] < 1:
            raise ValueError("series must be a non-empty (n, m) matrix")
        labels = np.asarray(self.labels)
        if labels.shape != (series.shape[0],):
            raise ValueError("labels must hold one entry per series")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise ValueError("labels must be integers")
        labels = labels.astype(np.int64)
        class_count = int(self.class_count) or int(labels.max()) + 1
        if labels.min() < 0 or labels.max() >= class_count:
            raise ValueError(f"labels must lie in [0, {class_count})")
        names = tuple(str(s) for s in self.class_names)
        if names and len(names) != class_count:
            raise ValueError("class_names must have one entry per class")
        object.__setattr__(self, "series", _frozen(series, np.float64))
        object.__setattr__(self, "labels", _frozen(labels, np.int64))
        object.__setattr__(self, "class_count", class_count)
        object.__setattr__(self, "class_names", names)

    @property
    def n(self) -> int:
        return self.series.shape[0]

    @property
    def m(self) -> int:
        return self.series.shape[1]

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.class_count == other.class_count
            and self.series.shape == other.series.shape
            and np.array_equal(self.series, other.series)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def take(self, indices) -> "LabeledDataset":
        """Rows ``indices`` as a new dataset sharing class ids and names."""
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            self.series[idx], self.labels[idx], self.class_count, self.class_names
        )

    def fingerprint(self) -> bytes:
        """SHA-256 over shape, class count, values and labels."""
        h = hashlib.sha256()
        h.update(np.array([self.n, self.m, self.class_count], dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.series, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.labels, dtype="<i8").tobytes())
        return h.digest()


@dataclass(frozen=True, eq=False)
class ResampleSplit:
    train: LabeledDataset
    test: LabeledDataset
    seed: int
    resample_index: int
    train_indices: np.ndarray
    test_indices: np.ndarray


# --------------------------------------------------------------------------
# ingestion


def parse_dataset(text: Union[str, Iterable[str], io.TextIOBase]) -> LabeledDataset:
    """Parse the comma-separated text format into a :class:`LabeledDataset`.

    Raises
    ------
    FormatError
        On empty input, a non-numeric value, or rows of differing length.
        ``FormatError.row`` is the 1-based line number of the offending row.
    """
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = list(text)

    label_ids: dict = {}
    names = []
    labels = []
    rows = []
    width = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = [t.strip() for t in line.split(",")]
        token = tokens[0]
        if not token:
            raise FormatError("missing class label", row=lineno)
        try:
            values = [float(t) for t in tokens[1:]]
        except ValueError as exc:
            raise FormatError(f"non-numeric value ({exc})", row=lineno) from None
        if not values:
            raise FormatError("row has a label but no values", row=lineno)
        if not all(math.isfinite(v) for v in values):
            raise FormatError("missing or non-finite values are not supported", row=lineno)
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise FormatError(
                f"expected {width} values, found {len(values)}", row=lineno
            )
        if token not in label_ids:
            label_ids[token] = len(label_ids)
            names.append(token)
        labels.append(label_ids[token])
        rows.append(values)

    if not rows:
        raise FormatError("no instances in input")
    return LabeledDataset(
        np.array(rows, dtype=np.float64),
        np.array(labels, dtype=np.int64),
        len(names),
        tuple(names),
    )


def load_dataset(path) -> LabeledDataset:
    with open(path, encoding="utf-8", newline=None) as fh:
        return parse_dataset(fh.read())


def format_dataset(data: LabeledDataset) -> str:
    """Serialise to the text format; values use shortest round-trip repr."""
    names = data.class_names or tuple(str(c) for c in range(data.class_count))
    out = []
    for label, row in zip(data.labels, data.series):
        out.append(",".join([names[label], *(repr(float(v)) for v in row)]))
    return "\n".join(out) + "\n"


def save_dataset(data: LabeledDataset, path) -> None:
    Path(path).write_text(format_dataset(data), encoding="utf-8")


# --------------------------------------------------------------------------
# normalisation


def z_normalize(series) -> np.ndarray:
    """Zero mean, unit population standard deviation.

    Series whose standard deviation is below ``EPS_STD`` map to all zeros.
    """
    x = np.asarray(series, dtype=np.float64)
    sd = x.std()
    if sd < EPS_STD:
        return np.zeros_like(x)
    return (x - x.mean()) / sd


# --------------------------------------------------------------------------
# resampling


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _stratified_counts(sizes, fraction, total, lower, upper):
    """Per-class counts aiming to sum to ``total``.

    Each class starts at round-half-up of ``fraction * size``, clamped to
    ``[lower[c], upper[c]]``. The remainder is then absorbed one unit at a
    time by the largest class that still has room (lowest id on ties), never
    moving a class more than one instance away from its exact share.
    """
    sizes = np.asarray(sizes)
    share = fraction * sizes
    lower = np.maximum(lower, np.ceil(share - 1))
    upper = np.minimum(upper, np.floor(share + 1))
    counts = np.array(
        [min(max(_round_half_up(x), lo), hi) for x, lo, hi in zip(share, lower, upper)],
        dtype=np.int64,
    )
    order = sorted(range(len(sizes)), key=lambda c: (-sizes[c], c))
    diff = total - int(counts.sum())
    while diff != 0:
        step = 1 if diff > 0 else -1
        for c in order:
            if lower[c] <= counts[c] + step <= upper[c]:
                counts[c] += step
                diff -= step
                break
        else:
            break
    return counts


def _draw(labels, counts, rng) -> np.ndarray:
    chosen = []
    for c, k in enumerate(counts):
        members = np.flatnonzero(labels == c)
        if k:
            chosen.append(rng.choice(members, size=int(k), replace=False))
    if not chosen:
        return np.zeros(0, dtype=np.int64)
    return np.sort(np.concatenate(chosen)).astype(np.int64)


def stratified_resample(
    data: LabeledDataset, train_fraction: float, seed: int, resample_index: int = 0
) -> ResampleSplit:
    """Seeded stratified train/test split.

    The train set holds ``round(train_fraction * n)`` instances, split across
    classes by the proportional rounding rule. Every class keeps at least one
    instance on each side of the split, which can leave the total one or two
    short when tiny classes are involved.
    """
    if not 0.0 < train_fraction < 1.0:
        raise StratificationError("train_fraction must lie in (0, 1)")
    sizes = data.class_sizes()
    present = sizes > 0
    if np.any(sizes[present] < 2):
        bad = [int(c) for c in np.flatnonzero(present & (sizes < 2))]
        raise StratificationError(f"classes {bad} have fewer than 2 instances")
    lower = np.where(present, 1, 0)
    upper = np.where(present, sizes - 1, 0)
    total = _round_half_up(train_fraction * data.n)
    counts = _stratified_counts(sizes, train_fraction, total, lower, upper)
    rng = np.random.default_rng(seed)
    train_idx = _draw(data.labels, counts, rng)
    mask = np.ones(data.n, dtype=bool)
    mask[train_idx] = False
    test_idx = np.flatnonzero(mask).astype(np.int64)
    return ResampleSplit(
        data.take(train_idx),
        data.take(test_idx),
        seed,
        resample_index,
        _frozen(train_idx, np.int64),
        _frozen(test_idx, np.int64),
    )


@dataclass(frozen=True)
class Fraction:
    """Keep ``round(fraction * n)`` instances, stratified by class."""

    fraction: float

    def to_dict(self):
        return {"kind": "fraction", "value": self.fraction}


@dataclass(frozen=True)
class MaxTotal:
    """Cap the dataset at ``cap`` instances, stratified by class."""

    cap: int

    def to_dict(self):
        return {"kind": "max_total", "value": self.cap}


SubsamplePolicy = Union[Fraction, MaxTotal]


def policy_from_dict(d):
    if d is None:
        return None
    if d["kind"] == "fraction":
        return Fraction(float(d["value"]))
    if d["kind"] == "max_total":
        return MaxTotal(int(d["value"]))
    raise PolicyError(f"unknown subsample policy {d['kind']!r}")


def subsample(data: LabeledDataset, policy: SubsamplePolicy, seed: int):
    """Stratified subsample without replacement.

    Returns
    -------
    (LabeledDataset, ndarray)
        The subsample and the sorted indices it was drawn from in ``data``.
    """
    sizes = data.class_sizes()
    present = sizes > 0
    if isinstance(policy, Fraction):
        f = policy.fraction
        if not 0.0 < f <= 1.0:
            raise PolicyError(f"fraction must lie in (0, 1], got {f}")
        total = _round_half_up(f * data.n)
    elif isinstance(policy, MaxTotal):
        if policy.cap < data.class_count:
            raise PolicyError(
                f"cap {policy.cap} is smaller than the class count {data.class_count}"
            )
        total = policy.cap
    else:
        raise PolicyError(f"unknown subsample policy {policy!r}")

    if total >= data.n:
        return data, np.arange(data.n, dtype=np.int64)

    lower = np.where(present, 1, 0)
    counts = _stratified_counts(sizes, total / data.n, total, lower, sizes)
    idx = _draw(data.labels, counts, np.random.default_rng(seed))
    return data.take(idx), idx
