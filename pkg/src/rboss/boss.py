"""Single BOSS base classifier: word histograms plus 1-NN under the BOSS distance."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from rboss.data import LabeledDataset
from rboss.exceptions import EstimateError, ParameterError
from rboss.sfa import SfaParameters, fit_mcb, reduce_numerosity, transform_words

__all__ = [
    "BaseBossModel",
    "TrainEstimate",
    "build_base_boss",
    "boss_distance",
    "predict_1nn",
    "predict_batch",
    "loocv_estimate",
    "fast_loocv_estimate",
]


def boss_distance(a: dict, b: dict) -> float:
    """Sum of squared count differences over the words present in ``a``.

    Not symmetric: words that only occur in ``b`` are ignored.
    """
    total = 0
    for word, count in a.items():
        if count > 0:
            diff = count - b.get(word, 0)
            total += diff * diff
    return float(total)


def _bag_matrix(words: np.ndarray, vocab=None):
    """Histogram matrix of numerosity-reduced words.

    With ``vocab`` given, columns follow it and out-of-vocabulary words are
    returned separately as per-row sums of squared counts.
    """
    n = words.shape[0]
    keep = reduce_numerosity(words)
    rows = np.broadcast_to(np.arange(n)[:, None], words.shape)[keep]
    kept = words[keep]
    if vocab is None:
        vocab, cols = np.unique(kept, return_inverse=True)
        mat = sparse.csr_matrix(
            (np.ones(kept.size), (rows, cols.ravel())), shape=(n, vocab.size)
        )
        mat.sum_duplicates()
        return mat, vocab
    pos = np.minimum(np.searchsorted(vocab, kept), vocab.size - 1)
    inside = vocab[pos] == kept
    mat = sparse.csr_matrix(
        (np.ones(int(inside.sum())), (rows[inside], pos[inside])),
        shape=(n, vocab.size),
    )
    mat.sum_duplicates()
    oov_sq = np.zeros(n)
    if not inside.all():
        unseen = Counter(zip(rows[~inside].tolist(), kept[~inside].tolist()))
        for (r, _), c in unseen.items():
            oov_sq[r] += c * c
    return mat, oov_sq


def _distance_matrix(query: sparse.csr_matrix, train: sparse.csr_matrix, train_sq, query_extra=None):
    """BOSS distances, query rows as first argument, train rows as second.

    Expands sum_{u in supp(q)} (q_u - t_u)^2 into three sparse products. All
    operands are integer valued, so the float64 arithmetic is exact.
    """
    support = query.copy()
    support.data = np.ones_like(support.data)
    q_sq = np.asarray(query.multiply(query).sum(axis=1)).ravel()
    if query_extra is not None:
        q_sq = q_sq + query_extra
    cross = (query @ train.T).toarray()
    masked = (support @ train_sq.T).toarray()
    return q_sq[:, None] - 2.0 * cross + masked


@dataclass(frozen=True, eq=False)
class BaseBossModel:
    """Fitted breakpoints plus one word histogram per training instance.

    Histograms are held as a sparse count matrix over the sorted training
    vocabulary; :attr:`train_bags` gives the dict view.
    """

    params: SfaParameters
    breakpoints: np.ndarray
    vocabulary: np.ndarray
    counts: sparse.csr_matrix
    train_labels: np.ndarray
    class_count: int
    series_length: int

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    @cached_property
    def train_bags(self) -> list:
        bags = []
        for i in range(self.n):
            lo, hi = self.counts.indptr[i], self.counts.indptr[i + 1]
            bags.append(
                {
                    int(self.vocabulary[j]): int(c)
                    for j, c in zip(self.counts.indices[lo:hi], self.counts.data[lo:hi])
                }
            )
        return bags

    @cached_property
    def _squared(self):
        return self.counts.multiply(self.counts).tocsr()

    def bags_for(self, X) -> tuple:
        """Histogram matrix of new series over this model's vocabulary."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.series_length:
            raise ParameterError(
                f"series length {X.shape[1]} does not match training length "
                f"{self.series_length}"
            )
        words = transform_words(X, self.params, self.breakpoints)
        return _bag_matrix(words, self.vocabulary)

    def distances(self, X) -> np.ndarray:
        """(len(X), n) BOSS distances from each new series to each train bag."""
        q, extra = self.bags_for(X)
        return _distance_matrix(q, self.counts, self._squared, extra)


def build_base_boss(train: LabeledDataset, params: SfaParameters) -> BaseBossModel:
    params.check_series_length(train.m)
    bp = fit_mcb(train, params)
    words = transform_words(train.series, params, bp)
    counts, vocab = _bag_matrix(words)
    labels = np.array(train.labels, dtype=np.int64)
    labels.setflags(write=False)
    return BaseBossModel(params, bp, vocab, counts, labels, train.class_count, train.m)


def _one_hot(labels, class_count):
    out = np.zeros((len(labels), class_count))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def predict_batch(model: BaseBossModel, X):
    """1-NN labels and one-hot distributions for each row of ``X``.

    Ties between equidistant neighbours go to the lowest train index.
    """
    nearest = np.argmin(model.distances(X), axis=1)
    labels = model.train_labels[nearest]
    return labels, _one_hot(labels, model.class_count)


def predict_1nn(model: BaseBossModel, series):
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1:
        raise ParameterError("predict_1nn expects a single series")
    labels, probs = predict_batch(model, series[None, :])
    return int(labels[0]), probs[0]


@dataclass(frozen=True)
class TrainEstimate:
    accuracy: float
    indices: np.ndarray
    predictions: np.ndarray
    distributions: np.ndarray

    @property
    def evaluated_count(self) -> int:
        return int(self.indices.size)

    @property
    def per_instance_distributions(self) -> list:
        return [(int(i), p) for i, p in zip(self.indices, self.distributions)]


def _leave_one_out(model: BaseBossModel, indices: np.ndarray) -> TrainEstimate:
    if model.n < 2:
        raise EstimateError("leave-one-out needs at least two training instances")
    q = model.counts[indices]
    d = _distance_matrix(q, model.counts, model._squared)
    d[np.arange(indices.size), indices] = np.inf
    preds = model.train_labels[np.argmin(d, axis=1)]
    correct = int(np.count_nonzero(preds == model.train_labels[indices]))
    return TrainEstimate(
        accuracy=correct / indices.size,
        indices=indices,
        predictions=preds,
        distributions=_one_hot(preds, model.class_count),
    )


def loocv_estimate(model: BaseBossModel) -> TrainEstimate:
    """Leave-one-out accuracy of the stored train bags.

    Breakpoints are not refitted per fold; only the held-out bag is removed
    from the neighbour pool.
    """
    return _leave_one_out(model, np.arange(model.n))


def fast_loocv_estimate(model: BaseBossModel, per_class_cap: int, seed: int) -> TrainEstimate:
    """Leave-one-out evaluated at up to ``per_class_cap`` random instances per class.

    Each evaluated instance is still compared against every other train bag.
    """
    if per_class_cap < 1:
        raise EstimateError("per_class_cap must be at least 1")
    if model.n < 2:
        raise EstimateError("leave-one-out needs at least two training instances")
    rng = np.random.default_rng(seed)
    chosen = []
    for c in range(model.class_count):
        members = np.flatnonzero(model.train_labels == c)
        if members.size > per_class_cap:
            members = rng.choice(members, size=per_class_cap, replace=False)
        chosen.append(members)
    return _leave_one_out(model, np.sort(np.concatenate(chosen)))
