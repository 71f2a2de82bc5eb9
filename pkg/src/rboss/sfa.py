"""Symbolic Fourier Approximation and bag-of-words histograms.

A window of length ``w`` is (optionally) z-normalised, reduced to its first
``l/2`` complex Fourier coefficients (skipping the DC term when normalising),
and each of the ``l`` real values is discretised against per-coefficient
breakpoints learnt by Multiple Coefficient Binning. The resulting symbols form
a word, packed into an integer with symbol ``i`` at base-``alpha`` digit ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from rboss.data import EPS_STD, LabeledDataset
from rboss.exceptions import ParameterError

__all__ = [
    "SfaParameters",
    "dft_truncated",
    "sliding_windows",
    "fit_mcb",
    "sfa_word",
    "encode_word",
    "decode_word",
    "bag_of_words",
    "transform_words",
    "window_coefficients",
]

# Bound on the size of one (series, window, w) block materialised at a time.
_BLOCK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class SfaParameters:
    """Configuration of one BOSS base classifier."""

    word_length: int
    alphabet_size: int
    window_length: int
    normalize: bool

    def __post_init__(self):
        l, a, w = self.word_length, self.alphabet_size, self.window_length
        if l % 2 or not 4 <= l <= 16:
            raise ParameterError(f"word_length must be even and in [4, 16], got {l}")
        if not 2 <= a <= 26:
            raise ParameterError(f"alphabet_size must be in [2, 26], got {a}")
        if w < 1:
            raise ParameterError(f"window_length must be positive, got {w}")
        if l > w - (2 if self.normalize else 0):
            raise ParameterError(
                f"word_length {l} does not fit window_length {w} "
                f"(normalize={self.normalize})"
            )

    def check_series_length(self, m: int) -> None:
        if self.window_length > m:
            raise ParameterError(
                f"window_length {self.window_length} exceeds series length {m}"
            )

    @property
    def coefficient_offset(self) -> int:
        """Index of the first Fourier coefficient kept."""
        return 1 if self.normalize else 0

    def as_tuple(self):
        return (self.word_length, self.alphabet_size, self.window_length, self.normalize)


def _check_dft_args(w, l, p):
    if l < 1 or l % 2:
        raise ParameterError(f"word length must be a positive even integer, got {l}")
    if l > w - (2 if p else 0):
        raise ParameterError(f"cannot keep {l} values from a window of length {w}")


def _dft_basis(w: int, l: int, p: bool) -> np.ndarray:
    """(w, l) matrix whose columns give interleaved (Re, Im) coefficients."""
    j = np.arange(w, dtype=np.float64)
    basis = np.empty((w, l), dtype=np.float64)
    start = 1 if p else 0
    for c in range(l // 2):
        angle = 2.0 * np.pi * j * (start + c) / w
        basis[:, 2 * c] = np.cos(angle)
        basis[:, 2 * c + 1] = -np.sin(angle)
    return basis


def dft_truncated(window, l: int, p: bool) -> np.ndarray:
    """Interleaved real/imaginary parts of the leading DFT coefficients.

    Uses the unnormalised forward sum ``X_k = sum_j x_j exp(-2 pi i j k / w)``
    and returns ``X_0 .. X_{l/2-1}``, or ``X_1 .. X_{l/2}`` when ``p`` is true.
    The window is not normalised here.
    """
    x = np.asarray(window, dtype=np.float64)
    _check_dft_args(x.size, l, p)
    return x @ _dft_basis(x.size, l, p)


def sliding_windows(series, w: int) -> np.ndarray:
    """Read-only (m - w + 1, w) view of every contiguous window."""
    x = np.asarray(series, dtype=np.float64)
    if not 1 <= w <= x.size:
        raise ParameterError(f"window length {w} not in [1, {x.size}]")
    return sliding_window_view(x, w)


def window_coefficients(X, params: SfaParameters) -> np.ndarray:
    """Truncated DFT values of every window of every row of ``X``.

    Returns an array of shape (n, m - w + 1, l).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n, m = X.shape
    params.check_series_length(m)
    w, l, p = params.window_length, params.word_length, params.normalize
    basis = _dft_basis(w, l, p)
    n_windows = m - w + 1
    out = np.empty((n, n_windows, l), dtype=np.float64)
    step = max(1, _BLOCK_ELEMENTS // (n_windows * w))
    for start in range(0, n, step):
        win = sliding_window_view(X[start : start + step], w, axis=1)
        if p:
            sd = win.std(axis=-1, keepdims=True)
            flat = sd < EPS_STD
            win = (win - win.mean(axis=-1, keepdims=True)) / np.where(flat, 1.0, sd)
            win[np.broadcast_to(flat, win.shape)] = 0.0
        out[start : start + step] = win @ basis
    return out


def fit_mcb(train: LabeledDataset | np.ndarray, params: SfaParameters) -> np.ndarray:
    """Equi-depth breakpoints for each coefficient position.

    For a column of ``N`` sorted values ``v``, threshold ``k`` (1-based, up to
    ``alpha - 1``) is the midpoint of ``v[r-1]`` and ``v[r]`` where
    ``r = floor(k N / alpha)``, clamped so both ranks exist.

    Returns
    -------
    ndarray of shape (l, alpha - 1), rows non-decreasing, read-only.
    """
    X = train.series if isinstance(train, LabeledDataset) else train
    coeffs = window_coefficients(X, params)
    cols = np.sort(coeffs.reshape(-1, params.word_length), axis=0)
    N = cols.shape[0]
    a = params.alphabet_size
    ranks = np.array([(k * N) // a for k in range(1, a)], dtype=np.int64)
    hi = np.clip(ranks, 0, N - 1)
    lo = np.clip(ranks - 1, 0, N - 1)
    bp = 0.5 * (cols[lo] + cols[hi])
    bp = np.ascontiguousarray(bp.T)
    # Midpoints of sorted values are already ordered; guard rounding anyway.
    bp = np.maximum.accumulate(bp, axis=1)
    bp.setflags(write=False)
    return bp


def _symbols(coeffs: np.ndarray, bp: np.ndarray) -> np.ndarray:
    sym = np.empty(coeffs.shape, dtype=np.int64)
    for c in range(bp.shape[0]):
        # Count of thresholds strictly below the value: ties go to the lower bin.
        sym[..., c] = np.searchsorted(bp[c], coeffs[..., c], side="left")
    return sym


def _pack(sym: np.ndarray, alpha: int) -> np.ndarray:
    l = sym.shape[-1]
    if alpha ** l < 2**63:
        powers = alpha ** np.arange(l, dtype=np.int64)
        return sym @ powers
    powers = np.array([alpha**i for i in range(l)], dtype=object)
    return sym.astype(object) @ powers


def encode_word(symbols, alpha: int) -> int:
    """Pack a symbol sequence; symbol ``i`` is base-``alpha`` digit ``i``."""
    word = 0
    for i, s in enumerate(symbols):
        s = int(s)
        if not 0 <= s < alpha:
            raise ParameterError(f"symbol {s} outside alphabet of size {alpha}")
        word += s * alpha**i
    return word


def decode_word(word: int, l: int, alpha: int) -> tuple:
    word = int(word)
    out = []
    for _ in range(l):
        word, s = divmod(word, alpha)
        out.append(s)
    return tuple(out)


def sfa_word(coeffs, bp) -> int:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    bp = np.asarray(bp, dtype=np.float64)
    if coeffs.ndim != 1 or coeffs.size != bp.shape[0]:
        raise ParameterError(
            f"expected {bp.shape[0]} coefficients, got {coeffs.size}"
        )
    return encode_word(_symbols(coeffs, bp), bp.shape[1] + 1)


def transform_words(X, params: SfaParameters, bp: np.ndarray) -> np.ndarray:
    """Word of every window of every row of ``X``, shape (n, m - w + 1)."""
    if bp.shape != (params.word_length, params.alphabet_size - 1):
        raise ParameterError(
            f"breakpoints of shape {bp.shape} do not match {params}"
        )
    return _pack(_symbols(window_coefficients(X, params), bp), params.alphabet_size)


def reduce_numerosity(words: np.ndarray) -> np.ndarray:
    """Mask of windows that count: the first, and any differing from its predecessor."""
    keep = np.ones(words.shape, dtype=bool)
    keep[..., 1:] = words[..., 1:] != words[..., :-1]
    return keep


def bag_of_words(series, params: SfaParameters, bp: np.ndarray) -> dict:
    """Sparse word histogram of one series with numerosity reduction."""
    words = transform_words(np.asarray(series, dtype=np.float64)[None, :], params, bp)[0]
    kept = words[reduce_numerosity(words)]
    uniq, counts = np.unique(kept, return_counts=True)
    return {int(u): int(c) for u, c in zip(uniq, counts)}
