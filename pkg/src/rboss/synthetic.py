"""Synthetic datasets where classes differ in how often a pattern repeats."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rboss.data import LabeledDataset
from rboss.exceptions import SpecError

__all__ = ["SyntheticSpec", "generate_synthetic", "parse_synthetic_spec"]


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for :func:`generate_synthetic`.

    Each instance is Gaussian noise plus ``counts[c]`` copies of one period
    of a sine wave of length ``pattern_length`` and height ``amplitude``,
    placed at random non-overlapping offsets.
    """

    n_per_class: int = 30
    m: int = 128
    counts: tuple = (1, 4)
    pattern_length: int = 16
    noise: float = 0.5
    amplitude: float = 2.0

    @property
    def classes(self) -> int:
        return len(self.counts)

    def validate(self) -> "SyntheticSpec":
        if self.classes not in (2, 3):
            raise SpecError(f"need 2 or 3 classes, got {self.classes}")
        if self.n_per_class < 1 or self.m < 1 or self.pattern_length < 1:
            raise SpecError("n_per_class, m and pattern_length must be positive")
        if self.noise < 0:
            raise SpecError("noise must be non-negative")
        for c in self.counts:
            if c < 0:
                raise SpecError("pattern counts must be non-negative")
            if c * self.pattern_length > self.m:
                raise SpecError(
                    f"{c} patterns of length {self.pattern_length} do not fit in {self.m} points"
                )
        return self


def _offsets(rng, m, length, count):
    # Stars and bars: choose slots among the free positions, then spread them
    # so consecutive patterns are at least ``length`` apart.
    free = m - count * length
    slots = np.sort(rng.choice(free + count, size=count, replace=False))
    return slots + np.arange(count) * (length - 1)


def generate_synthetic(spec: SyntheticSpec, seed: int) -> LabeledDataset:
    spec.validate()
    rng = np.random.default_rng(seed)
    t = np.arange(spec.pattern_length)
    pattern = spec.amplitude * np.sin(2 * np.pi * t / spec.pattern_length)
    rows, labels = [], []
    for c, count in enumerate(spec.counts):
        for _ in range(spec.n_per_class):
            x = rng.normal(0.0, spec.noise, size=spec.m) if spec.noise > 0 else np.zeros(spec.m)
            for off in _offsets(rng, spec.m, spec.pattern_length, count):
                x[off : off + spec.pattern_length] += pattern
            rows.append(x)
            labels.append(c)
    return LabeledDataset(np.array(rows), np.array(labels), spec.classes)


_KEYS = {
    "n": ("n_per_class", int),
    "m": ("m", int),
    "pattern": ("pattern_length", int),
    "noise": ("noise", float),
    "amplitude": ("amplitude", float),
}


def parse_synthetic_spec(text: str) -> SyntheticSpec:
    """Parse ``"n=30,m=128,counts=1:4,pattern=16,noise=0.5"``; omitted keys keep defaults."""
    kwargs = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise SpecError(f"expected key=value, got {item!r}")
        key = key.strip()
        try:
            if key == "counts":
                kwargs["counts"] = tuple(int(v) for v in value.split(":"))
            elif key in _KEYS:
                name, conv = _KEYS[key]
                kwargs[name] = conv(value)
            else:
                raise SpecError(f"unknown synthetic spec key {key!r}")
        except ValueError:
            raise SpecError(f"bad value for {key!r}: {value!r}") from None
    return SyntheticSpec(**kwargs).validate()
