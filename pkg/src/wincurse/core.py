"""Domain types, per-arm summary statistics and winner selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np


class DataError(ValueError):
    """Input data cannot support the requested computation."""


@dataclass(frozen=True)
class ArmSample:
    """Raw outcomes for a single arm."""

    values: np.ndarray
    label: int = 0

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(arr)):
            raise DataError(f"arm {self.label}: non-finite outcome")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ArmSummary:
    n: int
    mean: float
    var: float
    se: float


def summarize(sample: ArmSample | np.ndarray) -> ArmSummary:
    """Mean, unbiased variance and standard error of one arm.

    The variance uses the ``n - 1`` denominator and is reported as 0 for a
    single observation.
    """
    x = sample.values if isinstance(sample, ArmSample) else np.asarray(sample, dtype=float)
    n = x.size
    if n == 0:
        raise DataError("empty arm")
    mean = float(x.mean())
    var = float(x.var(ddof=1)) if n >= 2 else 0.0
    var = max(var, 0.0)
    return ArmSummary(n=n, mean=mean, var=var, se=math.sqrt(var / n))


def select_winner(summaries: Sequence[ArmSummary] | Sequence[float] | np.ndarray) -> int:
    """Index of the largest mean; ties go to the lowest index."""
    means = [s.mean if isinstance(s, ArmSummary) else float(s) for s in summaries]
    if len(means) < 2:
        raise DataError("need at least two arms")
    # np.argmax returns the first maximal index
    return int(np.argmax(means))


def studentized_gaps(means: np.ndarray, ses: np.ndarray, winner: int) -> np.ndarray:
    """``(mean[winner] - mean[j]) / sqrt(se[winner]^2 + se[j]^2)`` for every arm.

    A zero standard error gives ``+inf`` for a strictly positive gap and 0
    for an exact tie, so degenerate arms are excluded or included cleanly.
    """
    gap = means[winner] - means
    se_diff = np.sqrt(ses[winner] ** 2 + ses**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(se_diff > 0, gap / se_diff, np.where(gap > 0, np.inf, 0.0))


@dataclass(frozen=True)
class Experiment:
    """Ordered collection of arm samples, labelled ``0..K-1``."""

    arms: tuple[ArmSample, ...]

    def __post_init__(self):
        arms = tuple(
            a if isinstance(a, ArmSample) else ArmSample(a, label=i) for i, a in enumerate(self.arms)
        )
        if len(arms) < 2:
            raise DataError("need at least two arms")
        arms = tuple(a if a.label == i else ArmSample(a.values, label=i) for i, a in enumerate(arms))
        object.__setattr__(self, "arms", arms)

    @classmethod
    def from_arrays(cls, arrays: Sequence[Sequence[float]]) -> "Experiment":
        return cls(tuple(ArmSample(a, label=i) for i, a in enumerate(arrays)))

    @classmethod
    def from_pooled(cls, labels: np.ndarray, values: np.ndarray, K: int | None = None) -> "Experiment":
        labels = np.asarray(labels, dtype=int)
        values = np.asarray(values, dtype=float)
        K = int(labels.max()) + 1 if K is None else K
        return cls(tuple(ArmSample(values[labels == k], label=k) for k in range(K)))

    @property
    def K(self) -> int:
        return len(self.arms)

    @property
    def N(self) -> int:
        return int(sum(len(a) for a in self.arms))

    @cached_property
    def summaries(self) -> tuple[ArmSummary, ...]:
        return tuple(summarize(a) for a in self.arms)

    @cached_property
    def means(self) -> np.ndarray:
        return np.array([s.mean for s in self.summaries])

    @cached_property
    def ses(self) -> np.ndarray:
        return np.array([s.se for s in self.summaries])

    @cached_property
    def counts(self) -> np.ndarray:
        return np.array([s.n for s in self.summaries], dtype=int)

    @cached_property
    def pooled(self) -> tuple[np.ndarray, np.ndarray]:
        """``(labels, values)`` of all observations, arm by arm."""
        labels = np.concatenate([np.full(len(a), a.label, dtype=int) for a in self.arms])
        values = np.concatenate([a.values for a in self.arms])
        return labels, values

    @cached_property
    def winner(self) -> int:
        return select_winner(self.summaries)

    def shifted(self, c: float, scale: float = 1.0) -> "Experiment":
        """Experiment with every outcome mapped to ``c + scale * y``."""
        return Experiment(tuple(ArmSample(c + scale * a.values, a.label) for a in self.arms))


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    level: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval endpoints out of order: ({self.lo}, {self.hi})")

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class WinnerReport:
    """Output of every method.

    ``selection`` lists the arm(s) whose true means define the method's own
    selected target; it is ``(winner,)`` except for cross-fitting, which
    selects once per fold.
    """

    method: str
    winner: int
    estimate: float
    interval: Interval | None = None
    diagnostics: Mapping[str, float] = field(default_factory=dict)
    selection: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.selection:
            object.__setattr__(self, "selection", (self.winner,))

    def selected_truth(self, true_means: Sequence[float]) -> float:
        return float(np.mean([true_means[k] for k in self.selection]))
