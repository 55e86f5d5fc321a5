"""Closed-form reference values used to check the simulation output."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from ..estimators import CF_KINK_CORRELATION, CF_KINK_VARIANCE_INFLATION

__all__ = [
    "expected_regret",
    "analytic_kink_bias",
    "realized_cohens_d",
    "CF_KINK_CORRELATION",
    "CF_KINK_VARIANCE_INFLATION",
]


def expected_regret(delta: float, sigma: float, n1: int, n2: int, split: bool = False) -> float:
    """Expected shortfall of the arm picked by comparing two sample means.

    With ``split`` the selection uses half of each arm, which doubles the
    variance of the compared difference.
    """
    if not sigma > 0 or n1 < 1 or n2 < 1:
        raise ValueError("need sigma > 0 and n1, n2 >= 1")
    if delta == 0:
        return 0.0
    scale = sigma * math.sqrt((2.0 if split else 1.0) * (1.0 / n1 + 1.0 / n2))
    return abs(delta) * float(stats.norm.cdf(-abs(delta) / scale))


def analytic_kink_bias(sigma1: float, sigma2: float, n: int) -> float:
    """Leading-order bias of the max of two means with equal true means."""
    return math.sqrt((sigma1**2 + sigma2**2) / (2 * math.pi)) / math.sqrt(n)


def realized_cohens_d(top_gaps, top_pair_sds) -> float:
    """Average top-two true gap over the average pooled SD of those two arms.

    ``top_pair_sds`` holds one ``(s_1, s_2)`` row of sample SDs per replication.
    """
    gaps = np.asarray(top_gaps, dtype=float)
    sds = np.asarray(top_pair_sds, dtype=float)
    pooled = np.sqrt(0.5 * (sds[:, 0] ** 2 + sds[:, 1] ** 2))
    return float(gaps.mean() / pooled.mean())
