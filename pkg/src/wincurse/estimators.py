"""Estimators that do not resample: plug-in, sample splitting, cross-fitting
and empirical-Bayes shrinkage."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import stats

from .core import DataError, Experiment, Interval, WinnerReport, select_winner

SPLIT_RETRIES = 100

# Var(cross-fit estimate) / (1 / 2m) at an exact two-arm tie with unit variance.
CF_KINK_VARIANCE_INFLATION = 1.0 + 1.0 / math.pi
CF_KINK_CORRELATION = 1.0 / math.pi


@lru_cache(maxsize=1024)
def _t_quantile(p: float, df: float) -> float:
    return float(stats.t.ppf(p, df))


def t_interval(center: float, se: float, df: float, alpha: float) -> Interval:
    if se == 0.0:
        return Interval(center, center, 1 - alpha)
    q = _t_quantile(1 - alpha / 2, df)
    return Interval(center - q * se, center + q * se, 1 - alpha)


def plug_in(exp: Experiment, alpha: float = 0.05) -> WinnerReport:
    """Maximum of the arm means with a naive t interval around it."""
    k = exp.winner
    s = exp.summaries[k]
    return WinnerReport(
        method="plug_in",
        winner=k,
        estimate=s.mean,
        interval=t_interval(s.mean, s.se, max(s.n - 1, 1), alpha),
    )


@dataclass(frozen=True)
class SplitPlan:
    """Fold membership of every pooled observation (``True`` means fold A)."""

    fold_assignment: np.ndarray
    retry_count: int

    def folds(self, exp: Experiment) -> tuple[Experiment, Experiment]:
        labels, values = exp.pooled
        a = self.fold_assignment
        return (
            Experiment.from_pooled(labels[a], values[a], exp.K),
            Experiment.from_pooled(labels[~a], values[~a], exp.K),
        )


def make_split(exp: Experiment, frac: float, rng: np.random.Generator) -> SplitPlan:
    """Random pooled split, redrawn until both folds hold >= 2 obs of every arm."""
    if not 0.0 < frac < 1.0:
        raise ValueError("split fraction must lie in (0, 1)")
    labels, _ = exp.pooled
    N = labels.size
    n_a = int(math.floor(N * frac))
    for attempt in range(SPLIT_RETRIES):
        in_a = np.zeros(N, dtype=bool)
        in_a[rng.permutation(N)[:n_a]] = True
        cnt_a = np.bincount(labels[in_a], minlength=exp.K)
        cnt_b = np.bincount(labels[~in_a], minlength=exp.K)
        if cnt_a.min() >= 2 and cnt_b.min() >= 2:
            return SplitPlan(in_a, attempt)
    raise DataError("infeasible split")


def sample_split(
    exp: Experiment,
    frac: float = 0.5,
    rng: np.random.Generator | None = None,
    alpha: float = 0.05,
    plan: SplitPlan | None = None,
) -> WinnerReport:
    """Select on fold A, estimate the chosen arm on fold B."""
    if plan is None:
        plan = make_split(exp, frac, np.random.default_rng() if rng is None else rng)
    fold_a, fold_b = plan.folds(exp)
    k = select_winner(fold_a.summaries)
    s = fold_b.summaries[k]
    return WinnerReport(
        method="sample_split",
        winner=k,
        estimate=s.mean,
        interval=t_interval(s.mean, s.se, s.n - 1, alpha),
        diagnostics={"retry_count": float(plan.retry_count), "n_eval": float(s.n)},
    )


def cross_fit(
    exp: Experiment,
    rng: np.random.Generator | None = None,
    alpha: float = 0.05,
    plan: SplitPlan | None = None,
) -> WinnerReport:
    """Average of the two sample-split estimates with the folds exchanged.

    The interval treats the two fold estimates as independent and uses
    ``N - 1`` degrees of freedom. At an exact tie the two estimates are
    positively correlated, so this interval is too short there;
    ``CF_KINK_VARIANCE_INFLATION`` gives the size of the effect.
    """
    if plan is None:
        plan = make_split(exp, 0.5, np.random.default_rng() if rng is None else rng)
    fold_a, fold_b = plan.folds(exp)
    k_a = select_winner(fold_a.summaries)
    k_b = select_winner(fold_b.summaries)
    est_ab = fold_b.summaries[k_a]
    est_ba = fold_a.summaries[k_b]
    estimate = 0.5 * (est_ab.mean + est_ba.mean)
    se = 0.5 * math.sqrt(est_ab.se**2 + est_ba.se**2)
    return WinnerReport(
        method="cross_fit",
        winner=k_a,
        estimate=estimate,
        interval=t_interval(estimate, se, exp.N - 1, alpha),
        diagnostics={
            "theta_ab": est_ab.mean,
            "theta_ba": est_ba.mean,
            "se": se,
            "kink_variance_inflation": CF_KINK_VARIANCE_INFLATION,
            "retry_count": float(plan.retry_count),
        },
        selection=(k_a, k_b),
    )


@dataclass(frozen=True)
class Shrinkage:
    grand_mean: float
    prior_var: float
    weights: np.ndarray
    posterior_means: np.ndarray


def shrink_to_grand_mean(means, ses) -> Shrinkage:
    """Method-of-moments normal-normal shrinkage toward the grand mean."""
    means = np.asarray(means, dtype=float)
    ses = np.asarray(ses, dtype=float)
    K = means.size
    grand = float(means.mean())
    prior_var = max(0.0, float(np.sum((means - grand) ** 2)) / (K - 1) - float(np.mean(ses**2)))
    denom = prior_var + ses**2
    # prior_var == se == 0: no information either way, keep the sample mean
    w = np.divide(prior_var, denom, out=np.ones(K), where=denom > 0)
    return Shrinkage(grand, prior_var, w, w * means + (1 - w) * grand)


def empirical_bayes(exp: Experiment, alpha: float = 0.05) -> WinnerReport:
    sh = shrink_to_grand_mean(exp.means, exp.ses)
    k = select_winner(sh.posterior_means)
    K = exp.K
    w = float(sh.weights[k])
    var_grand = sh.prior_var / K + float(np.sum(exp.ses**2)) / K**2
    var_post = (1 - w) * sh.prior_var + (1 - w) ** 2 * var_grand
    est = float(sh.posterior_means[k])
    z = float(stats.norm.ppf(1 - alpha / 2))
    half = z * math.sqrt(var_post)
    return WinnerReport(
        method="bayes",
        winner=k,
        estimate=est,
        interval=Interval(est - half, est + half, 1 - alpha),
        diagnostics={"prior_var": sh.prior_var, "shrinkage_weight": w, "grand_mean": sh.grand_mean},
    )
