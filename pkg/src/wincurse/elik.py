"""Empirical-likelihood inference for the largest arm mean.

The profile deviance for ``theta = max_k mu_k`` is the smallest one-sample
EL deviance over the ``K`` ways of making some arm the maximizer. At a tie
its limit law is a chi-bar-squared mixture rather than chi-square with one
degree of freedom. The adaptive interval pre-tests for ties and picks the
critical value to match.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

from .config import KappaRule, resolve_kappa
from .core import DataError, Experiment, Interval, WinnerReport, studentized_gaps

LAMBDA_MAX_ITER = 200
LAMBDA_TOL = 1e-12
CI_MAX_DOUBLINGS = 50
CI_TOL = 1e-8


@dataclass(frozen=True)
class ELDeviance:
    value: float
    lam: float
    feasible: bool
    weights: np.ndarray | None = field(default=None, repr=False)


def el_lambda(x, m: float) -> float:
    """Lagrange multiplier solving ``sum z / (1 + lam z) = 0`` with ``z = x - m``.

    The left side is strictly decreasing on the interval where every
    ``1 + lam z`` is positive. The solver is a Newton iteration that falls back
    to bisection whenever a step leaves the current bracket.
    """
    z = np.asarray(x, dtype=float) - m
    zmin, zmax = z.min(), z.max()
    if not zmin < 0 < zmax:
        raise DataError("infeasible constraint")
    lo, hi = -1.0 / zmax, -1.0 / zmin
    tol = LAMBDA_TOL * np.abs(z).sum()
    lam = 0.0
    for _ in range(LAMBDA_MAX_ITER):
        denom = 1.0 + lam * z
        g = float(np.sum(z / denom))
        if abs(g) <= tol:
            return lam
        if g > 0:
            lo = lam
        else:
            hi = lam
        dg = -float(np.sum((z / denom) ** 2))
        step = lam - g / dg
        lam = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * max(abs(lo), abs(hi)):
            return lam
    return lam


def el_deviance(x, m: float, with_weights: bool = False) -> ELDeviance:
    """``-2 log`` of the empirical likelihood ratio for the mean ``m``.

    Infinite outside the open convex hull of the sample. A constant sample
    has deviance 0 at its value and infinity elsewhere.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    lo, hi = x.min(), x.max()
    if lo == hi:
        if m == lo:
            return ELDeviance(0.0, 0.0, True, np.full(n, 1.0 / n) if with_weights else None)
        return ELDeviance(math.inf, math.nan, False)
    if not lo < m < hi:
        return ELDeviance(math.inf, math.nan, False)
    lam = el_lambda(x, m)
    t = lam * (x - m)
    value = max(2.0 * float(np.sum(np.log1p(t))), 0.0)
    w = 1.0 / (n * (1.0 + t)) if with_weights else None
    return ELDeviance(value, lam, True, w)


def arm_deviances(exp: Experiment, theta: float) -> np.ndarray:
    return np.array([el_deviance(a.values, theta).value for a in exp.arms])


def profile_deviance(exp: Experiment, theta: float) -> float:
    """Minimum over branches ``k`` of ``D_k + sum_{j != k, mean_j > theta} D_j``."""
    d = arm_deviances(exp, theta)
    above = exp.means > theta
    # avoid 0 * inf: an infinite deviance only counts where the indicator fires
    extra = np.where(above, d, 0.0)
    return min(float(d[k] + np.delete(extra, k).sum()) for k in range(exp.K))


def chibar_cdf(t, J: int):
    """CDF of the limit of the profile deviance when ``J`` arms tie.

    With ``k >= 1`` of the ``J`` components positive (probability
    ``C(J, k) / 2^J``) the statistic is chi-square with ``k`` degrees of
    freedom. With none positive it is the smallest of ``J`` squared
    half-normals. Accepts scalars or arrays.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    x = np.asarray(t, dtype=float)
    pos = np.maximum(x, 0.0)
    w = 0.5**J
    total = sum(special.comb(J, k) * w * stats.chi2.cdf(pos, k) for k in range(1, J + 1))
    f1 = stats.chi2.cdf(pos, 1)
    total = total + w * (1.0 - (1.0 - f1) ** J)
    out = np.where(x > 0, np.minimum(total, 1.0), 0.0)
    return float(out) if out.ndim == 0 else out


def chibar_quantile(p: float, J: int) -> float:
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if J == 1:
        return float(stats.chi2.ppf(p, 1))
    hi = float(stats.chi2.ppf(p, J))
    return optimize.brentq(lambda c: chibar_cdf(c, J) - p, 0.0, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)


def cone_statistic(Z: np.ndarray) -> np.ndarray:
    """Squared distance from ``Z`` to the boundary of the nonpositive orthant.

    Rows with a positive component: sum of squared positive parts. Rows
    inside the orthant: the smallest squared component.
    """
    Z = np.atleast_2d(Z)
    pos = np.clip(Z, 0.0, None)
    outside = (Z > 0).any(axis=1)
    return np.where(outside, (pos**2).sum(axis=1), (Z**2).min(axis=1))


@dataclass(frozen=True)
class ActiveSet:
    members: frozenset
    kappa: float
    stats: np.ndarray

    @property
    def J_eff(self) -> int:
        return len(self.members)


def default_kappa_rule(K: int) -> str:
    """``loglog`` for two arms, ``log`` otherwise; both thresholds are in use and pass the rate conditions."""
    return "loglog" if K == 2 else "log"


def pretest_active_set(exp: Experiment, kappa_rule: KappaRule | None = None) -> ActiveSet:
    """Arms statistically tied with the empirical winner."""
    rule = default_kappa_rule(exp.K) if kappa_rule is None else kappa_rule
    kappa = resolve_kappa(rule, exp.counts)
    k = exp.winner
    s = studentized_gaps(exp.means, exp.ses, k)
    members = {int(j) for j in np.flatnonzero(s <= kappa)} | {k}
    return ActiveSet(frozenset(members), kappa, s)


def adaptive_critical(exp: Experiment, alpha: float = 0.05, kappa_rule: KappaRule | None = None) -> float:
    return chibar_quantile(1 - alpha, pretest_active_set(exp, kappa_rule).J_eff)


def el_cutoff(exp: Experiment, alpha: float, mode: str, kappa_rule: KappaRule | None = None) -> float:
    if mode == "adaptive":
        return adaptive_critical(exp, alpha, kappa_rule)
    if mode == "chibar":
        return chibar_quantile(1 - alpha, exp.K)
    if mode == "chisq":
        return float(stats.chi2.ppf(1 - alpha, 1))
    raise ValueError(f"unknown EL mode {mode!r}")


def _endpoint(dev, theta_hat: float, step: float, direction: int, cutoff: float) -> tuple[float, bool]:
    """Outermost ``theta`` on one side with ``dev(theta) <= cutoff``.

    Returns ``(endpoint, clipped)``; ``clipped`` is set when no crossing is
    found within the doubling budget.
    """
    inside = theta_hat
    dist = step
    for _ in range(CI_MAX_DOUBLINGS):
        t = theta_hat + direction * dist
        if dev(t) > cutoff:
            outside = t
            break
        inside = t
        dist *= 2
    else:
        return inside, True
    while abs(outside - inside) > CI_TOL:
        mid = 0.5 * (inside + outside)
        if dev(mid) > cutoff:
            outside = mid
        else:
            inside = mid
    return inside, False


def el_confidence_interval(
    exp: Experiment, alpha: float = 0.05, mode: str = "adaptive", kappa_rule: KappaRule | None = None
) -> tuple[Interval, dict[str, float]]:
    """Invert the profile deviance test at the mode's critical value."""
    cutoff = el_cutoff(exp, alpha, mode, kappa_rule)
    theta_hat = float(exp.means.max())
    diag = {"cutoff": cutoff}
    if mode == "adaptive":
        diag["J_eff"] = float(pretest_active_set(exp, kappa_rule).J_eff)
    step = float(exp.ses[exp.winner])
    if step == 0.0:
        step = float(exp.ses.max())
    if step == 0.0:
        diag.update(clipped_lo=0.0, clipped_hi=0.0)
        return Interval(theta_hat, theta_hat, 1 - alpha), diag

    def dev(t):
        return profile_deviance(exp, t)

    lo, clip_lo = _endpoint(dev, theta_hat, step, -1, cutoff)
    hi, clip_hi = _endpoint(dev, theta_hat, step, +1, cutoff)
    diag.update(clipped_lo=float(clip_lo), clipped_hi=float(clip_hi))
    return Interval(lo, hi, 1 - alpha), diag


def el_inference(
    exp: Experiment, alpha: float = 0.05, mode: str = "adaptive", kappa_rule: KappaRule | None = None
) -> WinnerReport:
    interval, diag = el_confidence_interval(exp, alpha, mode, kappa_rule)
    return WinnerReport(
        method=f"el_{mode}",
        winner=exp.winner,
        estimate=float(exp.means.max()),
        interval=interval,
        diagnostics=diag,
    )
