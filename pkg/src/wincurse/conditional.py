"""Truncated-normal conditional, projection and hybrid inference for the winner.

With independent arms the selection event for the winner reduces to
``x_W >= x_L`` where ``x_L`` is the runner-up mean, so the winner's mean is
normal truncated below at ``x_L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from .core import DataError, Experiment, Interval, WinnerReport

BRACKET_SD = 20.0
BRACKET_DOUBLINGS = 10
ROOT_TOL = 1e-8


class ConditionalDivergence(DataError):
    """The conditional median/quantile equation has no root in the search window."""


@dataclass(frozen=True)
class TruncNormal:
    mu: float
    sigma: float
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.lower < self.upper:
            raise ValueError("need lower < upper")


def tn_cdf(x: float, tn: TruncNormal) -> float:
    """CDF of a truncated normal, evaluated on the log scale.

    Whichever tail the truncation region sits in is handled through the
    matching log-CDF so that far-tail windows do not cancel to 0/0.
    """
    if x <= tn.lower:
        return 0.0
    if x >= tn.upper:
        return 1.0
    a = (tn.lower - tn.mu) / tn.sigma
    b = (tn.upper - tn.mu) / tn.sigma
    z = (x - tn.mu) / tn.sigma
    if a > 0:
        # right tail: work with survival functions S(t) = Phi(-t)
        la, lb, lz = special.log_ndtr(-a), special.log_ndtr(-b), special.log_ndtr(-z)
        val = math.expm1(lz - la) / math.expm1(lb - la)
    else:
        la, lb, lz = special.log_ndtr(a), special.log_ndtr(b), special.log_ndtr(z)
        val = math.exp(lz - lb) * math.expm1(la - lz) / math.expm1(la - lb)
    return min(max(val, 0.0), 1.0)


def projection_critical(alpha: float, K: int) -> float:
    """Simultaneous normal critical value over ``K`` independent arms."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return float(stats.norm.ppf((1 + (1 - alpha) ** (1.0 / K)) / 2))


def akm_projection(x_w: float, sd_w: float, alpha: float = 0.05, K: int = 2) -> Interval:
    c = projection_critical(alpha, K)
    return Interval(x_w - c * sd_w, x_w + c * sd_w, 1 - alpha)


def _solve_decreasing(f, p: float, x_w: float, sd: float) -> float:
    """Root of ``f(mu) = p`` for a nonincreasing ``f`` on an expanding bracket."""
    half = BRACKET_SD * sd
    for _ in range(BRACKET_DOUBLINGS + 1):
        lo, hi = x_w - half, x_w + half
        f_lo, f_hi = f(lo) - p, f(hi) - p
        if f_lo >= 0 >= f_hi:
            if f_lo == 0:
                return lo
            if f_hi == 0:
                return hi
            return optimize.brentq(lambda m: f(m) - p, lo, hi, xtol=ROOT_TOL * sd, rtol=4 * np.finfo(float).eps)
        half *= 2
    raise ConditionalDivergence("conditional CI diverged")


def _check_inputs(x_w, x_l, sd_w):
    if not sd_w > 0:
        raise DataError("winner standard error must be positive")
    if x_w < x_l:
        raise ValueError("x_W must be >= x_L")


def akm_conditional(
    x_w: float, x_l: float, sd_w: float, alpha: float = 0.05, winner: int = 0
) -> WinnerReport:
    """Median-unbiased estimate and equal-tailed interval given selection.

    Raises ``ConditionalDivergence`` when ``x_W`` sits so close to ``x_L``
    that the defining equations have no root in the search window; the
    conditional interval is unbounded in that limit.
    """
    _check_inputs(x_w, x_l, sd_w)

    def F(mu):
        return tn_cdf(x_w, TruncNormal(mu, sd_w, x_l, math.inf))

    point = _solve_decreasing(F, 0.5, x_w, sd_w)
    lo = _solve_decreasing(F, 1 - alpha / 2, x_w, sd_w)
    hi = _solve_decreasing(F, alpha / 2, x_w, sd_w)
    return WinnerReport(
        method="akm_cond",
        winner=winner,
        estimate=point,
        interval=Interval(lo, hi, 1 - alpha),
        diagnostics={"x_l": x_l, "sd_w": sd_w},
    )


def akm_hybrid(
    x_w: float,
    x_l: float,
    sd_w: float,
    alpha: float = 0.05,
    beta: float | None = None,
    K: int = 2,
    winner: int = 0,
) -> WinnerReport:
    """Conditional inference restricted to the level-``beta`` projection window.

    For each candidate ``mu`` the truncation region is
    ``[max(x_L, mu - c sd), mu + c sd]``. All roots lie inside
    ``x_W +/- c sd``. When the equation has only a jump there, the jump
    point is returned and ``no_exact_root`` is set.
    """
    _check_inputs(x_w, x_l, sd_w)
    beta = alpha / 10 if beta is None else beta
    if not 0 < beta < alpha:
        raise ValueError("beta must lie in (0, alpha)")
    c = projection_critical(beta, K)
    lo_w, hi_w = x_w - c * sd_w, x_w + c * sd_w

    def F(mu):
        # window edges by their limits, immune to rounding in mu +/- c sd
        if mu <= lo_w:
            return 1.0
        if mu >= hi_w:
            return 0.0
        lower = max(x_l, mu - c * sd_w)
        upper = mu + c * sd_w
        if x_w >= upper:
            return 1.0
        if x_w <= lower:
            return 0.0
        return tn_cdf(x_w, TruncNormal(mu, sd_w, lower, upper))

    inexact = 0

    def solve(p):
        nonlocal inexact
        root = optimize.brentq(lambda m: F(m) - p, lo_w, hi_w, xtol=ROOT_TOL * sd_w, rtol=4 * np.finfo(float).eps)
        if abs(F(root) - p) > 1e-6:
            inexact += 1
        return root

    gamma = (alpha - beta) / (2 * (1 - beta))
    point = solve(0.5)
    lo = solve(1 - gamma)
    hi = solve(gamma)
    return WinnerReport(
        method="akm_hybrid",
        winner=winner,
        estimate=point,
        interval=Interval(lo, hi, 1 - alpha),
        diagnostics={"c_beta": c, "no_exact_root": float(inexact > 0), "x_l": x_l, "sd_w": sd_w},
    )


def winner_and_runner_up(exp: Experiment) -> tuple[int, float, float, float]:
    """``(k_hat, x_W, x_L, sd_W)`` for the conditional methods."""
    k = exp.winner
    others = np.delete(exp.means, k)
    return k, float(exp.means[k]), float(others.max()), float(exp.ses[k])
