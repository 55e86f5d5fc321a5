"""Bootstrap bias corrections for the winning arm.

All resampling loops are vectorized over the ``B`` draws: a call returns the
``(B, K)`` matrix of bootstrap arm means and the corrections are reductions of
that matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import FS19, NPB, HongLi, MoonN, ParamPB, resolve_kappa
from .core import DataError, Experiment, Interval, WinnerReport, studentized_gaps

MAX_REDRAWS = 1000


@dataclass(frozen=True)
class BootstrapDraws:
    """Bootstrap arm means, one row per draw."""

    arm_means: np.ndarray

    @property
    def winner(self) -> np.ndarray:
        return self.arm_means.argmax(axis=1)

    @property
    def phi(self) -> np.ndarray:
        return self.arm_means.max(axis=1)


def _check(exp: Experiment, B: int):
    if B < 1:
        raise ValueError("B must be >= 1")
    if exp.N < 4:
        raise DataError("too small to bootstrap")


def _pooled_indices(labels: np.ndarray, K: int, m: int, B: int, rng: np.random.Generator) -> np.ndarray:
    """``(B, m)`` row indices drawn with replacement; every row covers all arms.

    Rows missing an arm are redrawn up to ``MAX_REDRAWS`` times. Rows that still
    miss an arm are replaced by ``m // K`` draws within each arm, padded with -1.
    """
    N = labels.size
    idx = rng.integers(0, N, size=(B, m))

    def missing(rows):
        lab = labels[rows]
        present = np.zeros((rows.shape[0], K), dtype=bool)
        np.put_along_axis(present, lab, True, axis=1)
        return ~present.all(axis=1)

    bad = np.flatnonzero(missing(idx))
    for _ in range(MAX_REDRAWS):
        if bad.size == 0:
            return idx
        idx[bad] = rng.integers(0, N, size=(bad.size, m))
        bad = bad[missing(idx[bad])]
    if bad.size:
        per_arm = m // K
        members = [np.flatnonzero(labels == k) for k in range(K)]
        for r in bad:
            row = np.full(m, -1)
            row[: per_arm * K] = np.concatenate([rng.choice(mk, size=per_arm) for mk in members])
            idx[r] = row
    return idx


def _arm_means_from_indices(exp: Experiment, idx: np.ndarray) -> np.ndarray:
    labels, values = exp.pooled
    K = exp.K
    B = idx.shape[0]
    valid = idx >= 0
    safe = np.where(valid, idx, 0)
    key = (labels[safe] + K * np.arange(B)[:, None])[valid]
    sums = np.bincount(key, weights=values[safe][valid], minlength=B * K).reshape(B, K)
    counts = np.bincount(key, minlength=B * K).reshape(B, K)
    return sums / counts


def pooled_draws(exp: Experiment, m: int, B: int, rng: np.random.Generator) -> BootstrapDraws:
    if m < exp.K:
        raise ValueError("resample size must be >= number of arms")
    labels, _ = exp.pooled
    return BootstrapDraws(_arm_means_from_indices(exp, _pooled_indices(labels, exp.K, m, B, rng)))


def stratified_draws(exp: Experiment, B: int, rng: np.random.Generator) -> BootstrapDraws:
    cols = []
    for arm in exp.arms:
        n = len(arm)
        cols.append(arm.values[rng.integers(0, n, size=(B, n))].mean(axis=1))
    return BootstrapDraws(np.column_stack(cols))


def resample_pooled(exp: Experiment, m: int, rng: np.random.Generator) -> Experiment:
    """One pooled resample of size ``m`` that contains every arm."""
    if m < exp.K:
        raise ValueError("resample size must be >= number of arms")
    labels, values = exp.pooled
    row = _pooled_indices(labels, exp.K, m, 1, rng)[0]
    row = row[row >= 0]
    return Experiment.from_pooled(labels[row], values[row], exp.K)


def resample_stratified(exp: Experiment, rng: np.random.Generator) -> Experiment:
    """Resample each arm with replacement, keeping every arm's size."""
    return Experiment(tuple(a.values[rng.integers(0, len(a), size=len(a))] for a in exp.arms))


def moon_size(N: int, K: int, gamma: float) -> int:
    return max(K, int(math.floor(N**gamma)))


@dataclass(frozen=True)
class TieShrinkage:
    """Arm means after pooling the arms that are statistically tied with the winner."""

    means: np.ndarray
    active: np.ndarray
    eta: np.ndarray


def shrink_to_tie(exp: Experiment, c_eta: float = 1.1) -> TieShrinkage:
    """Pool every arm within ``eta_N`` of the winner into the active-set mean.

    ``eta_N = c_eta * se_diff * sqrt(2 log log N)`` where ``se_diff`` is the
    standard error of the difference between the winner and the arm.
    """
    means = exp.means
    k = exp.winner
    se_diff = np.sqrt(exp.ses[k] ** 2 + exp.ses**2)
    eta = c_eta * se_diff * math.sqrt(max(2.0 * math.log(math.log(exp.N)), 0.0))
    active = (means[k] - means) <= eta
    active[k] = True
    tau = means.copy()
    tau[active] = means[active].mean()
    return TieShrinkage(tau, active, eta)


def bootstrap_correct(
    exp: Experiment, cfg: NPB | MoonN | ParamPB, rng: np.random.Generator, target: str | None = None
) -> WinnerReport:
    """Bias-correct the plug-in estimate with a bootstrap estimate of the winner's curse.

    ``target="global"`` subtracts the mean of ``phi* - phi_hat``;
    ``target="select"`` subtracts the mean of ``phi* - center[k*]`` where the
    centre is the original mean of the bootstrap winner (the shrunk mean for
    the parametric bootstrap).
    """
    target = cfg.target if target is None else target
    _check(exp, cfg.B)
    phi = float(exp.means.max())
    diag: dict[str, float] = {}
    center = exp.means
    if isinstance(cfg, ParamPB):
        sh = shrink_to_tie(exp, cfg.c_eta)
        center = sh.means
        # the mean of n Gaussian draws is drawn directly from its exact law
        draws = BootstrapDraws(rng.normal(center, exp.ses, size=(cfg.B, exp.K)))
        diag["n_active"] = float(sh.active.sum())
    elif isinstance(cfg, MoonN):
        m = moon_size(exp.N, exp.K, cfg.gamma)
        draws = pooled_draws(exp, m, cfg.B, rng)
        diag["m"] = float(m)
    elif isinstance(cfg, NPB):
        draws = pooled_draws(exp, exp.N, cfg.B, rng)
        diag["m"] = float(exp.N)
    else:
        raise TypeError(f"not a bootstrap config: {cfg!r}")
    phi_star = draws.phi
    wc_glo = float(np.mean(phi_star - phi))
    wc_sel = float(np.mean(phi_star - center[draws.winner]))
    wc = wc_sel if target == "select" else wc_glo
    diag.update(wc=wc, wc_select=wc_sel, wc_global=wc_glo)
    return WinnerReport(method=cfg.name, winner=exp.winner, estimate=phi - wc, diagnostics=diag)


def fs19_active_set(exp: Experiment, kappa: float) -> np.ndarray:
    """Arms whose studentized gap to the winner is at most ``kappa``."""
    k = exp.winner
    active = studentized_gaps(exp.means, exp.ses, k) <= kappa
    active[k] = True
    return active


def fs19_correct(exp: Experiment, cfg: FS19, rng: np.random.Generator) -> WinnerReport:
    """Directional-derivative bootstrap correction.

    The bias of the max is the expected max of the scaled bootstrap
    perturbations over the arms that cannot be told apart from the winner.
    """
    _check(exp, cfg.B)
    kappa = resolve_kappa(cfg.kappa_rule, exp.counts)
    active = fs19_active_set(exp, kappa)
    draws = stratified_draws(exp, cfg.B, rng)
    h = np.sqrt(exp.counts) * (draws.arm_means - exp.means)
    d_star = h[:, active].max(axis=1)
    correction = float(d_star.mean()) / math.sqrt(exp.counts.min())
    phi = float(exp.means.max())
    return WinnerReport(
        method=cfg.name,
        winner=exp.winner,
        estimate=phi - correction,
        diagnostics={"wc": correction, "kappa": kappa, "n_active": float(active.sum())},
    )


def hongli_eps(exp: Experiment, rule) -> float:
    if rule == "N":
        return exp.N ** -0.25
    if rule == "n":
        return float(exp.counts.min()) ** -0.25
    return float(rule)


def hongli_correct(exp: Experiment, cfg: HongLi, rng: np.random.Generator) -> WinnerReport:
    """Numerical-derivative bootstrap correction with step ``eps``."""
    _check(exp, cfg.B)
    eps = hongli_eps(exp, cfg.eps_rule)
    root_n = math.sqrt(exp.N)
    draws = stratified_draws(exp, cfg.B, rng)
    h = root_n * (draws.arm_means - exp.means)
    phi = float(exp.means.max())
    phi_eps = (exp.means + eps * h).max(axis=1)
    d_star = (phi_eps - phi) / eps
    correction = float(d_star.mean()) / root_n
    return WinnerReport(
        method=cfg.name,
        winner=exp.winner,
        estimate=phi - correction,
        diagnostics={"wc": correction, "eps": eps},
    )


def corrected_estimate(exp: Experiment, cfg, rng: np.random.Generator) -> WinnerReport:
    if isinstance(cfg, FS19):
        return fs19_correct(exp, cfg, rng)
    if isinstance(cfg, HongLi):
        return hongli_correct(exp, cfg, rng)
    return bootstrap_correct(exp, cfg, rng)


def boot_of_boot_ci(
    exp: Experiment, inner_cfg, outer_B: int, alpha: float, rng: np.random.Generator
) -> Interval:
    """Percentile interval of the corrected estimator over stratified outer resamples."""
    if outer_B < 20:
        raise ValueError("outer_B must be >= 20")
    est = np.empty(outer_B)
    for b in range(outer_B):
        est[b] = corrected_estimate(resample_stratified(exp, rng), inner_cfg, rng).estimate
    lo, hi = np.quantile(est, [alpha / 2, 1 - alpha / 2])
    return Interval(float(lo), float(hi), 1 - alpha)
