"""Dispatch from a method configuration to its implementation."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import conditional, elik, estimators, resampling
from .config import (
    EL,
    FS19,
    NPB,
    AKMCond,
    AKMHybrid,
    AKMProj,
    Bayes,
    CrossFit,
    HongLi,
    MethodConfig,
    MoonN,
    ParamPB,
    PlugIn,
    SampleSplit,
)
from .core import DataError, Experiment, WinnerReport


def run_method(exp: Experiment, cfg: MethodConfig, rng: np.random.Generator | None = None) -> WinnerReport:
    """Apply one method to one experiment.

    The report's ``method`` field is always ``cfg.name``.
    """
    rng = np.random.default_rng() if rng is None else rng
    a = cfg.alpha
    if isinstance(cfg, PlugIn):
        rep = estimators.plug_in(exp, a)
    elif isinstance(cfg, SampleSplit):
        rep = estimators.sample_split(exp, cfg.frac, rng, a)
    elif isinstance(cfg, CrossFit):
        rep = estimators.cross_fit(exp, rng, a)
    elif isinstance(cfg, Bayes):
        rep = estimators.empirical_bayes(exp, a)
    elif isinstance(cfg, (NPB, MoonN, ParamPB, FS19, HongLi)):
        rep = resampling.corrected_estimate(exp, cfg, rng)
        if cfg.ci_outer_B:
            ci = resampling.boot_of_boot_ci(exp, cfg, cfg.ci_outer_B, a, rng)
            rep = replace(rep, interval=ci)
    elif isinstance(cfg, (AKMCond, AKMHybrid, AKMProj)):
        k, x_w, x_l, sd_w = conditional.winner_and_runner_up(exp)
        if sd_w == 0.0:
            raise DataError("winner standard error is zero")
        if isinstance(cfg, AKMCond):
            rep = conditional.akm_conditional(x_w, x_l, sd_w, a, winner=k)
        elif isinstance(cfg, AKMHybrid):
            rep = conditional.akm_hybrid(x_w, x_l, sd_w, a, cfg.beta_value, exp.K, winner=k)
        else:
            ci = conditional.akm_projection(x_w, sd_w, a, exp.K)
            rep = WinnerReport("akm_proj", k, x_w, ci)
    elif isinstance(cfg, EL):
        rep = elik.el_inference(exp, a, cfg.mode, cfg.kappa_rule)
    else:
        raise TypeError(f"unsupported method config {cfg!r}")
    return replace(rep, method=cfg.name)
