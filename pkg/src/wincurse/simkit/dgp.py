"""Data-generating processes for the simulation study."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from scipy import optimize

from ..core import DataError, Experiment

P_CLAMP = 1e-6


@dataclass(frozen=True)
class TruthRecord:
    true_means: np.ndarray

    @property
    def k_star(self) -> int:
        return int(np.argmax(self.true_means))

    @property
    def theta0(self) -> float:
        return float(self.true_means[self.k_star])


def allocation(N: int, K: int) -> np.ndarray:
    """Balanced per-arm sizes; the remainder goes to the last arm."""
    if N < 2 * K:
        raise ValueError("need N >= 2K")
    n = np.full(K, N // K)
    n[-1] += N - n.sum()
    return n


@dataclass(frozen=True)
class NormalTwoArm:
    mu1: float = 1.0
    delta: float = 0.0
    sigma: float = 1.0
    K = 2

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @classmethod
    def from_d(cls, d: float, sigma: float = 1.0, mu1: float = 1.0) -> "NormalTwoArm":
        return cls(mu1=mu1, delta=d * sigma, sigma=sigma)

    @property
    def labels(self) -> dict:
        return {"dgp": "normal", "K": 2, "d": self.delta / self.sigma, "sigma": self.sigma}


@dataclass(frozen=True)
class BernoulliMatchedD:
    p1: float = 0.5
    d: float = 0.0
    K = 2

    def __post_init__(self):
        self.p2  # fail early on an unachievable d

    @cached_property
    def p2(self) -> float:
        return solve_p2_for_d(self.p1, self.d)

    @property
    def labels(self) -> dict:
        return {"dgp": "bernoulli", "K": 2, "d": self.d, "sigma": math.nan}


@dataclass(frozen=True)
class KArmPrior:
    K: int = 5
    sigma0: float = 0.1
    sigma: float = 1.0
    base_mean: float = 1.0

    def __post_init__(self):
        if self.K < 2 or self.sigma0 < 0 or not self.sigma > 0:
            raise ValueError("need K >= 2, sigma0 >= 0, sigma > 0")

    @property
    def labels(self) -> dict:
        return {"dgp": "karm", "K": self.K, "d": self.sigma0 / self.sigma, "sigma": self.sigma}


@dataclass(frozen=True)
class PlatformMixture:
    K: int = 2
    p0: float = 0.633
    pi0: float = 0.82
    mu_e: float = -0.0032
    sigma_e: float = 0.0815

    @property
    def labels(self) -> dict:
        return {"dgp": "platform", "K": self.K, "d": math.nan, "sigma": math.nan}


DGP = Union[NormalTwoArm, BernoulliMatchedD, KArmPrior, PlatformMixture]


@dataclass(frozen=True)
class ScenarioSpec:
    dgp: DGP
    N: int = 100
    R: int = 2000
    # overrides the resample count of every bootstrap method when set
    B: int | None = None
    seed: int = 0

    def __post_init__(self):
        allocation(self.N, self.dgp.K)
        if self.R < 1:
            raise ValueError("R must be >= 1")


def bernoulli_d(p1: float, p2: float) -> float:
    return (p2 - p1) / math.sqrt(0.5 * (p1 * (1 - p1) + p2 * (1 - p2)))


def solve_p2_for_d(p1: float, d: float) -> float:
    """Second-arm rate whose Cohen's d against ``p1`` equals ``d``."""
    if not 0 < p1 < 1:
        raise ValueError("p1 must lie in (0, 1)")
    if d == 0:
        return p1
    lo, hi = (p1, 1.0) if d > 0 else (0.0, p1)
    f = lambda p2: bernoulli_d(p1, p2) - d  # noqa: E731
    f_edge = f(hi) if d > 0 else f(lo)
    if (d > 0 and f_edge <= 0) or (d < 0 and f_edge >= 0):
        raise DataError("unachievable effect size")
    return optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-14)


def _normal_arms(means, sigma, counts, rng) -> Experiment:
    return Experiment.from_arrays([rng.normal(m, sigma, size=n) for m, n in zip(means, counts)])


def _bernoulli_arms(ps, counts, rng) -> Experiment:
    return Experiment.from_arrays([(rng.random(n) < p).astype(float) for p, n in zip(ps, counts)])


def gen_normal_two_arm(dgp: NormalTwoArm, N: int, rng: np.random.Generator):
    means = np.array([dgp.mu1, dgp.mu1 + dgp.delta])
    return _normal_arms(means, dgp.sigma, allocation(N, 2), rng), TruthRecord(means)


def gen_bernoulli(dgp: BernoulliMatchedD, N: int, rng: np.random.Generator):
    ps = np.array([dgp.p1, dgp.p2])
    return _bernoulli_arms(ps, allocation(N, 2), rng), TruthRecord(ps)


def gen_karm_prior(dgp: KArmPrior, N: int, rng: np.random.Generator):
    means = rng.normal(dgp.base_mean, dgp.sigma0, size=dgp.K)
    return _normal_arms(means, dgp.sigma, allocation(N, dgp.K), rng), TruthRecord(means)


def gen_platform_mixture(dgp: PlatformMixture, N: int, rng: np.random.Generator):
    nonnull = rng.random(dgp.K) < 1 - dgp.pi0
    tau = rng.normal(dgp.mu_e, dgp.sigma_e, size=dgp.K)
    ps = np.clip(dgp.p0 + nonnull * tau, P_CLAMP, 1 - P_CLAMP)
    return _bernoulli_arms(ps, allocation(N, dgp.K), rng), TruthRecord(ps)


_GENERATORS = {
    NormalTwoArm: gen_normal_two_arm,
    BernoulliMatchedD: gen_bernoulli,
    KArmPrior: gen_karm_prior,
    PlatformMixture: gen_platform_mixture,
}


def generate(dgp: DGP, N: int, rng: np.random.Generator) -> tuple[Experiment, TruthRecord]:
    return _GENERATORS[type(dgp)](dgp, N, rng)
