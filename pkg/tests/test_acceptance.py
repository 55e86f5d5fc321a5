"""Acceptance criteria at desk scale.

Every Monte Carlo check uses the single fixed ``SEED``; nothing here is tuned
per criterion. Run with ``-s`` or read the terminal summary for one
PASS/FAIL line per criterion.
"""

import io
import math
import time

import numpy as np
import pytest

from wincurse.cli import main
from wincurse.config import (
    EL,
    FS19,
    NPB,
    AKMCond,
    AKMHybrid,
    AKMProj,
    Bayes,
    CrossFit,
    HongLi,
    MoonN,
    ParamPB,
    PlugIn,
    SampleSplit,
)
from wincurse.elik import chibar_cdf, cone_statistic, el_deviance
from wincurse.estimators import cross_fit
from wincurse.simkit.oracles import CF_KINK_CORRELATION, CF_KINK_VARIANCE_INFLATION
from wincurse.simkit import (
    BernoulliMatchedD,
    KArmPrior,
    NormalTwoArm,
    PlatformMixture,
    ScenarioSpec,
    analytic_kink_bias,
    expected_regret,
    generate,
    run_replications,
    run_scenario,
)

SEED = 20261015

BOOTSTRAP_CORRECTED = [
    NPB(),
    NPB(target="global"),
    MoonN(),
    ParamPB(),
    ParamPB(target="global"),
    FS19(),
    HongLi(),
]


def criterion(n):
    return pytest.mark.acceptance(n)


def _by_method(records):
    return {r.method: r for r in records}


# ------------------------------------------------------------------ 1


@criterion(1)
@pytest.mark.parametrize("J, expected", [(2, 4.245), (1, 3.841)])
def test_c1_critval(J, expected):
    t0 = time.perf_counter()
    out = io.StringIO()
    assert main(["critval", "--arms", str(J), "--alpha", "0.05"], out) == 0
    assert time.perf_counter() - t0 < 1.0
    assert float(out.getvalue()) == pytest.approx(expected, abs=0.001)


# ------------------------------------------------------------------ 2


@criterion(2)
@pytest.mark.parametrize("J", [2, 3, 4])
def test_c2_chibar_ks(J):
    t0 = time.perf_counter()
    Z = np.random.default_rng(np.random.SeedSequence(SEED, spawn_key=(J,))).standard_normal((1_000_000, J))
    T = np.sort(cone_statistic(Z))
    F = chibar_cdf(T, J)
    n = T.size
    ks = max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n))
    print(f"J={J} KS={ks:.5f}")
    assert ks < 0.005
    assert time.perf_counter() - t0 < 60


# ------------------------------------------------------------------ 3


@criterion(3)
def test_c3_kink_bias():
    t0 = time.perf_counter()
    spec = ScenarioSpec(NormalTwoArm.from_d(0.0), N=400, R=50_000, seed=SEED)
    (rec,) = run_scenario(spec, [PlugIn()])
    target = analytic_kink_bias(1.0, 1.0, 200)
    print(f"bias={rec.bias_global:.6f} se={rec.bias_global_se:.6f} analytic={target:.6f}")
    assert rec.bias_global == pytest.approx(target, rel=0.05)
    assert time.perf_counter() - t0 < 120


# ------------------------------------------------------------------ 4


@criterion(4)
def test_c4_cross_fit_kink():
    t0 = time.perf_counter()
    m, R = 200, 20_000
    dgp = NormalTwoArm.from_d(0.0)
    pairs = np.empty((R, 2))
    for r in range(R):
        dgp_rng, split_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(SEED, spawn_key=(r,)).spawn(2))
        exp, _ = generate(dgp, 4 * m, dgp_rng)
        diag = cross_fit(exp, split_rng).diagnostics
        pairs[r] = diag["theta_ab"], diag["theta_ba"]
    rho = np.corrcoef(pairs.T)[0, 1]
    ratio = pairs.mean(axis=1).var(ddof=1) / (1 / (2 * m))
    print(f"rho={rho:.4f} (1/pi={CF_KINK_CORRELATION:.4f}) ratio={ratio:.4f} (1+1/pi={CF_KINK_VARIANCE_INFLATION:.4f})")
    assert rho == pytest.approx(1 / math.pi, abs=0.02)
    assert ratio == pytest.approx(1 + 1 / math.pi, abs=0.04)
    assert time.perf_counter() - t0 < 120


# ------------------------------------------------------------------ 5


@criterion(5)
def test_c5_regret_closed_form():
    t0 = time.perf_counter()
    spec = ScenarioSpec(NormalTwoArm(mu1=1.0, delta=0.5, sigma=1.0), N=100, R=5000, seed=SEED)
    recs = _by_method(run_scenario(spec, [PlugIn(), SampleSplit()]))
    full = expected_regret(0.5, 1.0, 50, 50)
    split = expected_regret(0.5, 1.0, 50, 50, split=True)
    for name, target in (("plug_in", full), ("sample_split", split)):
        r = recs[name]
        print(f"{name}: regret={r.regret:.5f} se={r.regret_se:.5f} closed form={target:.5f}")
        assert abs(r.regret - target) < 3 * r.regret_se
    assert time.perf_counter() - t0 < 60


# ------------------------------------------------------------------ 6


@pytest.fixture(scope="module")
def el_coverage():
    t0 = time.perf_counter()
    modes = [EL(mode="adaptive"), EL(mode="chisq"), EL(mode="chibar")]
    out = {}
    for d in (0.0, 0.8):
        spec = ScenarioSpec(NormalTwoArm.from_d(d), N=100, R=2000, seed=SEED)
        for rec in run_scenario(spec, modes):
            out[(rec.method, d)] = rec
            print(f"d={d} {rec.method}: coverage={rec.coverage_global:.4f} se={rec.coverage_global_se:.4f}")
    out["elapsed"] = time.perf_counter() - t0
    return out


@criterion(6)
@pytest.mark.slow
@pytest.mark.parametrize("d", [0.0, 0.8])
def test_c6_adaptive_coverage(el_coverage, d):
    assert abs(el_coverage[("el_adaptive", d)].coverage_global - 0.95) <= 0.015


@criterion(6)
@pytest.mark.slow
def test_c6_chisq_undercovers_at_kink(el_coverage):
    # the limiting chi-square coverage at a two-arm tie is 93.77%, above this bound
    assert el_coverage[("el_chisq", 0.0)].coverage_global < 0.935


@criterion(6)
@pytest.mark.slow
def test_c6_chibar_overcovers_away_from_kink(el_coverage):
    assert el_coverage[("el_chibar", 0.8)].coverage_global > 0.96


@criterion(6)
@pytest.mark.slow
def test_c6_runtime(el_coverage):
    assert el_coverage["elapsed"] < 600


# ------------------------------------------------------------------ 7


@criterion(7)
def test_c7_el_deviance_vs_convex_solver():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(3, 6))
        x = rng.normal(size=n)
        m = x.min() + rng.uniform(0.05, 0.95) * (x.max() - x.min())
        p = cp.Variable(n)
        prob = cp.Problem(cp.Maximize(cp.sum(cp.log(p))), [cp.sum(p) == 1, x @ p == m])
        prob.solve(solver="CLARABEL", tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
        brute = -2 * (prob.value + n * math.log(n))
        worst = max(worst, abs(el_deviance(x, m).value - brute))
    print(f"max abs deviation={worst:.2e}")
    assert worst < 1e-6


# ------------------------------------------------------------------ 8

ALL_METHODS = [
    PlugIn(),
    SampleSplit(),
    CrossFit(),
    Bayes(),
    *BOOTSTRAP_CORRECTED,
    AKMCond(),
    AKMProj(),
    AKMHybrid(),
    EL(mode="adaptive"),
    EL(mode="chibar"),
    EL(mode="chisq"),
]

GRID = [
    NormalTwoArm.from_d(0.0),
    NormalTwoArm.from_d(0.5),
    NormalTwoArm.from_d(0.8, sigma=0.2),
    BernoulliMatchedD(0.5, 0.2),
    KArmPrior(K=3, sigma0=0.1),
    KArmPrior(K=4, sigma0=0.0),
    PlatformMixture(K=4),
]


@criterion(8)
@pytest.mark.parametrize("dgp", GRID, ids=lambda g: f"{g.labels['dgp']}-K{g.K}-d{g.labels['d']:g}")
def test_c8_identity(dgp):
    spec = ScenarioSpec(dgp, N=100, R=20, B=50, seed=SEED)
    res = run_replications(spec, ALL_METHODS)
    truths = [
        generate(dgp, spec.N, np.random.default_rng(np.random.SeedSequence(SEED, spawn_key=(r, 0))))[1].true_means
        for r in range(spec.R)
    ]
    checked = 0
    for t in res.tables.values():
        for r, mu in enumerate(truths):
            if t.failed[r]:
                continue
            est, k_hat, k_star = t.estimate[r], t.winner[r], int(np.argmax(mu))
            lhs = (est - mu[k_hat]) - (est - mu[k_star])
            assert abs(lhs - (mu[k_star] - mu[k_hat])) <= 1e-12
            assert abs(t.err_select[r] - t.err_global[r] - t.regret[r]) <= 1e-12
            checked += 1
    assert checked >= 0.9 * spec.R * len(ALL_METHODS)


# ------------------------------------------------------------------ 9


@criterion(9)
@pytest.mark.parametrize("d", [0.2, 0.5])
def test_c9_regret_ordering(d):
    spec = ScenarioSpec(NormalTwoArm.from_d(d), N=100, R=2000, seed=SEED)
    res = run_replications(spec, [PlugIn(), SampleSplit(), *BOOTSTRAP_CORRECTED])
    plug = res.tables["plug_in"]
    for cfg in BOOTSTRAP_CORRECTED:
        t = res.tables[cfg.name]
        np.testing.assert_array_equal(t.winner, plug.winner)
        assert t.regret.mean() == plug.regret.mean()
    split, full = res.tables["sample_split"].regret.mean(), plug.regret.mean()
    print(f"d={d}: regret plug-in={full:.5f} sample-split={split:.5f}")
    assert split > full


# ------------------------------------------------------------------ 10

TABLE_METHODS = [PlugIn(), SampleSplit(), CrossFit(), *BOOTSTRAP_CORRECTED, AKMCond(), AKMHybrid()]


@criterion(10)
@pytest.mark.slow
def test_c10_cross_fit_bias_at_kink():
    spec = ScenarioSpec(NormalTwoArm.from_d(0.0), N=100, R=2000, seed=SEED)
    recs = _by_method(run_scenario(spec, [PlugIn(), CrossFit()]))
    cf, plug = recs["cross_fit"].bias_select, recs["plug_in"].bias_select
    print(f"select bias: cross-fit={cf:.5f} plug-in={plug:.5f}")
    assert abs(cf) < plug


@criterion(10)
@pytest.mark.slow
def test_c10_plug_in_mse_large_effect():
    t0 = time.perf_counter()
    spec = ScenarioSpec(NormalTwoArm.from_d(0.8), N=100, R=2000, seed=SEED)
    recs = _by_method(run_scenario(spec, TABLE_METHODS))
    plug = recs["plug_in"].mse_select
    for name, rec in recs.items():
        print(f"{name}: mse_select={rec.mse_select:.5f} se={rec.mse_select_se:.5f}")
        assert plug <= rec.mse_select + 2 * rec.mse_select_se, name
    assert time.perf_counter() - t0 < 900


# ------------------------------------------------------------------ 11


@criterion(11)
def test_c11_platform_cohens_d():
    d = {}
    for K in (2, 10):
        spec = ScenarioSpec(PlatformMixture(K=K), N=5700, R=500, seed=SEED)
        d[K] = run_replications(spec, [PlugIn()]).cohens_d_realized
        print(f"K={K}: realized d={d[K]:.4f}")
        assert 0.02 <= d[K] <= 0.12
    assert d[2] < d[10]
