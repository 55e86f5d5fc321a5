"""Monte Carlo engine: replications, per-replication tables and metric rows.

Replication ``r`` draws everything from ``SeedSequence(seed, spawn_key=(r,))``
so results do not depend on the number of workers or on scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from ..conditional import ConditionalDivergence
from ..config import MethodConfig
from ..core import DataError
from ..methods import run_method
from .dgp import ScenarioSpec, generate
from .oracles import realized_cohens_d

# errors a method may legitimately raise on an unlucky replication
METHOD_FAILURES = (DataError, ConditionalDivergence, ValueError, ArithmeticError)


@dataclass
class ReplicationTable:
    """Per-replication output of one method."""

    method: str
    estimate: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    winner: np.ndarray
    select_truth: np.ndarray
    global_truth: np.ndarray
    failed: np.ndarray

    @property
    def err_select(self) -> np.ndarray:
        return self.estimate - self.select_truth

    @property
    def err_global(self) -> np.ndarray:
        return self.estimate - self.global_truth

    @property
    def regret(self) -> np.ndarray:
        return self.global_truth - self.select_truth


@dataclass
class SimulationResult:
    spec: ScenarioSpec
    tables: dict[str, ReplicationTable]
    top_gaps: np.ndarray
    top_sds: np.ndarray = field(repr=False)

    @property
    def cohens_d_realized(self) -> float:
        return realized_cohens_d(self.top_gaps, self.top_sds)


@dataclass(frozen=True)
class MetricsRecord:
    dgp: str
    N: int
    K: int
    d: float
    sigma: float
    method: str
    R: int
    n_ok: int
    failure_rate: float
    bias_select: float
    bias_select_se: float
    bias_global: float
    bias_global_se: float
    mse_select: float
    mse_select_se: float
    mse_global: float
    mse_global_se: float
    coverage_select: float
    coverage_select_se: float
    coverage_global: float
    coverage_global_se: float
    regret: float
    regret_se: float
    cohens_d_realized: float


COLUMNS = tuple(f.name for f in fields(MetricsRecord))


def _prepare(spec: ScenarioSpec, methods: Sequence[MethodConfig], alpha: float | None):
    out = []
    for cfg in methods:
        if alpha is not None:
            cfg = replace(cfg, alpha=alpha)
        if spec.B is not None:
            cfg = cfg.with_B(spec.B)
        out.append(cfg)
    names = [c.name for c in out]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate method names in {names}")
    return out


def _replicate(spec: ScenarioSpec, methods: Sequence[MethodConfig], r: int):
    ss = np.random.SeedSequence(spec.seed, spawn_key=(r,))
    children = ss.spawn(1 + len(methods))
    exp, truth = generate(spec.dgp, spec.N, np.random.default_rng(children[0]))
    order = np.argsort(-truth.true_means, kind="stable")
    top = order[:2]
    gap = float(truth.true_means[top[0]] - truth.true_means[top[1]])
    sds = tuple(math.sqrt(exp.summaries[k].var) for k in top)
    rows = []
    for cfg, child in zip(methods, children[1:]):
        try:
            rep = run_method(exp, cfg, np.random.default_rng(child))
        except METHOD_FAILURES:
            rows.append((math.nan, math.nan, math.nan, -1, math.nan, True))
            continue
        lo, hi = (rep.interval.lo, rep.interval.hi) if rep.interval else (math.nan, math.nan)
        rows.append((rep.estimate, lo, hi, rep.winner, rep.selected_truth(truth.true_means), False))
    return truth.theta0, gap, sds, rows


def _replicate_chunk(args):
    spec, methods, reps = args
    return [_replicate(spec, methods, r) for r in reps]


def run_replications(
    spec: ScenarioSpec,
    methods: Sequence[MethodConfig],
    alpha: float | None = None,
    workers: int = 1,
) -> SimulationResult:
    methods = _prepare(spec, methods, alpha)
    reps = range(spec.R)
    if workers > 1:
        chunks = [list(reps[i::workers]) for i in range(workers)]
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_replicate_chunk, [(spec, methods, c) for c in chunks]))
        results = [None] * spec.R
        for chunk, part in zip(chunks, parts):
            for r, res in zip(chunk, part):
                results[r] = res
    else:
        results = [_replicate(spec, methods, r) for r in reps]

    theta0 = np.array([res[0] for res in results])
    gaps = np.array([res[1] for res in results])
    sds = np.array([res[2] for res in results])
    tables = {}
    for j, cfg in enumerate(methods):
        cols = list(zip(*(res[3][j] for res in results)))
        tables[cfg.name] = ReplicationTable(
            method=cfg.name,
            estimate=np.array(cols[0], dtype=float),
            lo=np.array(cols[1], dtype=float),
            hi=np.array(cols[2], dtype=float),
            winner=np.array(cols[3], dtype=int),
            select_truth=np.array(cols[4], dtype=float),
            global_truth=theta0.copy(),
            failed=np.array(cols[5], dtype=bool),
        )
    return SimulationResult(spec, tables, gaps, sds)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    if n == 0:
        return math.nan, math.nan
    m = math.fsum(x) / n
    if n == 1:
        return m, math.nan
    var = math.fsum((x - m) ** 2) / (n - 1)
    return m, math.sqrt(var / n)


def summarize_table(t: ReplicationTable, spec: ScenarioSpec, cohens_d: float) -> MetricsRecord:
    ok = ~t.failed
    es, eg = t.err_select[ok], t.err_global[ok]
    has_ci = ok & ~np.isnan(t.lo)
    metrics = {}
    metrics["bias_select"], metrics["bias_select_se"] = _mean_se(es)
    metrics["bias_global"], metrics["bias_global_se"] = _mean_se(eg)
    metrics["mse_select"], metrics["mse_select_se"] = _mean_se(es**2)
    metrics["mse_global"], metrics["mse_global_se"] = _mean_se(eg**2)
    for target, truth in (("select", t.select_truth), ("global", t.global_truth)):
        cover = ((t.lo <= truth) & (truth <= t.hi))[has_ci].astype(float)
        p, _ = _mean_se(cover)
        se = math.sqrt(p * (1 - p) / cover.size) if cover.size else math.nan
        metrics[f"coverage_{target}"], metrics[f"coverage_{target}_se"] = p, se
    metrics["regret"], metrics["regret_se"] = _mean_se(t.regret[ok])
    labels = spec.dgp.labels
    return MetricsRecord(
        dgp=labels["dgp"],
        N=spec.N,
        K=labels["K"],
        d=labels["d"],
        sigma=labels["sigma"],
        method=t.method,
        R=spec.R,
        n_ok=int(ok.sum()),
        failure_rate=float(t.failed.mean()),
        cohens_d_realized=cohens_d,
        **metrics,
    )


def run_scenario(
    spec: ScenarioSpec,
    methods: Sequence[MethodConfig],
    alpha: float | None = None,
    workers: int = 1,
) -> list[MetricsRecord]:
    """One metrics row per method for a simulation cell."""
    res = run_replications(spec, methods, alpha, workers)
    d = res.cohens_d_realized
    return [summarize_table(t, spec, d) for t in res.tables.values()]
