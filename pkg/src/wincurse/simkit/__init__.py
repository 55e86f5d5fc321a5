"""Simulation kit: DGPs, closed-form oracles and the Monte Carlo engine."""

from .dgp import (
    BernoulliMatchedD,
    KArmPrior,
    NormalTwoArm,
    PlatformMixture,
    ScenarioSpec,
    TruthRecord,
    allocation,
    bernoulli_d,
    gen_bernoulli,
    gen_karm_prior,
    gen_normal_two_arm,
    gen_platform_mixture,
    generate,
    solve_p2_for_d,
)
from .engine import COLUMNS, MetricsRecord, ReplicationTable, SimulationResult, run_replications, run_scenario
from .oracles import analytic_kink_bias, expected_regret, realized_cohens_d
