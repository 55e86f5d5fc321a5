"""Inference for the winning arm of a multi-arm experiment."""

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
    parse_method,
    parse_methods,
)
from .core import (
    ArmSample,
    ArmSummary,
    DataError,
    Experiment,
    Interval,
    WinnerReport,
    select_winner,
    summarize,
)
from .methods import run_method

__version__ = "0.1.0"
