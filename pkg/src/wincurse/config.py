"""Method configurations and tuning-parameter rules.

Every method is a frozen dataclass. ``parse_method`` turns the compact text
form used on the command line and in simulation configs into a config::

    plug_in
    moon:gamma=0.45:target=global
    el:mode=chibar
    akm_hybrid:beta=0.005
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import ClassVar, Sequence, Union

TARGETS = ("select", "global")
KappaRule = Union[str, float]


def resolve_kappa(rule: KappaRule, counts: Sequence[int], c_eta: float = 1.1) -> float:
    """Pre-test threshold on the studentized-difference scale.

    ``"loglog"``  sqrt(log log min n)        (two-arm adaptive EL default)
    ``"log"``     sqrt(log min n)            (J-arm active set, FS19)
    ``"pb"``      c_eta * sqrt(2 log log N)  (the parametric-bootstrap shrink rule)
    a number      used as is
    """
    if isinstance(rule, (int, float)) and not isinstance(rule, bool):
        return float(rule)
    n_min = min(counts)
    N = sum(counts)
    if rule == "loglog":
        return math.sqrt(max(math.log(math.log(n_min)), 0.0)) if n_min > 1 else 0.0
    if rule == "log":
        return math.sqrt(math.log(n_min)) if n_min > 1 else 0.0
    if rule == "pb":
        return c_eta * math.sqrt(max(2.0 * math.log(math.log(N)), 0.0))
    raise ValueError(f"unknown kappa rule {rule!r}")


@dataclass(frozen=True)
class MethodConfig:
    alpha: float = 0.05

    key: ClassVar[str] = ""

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def name(self) -> str:
        return self.key

    def with_B(self, B: int) -> "MethodConfig":
        return replace(self, B=B) if hasattr(self, "B") else self


@dataclass(frozen=True)
class PlugIn(MethodConfig):
    key: ClassVar[str] = "plug_in"


@dataclass(frozen=True)
class SampleSplit(MethodConfig):
    frac: float = 0.5
    key: ClassVar[str] = "sample_split"

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 < self.frac < 1.0:
            raise ValueError("frac must lie in (0, 1)")

    @property
    def name(self):
        return "sample_split" if self.frac == 0.5 else f"sample_split{self.frac:g}"


@dataclass(frozen=True)
class CrossFit(MethodConfig):
    key: ClassVar[str] = "cross_fit"


@dataclass(frozen=True)
class _Resampling(MethodConfig):
    B: int = 200
    # outer resamples for the bootstrap-of-bootstraps interval; 0 = no interval
    ci_outer_B: int = 0

    def __post_init__(self):
        super().__post_init__()
        if self.B < 1:
            raise ValueError("B must be >= 1")
        if self.ci_outer_B and self.ci_outer_B < 20:
            raise ValueError("ci_outer_B must be 0 or >= 20")


@dataclass(frozen=True)
class _Targeted(_Resampling):
    target: str = "select"

    def __post_init__(self):
        super().__post_init__()
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")

    @property
    def name(self):
        return f"{self.key}_{self.target[:3]}"


@dataclass(frozen=True)
class NPB(_Targeted):
    key: ClassVar[str] = "npb"


@dataclass(frozen=True)
class MoonN(_Targeted):
    gamma: float = 0.95
    key: ClassVar[str] = "moon"

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")

    @property
    def name(self):
        return f"moon{self.gamma:g}_{self.target[:3]}"


@dataclass(frozen=True)
class ParamPB(_Targeted):
    c_eta: float = 1.1
    key: ClassVar[str] = "param_pb"


@dataclass(frozen=True)
class FS19(_Resampling):
    kappa_rule: KappaRule = "log"
    key: ClassVar[str] = "fs19"


@dataclass(frozen=True)
class HongLi(_Resampling):
    # "N": N^(-1/4); "n": (min n_k)^(-1/4); or a fixed step size
    eps_rule: KappaRule = "N"
    key: ClassVar[str] = "hong_li"


@dataclass(frozen=True)
class AKMCond(MethodConfig):
    key: ClassVar[str] = "akm_cond"


@dataclass(frozen=True)
class AKMProj(MethodConfig):
    key: ClassVar[str] = "akm_proj"


@dataclass(frozen=True)
class AKMHybrid(MethodConfig):
    beta: float | None = None
    key: ClassVar[str] = "akm_hybrid"

    def __post_init__(self):
        super().__post_init__()
        if self.beta is not None and not 0.0 < self.beta < self.alpha:
            raise ValueError("beta must lie in (0, alpha)")

    @property
    def beta_value(self) -> float:
        return self.alpha / 10 if self.beta is None else self.beta


EL_MODES = ("adaptive", "chibar", "chisq")


@dataclass(frozen=True)
class EL(MethodConfig):
    mode: str = "adaptive"
    # None picks "loglog" for two arms and "log" for more
    kappa_rule: KappaRule | None = None
    key: ClassVar[str] = "el"

    def __post_init__(self):
        super().__post_init__()
        if self.mode not in EL_MODES:
            raise ValueError(f"mode must be one of {EL_MODES}")

    @property
    def name(self):
        return f"el_{self.mode}"


@dataclass(frozen=True)
class Bayes(MethodConfig):
    key: ClassVar[str] = "bayes"


METHODS: dict[str, type[MethodConfig]] = {
    cls.key: cls
    for cls in (PlugIn, SampleSplit, CrossFit, NPB, MoonN, ParamPB, FS19, HongLi,
                AKMCond, AKMProj, AKMHybrid, EL, Bayes)
}

ALIASES = {
    "el_adaptive": "el:mode=adaptive",
    "el_chibar": "el:mode=chibar",
    "el_chisq": "el:mode=chisq",
    "npb_sel": "npb:target=select",
    "npb_glo": "npb:target=global",
    "param_pb_sel": "param_pb:target=select",
    "param_pb_glo": "param_pb:target=global",
}


def _coerce(value: str):
    for conv in (int, float):
        try:
            return conv(value)
        except ValueError:
            pass
    if value.lower() == "none":
        return None
    return value


def parse_method(text: str) -> MethodConfig:
    text = ALIASES.get(text.strip(), text.strip())
    key, *params = text.split(":")
    if key not in METHODS:
        raise ValueError(f"unknown method {key!r}")
    cls = METHODS[key]
    allowed = {f.name for f in fields(cls)}
    kwargs = {}
    for p in params:
        name, sep, value = p.partition("=")
        if not sep or name not in allowed:
            raise ValueError(f"bad parameter {p!r} for method {key!r}")
        kwargs[name] = _coerce(value)
    return cls(**kwargs)


def parse_methods(text: str) -> list[MethodConfig]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("no methods given")
    return [parse_method(t) for t in items]
