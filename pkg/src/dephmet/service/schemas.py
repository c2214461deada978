"""Request and response models for the service endpoints.

Schemas are strict: unknown keys are rejected, so a typo in a config file
fails loudly with a field-level message instead of being ignored.
Infinite timescales (closed system, nothing dephases) are transported as
null, since Infinity is not valid JSON.
"""

import math
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# --------------------------------------------------------------------------
# Scenario configuration
# --------------------------------------------------------------------------

class SymmetrizedUniformConfig(StrictModel):
    kind: Literal["symmetrized_uniform"] = "symmetrized_uniform"
    k: int = Field(ge=1)
    eps_min: float = -1.0
    eps_max: float = 1.0


class SpinChainUniformConfig(StrictModel):
    kind: Literal["spin_chain_uniform"] = "spin_chain_uniform"
    k: int = Field(ge=1)


class LongRangeIsingConfig(StrictModel):
    kind: Literal["long_range_ising"] = "long_range_ising"
    alpha: float = Field(ge=0.0)


class CustomDiagonalConfig(StrictModel):
    kind: Literal["custom_diagonal"] = "custom_diagonal"
    eigenvalues: list[float] = Field(min_length=2)


HamiltonianConfig = Annotated[
    Union[SymmetrizedUniformConfig, SpinChainUniformConfig, LongRangeIsingConfig,
          CustomDiagonalConfig],
    Field(discriminator="kind"),
]


class UncorrelatedPBodyConfig(StrictModel):
    kind: Literal["uncorrelated_p_body"] = "uncorrelated_p_body"
    p: int = Field(ge=1)


class CollectiveKBodyConfig(StrictModel):
    kind: Literal["collective_symmetrized_k_body"] = "collective_symmetrized_k_body"
    k: int = Field(ge=1)


LindbladConfig = Annotated[
    Union[UncorrelatedPBodyConfig, CollectiveKBodyConfig],
    Field(discriminator="kind"),
]


class ProbeConfig(StrictModel):
    kind: Literal["ghz", "max_variance", "product", "ising_max_variance"]
    phi: Optional[float] = None

    @model_validator(mode="after")
    def _phi_only_for_product(self):
        if self.kind == "product":
            if self.phi is None:
                raise ValueError("product probe requires phi")
            if not 0.0 < self.phi < math.pi / 2:
                raise ValueError(f"phi={self.phi} outside (0, pi/2)")
        elif self.phi is not None:
            raise ValueError(f"phi is only meaningful for the product probe, not {self.kind}")
        return self


class TimeGridConfig(StrictModel):
    start: float = Field(gt=0.0)
    stop: float = Field(gt=0.0)
    num: int = Field(ge=2, le=10_000)
    spacing: Literal["log", "linear"] = "log"

    @model_validator(mode="after")
    def _ordered(self):
        if self.stop <= self.start:
            raise ValueError("time grid needs stop > start")
        return self

    def times(self) -> list[float]:
        if self.spacing == "log":
            return [float(t) for t in np.geomspace(self.start, self.stop, self.num)]
        return [float(t) for t in np.linspace(self.start, self.stop, self.num)]


class ScenarioConfig(StrictModel):
    n_sites: int = Field(ge=1, le=14)
    hamiltonian: HamiltonianConfig
    lindblad: LindbladConfig
    probe: ProbeConfig
    x1: float = 1.0
    x2: float = Field(default=1.0, ge=0.0)
    hbar: float = Field(default=1.0, gt=0.0)
    repetitions: int = Field(default=1, ge=1)
    times: Optional[list[float]] = None
    time_grid: Optional[TimeGridConfig] = None

    @model_validator(mode="after")
    def _one_time_source(self):
        if (self.times is None) == (self.time_grid is None):
            raise ValueError("provide exactly one of 'times' or 'time_grid'")
        if self.times is not None:
            if any(t < 0 for t in self.times):
                raise ValueError("times must be nonnegative")
            if sorted(self.times) != self.times:
                raise ValueError("times must be ascending")
        return self

    def resolve_times(self) -> list[float]:
        return list(self.times) if self.times is not None else self.time_grid.times()


class NSpanConfig(StrictModel):
    start: int = Field(ge=2)
    stop: int = Field(ge=2)
    step: int = Field(default=1, ge=1)

    def values(self) -> list[int]:
        return list(range(self.start, self.stop + 1, self.step))


def _resolve_n_range(n_range: Optional[list[int]], n_span: Optional[NSpanConfig]) -> list[int]:
    if (n_range is None) == (n_span is None):
        raise ValueError("provide exactly one of 'n_range' or 'n_span'")
    ns = n_range if n_range is not None else n_span.values()
    if sorted(ns) != ns or len(set(ns)) != len(ns):
        raise ValueError("n values must be strictly ascending")
    return ns


# --------------------------------------------------------------------------
# /qfi
# --------------------------------------------------------------------------

class QfiRequest(StrictModel):
    scenario: ScenarioConfig
    oracle: bool = False


class QfiRow(StrictModel):
    t: float
    qfi_x1: float
    qfi_x2: Optional[float]          # null when infinite (x2 = 0 exactly)
    lower: float
    upper: float
    c_m: float
    c_M: float
    fidelity: float
    purity: float
    qcrb_x1: Optional[float]
    qcrb_x2: Optional[float]
    oracle_max_dev: Optional[float] = None


class QfiResponse(StrictModel):
    n_sites: int
    tau_z: Optional[float]
    tau_d: Optional[float]
    variance_h: float
    sum_variance_l: float
    probe_singular: bool
    rows: list[QfiRow]


# --------------------------------------------------------------------------
# /sweep
# --------------------------------------------------------------------------

class SlopeAssertion(StrictModel):
    which: Literal["x1", "x2", "gamma"]
    expected: float
    tol: float = Field(default=0.05, gt=0.0)


class SweepRequest(StrictModel):
    family: Literal["ghz", "ising", "collective", "collective_uncorrelated"]
    n_range: Optional[list[int]] = None
    n_span: Optional[NSpanConfig] = None
    k: Optional[int] = Field(default=None, ge=1)
    p: Optional[int] = Field(default=None, ge=1)
    alpha: Optional[float] = Field(default=None, ge=0.0)
    x1: float = 1.0
    x2: float = Field(default=1.0, gt=0.0)
    hbar: float = Field(default=1.0, gt=0.0)
    total_time: float = Field(default=1.0, gt=0.0)
    eps: float = Field(default=2.0, gt=0.0)
    lambda_sq: float = Field(default=4.0, gt=0.0)
    threads: int = Field(default=1, ge=1, le=64)
    assert_slope: Optional[SlopeAssertion] = None

    @model_validator(mode="after")
    def _family_arguments(self):
        _resolve_n_range(self.n_range, self.n_span)
        if self.family == "ghz":
            if self.k is None or self.p is None:
                raise ValueError("ghz sweep requires k and p")
        elif self.family == "ising":
            if self.alpha is None or self.p is None:
                raise ValueError("ising sweep requires alpha and p")
        else:
            if self.k is None:
                raise ValueError("collective sweeps require k")
        return self

    def resolved_n(self) -> list[int]:
        return _resolve_n_range(self.n_range, self.n_span)


class SweepRow(StrictModel):
    n: int
    tau_z: Optional[float] = None
    tau_d: Optional[float] = None
    bound_x1: Optional[float] = None
    bound_x2: Optional[float] = None
    bound_gamma: Optional[float] = None
    seminorm: Optional[float] = None
    argmax_q: Optional[int] = None


class SlopeFit(StrictModel):
    which: Literal["x1", "x2", "gamma", "seminorm"]
    slope: float
    stderr: float


class SweepResponse(StrictModel):
    family: str
    fit_window: tuple[int, int]
    rows: list[SweepRow]
    fits: list[SlopeFit]
    assertion: Optional[SlopeAssertion] = None
    assertion_passed: Optional[bool] = None


# --------------------------------------------------------------------------
# /timescales
# --------------------------------------------------------------------------

class TimescalesRequest(StrictModel):
    scenario: ScenarioConfig
    total_time: float = Field(default=1.0, gt=0.0)


class TimescalesResponse(StrictModel):
    n_sites: int
    tau_z: Optional[float]
    tau_d: Optional[float]
    variance_h: float
    sum_variance_l: float
    optimal_time_x1: Optional[float]     # mu1 * tau_d
    optimal_time_x2: Optional[float]     # mu2 * tau_d
    bound_x1: Optional[float]
    bound_x2: Optional[float]


# --------------------------------------------------------------------------
# /ising
# --------------------------------------------------------------------------

class IsingRequest(StrictModel):
    alpha: float = Field(ge=0.0)
    n_range: Optional[list[int]] = None
    n_span: Optional[NSpanConfig] = None
    p: int = Field(default=1, ge=1)
    phi: Optional[float] = None
    x1: float = 1.0
    x2: float = Field(default=1.0, gt=0.0)
    total_time: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def _check(self):
        _resolve_n_range(self.n_range, self.n_span)
        if self.phi is not None and not 0.0 < self.phi < math.pi / 2:
            raise ValueError(f"phi={self.phi} outside (0, pi/2)")
        return self

    def resolved_n(self) -> list[int]:
        return _resolve_n_range(self.n_range, self.n_span)


class IsingRow(StrictModel):
    n: int
    seminorm_exact: float
    argmax_q: int
    seminorm_asymptotic: float
    asymptotic_ratio: float
    tau_z: float
    tau_d: float
    bound_x1: float
    product_variance: Optional[float] = None


class IsingResponse(StrictModel):
    alpha: float
    p: int
    rows: list[IsingRow]
    fits: list[SlopeFit]


# --------------------------------------------------------------------------
# /verify
# --------------------------------------------------------------------------

class VerifyRequest(StrictModel):
    max_n: int = Field(default=5, ge=3, le=8)
    seed: int = 0x5EED
    time_points: int = Field(default=5, ge=3, le=12)
    fault_injection: Optional[Literal["pair_rates"]] = None


class VerifyCheck(StrictModel):
    name: str
    passed: bool
    worst: float
    threshold: float
    detail: str


class VerifyResponse(StrictModel):
    passed: bool
    seed: int
    checks: list[VerifyCheck]


def encode_timescale(value: float) -> Optional[float]:
    """Map +inf (no dephasing / no phase evolution) to null for the wire."""
    return None if not math.isfinite(value) else value
