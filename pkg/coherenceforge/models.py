"""
Data models for CoherenceForge
"""

import json
import math
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class CoherenceMeasure(str, Enum):
    """Coherence quantifiers covered by the property suites"""
    L1 = "l1"
    REL_ENTROPY = "rel_entropy"
    GEOMETRIC = "geometric"


class FidelityDistance(str, Enum):
    """Nonincreasing maps g(F) turning fidelity into a distance"""
    GEOMETRIC = "geometric"
    BURES = "bures"
    GROVERIAN = "groverian"


class EntanglementMeasure(str, Enum):
    """Entanglement quantifiers usable on converted states"""
    GEOMETRIC = "geometric"
    REL_ENTROPY = "rel_entropy"


class MeasurePair(str, Enum):
    """Matching entanglement/coherence pairs for the distance bound"""
    GEOMETRIC = "geometric"
    REL_ENTROPY_MC = "rel_entropy_mc"


class Subsystem(str, Enum):
    """Subsystem tag of a bipartite state"""
    S = "S"
    A = "A"


class OutputFormat(str, Enum):
    """Report output format"""
    JSON = "json"
    CSV = "csv"


class Command(str, Enum):
    """CLI command enumeration"""
    MEASURE = "measure"
    CONVERT = "convert"
    VERIFY = "verify"
    SWEEP = "sweep"


class SuiteName(str, Enum):
    """Named verification suites"""
    THEOREM1 = "theorem1"
    THEOREM2 = "theorem2"
    CR_EQUALITY = "cr-equality"
    CR_MINIMUM = "cr-minimum"
    MONOTONICITY = "monotonicity"
    CONVEXITY = "convexity"
    QUBIT_CHAIN = "qubit-chain"
    GEOMETRIC_ORACLE = "geometric-oracle"
    DILATION = "dilation"


class GradientMode(str, Enum):
    """How the fidelity maximizer computes ascent directions"""
    ANALYTIC = "analytic"
    CENTRAL = "central"


# Suites that can run against a fixed channel file instead of sampled channels
CHANNEL_SUITES = (SuiteName.THEOREM1, SuiteName.MONOTONICITY)


class OptimizerOptions(BaseModel):
    """Settings of the multistart simplex fidelity maximizer"""
    model_config = ConfigDict(frozen=True)

    starts: int = 20
    max_iters: int = 5000
    tol: float = 1e-10
    seed: int = 0
    fd_step: float = 1e-6
    gradient: GradientMode = GradientMode.ANALYTIC
    # run every random start even when the warm start is already stationary
    exhaustive: bool = False

    @field_validator('starts')
    @classmethod
    def validate_starts(cls, v):
        if v < 0:
            raise ValueError('starts must be nonnegative')
        return v

    @field_validator('max_iters')
    @classmethod
    def validate_max_iters(cls, v):
        if v < 1:
            raise ValueError('max_iters must be at least 1')
        return v

    @field_validator('tol', 'fd_step')
    @classmethod
    def validate_positive(cls, v):
        if v <= 0:
            raise ValueError('tolerances and steps must be positive')
        return v


class FidelityOptimum(BaseModel):
    """Best diagonal candidate found by the fidelity maximizer"""
    fidelity: float
    weights: List[float]
    iterations: int = 0
    starts: int = 0
    converged_starts: int = 0
    exact: bool = False


class MeasureReport(BaseModel):
    """Named measure values plus computation metadata"""
    measures: Dict[str, float] = Field(default_factory=dict)
    metadata: Dict[str, Any] = Field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {"measures": self.measures, "metadata": self.metadata},
            indent=2, sort_keys=True, default=str
        )


class VerificationRecord(BaseModel):
    """Outcome of one property check on one trial"""
    model_config = ConfigDict(populate_by_name=True)

    check: str
    trial: Optional[int] = None
    seed: Optional[int] = None
    input_hash: Optional[str] = None
    lhs: float
    rhs: float
    margin: float
    passed: bool = Field(alias="pass")
    details: Dict[str, Any] = Field(default_factory=dict)

    def to_json_line(self) -> str:
        """Serialize with a fixed key order so reports are byte-stable"""
        payload = {
            "check": self.check,
            "trial": self.trial,
            "seed": self.seed,
            "input_hash": self.input_hash,
            "lhs": _finite_or_str(self.lhs),
            "rhs": _finite_or_str(self.rhs),
            "margin": _finite_or_str(self.margin),
            "pass": self.passed,
            "details": self.details,
        }
        return json.dumps(payload, sort_keys=False, default=str)


def _finite_or_str(value: float):
    # JSON has no infinity literal
    if math.isfinite(value):
        return value
    return "inf" if value > 0 else "-inf"


class SuiteStats(BaseModel):
    """Aggregate statistics for a verification suite"""
    suite: str
    total_checks: int = 0
    passed_checks: int = 0
    failed_checks: int = 0
    worst_margin: Optional[float] = None
    pass_percentage: float = 100.0

    def update_stats(self, record: VerificationRecord):
        """Update statistics with a new record"""
        self.total_checks += 1
        if record.passed:
            self.passed_checks += 1
        else:
            self.failed_checks += 1

        if self.worst_margin is None or record.margin < self.worst_margin:
            self.worst_margin = record.margin

        self.pass_percentage = (self.passed_checks / self.total_checks) * 100


class RunConfig(BaseModel):
    """Fully resolved settings of one CLI invocation"""
    command: Command
    suite: Optional[SuiteName] = None
    input_paths: List[str] = Field(default_factory=list)
    preset: Optional[str] = None
    seed: int = 0
    trials: int = 100
    tol: float = 1e-8
    dim: int = 2
    ancilla_dim: Optional[int] = None
    measure: Optional[str] = None
    output: Optional[str] = None
    format: OutputFormat = OutputFormat.JSON
    step: float = 0.05

    @field_validator('trials')
    @classmethod
    def validate_trials(cls, v):
        if v < 1:
            raise ValueError('trials must be at least 1')
        return v

    @field_validator('tol', 'step')
    @classmethod
    def validate_positive(cls, v):
        if v <= 0:
            raise ValueError('tol and step must be positive')
        return v

    @field_validator('dim')
    @classmethod
    def validate_dim(cls, v):
        if v < 1:
            raise ValueError('dim must be at least 1')
        return v

    @model_validator(mode='after')
    def validate_inputs(self):
        if self.command in (Command.MEASURE, Command.CONVERT):
            if not self.preset and not any(p for p in self.input_paths):
                raise ValueError(f'{self.command.value} needs --input or --preset')
        if self.command == Command.VERIFY and self.suite is None:
            raise ValueError('verify needs a suite name')
        if self.command == Command.VERIFY and self.input_paths and self.suite not in CHANNEL_SUITES:
            names = ', '.join(s.value for s in CHANNEL_SUITES)
            raise ValueError(f'a channel file only applies to {names}')
        return self
