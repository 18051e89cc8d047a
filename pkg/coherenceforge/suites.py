"""
Verification suite registry

Each suite turns one (trial index, trial seed) pair into a list of
VerificationRecords. Trials are independent, so the runner may execute
them in any order.
"""

from functools import lru_cache
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from .channels import (
    AnyChannel, IncoherentChannel, KrausChannel, apply, apply_selective, certify_incoherent, convexity_trial,
    dilation_consistency_check, load_channel, monotonicity_trial, random_incoherent_channel
)
from .coherence import c_geometric, c_geometric_grid, c_rel_entropy_is_minimum
from .conversion import (
    cnot_channel, verify_contractivity, verify_equality_cr, verify_qubit_chain, verify_theorem1, verify_theorem2
)
from .exceptions import ConfigurationError, DimensionMismatchError
from .models import (
    CoherenceMeasure, MeasurePair, OptimizerOptions, Subsystem, SuiteName, VerificationRecord
)
from .states import (
    BipartiteState, DensityMatrix, derive_seed, maximally_coherent, random_diagonal,
    random_mixed, state_hash
)

ORACLE_TOL = 2e-3
SELECTIVE_TOL = 1e-10
MIN_QUBIT_COHERENCE = 1e-3


class SuiteParams(BaseModel):
    """Knobs shared by all suites"""
    dim: int = 2
    ancilla_dim: Optional[int] = None
    measure: Optional[CoherenceMeasure] = None
    samples: int = 1000
    grid_step: float = 0.01
    incoherence_tol: float = 1e-12
    comparison_tol: float = 1e-8
    channel_path: Optional[str] = None
    optimizer: OptimizerOptions = Field(default_factory=OptimizerOptions)

    def measures(self) -> List[CoherenceMeasure]:
        return [self.measure] if self.measure else list(CoherenceMeasure)


TrialFunction = Callable[[int, int, SuiteParams], List[VerificationRecord]]


class Suite:
    """A named property check repeated over seeded trials"""

    def __init__(self, name: SuiteName, trial_fn: TrialFunction, description: str):
        self.name = name
        self.description = description
        self._trial_fn = trial_fn

    def run_trial(self, trial: int, seed: int, params: SuiteParams) -> List[VerificationRecord]:
        """Run one trial and stamp its records with the trial index and seed"""
        records = self._trial_fn(trial, seed, params)
        for record in records:
            record.trial = trial
            record.seed = seed
        return records

    def __repr__(self) -> str:
        return f"Suite({self.name.value})"


@lru_cache(maxsize=8)
def load_fixed_channel(path: str) -> IncoherentChannel:
    """Load a channel file once and certify it incoherent"""
    return certify_incoherent(load_channel(path))


def pair_channel(channel: AnyChannel, d_S: int, d_A: int) -> AnyChannel:
    """
    Channel on S (x) A built from a channel file

    A channel on S alone acts after the generalized CNOT, so the pair sees
    (Lambda (x) 1) U_CNOT, which is again incoherent.
    """
    if channel.d_in == channel.d_out == d_S * d_A:
        return channel
    if channel.d_in == channel.d_out == d_S:
        lifted = KrausChannel(channel.kraus_ops).tensor_identity(d_A)
        return certify_incoherent(lifted.compose(cnot_channel(d_S, d_A)))
    raise DimensionMismatchError(
        f"Channel on dimension {channel.d_in} fits neither S ({d_S}) nor S (x) A ({d_S * d_A})"
    )


def _random_state(seed: int, dim: int) -> DensityMatrix:
    rng = np.random.default_rng(derive_seed(seed, 0))
    return random_mixed(dim, derive_seed(seed, 1), rank=int(rng.integers(1, dim + 1)))


def _theorem1_trial(trial: int, seed: int, params: SuiteParams) -> List[VerificationRecord]:
    rho = _random_state(seed, params.dim)
    d_A = params.ancilla_dim or params.dim
    if params.channel_path:
        channel = pair_channel(load_fixed_channel(params.channel_path), rho.dim, d_A)
    else:
        n_kraus = int(np.random.default_rng(derive_seed(seed, 2)).integers(1, 5))
        channel = random_incoherent_channel(rho.dim * d_A, n_kraus, derive_seed(seed, 3))

    records = [verify_theorem1(rho, channel, MeasurePair.REL_ENTROPY_MC, params.comparison_tol)]
    if (rho.dim, d_A) == (2, 2):
        records.insert(0, verify_theorem1(rho, channel, MeasurePair.GEOMETRIC, params.comparison_tol))
    return records


def _theorem2_trial(trial: int, seed: int, params: SuiteParams) -> List[VerificationRecord]:
    # Alternate incoherent and coherent inputs
    if trial % 2 == 0:
        return [verify_theorem2(random_diagonal(params.dim, derive_seed(seed, 1)), params.incoherence_tol)]

    rho = _random_state(seed, params.dim)
    if params.dim == 2 and abs(rho.matrix[0, 1]) < MIN_QUBIT_COHERENCE:
        rho = DensityMatrix.mixture([rho, maximally_coherent(2).to_density()], [0.5, 0.5])
    return [verify_theorem2(rho, params.incoherence_tol)]


def _cr_equality_trial(trial: int, seed: int, params: SuiteParams) -> List[VerificationRecord]:
    return [verify_equality_cr(_random_state(seed, params.dim))]


def _cr_minimum_trial(trial: int, seed: int, params: SuiteParams) -> List[VerificationRecord]:
    rho = _random_state(seed, params.dim)
    return [c_rel_entropy_is_minimum(rho, params.samples, derive_seed(seed, 2))]


def _monotonicity_trial(trial: int, seed: int, params: SuiteParams) -> List[VerificationRecord]:
    fixed = load_fixed_channel(params.channel_path) if params.channel_path else None
    if fixed is not None and fixed.d_in != params.dim:
        raise DimensionMismatchError(f"Channel acts on dimension {fixed.d_in}, suite runs d={params.dim}")

    records = []
    for measure in params.measures():
        records.extend(monotonicity_trial(measure, seed, params.dim, params.optimizer,
                                          channel=fixed, tol=params.comparison_tol))

    rho = _random_state(seed, params.dim)
    sigma = random_mixed(params.dim, derive_seed(seed, 4))
    channel = fixed or random_incoherent_channel(params.dim, 2, derive_seed(seed, 5))
    records.append(verify_contractivity(rho, sigma, channel))
    return records


def _convexity_trial(trial: int, seed: int, params: SuiteParams) -> List[VerificationRecord]:
    return [
        convexity_trial(measure, seed, params.dim, params.optimizer, tol=params.comparison_tol)
        for measure in params.measures()
    ]


def _qubit_chain_trial(trial: int, seed: int, params: SuiteParams) -> List[VerificationRecord]:
    return verify_qubit_chain(_random_state(seed, 2), params.optimizer)


def _geometric_oracle_trial(trial: int, seed: int, params: SuiteParams) -> List[VerificationRecord]:
    rho = _random_state(seed, params.dim)
    optimized = c_geometric(rho, params.optimizer)
    grid = c_geometric_grid(rho, params.grid_step)
    difference = abs(optimized - grid)
    return [VerificationRecord(
        check="geometric-oracle",
        input_hash=state_hash(rho),
        lhs=optimized,
        rhs=grid,
        margin=ORACLE_TOL - difference,
        passed=bool(difference <= ORACLE_TOL),
        details={"d": rho.dim, "grid_step": params.grid_step},
    )]


def _dilation_trial(trial: int, seed: int, params: SuiteParams) -> List[VerificationRecord]:
    d_S = params.dim
    d_A = params.ancilla_dim or 2
    rng = np.random.default_rng(derive_seed(seed, 0))

    instrument = random_incoherent_channel(d_S, int(rng.integers(1, 4)), derive_seed(seed, 1))
    branches = [
        random_incoherent_channel(d_S * d_A, int(rng.integers(1, 3)), derive_seed(seed, 10 + i))
        for i in range(instrument.n_kraus)
    ]
    rho = BipartiteState(d_S, d_A, random_mixed(d_S * d_A, derive_seed(seed, 2)))
    dilation_record = dilation_consistency_check(rho, instrument, instrument.n_kraus, branches,
                                                 tol=params.comparison_tol)

    # Selective branches must average back to the plain channel output
    reduced = rho.marginal(Subsystem.S)
    outcomes = apply_selective(instrument, reduced)
    averaged = sum(o.probability * o.state.matrix for o in outcomes)
    deviation = float(np.max(np.abs(averaged - apply(instrument, reduced).matrix)))
    selective_record = VerificationRecord(
        check="selective-consistency",
        input_hash=state_hash(reduced),
        lhs=deviation,
        rhs=SELECTIVE_TOL,
        margin=SELECTIVE_TOL - deviation,
        passed=bool(deviation <= SELECTIVE_TOL),
        details={"branches": len(outcomes)},
    )
    return [dilation_record, selective_record]


SUITES: Dict[SuiteName, Suite] = {
    suite.name: suite for suite in [
        Suite(SuiteName.THEOREM1, _theorem1_trial,
              "Output entanglement bounded by input coherence under random incoherent channels"),
        Suite(SuiteName.THEOREM2, _theorem2_trial,
              "Converted state is entangled exactly when the input is coherent"),
        Suite(SuiteName.CR_EQUALITY, _cr_equality_trial,
              "Certified entanglement of the converted state equals relative entropy of coherence"),
        Suite(SuiteName.CR_MINIMUM, _cr_minimum_trial,
              "Dephased state minimizes relative entropy over sampled diagonal states"),
        Suite(SuiteName.MONOTONICITY, _monotonicity_trial,
              "Coherence does not grow under incoherent channels, plain or selective"),
        Suite(SuiteName.CONVEXITY, _convexity_trial,
              "Coherence of a mixture is at most the average coherence"),
        Suite(SuiteName.QUBIT_CHAIN, _qubit_chain_trial,
              "Qubit closed form agrees with concurrence and both optimizers"),
        Suite(SuiteName.GEOMETRIC_ORACLE, _geometric_oracle_trial,
              "Geometric coherence optimizer agrees with a brute-force simplex grid"),
        Suite(SuiteName.DILATION, _dilation_trial,
              "Flagged dilation is complete and preserves branch-averaged hashing bounds"),
    ]
}


def get_suite(name) -> Suite:
    """Look up a suite by name or SuiteName"""
    try:
        return SUITES[SuiteName(name)]
    except ValueError:
        valid = ", ".join(s.value for s in SuiteName)
        raise ConfigurationError(f"Unknown suite '{name}'. Valid suites: {valid}")
