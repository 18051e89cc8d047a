"""
Incoherent Kraus channels and instruments

Validation, seeded random generation, application (plain and selective),
the flagged tripartite dilation of an instrument, and the per-trial checks
behind the monotonicity and convexity suites.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import null_space

from .coherence import coherence_measure
from .entanglement import hashing_lower_bound
from .exceptions import ChannelError, DimensionMismatchError, NotIncoherentError
from .linalg import as_matrix, hermitian_eig
from .models import CoherenceMeasure, OptimizerOptions, Subsystem, VerificationRecord
from .states import (
    BipartiteState, DensityMatrix, as_density, derive_seed, max_off_diagonal,
    random_mixed, state_hash
)

logger = logging.getLogger(__name__)

COMPLETENESS_TOL = 1e-10
INCOHERENCE_TOL = 1e-12
# Branches below this probability are dropped from selective averages
BRANCH_FLOOR = 1e-12
PROPERTY_TOL = 1e-8
_MAX_TARGET_DRAWS = 32


def completeness_gap(kraus_ops: Sequence[np.ndarray]) -> float:
    """Largest entry modulus of sum K^dagger K - 1"""
    total = sum(k.conj().T @ k for k in kraus_ops)
    return float(np.max(np.abs(total - np.eye(total.shape[0]))))


class KrausChannel:
    """Completely positive trace-preserving map given by Kraus operators"""

    __slots__ = ('_ops',)

    def __init__(self, kraus_ops: Sequence[Any], tol: float = COMPLETENESS_TOL):
        ops = [np.array(as_matrix(k), dtype=complex, copy=True) for k in kraus_ops]
        if not ops:
            raise ChannelError("A channel needs at least one Kraus operator")

        shapes = {op.shape for op in ops}
        if len(shapes) != 1:
            raise ChannelError(f"Kraus operators have mixed shapes: {sorted(shapes)}")

        gap = completeness_gap(ops)
        if gap > tol:
            raise ChannelError(f"Kraus operators are not complete: deviation {gap:.3e}")

        for op in ops:
            op.setflags(write=False)
        self._ops = tuple(ops)

    @property
    def kraus_ops(self) -> Tuple[np.ndarray, ...]:
        return self._ops

    @property
    def n_kraus(self) -> int:
        return len(self._ops)

    @property
    def d_in(self) -> int:
        return self._ops[0].shape[1]

    @property
    def d_out(self) -> int:
        return self._ops[0].shape[0]

    @classmethod
    def identity(cls, d: int) -> 'KrausChannel':
        """Identity channel on dimension d"""
        return cls([np.eye(d)])

    @classmethod
    def from_unitary(cls, unitary: Any) -> 'KrausChannel':
        """Single-operator channel rho -> U rho U^dagger"""
        return cls([as_matrix(unitary)])

    @classmethod
    def dephasing(cls, d: int) -> 'KrausChannel':
        """Complete dephasing via the projectors |i><i|"""
        ops = []
        for i in range(d):
            projector = np.zeros((d, d))
            projector[i, i] = 1.0
            ops.append(projector)
        return cls(ops)

    def compose(self, other: 'KrausChannel') -> 'KrausChannel':
        """This channel applied after ``other``"""
        if other.d_out != self.d_in:
            raise DimensionMismatchError(
                f"Cannot compose: inner output {other.d_out} != outer input {self.d_in}"
            )
        return KrausChannel([a @ b for a in self._ops for b in other.kraus_ops])

    def tensor_identity(self, d: int) -> 'KrausChannel':
        """Extend to K (x) 1_d"""
        return KrausChannel([np.kron(k, np.eye(d)) for k in self._ops])

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "d_in": self.d_in,
            "d_out": self.d_out,
            "kraus": [{"re": np.real(k).tolist(), "im": np.imag(k).tolist()} for k in self._ops],
        }

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> 'KrausChannel':
        missing = [k for k in ("d_in", "d_out", "kraus") if k not in data]
        if missing:
            raise ChannelError(f"Channel file is missing fields: {', '.join(missing)}")

        shape = (int(data["d_out"]), int(data["d_in"]))
        ops = []
        for index, entry in enumerate(data["kraus"]):
            re = np.asarray(entry.get("re"), dtype=float)
            im = np.asarray(entry.get("im"), dtype=float)
            if re.shape != shape or im.shape != shape:
                raise ChannelError(f"Kraus operator {index} must have shape {shape}")
            ops.append(re + 1j * im)
        return cls(ops)

    def __repr__(self) -> str:
        return f"KrausChannel(d_in={self.d_in}, d_out={self.d_out}, n_kraus={self.n_kraus})"


class IncoherentChannel:
    """Kraus channel whose operators map incoherent states to incoherent states"""

    __slots__ = ('base', 'certified')

    def __init__(self, base: KrausChannel, certified: bool = True):
        self.base = base
        self.certified = certified

    @property
    def kraus_ops(self) -> Tuple[np.ndarray, ...]:
        return self.base.kraus_ops

    @property
    def n_kraus(self) -> int:
        return self.base.n_kraus

    @property
    def d_in(self) -> int:
        return self.base.d_in

    @property
    def d_out(self) -> int:
        return self.base.d_out

    def to_json_dict(self) -> Dict[str, Any]:
        return self.base.to_json_dict()

    def __repr__(self) -> str:
        return f"IncoherentChannel({self.base!r}, certified={self.certified})"


AnyChannel = Union[KrausChannel, IncoherentChannel]


class SelectiveOutcome(NamedTuple):
    """One branch of an instrument: probability and post-measurement state"""
    probability: float
    state: DensityMatrix


def certify_incoherent(channel: AnyChannel, tol: float = INCOHERENCE_TOL) -> IncoherentChannel:
    """
    Certify that every Kraus operator has at most one nonzero entry per column

    Also checks numerically that each K|i><i|K^dagger is diagonal.

    Raises:
        NotIncoherentError: With the offending operator and column indices
    """
    base = channel.base if isinstance(channel, IncoherentChannel) else channel

    for index, op in enumerate(base.kraus_ops):
        nonzero = np.abs(op) > tol
        counts = nonzero.sum(axis=0)
        bad = np.nonzero(counts > 1)[0]
        if bad.size:
            column = int(bad[0])
            raise NotIncoherentError(
                f"Kraus operator {index} maps basis state {column} to a superposition "
                f"({int(counts[column])} nonzero entries)",
                operator=index, column=column,
            )

        for column in range(op.shape[1]):
            image = np.outer(op[:, column], op[:, column].conj())
            if max_off_diagonal(image) > tol:
                raise NotIncoherentError(
                    f"Kraus operator {index} creates coherence from basis state {column}",
                    operator=index, column=column,
                )

    return IncoherentChannel(base, certified=True)


def random_incoherent_channel(d: int, n_kraus: int, seed: int) -> IncoherentChannel:
    """
    Sample an incoherent channel with ``n_kraus`` operators

    Column j of K_l holds one amplitude c_lj at a random row f_l(j). The
    amplitude vectors c_j are complex Gaussians constrained so the columns of
    sum K^dagger K stay orthonormal when targets collide; targets are redrawn
    when the constraints leave no room.
    Operators that end up with no weight are dropped, so the result may have
    fewer than ``n_kraus`` operators.
    """
    if d < 1 or n_kraus < 1:
        raise ChannelError(f"Need d >= 1 and n_kraus >= 1, got d={d}, n_kraus={n_kraus}")

    rng = np.random.default_rng(seed)
    targets = rng.integers(0, d, size=(n_kraus, d))
    amplitudes = np.zeros((n_kraus, d), dtype=complex)

    for j in range(d):
        for _ in range(_MAX_TARGET_DRAWS):
            constraints = []
            for k in range(j):
                overlap = np.where(targets[:, j] == targets[:, k], amplitudes[:, k], 0.0)
                if np.any(np.abs(overlap) > 0):
                    constraints.append(overlap.conj())

            basis = null_space(np.array(constraints)) if constraints else np.eye(n_kraus)
            if basis.shape[1] > 0:
                g = rng.standard_normal(basis.shape[1]) + 1j * rng.standard_normal(basis.shape[1])
                column = basis @ g
                amplitudes[:, j] = column / np.linalg.norm(column)
                break
            targets[:, j] = rng.integers(0, d, size=n_kraus)
        else:
            # All weight on operator 0 with a target it has not used yet
            used = set(int(t) for t in targets[0, :j])
            targets[0, j] = min(set(range(d)) - used)
            amplitudes[:, j] = 0.0
            amplitudes[0, j] = np.exp(2j * np.pi * rng.random())

    return certify_incoherent(KrausChannel(_assemble_kraus(targets, amplitudes)))


def _assemble_kraus(targets: np.ndarray, amplitudes: np.ndarray) -> List[np.ndarray]:
    """
    Build K_l with column j equal to amplitudes[l, j] |targets[l, j]>

    Operators left all-zero by the target fallback are dropped, so the channel
    can carry fewer operators than requested.
    """
    n_kraus, d = amplitudes.shape
    ops = []
    for l in range(n_kraus):
        op = np.zeros((d, d), dtype=complex)
        op[targets[l], np.arange(d)] = amplitudes[l]
        if np.any(np.abs(op) > 0):
            ops.append(op)
    if len(ops) < n_kraus:
        logger.debug(f"Dropped {n_kraus - len(ops)} of {n_kraus} Kraus operators with no weight")
    return ops


def _valid_output(m: np.ndarray) -> DensityMatrix:
    """Symmetrize and clip numerical drift before validation"""
    m = (m + m.conj().T) / 2
    m = m / np.real(np.trace(m))
    eig = hermitian_eig(m)
    if eig.eigenvalues[0] < 0:
        clipped = np.clip(eig.eigenvalues, 0.0, None)
        v = eig.eigenvectors
        m = (v * (clipped / clipped.sum())) @ v.conj().T
    return DensityMatrix(m)


def _require_input_dim(channel: AnyChannel, dim: int):
    if channel.d_in != dim:
        raise DimensionMismatchError(f"Channel expects dimension {channel.d_in}, state has {dim}")


def apply(channel: AnyChannel, rho: Any):
    """
    Lambda[rho] = sum_l K_l rho K_l^dagger

    A BipartiteState stays bipartite (same dims) under a square channel.
    """
    m = as_density(rho).matrix
    _require_input_dim(channel, m.shape[0])
    out = sum(k @ m @ k.conj().T for k in channel.kraus_ops)
    state = _valid_output(out)
    if isinstance(rho, BipartiteState) and channel.d_out == channel.d_in:
        return BipartiteState(rho.d_S, rho.d_A, state)
    return state


def apply_selective(channel: AnyChannel, rho: Any) -> List[SelectiveOutcome]:
    """Per-operator outcomes (p_l, K_l rho K_l^dagger / p_l), dropping p_l < 1e-12"""
    m = as_density(rho).matrix
    _require_input_dim(channel, m.shape[0])

    outcomes = []
    for k in channel.kraus_ops:
        branch = k @ m @ k.conj().T
        p = float(np.real(np.trace(branch)))
        if p < BRANCH_FLOOR:
            continue
        outcomes.append(SelectiveOutcome(min(p, 1.0), _valid_output(branch)))
    return outcomes


def attach_ancilla(rho: Any, d_A: int) -> BipartiteState:
    """rho (x) |0><0| on an ancilla of dimension d_A"""
    rho = as_density(rho)
    ground = np.zeros((d_A, d_A))
    ground[0, 0] = 1.0
    return BipartiteState(rho.dim, d_A, np.kron(rho.matrix, ground))


def shift_unitary(d: int, shift: int) -> np.ndarray:
    """Incoherent cyclic shift |b> -> |b + shift mod d>"""
    return np.roll(np.eye(d), shift, axis=0)


def tripartite_flag_dilation(instrument: AnyChannel, d_A: int, d_B: int,
                             branch_channels: Optional[Sequence[Optional[AnyChannel]]] = None
                             ) -> IncoherentChannel:
    """
    Flagged dilation of an instrument followed by branch-dependent channels

    Builds M_ij = L_ij (K_i (x) 1_A) (x) U_i on S (x) A (x) B, where K_i are
    the instrument operators on S, L_ij the Kraus operators of the i-th
    branch channel on SA (identity when None) and U_i shifts the flag
    register by i.

    Args:
        instrument: Incoherent instrument on S
        d_A: Ancilla dimension
        d_B: Flag register dimension, at least the number of branches
        branch_channels: One SA channel per instrument operator

    Returns:
        Certified incoherent channel on SAB
    """
    n = instrument.n_kraus
    d_S = instrument.d_in
    if instrument.d_out != d_S:
        raise ChannelError("Instrument must map S to itself")
    if d_B < n:
        raise ChannelError(f"Flag register of dimension {d_B} cannot hold {n} branches")

    if branch_channels is None:
        branch_channels = [None] * n
    if len(branch_channels) != n:
        raise ChannelError(f"Need {n} branch channels, got {len(branch_channels)}")

    d_sa = d_S * d_A
    ops = []
    for i, (k, branch) in enumerate(zip(instrument.kraus_ops, branch_channels)):
        branch = branch or KrausChannel.identity(d_sa)
        if branch.d_in != d_sa or branch.d_out != d_sa:
            raise DimensionMismatchError(f"Branch channel {i} must act on dimension {d_sa}")
        lifted = np.kron(k, np.eye(d_A))
        flag = shift_unitary(d_B, i)
        for l_op in branch.kraus_ops:
            ops.append(np.kron(l_op @ lifted, flag))

    return certify_incoherent(KrausChannel(ops, tol=1e-9))


def flag_blocks(state: Any, d_sa: int, d_b: int) -> List[Tuple[float, DensityMatrix]]:
    """Split sum_i p_i rho_i (x) |i><i| into (p_i, rho_i) pairs"""
    m = as_matrix(state)
    if m.shape != (d_sa * d_b, d_sa * d_b):
        raise DimensionMismatchError(f"State of shape {m.shape} does not split as {d_sa} x {d_b}")

    tensor = m.reshape(d_sa, d_b, d_sa, d_b)
    blocks = []
    for i in range(d_b):
        block = tensor[:, i, :, i]
        p = float(np.real(np.trace(block)))
        if p >= BRANCH_FLOOR:
            blocks.append((p, _valid_output(block)))
    return blocks


def dilation_consistency_check(rho: BipartiteState, instrument: AnyChannel, d_B: int,
                               branch_channels: Optional[Sequence[Optional[AnyChannel]]] = None,
                               tol: float = PROPERTY_TOL) -> VerificationRecord:
    """
    Flag-averaging check across the S:AB cut

    Compares the hashing bound of the flagged output (flag-holding side AB
    kept) with the branch average of the S:A hashing bounds (A kept). For
    classical flags the two agree exactly.
    """
    d_S, d_A = rho.dims
    dilation = tripartite_flag_dilation(instrument, d_A, d_B, branch_channels)

    flagged_input = BipartiteState(d_S, d_A * d_B, attach_ancilla(rho, d_B).matrix)
    output = apply(dilation, flagged_input)

    lhs = hashing_lower_bound(output, keep=Subsystem.A)
    blocks = flag_blocks(output, d_S * d_A, d_B)
    rhs = sum(p * hashing_lower_bound(BipartiteState(d_S, d_A, block), keep=Subsystem.A)
              for p, block in blocks)

    margin = lhs - rhs
    return VerificationRecord(
        check="dilation",
        input_hash=state_hash(rho),
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        passed=bool(margin >= -tol),
        details={
            "branches": len(blocks),
            "flag_probabilities": [p for p, _ in blocks],
            "completeness_gap": completeness_gap(dilation.kraus_ops),
        },
    )


def _trial_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, 0))


def monotonicity_trial(measure: CoherenceMeasure, seed: int, dim: int = 2,
                       opts: Optional[OptimizerOptions] = None,
                       channel: Optional[AnyChannel] = None,
                       rho: Optional[DensityMatrix] = None,
                       tol: float = PROPERTY_TOL) -> List[VerificationRecord]:
    """
    Nonincrease under an incoherent channel, plain and on selective average

    Samples a random state and channel from ``seed`` unless given.
    """
    measure = CoherenceMeasure(measure)
    rng = _trial_rng(seed)
    if rho is None:
        rho = random_mixed(dim, derive_seed(seed, 1), rank=int(rng.integers(1, dim + 1)))
    if channel is None:
        channel = random_incoherent_channel(rho.dim, int(rng.integers(1, 5)), derive_seed(seed, 2))

    before = coherence_measure(measure, rho, opts)
    after = coherence_measure(measure, apply(channel, rho), opts)
    average = sum(o.probability * coherence_measure(measure, o.state, opts)
                  for o in apply_selective(channel, rho))

    input_hash = state_hash(rho)
    details = {"measure": measure.value, "dim": rho.dim, "n_kraus": channel.n_kraus}
    records = []
    for check, rhs in (("monotonicity", after), ("selective-monotonicity", average)):
        margin = before - rhs
        records.append(VerificationRecord(
            check=f"{check}:{measure.value}",
            seed=seed,
            input_hash=input_hash,
            lhs=before,
            rhs=rhs,
            margin=margin,
            passed=bool(margin >= -tol),
            details=details,
        ))
    return records


def convexity_trial(measure: CoherenceMeasure, seed: int, dim: int = 2,
                    opts: Optional[OptimizerOptions] = None,
                    states: Optional[Sequence[DensityMatrix]] = None,
                    weights: Optional[Sequence[float]] = None,
                    tol: float = PROPERTY_TOL) -> VerificationRecord:
    """Mixture inequality C(sum p_i rho_i) <= sum p_i C(rho_i)"""
    measure = CoherenceMeasure(measure)
    rng = _trial_rng(seed)
    if states is None:
        count = int(rng.integers(2, 5))
        states = [
            random_mixed(dim, derive_seed(seed, 10 + i), rank=int(rng.integers(1, dim + 1)))
            for i in range(count)
        ]
    if weights is None:
        weights = rng.dirichlet(np.ones(len(states)))

    mixture = DensityMatrix.mixture(states, weights)
    average = float(sum(w * coherence_measure(measure, s, opts) for w, s in zip(weights, states)))
    mixed_value = coherence_measure(measure, mixture, opts)

    margin = average - mixed_value
    return VerificationRecord(
        check=f"convexity:{measure.value}",
        seed=seed,
        input_hash=state_hash(mixture),
        lhs=average,
        rhs=mixed_value,
        margin=margin,
        passed=bool(margin >= -tol),
        details={"measure": measure.value, "dim": mixture.dim, "components": len(states)},
    )


def monotonicity_suite(measure: CoherenceMeasure, trials: int, seed: int, dim: int = 2,
                       opts: Optional[OptimizerOptions] = None,
                       tol: float = PROPERTY_TOL) -> List[VerificationRecord]:
    """Sequential monotonicity records for ``trials`` derived seeds"""
    records = []
    for trial in range(trials):
        for record in monotonicity_trial(measure, derive_seed(seed, trial), dim, opts, tol=tol):
            record.trial = trial
            records.append(record)
    return records


def convexity_suite(measure: CoherenceMeasure, trials: int, seed: int, dim: int = 2,
                    opts: Optional[OptimizerOptions] = None,
                    tol: float = PROPERTY_TOL) -> List[VerificationRecord]:
    """Sequential convexity records for ``trials`` derived seeds"""
    records = []
    for trial in range(trials):
        record = convexity_trial(measure, derive_seed(seed, trial), dim, opts, tol=tol)
        record.trial = trial
        records.append(record)
    return records


def load_channel(file_path: Union[str, Path]) -> KrausChannel:
    """Load a channel file written by save_channel"""
    file_path = Path(file_path)
    if not file_path.exists():
        raise ChannelError(f"Channel file not found: {file_path}")
    try:
        with open(file_path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ChannelError(f"Invalid JSON in channel file: {e}")
    return KrausChannel.from_json_dict(data)


def save_channel(channel: AnyChannel, file_path: Union[str, Path]):
    """Write the Kraus operators as real and imaginary parts"""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file_path, 'w') as f:
        json.dump(channel.to_json_dict(), f, indent=2)
        f.write("\n")
