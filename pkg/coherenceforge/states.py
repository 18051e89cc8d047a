"""
Quantum states in the reference (computational) basis

Covers density matrices, pure states and bipartite states, the incoherence
predicates, dephasing, seeded random generation and the JSON state format.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from .exceptions import ConfigurationError, StateValidationError
from .linalg import as_matrix, clip_spectrum, hermitian_eig, hermiticity_gap, partial_trace
from .models import Subsystem

# Construction-time validation tolerance; comparison tolerances are per call
VALIDATION_TOL = 1e-10
NORM_TOL = 1e-12


def validate_density_matrix(matrix: np.ndarray, tol: float = VALIDATION_TOL) -> List[str]:
    """Return one message per violated density-matrix invariant"""
    failures = []
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        return [f"matrix must be square and nonempty, got shape {matrix.shape}"]

    if not np.all(np.isfinite(matrix)):
        return ["matrix has non-finite entries"]

    gap = hermiticity_gap(matrix)
    if gap > tol:
        failures.append(f"not Hermitian: asymmetry {gap:.3e} exceeds {tol:.1e}")

    trace = complex(np.trace(matrix))
    if abs(trace - 1.0) > tol:
        failures.append(f"trace is {trace.real:.12g}{trace.imag:+.3g}j, expected 1")

    if gap <= tol:
        smallest = float(hermitian_eig(matrix, tol).eigenvalues[0])
        if smallest < -tol:
            failures.append(f"not positive semidefinite: eigenvalue {smallest:.3e}")

    return failures


class DensityMatrix:
    """
    Hermitian, positive semidefinite, unit-trace matrix

    Immutable after construction: the underlying array is read-only.
    """

    __slots__ = ('_matrix',)

    def __init__(self, matrix: Any, tol: float = VALIDATION_TOL):
        arr = np.array(as_matrix(matrix), dtype=complex, copy=True)
        failures = validate_density_matrix(arr, tol)
        if failures:
            raise StateValidationError(failures)
        arr.setflags(write=False)
        self._matrix = arr

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        """Populations in the reference basis"""
        return np.real(np.diag(self._matrix)).copy()

    def eigenvalues(self) -> np.ndarray:
        return clip_spectrum(hermitian_eig(self._matrix).eigenvalues)

    def is_pure(self, tol: float = 1e-9) -> bool:
        """True when the largest eigenvalue is 1 within tol"""
        return bool(self.eigenvalues()[-1] >= 1.0 - tol)

    def tensor(self, other: 'DensityMatrix') -> 'DensityMatrix':
        """Kronecker product self (x) other"""
        return DensityMatrix(np.kron(self._matrix, as_matrix(other)))

    def allclose(self, other: Any, tol: float = 1e-10) -> bool:
        other_matrix = as_matrix(other)
        return other_matrix.shape == self._matrix.shape and bool(
            np.max(np.abs(self._matrix - other_matrix)) <= tol
        )

    @classmethod
    def from_pure(cls, psi: 'PureState') -> 'DensityMatrix':
        """Projector |psi><psi|"""
        amp = psi.amplitudes
        return cls(np.outer(amp, amp.conj()))

    @classmethod
    def from_diagonal(cls, probabilities: Sequence[float]) -> 'DensityMatrix':
        """Incoherent state diag(p)"""
        return cls(np.diag(np.asarray(probabilities, dtype=float)))

    @classmethod
    def maximally_mixed(cls, d: int) -> 'DensityMatrix':
        """Identity over d"""
        return cls(np.eye(d) / d)

    @classmethod
    def mixture(cls, states: Sequence[Any], weights: Sequence[float]) -> 'DensityMatrix':
        """Convex combination sum_i w_i rho_i"""
        if len(states) != len(weights) or not states:
            raise StateValidationError(["mixture needs one weight per state"])
        total = sum(w * as_matrix(s) for w, s in zip(weights, states))
        return cls(total)

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "re": np.real(self._matrix).tolist(),
            "im": np.imag(self._matrix).tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any], tol: float = VALIDATION_TOL) -> 'DensityMatrix':
        return cls(_matrix_from_json(data), tol)

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


class PureState:
    """Unit-norm amplitude vector in the reference basis"""

    __slots__ = ('_amplitudes',)

    def __init__(self, amplitudes: Any):
        amp = np.array(amplitudes, dtype=complex, copy=True).reshape(-1)
        if amp.size == 0:
            raise StateValidationError(["amplitude vector is empty"])
        norm_sq = float(np.sum(np.abs(amp) ** 2))
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise StateValidationError([f"squared norm is {norm_sq:.15g}, expected 1"])
        amp.setflags(write=False)
        self._amplitudes = amp

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amplitudes

    @property
    def dim(self) -> int:
        return self._amplitudes.size

    def to_density(self) -> DensityMatrix:
        return DensityMatrix.from_pure(self)

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "amp_re": np.real(self._amplitudes).tolist(),
            "amp_im": np.imag(self._amplitudes).tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> 'PureState':
        failures = [f"missing field '{k}'" for k in ("dim", "amp_re", "amp_im") if k not in data]
        if failures:
            raise StateValidationError(failures)
        re = np.asarray(data["amp_re"], dtype=float)
        im = np.asarray(data["amp_im"], dtype=float)
        if re.shape != im.shape or re.ndim != 1 or re.size != int(data["dim"]):
            raise StateValidationError(
                [f"amplitude arrays must both have length dim={data['dim']}"]
            )
        return cls(re + 1j * im)

    def __repr__(self) -> str:
        return f"PureState(dim={self.dim})"


class BipartiteState:
    """Density matrix on S (x) A with subsystem dimensions (d_S, d_A)"""

    __slots__ = ('_state', '_d_s', '_d_a')

    def __init__(self, d_S: int, d_A: int, state: Any):
        if not isinstance(state, DensityMatrix):
            state = DensityMatrix(state)
        if d_S < 1 or d_A < 1 or d_S * d_A != state.dim:
            raise StateValidationError(
                [f"subsystem dimensions ({d_S}, {d_A}) do not multiply to {state.dim}"]
            )
        self._state = state
        self._d_s = d_S
        self._d_a = d_A

    @property
    def d_S(self) -> int:
        return self._d_s

    @property
    def d_A(self) -> int:
        return self._d_a

    @property
    def dims(self):
        return (self._d_s, self._d_a)

    @property
    def state(self) -> DensityMatrix:
        return self._state

    @property
    def matrix(self) -> np.ndarray:
        return self._state.matrix

    @property
    def dim(self) -> int:
        return self._state.dim

    def marginal(self, keep: Subsystem) -> DensityMatrix:
        """Reduced state on the kept subsystem"""
        return partial_trace(self, keep)

    def to_json_dict(self) -> Dict[str, Any]:
        data = self._state.to_json_dict()
        data["dims"] = [self._d_s, self._d_a]
        return data

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any], tol: float = VALIDATION_TOL) -> 'BipartiteState':
        dims = data.get("dims")
        if not isinstance(dims, list) or len(dims) != 2:
            raise StateValidationError(["field 'dims' must be a list [d_S, d_A]"])
        return cls(int(dims[0]), int(dims[1]), DensityMatrix.from_json_dict(data, tol))

    def __repr__(self) -> str:
        return f"BipartiteState(d_S={self._d_s}, d_A={self._d_a})"


AnyState = Union[DensityMatrix, PureState, BipartiteState]


def _matrix_from_json(data: Dict[str, Any]) -> np.ndarray:
    failures = [f"missing field '{k}'" for k in ("dim", "re", "im") if k not in data]
    if failures:
        raise StateValidationError(failures)
    try:
        d = int(data["dim"])
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data["im"], dtype=float)
    except (TypeError, ValueError) as e:
        raise StateValidationError([f"non-numeric entries: {e}"])
    if re.shape != (d, d) or im.shape != (d, d):
        raise StateValidationError(
            [f"fields 're' and 'im' must be {d}x{d}, got {re.shape} and {im.shape}"]
        )
    return re + 1j * im


def state_from_json_dict(data: Dict[str, Any], tol: float = VALIDATION_TOL) -> AnyState:
    """Dispatch on the keys present in a parsed state file; ``tol`` bounds the matrix checks"""
    if not isinstance(data, dict):
        raise StateValidationError(["state file must contain a JSON object"])
    if "amp_re" in data or "amp_im" in data:
        return PureState.from_json_dict(data)
    if "dims" in data:
        return BipartiteState.from_json_dict(data, tol)
    return DensityMatrix.from_json_dict(data, tol)


def load_state(file_path: Union[str, Path], tol: float = VALIDATION_TOL) -> AnyState:
    """Load and validate a state file"""
    file_path = Path(file_path)
    if not file_path.exists():
        raise StateValidationError([f"state file not found: {file_path}"])
    try:
        with open(file_path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise StateValidationError([f"invalid JSON in state file: {e}"])
    return state_from_json_dict(data, tol)


def save_state(state: AnyState, file_path: Union[str, Path]):
    """Write a state file; floats keep their shortest round-trip repr"""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file_path, 'w') as f:
        json.dump(state.to_json_dict(), f, indent=2)
        f.write("\n")


def as_density(state: Any) -> DensityMatrix:
    """Coerce pure states, bipartite states and arrays to a DensityMatrix"""
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.to_density()
    if isinstance(state, BipartiteState):
        return state.state
    return DensityMatrix(state)


def dephase(rho: Any) -> DensityMatrix:
    """Zero every off-diagonal element in the reference basis"""
    rho = as_density(rho)
    return DensityMatrix(np.diag(np.diag(rho.matrix)))


def max_off_diagonal(matrix: Any) -> float:
    """Largest off-diagonal modulus"""
    arr = as_matrix(matrix)
    if arr.shape[0] < 2:
        return 0.0
    off = arr - np.diag(np.diag(arr))
    return float(np.max(np.abs(off)))


def is_incoherent(rho: Any, tol: float = 1e-12) -> bool:
    """True iff every off-diagonal modulus is at most ``tol``"""
    return max_off_diagonal(as_density(rho).matrix) <= tol


def is_bipartite_incoherent(rho: BipartiteState, tol: float = 1e-12) -> bool:
    """
    Incoherence with respect to the product reference basis

    A state is a mixture of products of incoherent states exactly when it is
    diagonal in the product basis.
    """
    return max_off_diagonal(rho.matrix) <= tol


def _require_dim(d: int):
    if d < 1:
        raise StateValidationError([f"dimension must be positive, got {d}"])


def maximally_coherent(d: int) -> PureState:
    """Uniform superposition of the d reference states"""
    _require_dim(d)
    return PureState(np.full(d, 1.0 / np.sqrt(d), dtype=complex))


def bell_state() -> BipartiteState:
    """(|00> + |11>)/sqrt(2)"""
    amp = np.zeros(4, dtype=complex)
    amp[0] = amp[3] = 1.0 / np.sqrt(2.0)
    return BipartiteState(2, 2, DensityMatrix(np.outer(amp, amp.conj())))


def derive_seed(master_seed: int, index: int) -> int:
    """Independent per-trial seed derived from a master seed"""
    sequence = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFF, int(index)])
    return int(sequence.generate_state(1)[0])


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_pure(d: int, seed: int) -> PureState:
    """Unitarily invariant random pure state"""
    _require_dim(d)
    rng = np.random.default_rng(seed)
    vec = _complex_gaussian(rng, d)
    return PureState(vec / np.linalg.norm(vec))


def random_mixed(d: int, seed: int, rank: Optional[int] = None) -> DensityMatrix:
    """
    Hilbert-Schmidt induced random state of the given rank

    Built as G G^dagger / Tr(G G^dagger) for a d x rank complex Ginibre
    matrix G.
    """
    _require_dim(d)
    rank = d if rank is None else rank
    if rank < 1 or rank > d:
        raise StateValidationError([f"rank must be in [1, {d}], got {rank}"])

    rng = np.random.default_rng(seed)
    g = _complex_gaussian(rng, (d, rank))
    m = g @ g.conj().T
    m = (m + m.conj().T) / 2
    return DensityMatrix(m / np.real(np.trace(m)))


def random_diagonal(d: int, seed: int) -> DensityMatrix:
    """Incoherent state with Dirichlet(1, ..., 1) populations"""
    _require_dim(d)
    rng = np.random.default_rng(seed)
    return DensityMatrix.from_diagonal(rng.dirichlet(np.ones(d)))


def state_hash(state: Any) -> str:
    """Short SHA-256 digest of the matrix bytes, for replay bookkeeping"""
    arr = np.ascontiguousarray(as_matrix(state), dtype=np.complex128)
    digest = hashlib.sha256()
    digest.update(str(arr.shape).encode())
    digest.update(arr.tobytes())
    return digest.hexdigest()[:16]


def _parse_floats(text: str, preset: str) -> List[float]:
    try:
        return [float(x) for x in text.split(',') if x.strip()]
    except ValueError:
        raise ConfigurationError(f"Invalid numbers in preset '{preset}'")


def parse_preset(preset: str) -> AnyState:
    """
    Build a named state

    Supported forms: ``bell``, ``plus``, ``mc:d``, ``diag:p`` (qubit
    diag(p, 1-p)) or ``diag:p0,p1,...``, and ``qubit:a,r`` for
    [[a, r], [r, 1-a]].
    """
    name, _, arg = preset.strip().partition(':')
    name = name.lower()

    try:
        if name == 'bell':
            return bell_state()
        if name == 'plus':
            return maximally_coherent(2).to_density()
        if name == 'mc':
            return maximally_coherent(int(arg)).to_density()
        if name == 'diag':
            values = _parse_floats(arg, preset)
            if len(values) == 1:
                values = [values[0], 1.0 - values[0]]
            return DensityMatrix.from_diagonal(values)
        if name == 'qubit':
            values = _parse_floats(arg, preset)
            if len(values) != 2:
                raise ConfigurationError(f"Preset '{preset}' needs two numbers a,r")
            a, r = values
            return DensityMatrix([[a, r], [r, 1.0 - a]])
    except StateValidationError as e:
        raise ConfigurationError(f"Preset '{preset}' is not a valid state: {e}")
    except ValueError:
        raise ConfigurationError(f"Invalid preset argument in '{preset}'")

    raise ConfigurationError(f"Unknown preset: {preset}")
