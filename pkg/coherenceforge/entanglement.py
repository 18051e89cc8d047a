"""
Entanglement quantifiers computable at small dimension

Two-qubit concurrence and geometric entanglement, hashing bounds, exact
values on maximally correlated states and PPT separability checks.
"""

import logging
from typing import Any, List, Optional, Tuple

import numpy as np

from .coherence import g_of_fidelity, maximize_incoherent_fidelity
from .exceptions import CertificationFailedError, DimensionMismatchError, UnsupportedDimsError
from .linalg import hermitian_eig, matrix_sqrt_psd, partial_transpose, relative_entropy, von_neumann_entropy
from .models import FidelityDistance, OptimizerOptions, Subsystem
from .states import BipartiteState, DensityMatrix, as_density

logger = logging.getLogger(__name__)

CERTIFICATION_TOL = 1e-9
PPT_TOL = 1e-10

# (d_S, d_A) pairs where a positive partial transpose implies separability
PPT_EXACT_DIMS = {(2, 2), (2, 3), (3, 2)}

_PAULI_Y = np.array([[0, -1j], [1j, 0]])
_YY = np.kron(_PAULI_Y, _PAULI_Y)


class MaximallyCorrelatedState:
    """
    sum_ij rho_ij |ii><jj| built from a single-system state rho

    The coefficient matrix is the underlying state itself, so validity of
    the bipartite state follows from validity of rho.
    """

    __slots__ = ('_coefficients',)

    def __init__(self, coefficients: Any):
        self._coefficients = as_density(coefficients)

    @property
    def d(self) -> int:
        return self._coefficients.dim

    @property
    def coefficients(self) -> DensityMatrix:
        return self._coefficients

    @property
    def embed_indices(self) -> List[int]:
        """Positions of |ii> in the product basis"""
        return [i * self.d + i for i in range(self.d)]

    def to_bipartite(self) -> BipartiteState:
        d = self.d
        idx = self.embed_indices
        m = np.zeros((d * d, d * d), dtype=complex)
        m[np.ix_(idx, idx)] = self._coefficients.matrix
        return BipartiteState(d, d, m)

    def dephased_partner(self) -> BipartiteState:
        """Classically correlated state sum_i rho_ii |ii><ii|"""
        d = self.d
        m = np.zeros((d * d, d * d), dtype=complex)
        for i, p in zip(self.embed_indices, self._coefficients.diagonal):
            m[i, i] = p
        return BipartiteState(d, d, m)

    def __repr__(self) -> str:
        return f"MaximallyCorrelatedState(d={self.d})"


def _require_two_qubits(rho: BipartiteState):
    if rho.dims != (2, 2):
        raise DimensionMismatchError(f"Two-qubit formula needs dims (2, 2), got {rho.dims}")


def concurrence_two_qubit(rho: BipartiteState) -> float:
    """
    Concurrence max(0, l1 - l2 - l3 - l4)

    The l_k are the decreasing square roots of the eigenvalues of
    rho (Y x Y) rho* (Y x Y), obtained as singular values of
    sqrt(rho) sqrt(rho~) with conjugation taken entrywise in the product
    basis.
    """
    _require_two_qubits(rho)
    root = matrix_sqrt_psd(rho.matrix)
    root_tilde = _YY @ root.conj() @ _YY
    lambdas = np.linalg.svd(root @ root_tilde, compute_uv=False)
    value = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]
    return float(min(max(value, 0.0), 1.0))


def e_geometric_two_qubit(rho: BipartiteState) -> float:
    """Geometric entanglement 1/2 (1 - sqrt(1 - C^2)) from the concurrence"""
    c = concurrence_two_qubit(rho)
    return float(0.5 * (1.0 - np.sqrt(max(1.0 - c * c, 0.0))))


def hashing_lower_bound(rho: BipartiteState, keep: Subsystem = Subsystem.S) -> float:
    """Coherent information H(rho_keep) - H(rho); negative values are vacuous"""
    return von_neumann_entropy(rho.marginal(keep)) - von_neumann_entropy(rho)


def mc_embed(rho: Any) -> MaximallyCorrelatedState:
    """Maximally correlated state sum rho_ij |ii><jj| with the coefficients of rho"""
    return MaximallyCorrelatedState(rho)


def distillable_bounds_mc(mc: MaximallyCorrelatedState) -> Tuple[float, float]:
    """
    Hashing lower bound and relative-entropy upper bound

    Distillable entanglement and relative entropy of entanglement both lie
    between the two values.
    """
    state = mc.to_bipartite()
    lower = hashing_lower_bound(state)
    upper = relative_entropy(state, mc.dephased_partner())
    return lower, upper


def e_rel_entropy_mc(mc: MaximallyCorrelatedState) -> float:
    """
    Certified relative entropy of entanglement of a maximally correlated state

    Raises:
        CertificationFailedError: If the bounds differ by more than 1e-9
    """
    lower, upper = distillable_bounds_mc(mc)
    gap = abs(upper - lower)
    if not gap <= CERTIFICATION_TOL:
        raise CertificationFailedError(
            f"Entanglement bounds disagree: lower {lower:.12g}, upper {upper:.12g}", gap
        )
    return max(lower, 0.0)


def e_gF_mc(mc: MaximallyCorrelatedState, g: FidelityDistance,
            opts: Optional[OptimizerOptions] = None) -> float:
    """g(F) distance to the closest diagonal maximally correlated state"""
    optimum = maximize_incoherent_fidelity(mc.to_bipartite().matrix, opts, support=mc.embed_indices)
    return max(g_of_fidelity(optimum.fidelity, g), 0.0)


def e_geometric_mc(mc: MaximallyCorrelatedState, opts: Optional[OptimizerOptions] = None) -> float:
    """Geometric entanglement 1 - F of a maximally correlated state"""
    return e_gF_mc(mc, FidelityDistance.GEOMETRIC, opts)


def min_partial_transpose_eigenvalue(rho: BipartiteState) -> float:
    """Smallest eigenvalue of the partial transpose on A"""
    transposed = partial_transpose(rho.matrix, rho.dims, Subsystem.A)
    return float(hermitian_eig(transposed).eigenvalues[0])


def ppt_check(rho: BipartiteState, tol: float = PPT_TOL) -> bool:
    """True iff the partial transpose is positive; necessary for separability"""
    return min_partial_transpose_eigenvalue(rho) >= -tol


def ppt_is_separable_small(rho: BipartiteState, tol: float = PPT_TOL) -> bool:
    """
    Separability decided by the partial transpose

    Raises:
        UnsupportedDimsError: Outside 2x2, 2x3 and 3x2
    """
    if rho.dims not in PPT_EXACT_DIMS:
        raise UnsupportedDimsError(
            f"PPT decides separability only for dims {sorted(PPT_EXACT_DIMS)}, got {rho.dims}"
        )
    return ppt_check(rho, tol)
