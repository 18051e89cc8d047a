"""
Dense complex linear algebra for small Hermitian matrices

Every routine accepts either a numpy array or any object exposing a
``matrix`` attribute (density matrices, bipartite states).
"""

import logging
from typing import Any, NamedTuple, Tuple

import numpy as np
from scipy.special import xlogy

from .exceptions import (
    DimensionMismatchError, NoConvergenceError, NotHermitianError, NotPSDError
)
from .models import Subsystem

logger = logging.getLogger(__name__)

# Eigenvalues in [-CLIP_TOL, 0) are numerical drift and clipped to zero
CLIP_TOL = 1e-10
# Relative entropy is infinite once rho puts weight above this on ker(sigma)
SUPPORT_TOL = 1e-12

_LN2 = np.log(2.0)


class EigenDecomposition(NamedTuple):
    """Ascending eigenvalues with orthonormal eigenvector columns"""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m: Any) -> np.ndarray:
    """Return the complex 2-D array behind ``m``"""
    if hasattr(m, 'matrix'):
        m = m.matrix
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"Expected a matrix, got array of shape {arr.shape}")
    return arr


def _require_square(m: np.ndarray):
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"Matrix must be square, got shape {m.shape}")


def _require_same_shape(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Dimension mismatch: {a.shape} vs {b.shape}")


def hermiticity_gap(m: Any) -> float:
    """Largest entry modulus of M - M^dagger"""
    arr = as_matrix(m)
    _require_square(arr)
    return float(np.max(np.abs(arr - arr.conj().T))) if arr.size else 0.0


def is_hermitian(m: Any, tol: float = CLIP_TOL) -> bool:
    """True when M - M^dagger is within tol entrywise"""
    return hermiticity_gap(m) <= tol


def hermitian_eig(m: Any, tol: float = CLIP_TOL) -> EigenDecomposition:
    """
    Eigendecomposition of a Hermitian matrix

    Args:
        m: Square matrix, Hermitian within ``tol``
        tol: Allowed entrywise asymmetry

    Returns:
        EigenDecomposition with eigenvalues ascending
    """
    arr = as_matrix(m)
    _require_square(arr)

    gap = hermiticity_gap(arr)
    if gap > tol:
        raise NotHermitianError(f"Matrix is not Hermitian: asymmetry {gap:.3e} exceeds {tol:.1e}")

    # Symmetrize so LAPACK sees an exactly Hermitian input
    herm = (arr + arr.conj().T) / 2
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(herm)
    except np.linalg.LinAlgError as e:
        raise NoConvergenceError(f"Hermitian eigensolver did not converge: {e}") from e

    return EigenDecomposition(eigenvalues, eigenvectors)


def clip_spectrum(eigenvalues: np.ndarray, tol: float = CLIP_TOL) -> np.ndarray:
    """Clip eigenvalues in [-tol, 0) to zero, reject anything more negative"""
    if eigenvalues.size and eigenvalues.min() < -tol:
        raise NotPSDError(f"Matrix is not positive semidefinite: eigenvalue {eigenvalues.min():.3e}")
    return np.clip(eigenvalues, 0.0, None)


def matrix_sqrt_psd(m: Any, tol: float = CLIP_TOL) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix"""
    eig = hermitian_eig(m, tol)
    roots = np.sqrt(clip_spectrum(eig.eigenvalues, tol))
    v = eig.eigenvectors
    return (v * roots) @ v.conj().T


def fidelity(rho: Any, sigma: Any) -> float:
    """
    Uhlmann fidelity F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2

    Evaluated as the squared nuclear norm of sqrt(rho) sqrt(sigma), which is
    symmetric in its arguments and avoids square roots of tiny eigenvalues of
    the sandwiched product.
    """
    a = as_matrix(rho)
    b = as_matrix(sigma)
    _require_same_shape(a, b)

    root_product = matrix_sqrt_psd(a) @ matrix_sqrt_psd(b)
    singular_values = np.linalg.svd(root_product, compute_uv=False)
    value = float(np.sum(singular_values)) ** 2
    return min(max(value, 0.0), 1.0)


def entropy_of_spectrum(probabilities: np.ndarray) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0"""
    p = np.clip(np.asarray(probabilities, dtype=float), 0.0, None)
    return max(float(-np.sum(xlogy(p, p)) / _LN2), 0.0)


def von_neumann_entropy(rho: Any) -> float:
    """Von Neumann entropy in bits"""
    eig = hermitian_eig(rho)
    return entropy_of_spectrum(clip_spectrum(eig.eigenvalues))


def relative_entropy(rho: Any, sigma: Any) -> float:
    """
    Quantum relative entropy H(rho||sigma) = Tr[rho log2 rho] - Tr[rho log2 sigma]

    Returns +inf when rho carries weight above SUPPORT_TOL on an eigenvector
    of sigma whose eigenvalue is below SUPPORT_TOL.
    """
    a = as_matrix(rho)
    b = as_matrix(sigma)
    _require_same_shape(a, b)

    rho_entropy = von_neumann_entropy(a)

    eig_sigma = hermitian_eig(b)
    sigma_values = clip_spectrum(eig_sigma.eigenvalues)
    v = eig_sigma.eigenvectors
    weights = np.real(np.einsum('ik,ij,jk->k', v.conj(), a, v))

    kernel = sigma_values < SUPPORT_TOL
    if np.any(weights[kernel] > SUPPORT_TOL):
        return float('inf')

    support = ~kernel
    cross = float(np.sum(weights[support] * np.log2(sigma_values[support])))
    return max(-rho_entropy - cross, 0.0)


def kron(a: Any, b: Any) -> np.ndarray:
    """Kronecker product; dimensions multiply"""
    return np.kron(as_matrix(a), as_matrix(b))


def _split_dims(m: np.ndarray, dims: Tuple[int, int]) -> np.ndarray:
    d_s, d_a = dims
    if m.shape != (d_s * d_a, d_s * d_a):
        raise DimensionMismatchError(
            f"Subsystem dimensions {dims} do not match matrix of shape {m.shape}"
        )
    return m.reshape(d_s, d_a, d_s, d_a)


def partial_trace_array(m: Any, dims: Tuple[int, int], keep: Subsystem) -> np.ndarray:
    """Trace out one factor of a bipartite matrix given as an array"""
    tensor = _split_dims(as_matrix(m), dims)
    if Subsystem(keep) == Subsystem.S:
        return np.einsum('ijkj->ik', tensor)
    return np.einsum('ijil->jl', tensor)


def partial_trace(state: Any, keep: Subsystem):
    """
    Reduced state of a bipartite state

    Args:
        state: BipartiteState
        keep: Subsystem to keep

    Returns:
        DensityMatrix of the kept subsystem
    """
    from .states import DensityMatrix

    reduced = partial_trace_array(state.matrix, (state.d_S, state.d_A), keep)
    return DensityMatrix(reduced)


def partial_transpose(m: Any, dims: Tuple[int, int], subsystem: Subsystem = Subsystem.A) -> np.ndarray:
    """Transpose one tensor factor of a bipartite matrix"""
    tensor = _split_dims(as_matrix(m), dims)
    d = dims[0] * dims[1]
    if Subsystem(subsystem) == Subsystem.A:
        return tensor.transpose(0, 3, 2, 1).reshape(d, d)
    return tensor.transpose(2, 1, 0, 3).reshape(d, d)


def purity(rho: Any) -> float:
    """tr(rho^2); 1 for pure states, 1/d for the maximally mixed state"""
    arr = as_matrix(rho)
    return float(np.real(np.trace(arr @ arr)))
