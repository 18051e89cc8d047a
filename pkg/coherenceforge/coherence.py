"""
Coherence quantifiers

l1-norm, relative entropy and the fidelity-based family (geometric, Bures,
Groverian). The fidelity-based measures share one maximization of the
fidelity over diagonal states.
"""

import itertools
import logging
from functools import partial
from typing import Any, Callable, Optional, Sequence, Tuple

import numpy as np

from .exceptions import DimensionMismatchError, NoConvergenceError
from .linalg import (
    SUPPORT_TOL, as_matrix, clip_spectrum, hermitian_eig, matrix_sqrt_psd,
    relative_entropy, von_neumann_entropy
)
from .models import (
    CoherenceMeasure, FidelityDistance, FidelityOptimum, GradientMode, OptimizerOptions,
    VerificationRecord
)
from .states import as_density, dephase, max_off_diagonal, state_hash

logger = logging.getLogger(__name__)

# Measures this close to zero from below are rounding noise
NEGATIVE_CLIP = 1e-9
# A start whose projected-gradient residual is below this counts as stationary
STATIONARITY_TOL = 1e-6
_MIN_STEP = 1e-14
# Singular values below this fraction of the largest are treated as zero
_RANK_RTOL = 1e-12


def c_l1(rho: Any) -> float:
    """Sum of the moduli of all off-diagonal elements"""
    m = as_density(rho).matrix
    # sum only the off-diagonal entries so diagonal states give exactly 0
    off_diagonal = ~np.eye(m.shape[0], dtype=bool)
    return float(np.sum(np.abs(m[off_diagonal])))


def c_rel_entropy(rho: Any) -> float:
    """Relative entropy of coherence, H(dephase(rho)) - H(rho)"""
    rho = as_density(rho)
    value = von_neumann_entropy(dephase(rho)) - von_neumann_entropy(rho)
    return max(value, 0.0)


def c_rel_entropy_is_minimum(rho: Any, n_samples: int, seed: int) -> VerificationRecord:
    """
    Check that no sampled diagonal state beats the dephased state

    Samples ``n_samples`` Dirichlet-distributed diagonal states sigma and
    records the smallest H(rho||sigma) against H(rho||dephase(rho)).
    """
    rho = as_density(rho)
    reference = relative_entropy(rho, dephase(rho))

    rng = np.random.default_rng(seed)
    best_value = float('inf')
    best_weights = None
    for _ in range(n_samples):
        weights = rng.dirichlet(np.ones(rho.dim))
        value = relative_entropy(rho, np.diag(weights))
        if value < best_value:
            best_value = value
            best_weights = weights

    margin = best_value - reference
    return VerificationRecord(
        check="cr-minimum",
        seed=seed,
        input_hash=state_hash(rho),
        lhs=best_value,
        rhs=reference,
        margin=margin,
        passed=bool(margin >= -NEGATIVE_CLIP),
        details={
            "samples": n_samples,
            "best_weights": best_weights.tolist() if best_weights is not None else [],
        },
    )


def c_geometric_qubit(rho: Any) -> float:
    """Closed form 1/2 (1 - sqrt(1 - 4|rho_01|^2)) for a single qubit"""
    m = as_density(rho).matrix
    if m.shape != (2, 2):
        raise DimensionMismatchError(f"Qubit closed form needs a 2x2 state, got {m.shape}")
    r_sq = min(4.0 * abs(m[0, 1]) ** 2, 1.0)
    return float(0.5 * (1.0 - np.sqrt(1.0 - r_sq)))


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w : w >= 0, sum(w) = 1}"""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, v.size + 1) > (cssv - 1.0))[0][-1]
    theta = (cssv[rho] - 1.0) / (rho + 1.0)
    return np.clip(v - theta, 0.0, None)


def g_of_fidelity(fidelity_value: float, g: FidelityDistance) -> float:
    """Map a fidelity to the distance selected by ``g``"""
    f = min(max(fidelity_value, 0.0), 1.0)
    g = FidelityDistance(g)
    if g == FidelityDistance.GEOMETRIC:
        return 1.0 - f
    if g == FidelityDistance.BURES:
        return float(2.0 * (1.0 - np.sqrt(f)))
    return float(np.sqrt(1.0 - f))


class _RootFidelity:
    """
    w -> sqrt F(rho, sum_k w_k |s_k><s_k|) for basis indices s_k in ``support``

    sqrt(rho) sqrt(sigma) keeps only the support columns of sqrt(rho), scaled
    by sqrt(w), so the root fidelity is the nuclear norm of that block.
    """

    def __init__(self, rho: Any, support: Sequence[int]):
        self.block = matrix_sqrt_psd(as_matrix(rho))[:, list(support)]

    def __call__(self, w: np.ndarray) -> float:
        scaled = self.block * np.sqrt(np.clip(w, 0.0, None))
        return float(np.sum(np.linalg.svd(scaled, compute_uv=False)))

    def gradient(self, w: np.ndarray, floor: float) -> np.ndarray:
        """
        Gradient through the polar factor: d||B D||_1 / dw_k = Re <P e_k, B e_k> / (2 sqrt w_k)

        Weights below ``floor`` are lifted to it, since the derivative in
        sqrt(w) diverges at the boundary.
        """
        root = np.sqrt(np.maximum(w, floor))
        u, s, vh = np.linalg.svd(self.block * root, full_matrices=False)
        keep = s > _RANK_RTOL * s[0]
        polar = u[:, keep] @ vh[keep, :]
        return np.real(np.sum(polar.conj() * self.block, axis=0)) / (2.0 * root)


def incoherent_fidelity(rho: Any, weights: Sequence[float], support: Optional[Sequence[int]] = None) -> float:
    """Fidelity between rho and the diagonal state with the given weights"""
    m = as_matrix(rho)
    support = list(range(m.shape[0])) if support is None else list(support)
    objective = _RootFidelity(m, support)
    return min(objective(np.asarray(weights, dtype=float)) ** 2, 1.0)


def _numerical_gradient(objective: Callable[[np.ndarray], float], w: np.ndarray, h: float) -> np.ndarray:
    grad = np.empty_like(w)
    base = None
    for k in range(w.size):
        step = np.zeros_like(w)
        step[k] = h
        if w[k] >= h:
            grad[k] = (objective(w + step) - objective(w - step)) / (2 * h)
        else:
            # one-sided at the simplex boundary
            if base is None:
                base = objective(w)
            grad[k] = (objective(w + step) - base) / h
    return grad


def _ascend(objective: Callable[[np.ndarray], float], gradient: Callable[[np.ndarray], np.ndarray],
            start: np.ndarray, opts: OptimizerOptions) -> Tuple[np.ndarray, float, int, bool]:
    """Projected gradient ascent with a growing/backtracking step"""
    w = project_to_simplex(start)
    value = objective(w)
    step = 1.0

    for iteration in range(1, opts.max_iters + 1):
        grad = gradient(w)

        candidate, candidate_value = w, value
        while step > _MIN_STEP:
            candidate = project_to_simplex(w + step * grad)
            candidate_value = objective(candidate)
            if candidate_value > value:
                break
            step *= 0.5
        else:
            # no ascent at any step size: stationary
            return w, value, iteration, True

        gain = candidate_value - value
        w, value = candidate, candidate_value
        step *= 2.0
        if gain < opts.tol:
            return w, value, iteration, True

    residual = float(np.linalg.norm(project_to_simplex(w + gradient(w)) - w))
    return w, value, opts.max_iters, residual <= STATIONARITY_TOL


def maximize_incoherent_fidelity(rho: Any, opts: Optional[OptimizerOptions] = None,
                                 support: Optional[Sequence[int]] = None) -> FidelityOptimum:
    """
    Maximize F(rho, sigma) over diagonal states sigma

    The root fidelity is concave in the weights, so once the warm start
    (the dephased state) is stationary the random restarts are skipped
    unless ``opts.exhaustive`` is set.

    Args:
        rho: State to compare against
        opts: Optimizer settings; defaults to OptimizerOptions()
        support: Basis indices the diagonal candidates may occupy; all
            indices when omitted

    Returns:
        FidelityOptimum with weights indexed like ``support``

    Raises:
        NoConvergenceError: If no start reaches a stationary point
    """
    opts = opts or OptimizerOptions()
    m = as_matrix(rho)
    d = m.shape[0]
    support = list(range(d)) if support is None else list(support)
    populations = np.real(np.diag(m))
    support_weights = populations[support]

    # Diagonal state living on the support: fidelity 1 at itself
    outside = np.delete(populations, support).sum() if len(support) < d else 0.0
    if max_off_diagonal(m) <= SUPPORT_TOL and outside <= SUPPORT_TOL:
        weights = project_to_simplex(support_weights)
        return FidelityOptimum(fidelity=1.0, weights=weights.tolist(), exact=True)

    # Pure state: the fidelity is linear in the weights, maximal at a vertex
    eig = hermitian_eig(m)
    top = clip_spectrum(eig.eigenvalues)[-1]
    if top >= 1.0 - SUPPORT_TOL:
        overlaps = np.abs(eig.eigenvectors[support, -1]) ** 2
        best = int(np.argmax(overlaps))
        weights = np.zeros(len(support))
        weights[best] = 1.0
        return FidelityOptimum(
            fidelity=min(float(overlaps[best]), 1.0), weights=weights.tolist(), exact=True
        )

    objective = _RootFidelity(m, support)
    if opts.gradient == GradientMode.ANALYTIC:
        gradient = partial(objective.gradient, floor=opts.fd_step)
    else:
        gradient = partial(_numerical_gradient, objective, h=opts.fd_step)
    rng = np.random.default_rng(opts.seed)
    warm = support_weights / support_weights.sum() if support_weights.sum() > 0 else \
        np.full(len(support), 1.0 / len(support))
    starts = [warm] + [rng.dirichlet(np.ones(len(support))) for _ in range(opts.starts)]

    best_w, best_value = None, -1.0
    total_iterations = 0
    converged = 0
    run = 0
    for index, start in enumerate(starts):
        w, value, iterations, ok = _ascend(objective, gradient, start, opts)
        run += 1
        total_iterations += iterations
        converged += int(ok)
        if not ok:
            logger.debug(f"Start {index} stopped after {iterations} iterations without stationarity")
        if value > best_value:
            best_w, best_value = w, value
        if index == 0 and ok and not opts.exhaustive:
            break

    if converged == 0:
        raise NoConvergenceError(
            f"None of {run} optimizer starts reached a stationary point "
            f"within {opts.max_iters} iterations"
        )
    if converged < run:
        logger.warning(f"{run - converged} of {run} optimizer starts did not converge")

    return FidelityOptimum(
        fidelity=min(best_value ** 2, 1.0),
        weights=best_w.tolist(),
        iterations=total_iterations,
        starts=run,
        converged_starts=converged,
    )


def c_geometric(rho: Any, opts: Optional[OptimizerOptions] = None) -> float:
    """Geometric coherence 1 - max F(rho, sigma) over incoherent sigma"""
    optimum = maximize_incoherent_fidelity(as_density(rho), opts)
    return max(1.0 - optimum.fidelity, 0.0)


def c_gF(rho: Any, g: FidelityDistance, opts: Optional[OptimizerOptions] = None) -> float:
    """Fidelity-distance coherence g(F*) for the maximal incoherent fidelity F*"""
    optimum = maximize_incoherent_fidelity(as_density(rho), opts)
    return max(g_of_fidelity(optimum.fidelity, g), 0.0)


def _simplex_grid(d: int, n: int):
    # stars and bars: compositions of n into d nonnegative parts
    for bars in itertools.combinations(range(n + d - 1), d - 1):
        edges = (-1,) + bars + (n + d - 1,)
        yield np.array([edges[i + 1] - edges[i] - 1 for i in range(d)], dtype=float) / n


def c_geometric_grid(rho: Any, step: float = 0.01) -> float:
    """Brute-force geometric coherence over a regular simplex grid"""
    rho = as_density(rho)
    n = int(round(1.0 / step))
    objective = _RootFidelity(rho.matrix, range(rho.dim))
    best = max(objective(w) for w in _simplex_grid(rho.dim, n))
    return max(1.0 - min(best ** 2, 1.0), 0.0)


def coherence_measure(measure: CoherenceMeasure, rho: Any, opts: Optional[OptimizerOptions] = None) -> float:
    """Evaluate a coherence measure by tag; qubits use the geometric closed form"""
    measure = CoherenceMeasure(measure)
    rho = as_density(rho)
    if measure == CoherenceMeasure.L1:
        return c_l1(rho)
    if measure == CoherenceMeasure.REL_ENTROPY:
        return c_rel_entropy(rho)
    if rho.dim == 2:
        return c_geometric_qubit(rho)
    return c_geometric(rho, opts)
