"""
Tests for dense linear algebra helpers
"""

import pytest
import numpy as np

from coherenceforge.exceptions import DimensionMismatchError, NotHermitianError, NotPSDError
from coherenceforge.linalg import (
    fidelity, hermitian_eig, is_hermitian, kron, matrix_sqrt_psd, partial_trace, partial_transpose,
    purity, relative_entropy, von_neumann_entropy
)
from coherenceforge.models import Subsystem
from coherenceforge.states import (
    BipartiteState, DensityMatrix, bell_state, dephase, maximally_coherent, random_mixed
)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


def random_hermitian(d, rng):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


class TestHermitianEig:

    def test_identity(self):
        """Identity has a doubly degenerate unit eigenvalue"""
        eig = hermitian_eig(np.eye(2))
        assert np.allclose(eig.eigenvalues, [1.0, 1.0])

    def test_pauli_x(self):
        """Pauli-X spectrum is ascending [-1, 1]"""
        eig = hermitian_eig(PAULI_X)
        assert np.allclose(eig.eigenvalues, [-1.0, 1.0])

    def test_diagonal(self):
        """Diagonal input keeps its entries and gets permuted identity eigenvectors"""
        eig = hermitian_eig(np.diag([0.8, 0.2]))
        assert np.allclose(eig.eigenvalues, [0.2, 0.8])
        assert np.allclose(np.abs(eig.eigenvectors), [[0, 1], [1, 0]])

    def test_reconstruction(self):
        """V diag(l) V^dagger reconstructs random Hermitian matrices"""
        rng = np.random.default_rng(3)
        for _ in range(200):
            d = int(rng.integers(1, 9))
            m = random_hermitian(d, rng)
            eig = hermitian_eig(m)
            v = eig.eigenvectors
            assert np.linalg.norm(eig.reconstruct() - m) <= 1e-10 * max(np.linalg.norm(m), 1.0)
            assert np.allclose(v.conj().T @ v, np.eye(d), atol=1e-10)
            assert np.all(np.diff(eig.eigenvalues) >= 0)

    def test_not_hermitian(self):
        """Asymmetric input is rejected"""
        with pytest.raises(NotHermitianError):
            hermitian_eig(np.array([[0, 1], [0, 0]]))

    def test_is_hermitian(self):
        """Hermiticity check respects the tolerance"""
        assert is_hermitian(PAULI_X)
        assert not is_hermitian(np.array([[0, 1], [0, 0]]))
        assert is_hermitian(np.array([[1, 1e-14], [0, 1]]))

    def test_not_square(self):
        """Non-square input is a dimension error"""
        with pytest.raises(DimensionMismatchError):
            hermitian_eig(np.zeros((2, 3)))


class TestMatrixSqrt:

    def test_identity(self):
        """sqrt(I) = I"""
        assert np.allclose(matrix_sqrt_psd(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        """sqrt(diag(4, 9)) = diag(2, 3)"""
        assert np.allclose(matrix_sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_projector(self):
        """A rank-1 projector is its own square root"""
        plus = maximally_coherent(2).to_density().matrix
        assert np.allclose(matrix_sqrt_psd(plus), plus, atol=1e-10)

    def test_round_trip(self):
        """R R = M for random PSD matrices"""
        for seed in range(50):
            m = random_mixed(4, seed).matrix
            root = matrix_sqrt_psd(m)
            assert np.linalg.norm(root @ root - m) <= 1e-9 * np.linalg.norm(m)

    def test_small_negative_eigenvalue_clipped(self):
        """Drift above -1e-10 is clipped instead of rejected"""
        root = matrix_sqrt_psd(np.diag([1.0, -1e-12]))
        assert np.allclose(root, np.diag([1.0, 0.0]))

    def test_negative_eigenvalue_rejected(self):
        """Genuinely negative spectra raise NotPSDError"""
        with pytest.raises(NotPSDError):
            matrix_sqrt_psd(np.diag([1.0, -0.1]))


class TestFidelity:

    def test_identical_states(self, qubit_state):
        """F(rho, rho) = 1"""
        assert fidelity(qubit_state, qubit_state) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_pure_states(self):
        """F(|0><0|, |1><1|) = 0"""
        assert fidelity(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == pytest.approx(0.0, abs=1e-12)

    def test_plus_against_maximally_mixed(self):
        """F(|+><+|, I/2) = 1/2"""
        plus = maximally_coherent(2).to_density()
        assert fidelity(plus, np.eye(2) / 2) == pytest.approx(0.5, abs=1e-9)

    def test_commuting_diagonal_states(self):
        """Diagonal states give the classical fidelity (sum sqrt(p q))^2"""
        p = np.array([0.2, 0.3, 0.5])
        q = np.array([0.6, 0.1, 0.3])
        expected = np.sum(np.sqrt(p * q)) ** 2
        assert fidelity(np.diag(p), np.diag(q)) == pytest.approx(expected, abs=1e-12)

    def test_symmetric_and_bounded(self):
        """0 <= F <= 1 and F(rho, sigma) = F(sigma, rho)"""
        for seed in range(30):
            rho = random_mixed(3, seed)
            sigma = random_mixed(3, seed + 100, rank=2)
            forward = fidelity(rho, sigma)
            assert 0.0 <= forward <= 1.0 + 1e-12
            assert forward == pytest.approx(fidelity(sigma, rho), abs=1e-9)

    def test_dimension_mismatch(self):
        """States of different dimension cannot be compared"""
        with pytest.raises(DimensionMismatchError):
            fidelity(np.eye(2) / 2, np.eye(3) / 3)


class TestEntropy:

    def test_pure_state(self):
        """Pure states have zero entropy"""
        assert von_neumann_entropy(np.diag([1.0, 0.0])) == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed(self):
        """Maximally mixed qubit and two-qubit states have 1 and 2 bits"""
        assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0)
        assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(2.0)

    def test_additivity(self):
        """H(rho (x) sigma) = H(rho) + H(sigma)"""
        rho = random_mixed(2, 1)
        sigma = random_mixed(3, 2)
        joint = von_neumann_entropy(kron(rho, sigma))
        assert joint == pytest.approx(von_neumann_entropy(rho) + von_neumann_entropy(sigma), abs=1e-9)


class TestRelativeEntropy:

    def test_identical(self, qutrit_state):
        """H(rho||rho) = 0"""
        assert relative_entropy(qutrit_state, qutrit_state) == pytest.approx(0.0, abs=1e-9)

    def test_plus_against_maximally_mixed(self):
        """H(|+><+| || I/2) = 1"""
        plus = maximally_coherent(2).to_density()
        assert relative_entropy(plus, np.eye(2) / 2) == pytest.approx(1.0, abs=1e-9)

    def test_disjoint_support_is_infinite(self):
        """Support outside the kernel of sigma gives +inf"""
        assert relative_entropy(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == float('inf')

    def test_dephasing_contracts(self):
        """H(dephase(rho)||dephase(sigma)) <= H(rho||sigma)"""
        for seed in range(20):
            rho = random_mixed(3, seed)
            sigma = random_mixed(3, seed + 50)
            before = relative_entropy(rho, sigma)
            after = relative_entropy(dephase(rho), dephase(sigma))
            assert after <= before + 1e-9


class TestTensorHelpers:

    def test_kron_identities(self):
        """I2 (x) I2 = I4"""
        assert np.allclose(kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_kron_projector(self):
        """|0><0| (x) |1><1| is the projector on basis index 1"""
        expected = np.zeros((4, 4))
        expected[1, 1] = 1.0
        assert np.allclose(kron(np.diag([1, 0]), np.diag([0, 1])), expected)

    def test_kron_x_x(self):
        """X (x) X maps |00> to |11>"""
        ket = np.zeros(4)
        ket[0] = 1.0
        assert np.allclose(kron(PAULI_X, PAULI_X) @ ket, [0, 0, 0, 1])

    def test_partial_trace_product(self):
        """Tr_A(rho (x) sigma) = rho"""
        rho = random_mixed(2, 5)
        sigma = random_mixed(3, 6)
        state = BipartiteState(2, 3, rho.tensor(sigma))
        assert partial_trace(state, Subsystem.S).allclose(rho)
        assert partial_trace(state, Subsystem.A).allclose(sigma)

    def test_partial_trace_bell(self):
        """Both Bell marginals are maximally mixed"""
        bell = bell_state()
        assert partial_trace(bell, Subsystem.S).allclose(np.eye(2) / 2)
        assert partial_trace(bell, Subsystem.A).allclose(np.eye(2) / 2)

    def test_partial_trace_dimension_mismatch(self):
        """Dims that do not factor the matrix are rejected"""
        from coherenceforge.linalg import partial_trace_array
        with pytest.raises(DimensionMismatchError):
            partial_trace_array(np.eye(4) / 4, (2, 3), Subsystem.S)

    def test_partial_transpose_bell_is_not_positive(self):
        """The partially transposed Bell state has eigenvalue -1/2"""
        transposed = partial_transpose(bell_state().matrix, (2, 2))
        assert hermitian_eig(transposed).eigenvalues[0] == pytest.approx(-0.5)

    def test_purity(self):
        """Tr rho^2 is 1 for pure states and 1/d when maximally mixed"""
        assert purity(maximally_coherent(3).to_density()) == pytest.approx(1.0)
        assert purity(DensityMatrix.maximally_mixed(4)) == pytest.approx(0.25)
