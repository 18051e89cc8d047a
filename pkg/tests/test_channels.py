"""
Tests for incoherent channels, instruments and the flag dilation
"""

import pytest
import numpy as np
from pathlib import Path

from coherenceforge.channels import (
    KrausChannel, apply, apply_selective, attach_ancilla, certify_incoherent, completeness_gap,
    convexity_suite, convexity_trial, dilation_consistency_check, flag_blocks, load_channel,
    monotonicity_suite, monotonicity_trial, random_incoherent_channel, save_channel,
    tripartite_flag_dilation
)
from coherenceforge.conversion import convert, generalized_cnot
from coherenceforge.exceptions import ChannelError, DimensionMismatchError, NotIncoherentError
from coherenceforge.models import CoherenceMeasure
from coherenceforge.states import (
    BipartiteState, DensityMatrix, PureState, dephase, derive_seed, is_incoherent,
    random_diagonal, random_mixed
)

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
PAULI_Z = np.diag([1.0, -1.0])


class TestKrausChannel:

    def test_incomplete_operators(self):
        """Kraus operators must sum to the identity"""
        with pytest.raises(ChannelError):
            KrausChannel([np.diag([1.0, 0.5])])

    def test_mixed_shapes(self):
        """All operators share one shape"""
        with pytest.raises(ChannelError):
            KrausChannel([np.eye(2), np.eye(3)])

    def test_compose_and_tensor(self):
        """Composition multiplies operator counts; tensoring grows dimensions"""
        dephasing = KrausChannel.dephasing(2)
        composed = dephasing.compose(dephasing)
        assert composed.n_kraus == 4
        assert dephasing.tensor_identity(3).d_in == 6

    def test_compose_dimension_mismatch(self):
        """Inner output must match outer input"""
        with pytest.raises(DimensionMismatchError):
            KrausChannel.identity(2).compose(KrausChannel.identity(3))

    def test_file_round_trip(self, temp_dir):
        """Channels survive save and load"""
        channel = random_incoherent_channel(3, 2, seed=4)
        path = Path(temp_dir) / "channel.json"
        save_channel(channel, path)

        loaded = load_channel(path)
        assert loaded.n_kraus == channel.n_kraus
        for a, b in zip(loaded.kraus_ops, channel.kraus_ops):
            assert np.array_equal(a, b)

    def test_bad_channel_file(self, temp_dir):
        """Missing fields are reported"""
        path = Path(temp_dir) / "bad.json"
        path.write_text('{"d_in": 2}')
        with pytest.raises(ChannelError):
            load_channel(path)


class TestCertification:

    def test_cnot_certified(self):
        """The CNOT is an incoherent unitary"""
        assert certify_incoherent(KrausChannel.from_unitary(generalized_cnot(2, 2).matrix)).certified

    def test_hadamard_rejected(self):
        """Hadamard creates coherence from |0>"""
        with pytest.raises(NotIncoherentError) as exc_info:
            certify_incoherent(KrausChannel.from_unitary(HADAMARD))
        assert exc_info.value.operator == 0
        assert exc_info.value.column == 0

    def test_dephasing_certified(self):
        """{sqrt(1/2) I, sqrt(1/2) Z} is incoherent"""
        channel = KrausChannel([np.sqrt(0.5) * np.eye(2), np.sqrt(0.5) * PAULI_Z])
        assert certify_incoherent(channel).certified


class TestRandomIncoherentChannel:

    def test_single_operator_is_permutation_with_phases(self):
        """One Kraus operator gives an incoherent unitary"""
        channel = random_incoherent_channel(4, 1, seed=3)
        op = channel.kraus_ops[0]
        assert np.allclose(np.abs(op).sum(axis=0), 1.0)
        assert np.allclose(op.conj().T @ op, np.eye(4), atol=1e-12)

    def test_completeness(self):
        """Sampled channels are complete for every seed"""
        for seed in range(100):
            d = 2 + seed % 3
            channel = random_incoherent_channel(d, 1 + seed % 4, seed)
            assert completeness_gap(channel.kraus_ops) <= 1e-12

    def test_deterministic(self):
        """Same seed, same operators"""
        a = random_incoherent_channel(3, 3, seed=8)
        b = random_incoherent_channel(3, 3, seed=8)
        assert all(np.array_equal(x, y) for x, y in zip(a.kraus_ops, b.kraus_ops))

    def test_closure_on_diagonal_states(self):
        """Incoherent channels map diagonal states to diagonal states"""
        for seed in range(100):
            channel = random_incoherent_channel(3, 1 + seed % 3, derive_seed(9, seed))
            output = apply(channel, random_diagonal(3, seed))
            assert is_incoherent(output, tol=1e-10)

    def test_invalid_arguments(self):
        """n_kraus must be positive"""
        with pytest.raises(ChannelError):
            random_incoherent_channel(2, 0, seed=1)

    def test_empty_operators_dropped_and_logged(self, caplog):
        """Kraus operators with no weight are dropped with a debug message"""
        from coherenceforge.channels import _assemble_kraus
        targets = np.array([[0, 1], [1, 0]])
        amplitudes = np.array([[1.0, 1.0], [0.0, 0.0]], dtype=complex)
        with caplog.at_level("DEBUG", logger="coherenceforge.channels"):
            ops = _assemble_kraus(targets, amplitudes)
        assert len(ops) == 1
        assert np.allclose(ops[0], np.eye(2))
        assert "Dropped 1 of 2 Kraus operators" in caplog.text

    def test_operator_count_bounded(self):
        """Sampled channels never carry more operators than requested"""
        for seed in range(30):
            assert 1 <= random_incoherent_channel(3, 4, seed).n_kraus <= 4


class TestApply:

    def test_identity(self, qutrit_state):
        """Identity channel is a no-op"""
        assert apply(KrausChannel.identity(3), qutrit_state).allclose(qutrit_state)

    def test_dephasing(self, qutrit_state):
        """Dephasing channel matches dephase"""
        assert apply(KrausChannel.dephasing(3), qutrit_state).allclose(dephase(qutrit_state))

    def test_cnot_on_attached_state(self, qubit_state, cnot_2x2):
        """CNOT on rho (x) |0><0| is the converted state"""
        output = apply(cnot_2x2, attach_ancilla(qubit_state, 2))
        assert isinstance(output, BipartiteState)
        assert output.state.allclose(convert(qubit_state, 2).state)

    def test_dimension_mismatch(self, qubit_state):
        """State and channel dimensions must agree"""
        with pytest.raises(DimensionMismatchError):
            apply(KrausChannel.identity(3), qubit_state)

    def test_trace_preserved(self):
        """Outputs of random channels stay normalized"""
        for seed in range(30):
            output = apply(random_incoherent_channel(4, 3, seed), random_mixed(4, seed))
            assert np.trace(output.matrix).real == pytest.approx(1.0, abs=1e-10)


class TestApplySelective:

    def test_unitary_single_outcome(self, qubit_state):
        """Unitary channels have one certain outcome"""
        outcomes = apply_selective(KrausChannel.identity(2), qubit_state)
        assert len(outcomes) == 1
        assert outcomes[0].probability == pytest.approx(1.0)

    def test_dephasing_on_plus(self, plus_state):
        """Measuring |+> in the reference basis gives two equal branches"""
        outcomes = apply_selective(KrausChannel.dephasing(2), plus_state)
        assert [o.probability for o in outcomes] == pytest.approx([0.5, 0.5])

    def test_projective_measurement(self, qubit_state):
        """Branch probabilities are the populations and branch states are basis states"""
        outcomes = apply_selective(KrausChannel.dephasing(2), qubit_state)
        assert [o.probability for o in outcomes] == pytest.approx([0.6, 0.4])
        assert outcomes[0].state.allclose(np.diag([1.0, 0.0]))
        assert outcomes[1].state.allclose(np.diag([0.0, 1.0]))

    def test_zero_probability_dropped(self):
        """Branches with vanishing probability are left out"""
        outcomes = apply_selective(KrausChannel.dephasing(2), DensityMatrix.from_diagonal([1.0, 0.0]))
        assert len(outcomes) == 1

    def test_average_matches_apply(self, qutrit_state):
        """sum p_l rho_l equals the channel output"""
        channel = random_incoherent_channel(3, 3, seed=12)
        averaged = sum(o.probability * o.state.matrix for o in apply_selective(channel, qutrit_state))
        assert np.allclose(averaged, apply(channel, qutrit_state).matrix, atol=1e-10)


class TestFlagDilation:

    def test_completeness(self):
        """Dilated operators remain complete"""
        instrument = random_incoherent_channel(2, 3, seed=1)
        branches = [random_incoherent_channel(4, 2, seed=10 + i) for i in range(3)]
        dilation = tripartite_flag_dilation(instrument, 2, 3, branches)
        assert completeness_gap(dilation.kraus_ops) <= 1e-9
        assert dilation.certified

    def test_one_branch_keeps_flag(self, qubit_state):
        """A unitary instrument leaves the flag in |0>"""
        dilation = tripartite_flag_dilation(KrausChannel.identity(2), 1, 1)
        output = apply(dilation, qubit_state)
        assert output.allclose(qubit_state)

    def test_projective_measurement_flags(self, plus_state):
        """Flag blocks carry the branch probabilities"""
        rho = BipartiteState(2, 2, plus_state.tensor(DensityMatrix.from_diagonal([1.0, 0.0])))
        instrument = KrausChannel.dephasing(2)
        dilation = tripartite_flag_dilation(instrument, 2, 2)
        output = apply(dilation, attach_ancilla(rho, 2))

        blocks = flag_blocks(output, 4, 2)
        probabilities = [o.probability for o in apply_selective(instrument, plus_state)]
        assert [p for p, _ in blocks] == pytest.approx(probabilities)

    def test_register_too_small(self):
        """The flag register must hold every branch"""
        with pytest.raises(ChannelError):
            tripartite_flag_dilation(KrausChannel.dephasing(3), 1, 2)

    def test_consistency_check(self):
        """Flagged hashing bound matches the branch average"""
        for seed in range(10):
            instrument = random_incoherent_channel(2, 2, derive_seed(seed, 1))
            branches = [random_incoherent_channel(4, 2, derive_seed(seed, 10 + i)) for i in range(2)]
            rho = BipartiteState(2, 2, random_mixed(4, derive_seed(seed, 2)))

            record = dilation_consistency_check(rho, instrument, 2, branches)
            assert record.passed
            assert record.check == "dilation"
            assert record.margin == pytest.approx(0.0, abs=1e-8)


class TestPropertySuites:

    @pytest.mark.parametrize("measure", list(CoherenceMeasure))
    def test_monotonicity(self, measure, fast_optimizer):
        """No coherence gain under incoherent channels"""
        records = monotonicity_suite(measure, trials=8, seed=3, dim=2, opts=fast_optimizer)
        assert len(records) == 16
        assert all(r.passed for r in records)

    def test_monotonicity_rel_entropy_qutrits(self):
        """Relative entropy of coherence is monotone in d = 3"""
        records = monotonicity_suite(CoherenceMeasure.REL_ENTROPY, trials=20, seed=4, dim=3)
        assert all(r.passed for r in records)

    def test_phase_unitary_preserves_l1(self, qutrit_state):
        """Diagonal phase unitaries leave l1 coherence unchanged"""
        phases = KrausChannel.from_unitary(np.diag(np.exp(1j * np.array([0.3, 1.1, 2.0]))))
        records = monotonicity_trial(CoherenceMeasure.L1, seed=1, channel=phases, rho=qutrit_state)
        assert records[0].margin == pytest.approx(0.0, abs=1e-12)

    def test_dephasing_kills_coherence(self, qutrit_state, fast_optimizer):
        """Dephased outputs have zero coherence"""
        for measure in CoherenceMeasure:
            records = monotonicity_trial(measure, seed=1, opts=fast_optimizer,
                                         channel=KrausChannel.dephasing(3), rho=qutrit_state)
            assert records[0].rhs == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("measure", list(CoherenceMeasure))
    def test_convexity(self, measure, fast_optimizer):
        """Coherence of mixtures is at most the average"""
        records = convexity_suite(measure, trials=6, seed=5, dim=3, opts=fast_optimizer)
        assert all(r.passed for r in records)

    def test_self_mixture_equality(self, qutrit_state):
        """Mixing a state with itself is an equality"""
        record = convexity_trial(CoherenceMeasure.REL_ENTROPY, seed=0,
                                 states=[qutrit_state, qutrit_state], weights=[0.3, 0.7])
        assert record.margin == pytest.approx(0.0, abs=1e-9)

    def test_plus_minus_mixture(self, plus_state):
        """|+> and |-> mix to an incoherent state"""
        minus = PureState([1 / np.sqrt(2), -1 / np.sqrt(2)]).to_density()
        record = convexity_trial(CoherenceMeasure.L1, seed=0, states=[plus_state, minus], weights=[0.5, 0.5])
        assert record.rhs == pytest.approx(0.0, abs=1e-12)
        assert record.lhs == pytest.approx(1.0)

    def test_tolerance_decides_pass(self):
        """The comparison tolerance is what separates pass from fail"""
        rho = DensityMatrix.from_diagonal([0.9, 0.1])
        hadamard = KrausChannel.from_unitary(HADAMARD)

        strict = monotonicity_trial(CoherenceMeasure.L1, seed=0, channel=hadamard, rho=rho)
        loose = monotonicity_trial(CoherenceMeasure.L1, seed=0, channel=hadamard, rho=rho, tol=1.0)

        assert strict[0].margin == pytest.approx(-0.8)
        assert strict[0].passed is False
        assert loose[0].passed is True

    def test_passed_is_plain_bool(self, qutrit_state):
        """Records carry Python bools, not numpy scalars"""
        record = convexity_trial(CoherenceMeasure.L1, seed=0,
                                 states=[qutrit_state, qutrit_state], weights=[0.5, 0.5])
        assert type(record.passed) is bool
