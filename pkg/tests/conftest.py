"""
Test configuration and fixtures for CoherenceForge
"""

import pytest
import tempfile
from pathlib import Path

from coherenceforge.config import ForgeConfig
from coherenceforge.conversion import cnot_channel
from coherenceforge.models import OptimizerOptions
from coherenceforge.runner import VerificationRunner
from coherenceforge.states import DensityMatrix, maximally_coherent, random_mixed, save_state


@pytest.fixture
def temp_dir():
    """Create temporary directory for tests"""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield tmpdir


@pytest.fixture
def fast_optimizer():
    """Optimizer options small enough for unit tests"""
    return OptimizerOptions(starts=3, max_iters=2000, tol=1e-12, seed=1)


@pytest.fixture
def plus_state():
    """|+><+|"""
    return maximally_coherent(2).to_density()


@pytest.fixture
def qubit_state():
    """Mixed qubit with |rho_01| = 0.3"""
    return DensityMatrix([[0.6, 0.3], [0.3, 0.4]])


@pytest.fixture
def qutrit_state():
    """Seeded full-rank random qutrit"""
    return random_mixed(3, seed=11)


@pytest.fixture
def cnot_2x2():
    """Generalized CNOT on two qubits as an incoherent channel"""
    return cnot_channel(2, 2)


@pytest.fixture
def sample_config(fast_optimizer):
    """Small configuration for runner tests"""
    return ForgeConfig(threads=2, seed=7, trials=4, optimizer=fast_optimizer)


@pytest.fixture
def runner(sample_config):
    """VerificationRunner instance for testing"""
    return VerificationRunner(sample_config)


@pytest.fixture
def config_file(temp_dir, sample_config):
    """Create a temporary config file"""
    config_path = Path(temp_dir) / "test_config.yaml"
    sample_config.to_file(config_path)
    return str(config_path)


@pytest.fixture
def state_file(temp_dir, qubit_state):
    """Qubit state written in the JSON state format"""
    path = Path(temp_dir) / "rho.json"
    save_state(qubit_state, path)
    return str(path)

