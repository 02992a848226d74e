"""
Pytest configuration and fixtures for the bandit simulator tests
"""

import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

# Add src and app to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))
sys.path.insert(0, str(Path(__file__).parent.parent / "app"))

from bandit.barrier import ConeBarrier  # noqa: E402
from bandit.geometry import BallActionSet  # noqa: E402
from experiments.harness import ExperimentConfig  # noqa: E402


@pytest.fixture
def project_root():
    return Path(__file__).parent.parent


@pytest.fixture
def temp_output_dir():
    """Provide a temporary directory for result files"""
    temp_dir = Path(tempfile.mkdtemp(prefix="test_results_"))
    yield temp_dir
    # Cleanup
    if temp_dir.exists():
        shutil.rmtree(temp_dir)


@pytest.fixture
def rng():
    """Seeded generator so every test is reproducible"""
    return np.random.default_rng(12345)


@pytest.fixture
def action_set():
    """The default ball K with d = 5, D = 5"""
    return BallActionSet(5, 5.0)


@pytest.fixture
def cone_barrier(action_set):
    """Cone barrier with the default scale c = 400"""
    return ConeBarrier(action_set, scale=400.0)


@pytest.fixture
def small_config():
    """A short run that finishes in well under a second per repetition"""
    return ExperimentConfig(d=3, T=60, epsilons=[0.0], algorithms=['lifted'], repetitions=2, seed=7)


@pytest.fixture
def small_section7_config():
    """The section7 preset at a reduced horizon"""
    return ExperimentConfig(
        d=5, T=100, epsilons=[0.0, 0.5], algorithms=['lifted', 'classic', 'increasing_lr'],
        repetitions=2, seed=3, perturbation='sinusoidal', preset='section7', nu_mode='literal',
    )
