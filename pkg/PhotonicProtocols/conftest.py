from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from PhotonicProtocols.constants import SAMPLE_CONFIG_PATH, SAMPLE_MATRIX_PATH
from PhotonicProtocols.models.adaptive_sampling import AdaptivePlan
from PhotonicProtocols.models.chsh import derive_symmetric_chsh_unitary
from PhotonicProtocols.models.fock_state import FockState
from PhotonicProtocols.models.linear_optics import Interferometer
from PhotonicProtocols.models.resource_states import (
    PartyLayout,
    sigma_state,
    w_copies,
    w_state,
)


@pytest.fixture(scope="module")
def w2() -> FockState:
    """Fixture to get the two-mode W state.

    Returns:
        FockState: (|10) + |01)) / sqrt 2.
    """
    return w_state(2)


@pytest.fixture(scope="module")
def psi_plus() -> FockState:
    """Fixture to get the two-party symmetric state with two local modes.

    Returns:
        FockState: (|1001) + |0110)) / sqrt 2.
    """
    return sigma_state(2, 2)


@pytest.fixture(scope="module")
def sigma_abcd() -> FockState:
    """Fixture to get the four-party symmetric state with four local modes.

    Returns:
        FockState: The 24-term state over 16 modes.
    """
    return sigma_state(4, 4)


@pytest.fixture(scope="module")
def two_w3_copies() -> tuple[FockState, PartyLayout]:
    """Fixture to get two copies of the three-party W state.

    Returns:
        tuple[FockState, PartyLayout]: The state and its interleaved layout.
    """
    return w_copies(3, 2)


@pytest.fixture(scope="module")
def random_unitary_3() -> np.ndarray:
    """Fixture to get a fixed Haar-random 3x3 unitary.

    Returns:
        np.ndarray: The unitary.
    """
    return AdaptivePlan.random(3, 3, seed=5).unitaries[0]


@pytest.fixture(scope="module")
def hadamard_pair_plan() -> AdaptivePlan:
    """Fixture to get a two-photon plan where both detections use the
    real Hadamard.

    Returns:
        AdaptivePlan: K = 4, N = 2.
    """
    hadamard = np.array([[1, 1], [1, -1]]) / np.sqrt(2.0)
    return AdaptivePlan(4, (hadamard, hadamard))


@pytest.fixture(scope="module")
def random_plan() -> AdaptivePlan:
    """Fixture to get a Haar-random two-photon plan for six parties.

    Returns:
        AdaptivePlan: K = 6, N = 2.
    """
    return AdaptivePlan.random(6, 2, seed=11)


@pytest.fixture(scope="module")
def beamsplitter_01() -> Interferometer:
    """Fixture to get a 50:50 beamsplitter written out by hand.

    Returns:
        Interferometer: The beamsplitter on modes 0 and 1.
    """
    return Interferometer(np.array([[1, 1], [1, -1]]) / np.sqrt(2.0), (0, 1), "BS")


@pytest.fixture(scope="module")
def chsh_unitary() -> np.ndarray:
    """Fixture to get the derived dual-rail CHSH rotation.

    Returns:
        np.ndarray: The 2x2 unitary.
    """
    return derive_symmetric_chsh_unitary()


@pytest.fixture(scope="module")
def sample_matrix_path() -> Path:
    """Fixture to get the bundled all-ones 4x4 matrix file.

    Returns:
        Path: Path of ones4.json.
    """
    return SAMPLE_MATRIX_PATH


@pytest.fixture(scope="module")
def sample_config_path() -> Path:
    """Fixture to get the bundled bell run configuration.

    Returns:
        Path: Path of bell_run.json.
    """
    return SAMPLE_CONFIG_PATH


@pytest.fixture(scope="module")
def cli_runner() -> CliRunner:
    """Fixture to get a click runner keeping stdout and stderr apart.

    Returns:
        CliRunner: The runner.
    """
    return CliRunner(mix_stderr=False)
