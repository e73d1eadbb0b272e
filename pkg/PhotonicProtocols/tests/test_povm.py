# pytest -s -v PhotonicProtocols/tests/test_povm.py
import numpy as np
import pytest

from PhotonicProtocols.models.exceptions import DimensionMismatch, InvalidPovm
from PhotonicProtocols.models.povm import (
    Povm,
    demo_povm,
    fourier_w_vectors,
    truncated_basis,
    wlike_povm_check,
)


def test_truncated_basis() -> None:
    """Testing if the basis lists vacuum, single and two-photon states."""
    basis = truncated_basis(3, 2)
    assert len(basis) == 1 + 3 + 6
    assert basis[0] == (0, 0, 0)
    assert basis[1:4] == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    assert len(truncated_basis(3, 1)) == 4
    with pytest.raises(ValueError):
        truncated_basis(3, 3)


def test_fourier_vectors_are_orthonormal() -> None:
    """Testing if the Fourier W vectors are orthonormal."""
    vectors = np.array(fourier_w_vectors(4))
    assert np.allclose(vectors.conj() @ vectors.T, np.eye(4))


def test_demo_povm_is_w_like() -> None:
    """Testing if the Fourier-diagonal POVM passes on every element."""
    assert wlike_povm_check(demo_povm()) == [True, True, True]


def test_rotated_demo_povm_fails() -> None:
    """Testing if mixing two W directions breaks the equal amplitudes."""
    assert wlike_povm_check(demo_povm(rotation=0.05)) == [False, False, True]


def test_faux_detection_is_not_w_like() -> None:
    """Testing if single-mode detection is not W-like: its projector is
    localized and its complement is degenerate."""
    assert wlike_povm_check(Povm.faux_detection(3, 0)) == [False, False]


def test_kernel_is_ignored() -> None:
    """Testing if repeated zero eigenvalues neither break non-degeneracy nor
    get checked for W-like shape, while repeated nonzero ones do."""
    w = np.array([0.0, 1.0, 1.0, 1.0]) / np.sqrt(3.0)
    projector = np.outer(w, w)
    povm = Povm([projector, np.eye(4) - projector], 3, max_photons=1)
    assert wlike_povm_check(povm) == [True, False]


def test_relabelling_modes_keeps_verdicts() -> None:
    """Testing if permuting the modes leaves the verdicts alone."""
    povm = demo_povm()
    order = [0, 2, 3, 1]
    permuted = Povm(
        [element[np.ix_(order, order)] for element in povm.elements], 3, max_photons=1
    )
    assert wlike_povm_check(permuted) == wlike_povm_check(povm)


def test_povm_validation() -> None:
    """Testing if invalid element sets are refused."""
    identity = np.eye(4)
    with pytest.raises(InvalidPovm):
        Povm([identity, -0.1 * identity], 3, max_photons=1)
    with pytest.raises(InvalidPovm):
        Povm([0.5 * identity], 3, max_photons=1)
    skew = np.zeros((4, 4), dtype=complex)
    skew[0, 1] = 0.1
    with pytest.raises(InvalidPovm):
        Povm([identity + skew], 3, max_photons=1)
    with pytest.raises(DimensionMismatch):
        Povm([np.eye(3)], 3, max_photons=1)
    with pytest.raises(InvalidPovm):
        Povm([], 3)
