# pytest -s -v PhotonicProtocols/tests/test_permanent.py
import math
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import unitary_group

from PhotonicProtocols.models.adaptive_sampling import AdaptivePlan, stacked_matrix
from PhotonicProtocols.models.exceptions import NormTooLarge, NotSquare, TooLarge
from PhotonicProtocols.models.file_formats import load_matrix
from PhotonicProtocols.models.permanent import (
    gurvits_estimate,
    gurvits_sample_count,
    operator_norm,
    permanent_bruteforce,
    permanent_exact,
)
from PhotonicProtocols.models.random_streams import make_generator


def random_complex(size: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))) / math.sqrt(2 * size)


def test_small_permanents() -> None:
    """Testing if a few permanents known by hand come out exactly."""
    assert permanent_exact(np.eye(3)) == pytest.approx(1.0)
    assert permanent_exact(np.array([[1, 2], [3, 4]])) == pytest.approx(10.0)
    assert permanent_exact(np.zeros((4, 4))) == 0
    assert permanent_exact(np.array([[2.5j]])) == pytest.approx(2.5j)


@pytest.mark.parametrize("size", range(1, 9))
def test_all_ones_permanent_is_factorial(size: int) -> None:
    """Testing if Per(J_n) = n!.

    Args:
        size (int): Matrix size.
    """
    ones = np.ones((size, size))
    assert abs(permanent_exact(ones) - math.factorial(size)) <= 1e-9 * math.factorial(size)
    assert abs(permanent_bruteforce(ones) - math.factorial(size)) <= 1e-9 * math.factorial(size)


def test_empty_matrix_permanent_is_one() -> None:
    """Testing if the 0x0 permanent is one."""
    assert permanent_exact(np.zeros((0, 0))) == 1
    assert permanent_bruteforce(np.zeros((0, 0))) == 1


def test_size_limits() -> None:
    """Testing if non-square and oversized inputs are rejected."""
    with pytest.raises(NotSquare):
        permanent_exact(np.ones((2, 3)))
    with pytest.raises(TooLarge):
        permanent_exact(np.ones((21, 21)))
    with pytest.raises(TooLarge):
        permanent_bruteforce(np.ones((9, 9)))


def test_glynn_agrees_with_bruteforce() -> None:
    """Testing if Glynn matches the permutation sum on random matrices."""
    for trial in range(100):
        rng = make_generator(2024, trial)
        matrix = random_complex(1 + trial % 8, rng)
        exact = permanent_exact(matrix)
        brute = permanent_bruteforce(matrix)
        assert abs(exact - brute) <= 1e-10 * max(1.0, abs(brute))


def test_permanent_invariances() -> None:
    """Testing if the permanent ignores row and column order and is
    linear in each row."""
    rng = make_generator(7)
    matrix = random_complex(5, rng)
    reference = permanent_exact(matrix)
    rows, columns = rng.permutation(5), rng.permutation(5)
    assert abs(permanent_exact(matrix[rows][:, columns]) - reference) <= 1e-12
    assert abs(permanent_exact(matrix.T) - reference) <= 1e-12

    scaled = matrix.copy()
    scaled[2] *= 3 - 2j
    assert abs(permanent_exact(scaled) - (3 - 2j) * reference) <= 1e-12

    other = random_complex(5, rng)
    mixed = matrix.copy()
    mixed[1] = matrix[1] + other[1]
    replaced = matrix.copy()
    replaced[1] = other[1]
    assert abs(permanent_exact(mixed) - reference - permanent_exact(replaced)) <= 1e-12


def test_operator_norm() -> None:
    """Testing if power iteration finds the largest singular value."""
    assert operator_norm(np.eye(3)) == pytest.approx(1.0, abs=1e-9)
    assert operator_norm(np.diag([2.0, 1.0])) == pytest.approx(2.0, abs=1e-9)
    assert operator_norm(np.zeros((3, 3))) == 0.0
    plan = AdaptivePlan.random(9, 3, seed=3)
    matrix = stacked_matrix(plan, [0, 2, 1])
    assert abs(operator_norm(matrix) - np.linalg.norm(matrix, 2)) <= 1e-6


def test_gurvits_sample_count() -> None:
    """Testing if the Hoeffding count uses c = 2."""
    assert gurvits_sample_count(0.1, 0.05) == math.ceil(2 * math.log(40) / 0.01)


def test_gurvits_on_identity_and_zero() -> None:
    """Testing if the estimator is exact where every sample agrees."""
    for seed in range(200):
        assert abs(gurvits_estimate(np.eye(4), 0.1, 0.05, seed) - 1.0) <= 0.1
    assert gurvits_estimate(np.zeros((3, 3)), 0.1, 0.05, 0) == 0


def test_gurvits_on_unitaries() -> None:
    """Testing if the additive error holds in at least 1 - delta - 0.02
    of the runs on random unitaries."""
    failures = 0
    runs = 500
    for run in range(runs):
        size = 3 + run % 6
        matrix = unitary_group.rvs(size, random_state=make_generator(99, run))
        estimate = gurvits_estimate(matrix, 0.1, 0.05, make_generator(100_000, run))
        if abs(estimate - permanent_exact(matrix)) > 0.1:
            failures += 1
    assert failures / runs <= 0.05 + 0.02


def test_gurvits_rejects_large_norm(sample_matrix_path: Path) -> None:
    """Testing if a matrix of norm above one is refused.

    Args:
        sample_matrix_path (Path): The all-ones sample matrix.
    """
    with pytest.raises(NormTooLarge):
        gurvits_estimate(load_matrix(sample_matrix_path), 0.1, 0.05, 0)
    with pytest.raises(ValueError):
        gurvits_estimate(np.eye(2), 0.0, 0.05, 0)
