import logging
import math
from itertools import permutations

import numpy as np

from PhotonicProtocols.constants import (
    GURVITS_HOEFFDING_CONSTANT,
    MAX_BRUTEFORCE_PERMANENT_SIZE,
    MAX_EXACT_PERMANENT_SIZE,
    OPERATOR_NORM_SLACK,
    POWER_ITERATION_MAX_STEPS,
    POWER_ITERATION_TOL,
)
from PhotonicProtocols.models.exceptions import NormTooLarge, NotSquare, TooLarge
from PhotonicProtocols.models.random_streams import SeedLike, make_generator

GURVITS_CHUNK = 65536


def _square_matrix(matrix: np.ndarray, limit: int) -> np.ndarray:
    """Validates a matrix for a permanent evaluation.

    Args:
        matrix (np.ndarray): The candidate matrix.
        limit (int): Largest admissible size.

    Returns:
        np.ndarray: The matrix as a complex array.

    Raises:
        NotSquare: If the matrix is not square.
        TooLarge: If the size exceeds limit.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.size == 0:
        return matrix.reshape(0, 0)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NotSquare(f"Permanent needs a square matrix, got {matrix.shape}.")
    if matrix.shape[0] > limit:
        raise TooLarge(f"Size {matrix.shape[0]} exceeds the limit {limit}.")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("Matrix contains non-finite entries.")
    return matrix


def permanent_exact(matrix: np.ndarray) -> complex:
    """Computes the permanent with Glynn's formula, visiting the sign
    vectors in Gray-code order so each step updates the row sums by a
    single row. Terms are accumulated with Kahan summation.

    Args:
        matrix (np.ndarray): Square complex matrix, n <= 20.

    Returns:
        complex: Per(A). The permanent of the empty matrix is 1.

    Raises:
        NotSquare: If the matrix is not square.
        TooLarge: If n > 20.
    """
    a = _square_matrix(matrix, MAX_EXACT_PERMANENT_SIZE)
    size = a.shape[0]
    if size == 0:
        return 1.0 + 0j

    row_sums = a.sum(axis=0)
    signs = np.ones(size)
    sign = 1.0
    total = complex(np.prod(row_sums))
    compensation = 0j
    for step in range(1, 2 ** (size - 1)):
        row = (step & -step).bit_length()
        if signs[row] > 0:
            row_sums = row_sums - 2.0 * a[row]
        else:
            row_sums = row_sums + 2.0 * a[row]
        signs[row] = -signs[row]
        sign = -sign
        term = sign * complex(np.prod(row_sums)) - compensation
        running = total + term
        compensation = (running - total) - term
        total = running
    return total / 2 ** (size - 1)


def permanent_bruteforce(matrix: np.ndarray) -> complex:
    """Sums the products over all n! permutations. Independent check for
    permanent_exact, n <= 8."""
    a = _square_matrix(matrix, MAX_BRUTEFORCE_PERMANENT_SIZE)
    size = a.shape[0]
    rows = np.arange(size)
    total = 1.0 + 0j if size == 0 else 0j
    if size:
        for perm in permutations(range(size)):
            total += complex(np.prod(a[rows, list(perm)]))
    return total


def operator_norm(matrix: np.ndarray) -> float:
    """Largest singular value by power iteration on A^dagger A.

    The start vector is drawn from a fixed Philox stream so it is generic
    yet deterministic. Iteration stops once the eigen-residual drops
    below the convergence threshold relative to the Rayleigh quotient.

    Args:
        matrix (np.ndarray): Any complex matrix.

    Returns:
        float: The operator (spectral) norm.
    """
    a = np.atleast_2d(np.asarray(matrix, dtype=complex))
    if a.size == 0:
        return 0.0
    gram = a.conj().T @ a
    rng = np.random.Generator(np.random.Philox(key=0))
    vector = rng.standard_normal(gram.shape[0]) + 1j * rng.standard_normal(gram.shape[0])
    vector /= np.linalg.norm(vector)

    value = 0.0
    for step in range(POWER_ITERATION_MAX_STEPS):
        image = gram @ vector
        value = float(np.real(np.vdot(vector, image)))
        residual = float(np.linalg.norm(image - value * vector))
        image_norm = float(np.linalg.norm(image))
        if image_norm == 0.0:
            return 0.0
        vector = image / image_norm
        if residual <= POWER_ITERATION_TOL * abs(value):
            break
    else:
        logging.warning(
            f"Power iteration stopped after {POWER_ITERATION_MAX_STEPS} steps."
        )
    return math.sqrt(max(value, 0.0))


def gurvits_sample_count(epsilon: float, delta: float) -> int:
    """Hoeffding sample count ceil(c ln(2/delta) / epsilon^2), c = 2."""
    return math.ceil(GURVITS_HOEFFDING_CONSTANT * math.log(2.0 / delta) / epsilon**2)


def gurvits_estimate(
    matrix: np.ndarray, epsilon: float, delta: float, seed: SeedLike
) -> complex:
    """Additive estimate of Per(A) from Glynn's estimator over uniformly
    random sign vectors x: E[prod_i x_i prod_j (Ax)_j] = Per(A), and every
    sample has modulus at most ||A||^n <= 1.

    Args:
        matrix (np.ndarray): Square matrix with operator norm <= 1.
        epsilon (float): Additive error target in (0, 1).
        delta (float): Failure probability in (0, 1).
        seed (SeedLike): Seed or generator for the sign vectors.

    Returns:
        complex: The sample mean.

    Raises:
        NormTooLarge: If the operator norm exceeds 1.
        ValueError: If epsilon or delta are outside (0, 1).
    """
    if not (0.0 < epsilon < 1.0 and 0.0 < delta < 1.0):
        raise ValueError(f"epsilon={epsilon}, delta={delta} must lie in (0, 1).")
    a = _square_matrix(matrix, np.inf)
    size = a.shape[0]
    if size == 0:
        return 1.0 + 0j
    norm = operator_norm(a)
    if norm > 1.0 + OPERATOR_NORM_SLACK:
        raise NormTooLarge(f"Operator norm {norm:.6f} exceeds 1.")

    samples = gurvits_sample_count(epsilon, delta)
    rng = make_generator(seed)
    total = 0j
    drawn = 0
    while drawn < samples:
        batch = min(GURVITS_CHUNK, samples - drawn)
        signs = rng.integers(0, 2, size=(batch, size)) * 2.0 - 1.0
        values = np.prod(signs, axis=1) * np.prod(signs @ a.T, axis=1)
        total += complex(values.sum())
        drawn += batch
    logging.debug(f"Gurvits estimate from {samples} samples at n={size}.")
    return total / samples
