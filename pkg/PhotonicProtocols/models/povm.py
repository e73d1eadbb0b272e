import logging
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import eigh, ishermitian

from PhotonicProtocols.constants import EIGEN_GAP_TOL, HERMITIAN_TOL, NORMALIZATION_TOL
from PhotonicProtocols.models.exceptions import DimensionMismatch, InvalidPovm
from PhotonicProtocols.models.fock_state import Occupation


def truncated_basis(num_modes: int, max_photons: int = 2) -> List[Occupation]:
    """Vacuum, then |1_j> for j = 0..n-1, then the two-photon states when
    max_photons is 2."""
    if max_photons not in (1, 2):
        raise ValueError(f"max_photons must be 1 or 2, got {max_photons}.")
    basis = [(0,) * num_modes]
    for photons in range(1, max_photons + 1):
        for combo in combinations_with_replacement(range(num_modes), photons):
            occ = [0] * num_modes
            for mode in combo:
                occ[mode] += 1
            basis.append(tuple(occ))
    return basis


def fourier_w_vectors(num_modes: int, max_photons: int = 2) -> List[np.ndarray]:
    """The n orthogonal single-photon W vectors with Fourier phases,
    embedded in the truncated basis."""
    dimension = len(truncated_basis(num_modes, max_photons))
    vectors = []
    for alpha in range(num_modes):
        vector = np.zeros(dimension, dtype=complex)
        phases = np.exp(2j * np.pi * alpha * np.arange(num_modes) / num_modes)
        vector[1 : num_modes + 1] = phases / np.sqrt(num_modes)
        vectors.append(vector)
    return vectors


@dataclass
class Povm:
    """Measurement elements over the truncated Fock basis of n modes.

    Raises:
        InvalidPovm: If an element is not Hermitian, not positive
            semidefinite, or the elements do not sum to the identity.
    """

    elements: List[np.ndarray]
    num_modes: int
    max_photons: int = 2

    def __post_init__(self):
        dimension = self.dimension
        self.elements = [np.asarray(element, dtype=complex) for element in self.elements]
        if not self.elements:
            raise InvalidPovm("A POVM needs at least one element.")
        for index, element in enumerate(self.elements):
            if element.shape != (dimension, dimension):
                raise DimensionMismatch(
                    f"Element {index} has shape {element.shape}, basis has {dimension} states."
                )
            if not ishermitian(element, atol=HERMITIAN_TOL):
                raise InvalidPovm(f"Element {index} is not Hermitian.")
            if eigh(element, eigvals_only=True)[0] < -HERMITIAN_TOL:
                raise InvalidPovm(f"Element {index} is not positive semidefinite.")
        deviation = np.max(np.abs(sum(self.elements) - np.eye(dimension)))
        if deviation > NORMALIZATION_TOL:
            raise InvalidPovm(f"Elements sum to the identity only within {deviation:.3e}.")

    @property
    def dimension(self) -> int:
        return len(truncated_basis(self.num_modes, self.max_photons))

    @classmethod
    def from_spectra(
        cls,
        num_modes: int,
        spectra: Sequence[Sequence[float]],
        vectors: Sequence[np.ndarray],
        max_photons: int = 2,
    ) -> "Povm":
        """Builds E_a = sum_k spectra[a][k] |v_k><v_k| from a shared set of
        orthonormal vectors. Directions missing from vectors get the
        projector onto their complement added to the last element."""
        dimension = len(truncated_basis(num_modes, max_photons))
        projectors = [np.outer(v, np.conj(v)) for v in vectors]
        elements = [
            sum((weight * projector for weight, projector in zip(spectrum, projectors)),
                np.zeros((dimension, dimension), dtype=complex))
            for spectrum in spectra
        ]
        complement = np.eye(dimension) - sum(projectors, np.zeros((dimension, dimension)))
        elements[-1] = elements[-1] + complement
        return cls(elements, num_modes, max_photons)

    @classmethod
    def faux_detection(cls, num_modes: int, mode: int, max_photons: int = 1) -> "Povm":
        """The pair {Pi_a, I - Pi_a} with Pi_a = |1_a><1_a|."""
        basis = truncated_basis(num_modes, max_photons)
        occ = [0] * num_modes
        occ[mode] = 1
        projector = np.zeros((len(basis), len(basis)), dtype=complex)
        index = basis.index(tuple(occ))
        projector[index, index] = 1.0
        return cls([projector, np.eye(len(basis)) - projector], num_modes, max_photons)


DEMO_SPECTRA = (
    (0.0, 0.6, 0.2, 0.0),
    (0.0, 0.4, 0.8, 0.3),
    (1.0, 0.0, 0.0, 0.7),
)


def demo_povm(rotation: float = 0.0) -> Povm:
    """Three-mode single-photon POVM diagonal in the vacuum and Fourier W
    directions, with distinct weights inside every element.

    A nonzero rotation mixes the first two W vectors, so the elements
    weighting them lose their equal-magnitude eigenvectors while the
    last element is unaffected.
    """
    vacuum_direction = np.zeros(4, dtype=complex)
    vacuum_direction[0] = 1.0
    first, second, third = fourier_w_vectors(3, max_photons=1)
    c, s = np.cos(rotation), np.sin(rotation)
    vectors = [vacuum_direction, c * first + s * second, c * second - s * first, third]
    return Povm.from_spectra(3, DEMO_SPECTRA, vectors, max_photons=1)


def _is_w_like_direction(vector: np.ndarray, num_modes: int, tol: float) -> bool:
    weights = np.abs(vector) ** 2
    if weights[0] >= 1.0 - tol:
        return True
    single = np.abs(vector[1 : num_modes + 1])
    if np.sum(single**2) < 1.0 - tol:
        return False
    return bool(np.max(np.abs(single - 1.0 / np.sqrt(num_modes))) <= tol)


def wlike_povm_check(povm: Povm, tol: Optional[float] = None) -> List[bool]:
    """Per element: True iff the eigenvalues above tol are pairwise distinct
    and every eigenvector with eigenvalue above tol is the vacuum or a
    single-photon state with equal-magnitude amplitudes.

    Eigenvalues at or below tol count as zero: repeated zeros never make
    an element degenerate, and the kernel directions are not checked for
    W-like shape.

    Args:
        povm (Povm): Validated measurement.
        tol (float, optional): Gap and amplitude tolerance, 1e-8 by default.

    Returns:
        List[bool]: One verdict per element, in element order.
    """
    tol = EIGEN_GAP_TOL if tol is None else tol
    verdicts = []
    for index, element in enumerate(povm.elements):
        values, vectors = eigh(element)
        supported = [k for k, value in enumerate(values) if value > tol]
        gaps = np.diff(values[supported])
        nondegenerate = bool(np.all(gaps > tol))
        shaped = all(
            _is_w_like_direction(vectors[:, k], povm.num_modes, tol) for k in supported
        )
        verdicts.append(nondegenerate and shaped)
        logging.debug(
            f"POVM element {index}: non-degenerate={nondegenerate}, W-like={shaped}."
        )
    return verdicts
