import logging
import math
from collections import defaultdict
from itertools import combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from PhotonicProtocols.constants import UNITARITY_TOL
from PhotonicProtocols.models.exceptions import (
    DimensionMismatch,
    InvalidDimension,
    InvalidModeSet,
    NotUnitary,
)
from PhotonicProtocols.models.fock_state import FockState, Occupation


def is_unitary(matrix: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    """Checks U^dagger U = I entrywise within tol."""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    identity = np.eye(matrix.shape[0])
    return bool(np.max(np.abs(matrix.conj().T @ matrix - identity), initial=0.0) <= tol)


class Interferometer:
    """A unitary acting on a designated list of modes. Mode target_modes[i]
    is the i-th row and column of the matrix, all other modes are left
    untouched.

    Args:
        matrix (np.ndarray): Square unitary matrix.
        target_modes (Sequence[int], optional): Modes the matrix acts on.
            Defaults to range(d).
        name (str, optional): Identifier used in transcripts.

    Raises:
        InvalidDimension: If the matrix is empty, not square or its size
            differs from the number of target modes.
        NotUnitary: If the unitarity check fails.
        InvalidModeSet: If target modes repeat or are negative.
    """

    def __init__(
        self,
        matrix: np.ndarray,
        target_modes: Optional[Sequence[int]] = None,
        name: str = "",
    ):
        matrix = np.array(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidDimension(f"Interferometer matrix shape {matrix.shape}.")
        if matrix.shape[0] == 0:
            raise InvalidDimension("Interferometer needs at least one mode.")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("Interferometer matrix has non-finite entries.")
        if not is_unitary(matrix):
            raise NotUnitary(f"Matrix {name!r} is not unitary.")
        if target_modes is None:
            target_modes = range(matrix.shape[0])
        target_modes = tuple(int(mode) for mode in target_modes)
        if len(target_modes) != matrix.shape[0]:
            raise InvalidDimension(
                f"{len(target_modes)} target modes for a {matrix.shape[0]}-mode matrix."
            )
        if len(set(target_modes)) != len(target_modes) or min(target_modes) < 0:
            raise InvalidModeSet(f"Invalid target modes {list(target_modes)}.")
        matrix.setflags(write=False)
        self.matrix = matrix
        self.target_modes = target_modes
        self.name = name

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def relabelled(self, target_modes: Sequence[int]) -> "Interferometer":
        """Returns the same matrix acting on a different mode list."""
        return Interferometer(self.matrix, target_modes, self.name)

    def __repr__(self) -> str:
        return (
            f"Interferometer(name={self.name!r}, "
            f"target_modes={list(self.target_modes)})"
        )


def embed(matrix: np.ndarray, target_modes: Sequence[int], name: str = "") -> Interferometer:
    """Wraps a unitary so it acts on target_modes and as the identity on
    every other mode.

    Raises:
        NotUnitary: If the matrix is not unitary within tolerance.
        InvalidModeSet: If target modes are duplicated.
    """
    return Interferometer(matrix, target_modes, name)


def _power_terms(column: np.ndarray, photons: int) -> List[Tuple[Occupation, complex]]:
    """Expands (sum_j column[j] b_j^dagger)^photons into monomials.

    Returns:
        List[Tuple[Occupation, complex]]: Output counts with the integer
            multinomial coefficient times the product of matrix entries.
    """
    width = len(column)
    terms = []
    for combo in combinations_with_replacement(range(width), photons):
        counts = [0] * width
        for mode in combo:
            counts[mode] += 1
        multinomial = math.factorial(photons)
        for count in counts:
            multinomial //= math.factorial(count)
        value = complex(multinomial)
        for mode, count in enumerate(counts):
            if count:
                value *= complex(column[mode]) ** count
        if value != 0:
            terms.append((tuple(counts), value))
    return terms


def _expand_local(local_in: Occupation, matrix: np.ndarray) -> Dict[Occupation, complex]:
    """Evolves one local Fock term, returning output amplitudes."""
    width = len(local_in)
    polynomial: Dict[Occupation, complex] = {(0,) * width: 1.0 + 0j}
    for mode, photons in enumerate(local_in):
        if photons == 0:
            continue
        terms = _power_terms(matrix[:, mode], photons)
        expanded: Dict[Occupation, complex] = defaultdict(complex)
        for key, coefficient in polynomial.items():
            for counts, value in terms:
                expanded[tuple(a + b for a, b in zip(key, counts))] += coefficient * value
        polynomial = expanded

    input_factorials = math.prod(math.factorial(n) for n in local_in)
    return {
        counts: coefficient
        * math.sqrt(math.prod(math.factorial(m) for m in counts) / input_factorials)
        for counts, coefficient in polynomial.items()
    }


def apply(state: FockState, intf: Interferometer) -> FockState:
    """Evolves a state under an interferometer by substituting every
    creation operator a_i^dagger -> sum_j U_ji a_j^dagger on the target
    modes and expanding term by term.

    Args:
        state (FockState): The input state.
        intf (Interferometer): The unitary and its target modes.

    Returns:
        FockState: The evolved state, pruned.

    Raises:
        DimensionMismatch: If a target mode is outside the state.
    """
    targets = intf.target_modes
    if max(targets) >= state.num_modes:
        raise DimensionMismatch(
            f"Target modes {list(targets)} exceed {state.num_modes} modes."
        )

    cache: Dict[Occupation, Dict[Occupation, complex]] = {}
    evolved: Dict[Occupation, complex] = defaultdict(complex)
    for occ, amp in state:
        local_in = tuple(occ[mode] for mode in targets)
        if local_in not in cache:
            cache[local_in] = _expand_local(local_in, intf.matrix)
        for local_out, coefficient in cache[local_in].items():
            new_occ = list(occ)
            for position, mode in enumerate(targets):
                new_occ[mode] = local_out[position]
            evolved[tuple(new_occ)] += amp * coefficient
    logging.debug(
        f"Applied {intf.name or 'interferometer'} on {list(targets)}: "
        f"{len(state)} -> {len(evolved)} terms."
    )
    return FockState._trusted(dict(evolved), state.num_modes)


def complex_hadamard(size: int) -> Interferometer:
    """Returns the discrete Fourier matrix U_jk = exp(2 pi i jk/K)/sqrt(K).

    Raises:
        InvalidDimension: If size < 1.
    """
    if size < 1:
        raise InvalidDimension(f"Complex Hadamard needs K >= 1, got {size}.")
    index = np.arange(size)
    matrix = np.exp(2j * np.pi * np.outer(index, index) / size) / np.sqrt(size)
    return Interferometer(matrix, range(size), f"F{size}")


def hadamard_tensor_hadamard() -> Interferometer:
    hadamard = np.array([[1, 1], [1, -1]])
    return Interferometer(np.kron(hadamard, hadamard) / 2.0, range(4), "HxH")


def beamsplitter(target_modes: Sequence[int] = (0, 1)) -> Interferometer:
    """The 50:50 beamsplitter in the real Hadamard convention."""
    matrix = np.array([[1, 1], [1, -1]]) / np.sqrt(2.0)
    return Interferometer(matrix, target_modes, "BS")


def phase_shifter(phases: Sequence[float], target_modes: Optional[Sequence[int]] = None) -> Interferometer:
    phases = np.asarray(phases, dtype=float)
    return Interferometer(np.diag(np.exp(1j * phases)), target_modes, "phase")


def identity(target_modes: Sequence[int]) -> Interferometer:
    return Interferometer(np.eye(len(target_modes)), target_modes, "I")
