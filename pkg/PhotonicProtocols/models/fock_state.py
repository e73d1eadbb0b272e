import cmath
import logging
import math
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from PhotonicProtocols.constants import (
    MAX_OCCUPATION,
    NORMALIZATION_TOL,
    PRUNE_THRESHOLD,
)
from PhotonicProtocols.models.exceptions import (
    DimensionMismatch,
    InvalidOccupation,
    MixedSector,
    ZeroNorm,
)

Occupation = Tuple[int, ...]


def validate_occupation(occ: Sequence[int]) -> Occupation:
    """Converts an occupation vector to the canonical tuple form.

    Args:
        occ (Sequence[int]): Photon counts per mode.

    Returns:
        Occupation: The same counts as a tuple of Python ints.

    Raises:
        InvalidOccupation: If an entry is negative, fractional or
            above the per-mode capacity.
    """
    canonical = []
    for count in occ:
        if int(count) != count:
            raise InvalidOccupation(f"Non-integer photon count {count}.")
        count = int(count)
        if count < 0 or count > MAX_OCCUPATION:
            raise InvalidOccupation(
                f"Photon count {count} outside [0, {MAX_OCCUPATION}]."
            )
        canonical.append(count)
    return tuple(canonical)


class FockState:
    """A sparse superposition of Fock basis states over a fixed number
    of modes. Instances are immutable: every operation returns a new
    state. Amplitudes below the prune threshold are dropped on
    construction."""

    __slots__ = ("_amplitudes", "_num_modes")

    def __init__(self, amplitudes: Mapping[Sequence[int], complex], num_modes: int):
        if num_modes < 0:
            raise DimensionMismatch(f"Negative mode count {num_modes}.")
        merged: Dict[Occupation, complex] = {}
        for occ, amp in amplitudes.items():
            key = validate_occupation(occ)
            if len(key) != num_modes:
                raise DimensionMismatch(
                    f"Occupation {key} does not have {num_modes} modes."
                )
            amp = complex(amp)
            if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
                raise ValueError(f"Non-finite amplitude {amp} on {key}.")
            merged[key] = merged.get(key, 0j) + amp
        self._amplitudes = _pruned(merged)
        self._num_modes = num_modes

    @classmethod
    def _trusted(cls, amplitudes: Dict[Occupation, complex], num_modes: int) -> "FockState":
        """Builds a state from canonical keys without re-validating them."""
        state = cls.__new__(cls)
        state._amplitudes = _pruned(amplitudes)
        state._num_modes = num_modes
        return state

    @property
    def amplitudes(self) -> Mapping[Occupation, complex]:
        return MappingProxyType(self._amplitudes)

    @property
    def num_modes(self) -> int:
        return self._num_modes

    def __len__(self) -> int:
        return len(self._amplitudes)

    def __iter__(self):
        return iter(self._amplitudes.items())

    def __repr__(self) -> str:
        return f"FockState(num_modes={self._num_modes}, terms={len(self)})"

    def amplitude(self, occ: Sequence[int]) -> complex:
        return self._amplitudes.get(tuple(occ), 0j)

    def norm_squared(self) -> float:
        return math.fsum(abs(amp) ** 2 for amp in self._amplitudes.values())

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def is_normalized(self, tol: float = NORMALIZATION_TOL) -> bool:
        return abs(self.norm_squared() - 1.0) <= tol

    def photon_numbers(self) -> List[int]:
        """Returns the sorted distinct photon totals in the support."""
        return sorted({sum(occ) for occ in self._amplitudes})

    def scaled(self, factor: complex) -> "FockState":
        return FockState._trusted(
            {occ: amp * factor for occ, amp in self._amplitudes.items()},
            self._num_modes,
        )

    def __add__(self, other: "FockState") -> "FockState":
        _check_same_modes(self, other)
        combined = dict(self._amplitudes)
        for occ, amp in other._amplitudes.items():
            combined[occ] = combined.get(occ, 0j) + amp
        return FockState._trusted(combined, self._num_modes)

    def __sub__(self, other: "FockState") -> "FockState":
        return self + other.scaled(-1.0)

    def permute_modes(self, order: Sequence[int]) -> "FockState":
        """Reorders modes so that new mode i is old mode order[i].

        Args:
            order (Sequence[int]): A permutation of range(num_modes).

        Returns:
            FockState: The relabelled state.
        """
        if sorted(order) != list(range(self._num_modes)):
            raise DimensionMismatch(
                f"{list(order)} is not a permutation of {self._num_modes} modes."
            )
        return FockState._trusted(
            {
                tuple(occ[i] for i in order): amp
                for occ, amp in self._amplitudes.items()
            },
            self._num_modes,
        )

    def isclose(self, other: "FockState", tol: float = 1e-10) -> bool:
        """Amplitude-wise comparison, sensitive to global phase."""
        _check_same_modes(self, other)
        keys = set(self._amplitudes) | set(other._amplitudes)
        return all(
            abs(self.amplitude(occ) - other.amplitude(occ)) <= tol for occ in keys
        )

    def to_records(self) -> List[dict]:
        """Serializes the state as one record per basis term, sorted by
        occupation vector."""
        return [
            {"occ": list(occ), "amp": [amp.real, amp.imag]}
            for occ, amp in sorted(self._amplitudes.items())
        ]

    @classmethod
    def from_records(cls, records: Iterable[dict], num_modes: Optional[int] = None) -> "FockState":
        amplitudes: Dict[Tuple[int, ...], complex] = {}
        for record in records:
            occ = tuple(record["occ"])
            re, im = record["amp"]
            amplitudes[occ] = amplitudes.get(occ, 0j) + complex(re, im)
            if num_modes is None:
                num_modes = len(occ)
        return cls(amplitudes, num_modes or 0)


def _pruned(amplitudes: Dict[Occupation, complex]) -> Dict[Occupation, complex]:
    return {
        occ: amp for occ, amp in amplitudes.items() if abs(amp) >= PRUNE_THRESHOLD
    }


def _check_same_modes(a: FockState, b: FockState) -> None:
    if a.num_modes != b.num_modes:
        raise DimensionMismatch(
            f"States have {a.num_modes} and {b.num_modes} modes."
        )


def vacuum(num_modes: int) -> FockState:
    return FockState._trusted({(0,) * num_modes: 1.0 + 0j}, num_modes)


def make_basis_state(occ: Sequence[int]) -> FockState:
    """Creates the normalized Fock basis state |occ).

    Args:
        occ (Sequence[int]): Photon counts per mode.

    Returns:
        FockState: A state with amplitude 1 on occ.

    Raises:
        InvalidOccupation: If an entry is negative.
    """
    key = validate_occupation(occ)
    return FockState._trusted({key: 1.0 + 0j}, len(key))


def tensor(a: FockState, b: FockState) -> FockState:
    """Concatenates the modes of two states: modes of b follow the modes
    of a and amplitudes multiply."""
    product = {
        occ_a + occ_b: amp_a * amp_b
        for occ_a, amp_a in a
        for occ_b, amp_b in b
    }
    return FockState._trusted(product, a.num_modes + b.num_modes)


def tensor_all(states: Iterable[FockState]) -> FockState:
    result = vacuum(0)
    for state in states:
        result = tensor(result, state)
    return result


def inner_product(a: FockState, b: FockState) -> complex:
    """Returns <a|b>, conjugate-linear in a.

    Raises:
        DimensionMismatch: If the states have different mode counts.
    """
    _check_same_modes(a, b)
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for occ, amp in small:
        other = large.amplitudes.get(occ)
        if other is None:
            continue
        if small is a:
            total += amp.conjugate() * other
        else:
            total += other.conjugate() * amp
    return total


def normalize(state: FockState) -> FockState:
    """Rescales a state to unit norm.

    Raises:
        ZeroNorm: If the state has no support.
    """
    norm = state.norm()
    if norm == 0.0:
        raise ZeroNorm("Cannot normalize the zero state.")
    return state.scaled(1.0 / norm)


def total_photon_number(state: FockState) -> int:
    """Returns the photon number shared by every term of the state.

    Raises:
        ZeroNorm: If the state has no support.
        MixedSector: If the support spans several photon numbers.
    """
    totals = state.photon_numbers()
    if not totals:
        raise ZeroNorm("The zero state has no photon number.")
    if len(totals) > 1:
        raise MixedSector(f"State mixes photon numbers {totals}.")
    return totals[0]


def global_phase_aligned(reference: FockState, state: FockState) -> FockState:
    """Removes the global phase of state relative to reference."""
    overlap = inner_product(state, reference)
    if abs(overlap) == 0.0:
        logging.debug("Zero overlap, phase alignment skipped.")
        return state
    return state.scaled(cmath.exp(1j * cmath.phase(overlap)))
