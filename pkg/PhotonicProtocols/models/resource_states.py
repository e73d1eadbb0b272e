import logging
import math
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from PhotonicProtocols.constants import NORMALIZATION_TOL, SIGMA_STAR_TERM_LIMIT
from PhotonicProtocols.models.exceptions import (
    DimensionMismatch,
    InvalidConfiguration,
    InvalidDimension,
    NotNormalized,
    TooLarge,
)
from PhotonicProtocols.models.fock_state import (
    FockState,
    inner_product,
    make_basis_state,
    normalize,
    tensor_all,
)
from PhotonicProtocols.models.linear_optics import (
    Interferometer,
    apply,
    complex_hadamard,
    phase_shifter,
)


@dataclass(frozen=True)
class PartyLayout:
    """Assignment of global modes to parties. parties[p] lists the modes
    party p holds, in local order."""

    parties: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "parties", tuple(tuple(int(m) for m in modes) for modes in self.parties)
        )
        flat = [mode for modes in self.parties for mode in modes]
        if len(set(flat)) != len(flat):
            raise InvalidConfiguration("Party mode lists overlap.")

    @classmethod
    def interleaved(cls, num_parties: int, copies: int) -> "PartyLayout":
        """Party j owns mode j of every copy: [j, K + j, 2K + j, ...]."""
        return cls(
            tuple(
                tuple(copy * num_parties + party for copy in range(copies))
                for party in range(num_parties)
            )
        )

    @classmethod
    def blocked(cls, num_parties: int, modes_per_party: int) -> "PartyLayout":
        return cls(
            tuple(
                tuple(range(party * modes_per_party, (party + 1) * modes_per_party))
                for party in range(num_parties)
            )
        )

    @property
    def num_parties(self) -> int:
        return len(self.parties)

    @property
    def num_modes(self) -> int:
        return sum(len(modes) for modes in self.parties)

    def modes_of(self, party: int) -> Tuple[int, ...]:
        return self.parties[party]

    def validate(self, state: FockState) -> None:
        """Raises InvalidConfiguration unless the parties cover exactly the
        modes of the state."""
        covered = sorted(mode for modes in self.parties for mode in modes)
        if covered != list(range(state.num_modes)):
            raise InvalidConfiguration(
                f"Layout covers {len(covered)} modes, state has {state.num_modes}."
            )

    def photon_counts(self, occ: Sequence[int]) -> Tuple[int, ...]:
        return tuple(sum(occ[mode] for mode in modes) for modes in self.parties)


def w_state(size: int, phases: Optional[Sequence[float]] = None) -> FockState:
    """Single photon spread uniformly over K modes with the given phases:
    sum_j exp(i theta_j) |1_j) / sqrt(K).

    Args:
        size (int): Number of modes K >= 1.
        phases (Sequence[float], optional): K phases; zeros by default.

    Returns:
        FockState: The W state.

    Raises:
        InvalidDimension: If size < 1.
        DimensionMismatch: If the phase list length differs from K.
    """
    if size < 1:
        raise InvalidDimension(f"W state needs K >= 1, got {size}.")
    if phases is None:
        phases = np.zeros(size)
    if len(phases) != size:
        raise DimensionMismatch(f"{len(phases)} phases for K={size}.")
    scale = 1.0 / math.sqrt(size)
    amplitudes = {}
    for mode, theta in enumerate(phases):
        occ = [0] * size
        occ[mode] = 1
        amplitudes[tuple(occ)] = scale * complex(math.cos(theta), math.sin(theta))
    return FockState(amplitudes, size)


def w_copies(
    num_parties: int, copies: int, phases: Optional[Sequence[float]] = None
) -> Tuple[FockState, PartyLayout]:
    """N identical copies of |W_K> with the interleaved party layout.

    Raises:
        InvalidConfiguration: If K < N or N < 1.
    """
    if copies < 1 or num_parties < copies:
        raise InvalidConfiguration(
            f"Need K >= N >= 1, got K={num_parties}, N={copies}."
        )
    single = w_state(num_parties, phases)
    state = tensor_all([single] * copies)
    return state, PartyLayout.interleaved(num_parties, copies)


def sigma_state(photons: int, modes_per_party: int) -> FockState:
    """The fully symmetric third-quantized state: N parties, party j holds
    one photon in local mode pi(j), summed over permutations pi with
    coefficient 1/sqrt(N!). Vacuum modes pad each party block.

    Raises:
        InvalidConfiguration: If M < N or N < 1.
    """
    if photons < 1 or modes_per_party < photons:
        raise InvalidConfiguration(
            f"Need M >= N >= 1, got N={photons}, M={modes_per_party}."
        )
    coefficient = 1.0 / math.sqrt(math.factorial(photons))
    amplitudes = {}
    for perm in permutations(range(photons)):
        occ = [0] * (photons * modes_per_party)
        for party, level in enumerate(perm):
            occ[party * modes_per_party + level] = 1
        amplitudes[tuple(occ)] = coefficient
    return FockState(amplitudes, photons * modes_per_party)


def sigma_star(
    num_parties: int, photons: int, modes_per_party: int
) -> Tuple[FockState, PartyLayout]:
    """Uniform superposition of the symmetric state over every N-subset of
    K parties, the other parties holding vacuum.

    Raises:
        InvalidConfiguration: If K < N.
        TooLarge: If C(K, N) N! exceeds the term limit.
    """
    if num_parties < photons:
        raise InvalidConfiguration(f"K={num_parties} < N={photons}.")
    if photons < 1 or modes_per_party < photons:
        raise InvalidConfiguration(f"Need M >= N >= 1, got M={modes_per_party}.")
    terms = math.comb(num_parties, photons) * math.factorial(photons)
    if terms > SIGMA_STAR_TERM_LIMIT:
        raise TooLarge(f"Sigma* would hold {terms} terms.")
    coefficient = 1.0 / math.sqrt(terms)
    total_modes = num_parties * modes_per_party
    amplitudes = {}
    for subset in combinations(range(num_parties), photons):
        for perm in permutations(range(photons)):
            occ = [0] * total_modes
            for party, level in zip(subset, perm):
                occ[party * modes_per_party + level] = 1
            amplitudes[tuple(occ)] = coefficient
    logging.debug(f"Built Sigma*({num_parties},{photons},{modes_per_party}), {terms} terms.")
    return (
        FockState(amplitudes, total_modes),
        PartyLayout.blocked(num_parties, modes_per_party),
    )


def heralded_phases(size: int, source_index: int) -> np.ndarray:
    """Phases theta_j = 2 pi j s / K of the Fourier column s."""
    return 2.0 * np.pi * np.arange(size) * source_index / size


def heralded_w(size: int, source_index: int) -> FockState:
    """Sends a single photon from input source_index through the K-mode
    complex Hadamard interferometer.

    Raises:
        InvalidConfiguration: If source_index is outside [0, K).
    """
    if not 0 <= source_index < size:
        raise InvalidConfiguration(f"Source {source_index} outside [0, {size}).")
    occ = [0] * size
    occ[source_index] = 1
    return apply(make_basis_state(occ), complex_hadamard(size))


def phase_correction(size: int, source_index: int) -> Interferometer:
    """Local phase shifters undoing the column phases of heralded_w."""
    return phase_shifter(-heralded_phases(size, source_index), range(size))


def fidelity(a: FockState, b: FockState) -> float:
    """|<a|b>|^2 for two normalized states.

    Raises:
        DimensionMismatch: If mode counts differ.
        NotNormalized: If either state is not normalized.
    """
    if a.num_modes != b.num_modes:
        raise DimensionMismatch(f"States have {a.num_modes} and {b.num_modes} modes.")
    for state in (a, b):
        if not state.is_normalized():
            raise NotNormalized(f"Fidelity needs normalized states, got {state.norm()}.")
    return abs(inner_product(a, b)) ** 2


def collision_probability_formula(num_parties: int, copies: int) -> float:
    """1 - prod_{i<N} (1 - i/K): chance two of N uniform photons share a party."""
    return 1.0 - math.prod(1.0 - i / num_parties for i in range(copies))


def collision_probability(state: FockState, layout: PartyLayout) -> float:
    layout.validate(state)
    weight = math.fsum(
        abs(amp) ** 2
        for occ, amp in state
        if max(layout.photon_counts(occ), default=0) >= 2
    )
    return weight / state.norm_squared()


def collision_free_projection(state: FockState, layout: PartyLayout) -> FockState:
    layout.validate(state)
    kept = {
        occ: amp
        for occ, amp in state
        if max(layout.photon_counts(occ), default=0) <= 1
    }
    return normalize(FockState._trusted(kept, state.num_modes))


def party_blocked(
    state: FockState, layout: PartyLayout, modes_per_party: Optional[int] = None
) -> Tuple[FockState, PartyLayout]:
    """Moves every party's modes into a contiguous block, in local order,
    and pads each block with vacuum modes up to modes_per_party.

    Args:
        state (FockState): State over the layout's modes.
        layout (PartyLayout): Current party assignment.
        modes_per_party (int, optional): Block width, defaults to the
            largest party.

    Returns:
        Tuple[FockState, PartyLayout]: The relabelled state and its
            blocked layout.
    """
    layout.validate(state)
    width = max(len(modes) for modes in layout.parties)
    if modes_per_party is None:
        modes_per_party = width
    if modes_per_party < width:
        raise InvalidConfiguration(f"Blocks of {modes_per_party} cannot hold {width} modes.")
    amplitudes = {}
    for occ, amp in state:
        blocked: List[int] = []
        for modes in layout.parties:
            blocked.extend(occ[mode] for mode in modes)
            blocked.extend([0] * (modes_per_party - len(modes)))
        amplitudes[tuple(blocked)] = amp
    total_modes = layout.num_parties * modes_per_party
    return (
        FockState._trusted(amplitudes, total_modes),
        PartyLayout.blocked(layout.num_parties, modes_per_party),
    )


def dephase(state: FockState, layout: PartyLayout, phases: Sequence[float]) -> FockState:
    """Rotates the whole lab of party p by phi_p: each term picks up
    exp(i sum_p phi_p n_p)."""
    if len(phases) != layout.num_parties:
        raise DimensionMismatch(f"{len(phases)} phases for {layout.num_parties} parties.")
    layout.validate(state)
    rotated = {}
    for occ, amp in state:
        angle = sum(phi * n for phi, n in zip(phases, layout.photon_counts(occ)))
        rotated[occ] = amp * complex(math.cos(angle), math.sin(angle))
    return FockState._trusted(rotated, state.num_modes)


def first_quantized_symmetrization(photons: int, levels: int) -> np.ndarray:
    """Symmetrized state of N distinguishable M-level systems occupying
    levels 0..N-1, as a dense tensor of shape (M,) * N."""
    if photons < 1 or levels < photons:
        raise InvalidConfiguration(f"Need M >= N >= 1, got N={photons}, M={levels}.")
    tensor = np.zeros((levels,) * photons, dtype=complex)
    coefficient = 1.0 / math.sqrt(math.factorial(photons))
    for perm in permutations(range(photons)):
        tensor[perm] = coefficient
    return tensor


def third_quantized_encoding(tensor: np.ndarray) -> FockState:
    """Encodes a first-quantized N-system tensor as N parties each holding
    one photon in M local modes: level l of system j becomes a photon in
    local mode l of party j."""
    photons = tensor.ndim
    levels = tensor.shape[0]
    amplitudes = {}
    for index in zip(*np.nonzero(tensor)):
        occ = [0] * (photons * levels)
        for party, level in enumerate(index):
            occ[party * levels + int(level)] = 1
        amplitudes[tuple(occ)] = complex(tensor[index])
    return FockState(amplitudes, photons * levels)


def approximation_error_scan(copy_counts: Iterable[int] = (2, 3)) -> Dict[str, object]:
    """For K = N^3, compares N copies of |W_K> with Sigma*(K, N, N).

    Returns:
        Dict[str, object]: Per-N fidelities, collision weights, the
            injection-counting formula, the fitted constant
            c = max N (1 - F) and whether fidelities increase with N.
    """
    rows = []
    for copies in copy_counts:
        num_parties = copies**3
        w_state_copies, layout = w_copies(num_parties, copies)
        blocked, blocked_layout = party_blocked(w_state_copies, layout, copies)
        star, _ = sigma_star(num_parties, copies, copies)
        raw = fidelity(blocked, star)
        projected = fidelity(collision_free_projection(blocked, blocked_layout), star)
        weight = collision_probability(w_state_copies, layout)
        formula = collision_probability_formula(num_parties, copies)
        logging.info(
            f"N={copies}, K={num_parties}: fidelity {raw:.12f}, "
            f"collision weight {weight:.12f}."
        )
        rows.append(
            {
                "N": copies,
                "K": num_parties,
                "fidelity": raw,
                "projected_fidelity": projected,
                "collision_weight": weight,
                "collision_formula": formula,
            }
        )
    fidelities = [row["fidelity"] for row in rows]
    return {
        "rows": rows,
        "constant": max(row["N"] * (1.0 - row["fidelity"]) for row in rows),
        "monotone": all(a < b for a, b in zip(fidelities, fidelities[1:])),
        "normalized": all(
            abs(row["projected_fidelity"] - 1.0) <= NORMALIZATION_TOL for row in rows
        ),
    }


def heralded_source_check(sizes: Iterable[int] = (2, 3, 4, 8)) -> Dict[str, object]:
    """Pairwise overlaps of the K heralded W states and their fidelity
    with the zero-phase W state once the local phases are corrected."""
    rows = []
    for size in sizes:
        states = [heralded_w(size, source) for source in range(size)]
        overlap = max(
            (abs(inner_product(a, b)) for a, b in combinations(states, 2)),
            default=0.0,
        )
        target = w_state(size)
        corrected = min(
            fidelity(apply(state, phase_correction(size, source)), target)
            for source, state in enumerate(states)
        )
        logging.info(f"Heralded K={size}: max overlap {overlap:.3e}, fidelity {corrected:.15f}.")
        rows.append({"K": size, "max_overlap": overlap, "corrected_fidelity": corrected})
    return {
        "rows": rows,
        "orthogonal": all(row["max_overlap"] <= 1e-10 for row in rows),
        "corrected": all(row["corrected_fidelity"] >= 1.0 - 1e-12 for row in rows),
    }
