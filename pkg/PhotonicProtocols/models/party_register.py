import math
from collections import defaultdict
from itertools import combinations, product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from PhotonicProtocols.constants import MIN_OUTCOME_PROBABILITY, PRUNE_THRESHOLD
from PhotonicProtocols.models.exceptions import (
    DimensionMismatch,
    ImpossibleOutcome,
    InvalidConfiguration,
)
from PhotonicProtocols.models.fock_state import FockState
from PhotonicProtocols.models.permanent import permanent_exact
from PhotonicProtocols.models.resource_states import PartyLayout

Counts = Tuple[int, ...]


def _small_permanent(matrix: np.ndarray) -> complex:
    size = matrix.shape[0]
    if size == 0:
        return 1.0 + 0j
    if size == 1:
        return complex(matrix[0, 0])
    if size == 2:
        return complex(matrix[0, 0] * matrix[1, 1] + matrix[0, 1] * matrix[1, 0])
    return permanent_exact(matrix)


def count_patterns(photons: int, modes: int) -> List[Counts]:
    """Every way to spread photons over modes, in lexicographic order."""
    return [
        counts
        for counts in product(range(photons + 1), repeat=modes)
        if sum(counts) == photons
    ]


class PartyRegister:
    """Exact state of N copies of |W_K> while parties, one at a time,
    apply a local interferometer to their N modes and detect all of them.

    A party holding mode j of every copy only ever removes photons from
    copies, so the joint state stays of the form

        sum_T alpha_T |copies in T absorbed> (x)_{c not in T} W_c(R)

    where W_c(R) = sum_{q in R} w_q a_{q,c}^dagger |0> runs over the parties
    R that have not measured yet and w_q = exp(i theta_q) / sqrt(K). The
    register stores alpha keyed by the bitmask of T, so a measurement costs
    a sum over absorbed-copy sets instead of the K^N terms of the full
    state vector.

    Args:
        num_parties (int): K.
        copies (int): N, also the number of local modes per party.
        phases (Sequence[float], optional): W-state phases theta_q.
    """

    def __init__(
        self, num_parties: int, copies: int, phases: Optional[Sequence[float]] = None
    ):
        if copies < 1 or num_parties < copies:
            raise InvalidConfiguration(
                f"Need K >= N >= 1, got K={num_parties}, N={copies}."
            )
        if phases is None:
            phases = np.zeros(num_parties)
        phases = np.asarray(phases, dtype=float)
        if phases.shape != (num_parties,):
            raise DimensionMismatch(f"{phases.size} phases for K={num_parties}.")
        self.num_parties = num_parties
        self.copies = copies
        self.weights = np.exp(1j * phases) / math.sqrt(num_parties)
        self.remaining: List[int] = list(range(num_parties))
        self.coefficients: Dict[int, complex] = {0: 1.0 + 0j}
        self.detections: List[Tuple[int, Counts]] = []

    def copy(self) -> "PartyRegister":
        clone = PartyRegister.__new__(PartyRegister)
        clone.num_parties = self.num_parties
        clone.copies = self.copies
        clone.weights = self.weights
        clone.remaining = list(self.remaining)
        clone.coefficients = dict(self.coefficients)
        clone.detections = list(self.detections)
        return clone

    @property
    def full_mask(self) -> int:
        return (1 << self.copies) - 1

    def free_copies(self, mask: int) -> List[int]:
        return [c for c in range(self.copies) if not mask & (1 << c)]

    def exhausted(self) -> bool:
        """True once every photon has been detected."""
        return set(self.coefficients) == {self.full_mask}

    def _copy_weight(self, remaining: int) -> float:
        """Squared norm of one unabsorbed copy over `remaining` parties."""
        return remaining / self.num_parties

    def _norm_squared(self, coefficients: Dict[int, complex], remaining: int) -> float:
        weight = self._copy_weight(remaining)
        return math.fsum(
            abs(alpha) ** 2 * weight ** (self.copies - bin(mask).count("1"))
            for mask, alpha in coefficients.items()
        )

    def norm_squared(self) -> float:
        return self._norm_squared(self.coefficients, len(self.remaining))

    def _check_party(self, party: int) -> None:
        if party not in self.remaining:
            raise InvalidConfiguration(f"Party {party} has already measured.")

    def photon_count_distribution(self, party: int) -> np.ndarray:
        """Probabilities of party detecting t = 0..N photons. Independent
        of the local interferometer."""
        self._check_party(party)
        own = abs(self.weights[party]) ** 2
        rest = self._copy_weight(len(self.remaining) - 1)
        probabilities = np.zeros(self.copies + 1)
        for mask, alpha in self.coefficients.items():
            free = self.copies - bin(mask).count("1")
            weight = abs(alpha) ** 2
            for photons in range(free + 1):
                probabilities[photons] += (
                    weight * math.comb(free, photons) * own**photons * rest ** (free - photons)
                )
        return probabilities / self.norm_squared()

    def _branch(
        self, party: int, unitary: Optional[np.ndarray], counts: Counts
    ) -> Dict[int, complex]:
        """Unnormalized coefficients after party detects counts."""
        photons = sum(counts)
        if photons == 0:
            return dict(self.coefficients)
        rows = [mode for mode, count in enumerate(counts) for _ in range(count)]
        scale = self.weights[party] ** photons / math.sqrt(
            math.prod(math.factorial(count) for count in counts)
        )
        branched: Dict[int, complex] = defaultdict(complex)
        for mask, alpha in self.coefficients.items():
            for subset in combinations(self.free_copies(mask), photons):
                amplitude = _small_permanent(unitary[np.ix_(rows, subset)])
                if amplitude != 0:
                    new_mask = mask
                    for copy_index in subset:
                        new_mask |= 1 << copy_index
                    branched[new_mask] += alpha * scale * amplitude
        return {
            mask: alpha
            for mask, alpha in branched.items()
            if abs(alpha) >= PRUNE_THRESHOLD
        }

    def _checked_unitary(self, unitary: np.ndarray) -> np.ndarray:
        unitary = np.asarray(unitary, dtype=complex)
        if unitary.shape != (self.copies, self.copies):
            raise DimensionMismatch(
                f"Local interferometer {unitary.shape} on {self.copies} modes."
            )
        return unitary

    def outcome_distribution(
        self, party: int, unitary: np.ndarray, max_photons: Optional[int] = None
    ) -> Dict[Counts, float]:
        """Exact probability of every count pattern at party after it
        applies unitary to its local modes, optionally only for patterns
        of at most max_photons photons."""
        self._check_party(party)
        unitary = self._checked_unitary(unitary)
        remaining = len(self.remaining) - 1
        total = self.norm_squared()
        distribution = {}
        top = self.copies if max_photons is None else min(max_photons, self.copies)
        for photons in range(top + 1):
            for counts in count_patterns(photons, self.copies):
                branched = self._branch(party, unitary, counts)
                distribution[counts] = self._norm_squared(branched, remaining) / total
        return distribution

    def _commit(self, party: int, counts: Counts, branched: Dict[int, complex]) -> None:
        self.remaining.remove(party)
        norm = math.sqrt(self._norm_squared(branched, len(self.remaining)))
        self.coefficients = {mask: alpha / norm for mask, alpha in branched.items()}
        self.detections.append((party, counts))

    def project(self, party: int, unitary: np.ndarray, counts: Sequence[int]) -> float:
        """Collapses onto a given outcome at party and returns its
        probability.

        Raises:
            ImpossibleOutcome: If the outcome probability is below 1e-12.
        """
        self._check_party(party)
        unitary = self._checked_unitary(unitary)
        counts = tuple(int(count) for count in counts)
        if len(counts) != self.copies:
            raise DimensionMismatch(f"{len(counts)} counts for {self.copies} modes.")
        branched = self._branch(party, unitary, counts)
        probability = (
            self._norm_squared(branched, len(self.remaining) - 1) / self.norm_squared()
        )
        if probability < MIN_OUTCOME_PROBABILITY:
            raise ImpossibleOutcome(
                f"Outcome {counts} at party {party} has probability {probability:.3e}."
            )
        self._commit(party, counts, branched)
        return probability

    def measure(self, party: int, unitary: np.ndarray, rng: np.random.Generator) -> Counts:
        """Samples the party's outcome and collapses the register.

        One uniform draw picks the photon number t from the
        interferometer-independent distribution; a second picks the
        pattern among those with t photons, in lexicographic order.
        """
        by_photons = self.photon_count_distribution(party)
        cumulative = np.cumsum(by_photons)
        photons = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
        photons = min(photons, self.copies)
        if photons == 0:
            counts = (0,) * self.copies
            self._commit(party, counts, dict(self.coefficients))
            return counts

        unitary = self._checked_unitary(unitary)
        remaining = len(self.remaining) - 1
        candidates = []
        weights = []
        for counts in count_patterns(photons, self.copies):
            branched = self._branch(party, unitary, counts)
            candidates.append((counts, branched))
            weights.append(self._norm_squared(branched, remaining))
        cumulative = np.cumsum(weights)
        index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
        counts, branched = candidates[min(index, len(candidates) - 1)]
        self._commit(party, counts, branched)
        return counts

    def collision_free_probability(self) -> float:
        """Chance that the photons still in flight land at distinct
        remaining parties."""
        remaining = len(self.remaining)
        weight = self._copy_weight(remaining)
        total = 0.0
        for mask, alpha in self.coefficients.items():
            free = self.copies - bin(mask).count("1")
            distinct = math.prod(1.0 - i / remaining for i in range(free)) if remaining else float(free == 0)
            total += abs(alpha) ** 2 * weight**free * distinct
        return total / self.norm_squared()

    def pair_matrix(self) -> np.ndarray:
        """Amplitudes psi[c, c'] of the state with exactly copies c and c'
        still in flight, for two parties sharing them one photon each.
        Row and column index the local mode (copy) of each party."""
        psi = np.zeros((self.copies, self.copies), dtype=complex)
        for mask, alpha in self.coefficients.items():
            free = self.free_copies(mask)
            if len(free) != 2:
                raise InvalidConfiguration(
                    f"Pair amplitudes need two photons in flight, found {len(free)}."
                )
            first, second = free
            psi[first, second] = alpha
            psi[second, first] = alpha
        return psi / np.linalg.norm(psi)

    def to_fock_state(self) -> Tuple[FockState, PartyLayout]:
        """Expands the register into the sparse state of the remaining
        parties' modes, laid out as the interleaved copies of the
        remaining parties in increasing party order."""
        remaining = len(self.remaining)
        layout = PartyLayout.interleaved(remaining, self.copies)
        amplitudes: Dict[Tuple[int, ...], complex] = defaultdict(complex)
        for mask, alpha in self.coefficients.items():
            free = self.free_copies(mask)
            for holders in product(range(remaining), repeat=len(free)):
                occ = [0] * (remaining * self.copies)
                amplitude = alpha
                for copy_index, slot in zip(free, holders):
                    occ[copy_index * remaining + slot] = 1
                    amplitude *= self.weights[self.remaining[slot]]
                amplitudes[tuple(occ)] += amplitude
        return FockState(dict(amplitudes), remaining * self.copies), layout
