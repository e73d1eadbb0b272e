import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import unitary_group

from PhotonicProtocols.constants import (
    CROSSCHECK_MAX_PARTIES,
    CROSSCHECK_MAX_PHOTONS,
    MIN_OUTCOME_PROBABILITY,
    NORMALIZATION_TOL,
    UNITARITY_TOL,
)
from PhotonicProtocols.models.exceptions import (
    DimensionMismatch,
    InvalidConfiguration,
    InvalidModeSet,
    NotUnitary,
    TooLarge,
)
from PhotonicProtocols.models.linear_optics import apply, embed, is_unitary
from PhotonicProtocols.models.measurement import (
    ModeTracker,
    collapse,
    detection_distribution,
)
from PhotonicProtocols.models.party_register import PartyRegister
from PhotonicProtocols.models.permanent import operator_norm, permanent_exact
from PhotonicProtocols.models.random_streams import SeedLike, make_generator
from PhotonicProtocols.models.resource_states import w_copies

Outcome = Tuple[int, ...]


def haar_unitary(size: int, rng: np.random.Generator) -> np.ndarray:
    if size == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(size, random_state=rng)


@dataclass(frozen=True)
class AdaptivePlan:
    """Interferometers fixed before the run: the n-th party to detect a
    photon was holding U^(n) on its N local modes.

    Raises:
        InvalidConfiguration: If K < N or the count of unitaries is not N.
        DimensionMismatch: If a unitary is not N x N.
        NotUnitary: If a unitary fails the 1e-10 check.
    """

    num_parties: int
    unitaries: Tuple[np.ndarray, ...] = field(compare=False)

    def __post_init__(self):
        unitaries = tuple(np.array(u, dtype=complex) for u in self.unitaries)
        photons = len(unitaries)
        if photons < 1 or self.num_parties < photons:
            raise InvalidConfiguration(
                f"Need K >= N >= 1, got K={self.num_parties}, N={photons}."
            )
        for index, unitary in enumerate(unitaries):
            if unitary.shape != (photons, photons):
                raise DimensionMismatch(
                    f"U({index + 1}) has shape {unitary.shape}, expected {photons}x{photons}."
                )
            if not is_unitary(unitary, UNITARITY_TOL):
                raise NotUnitary(f"U({index + 1}) is not unitary.")
            unitary.setflags(write=False)
        object.__setattr__(self, "unitaries", unitaries)

    @property
    def photons(self) -> int:
        return len(self.unitaries)

    @classmethod
    def random(cls, num_parties: int, photons: int, seed: SeedLike) -> "AdaptivePlan":
        """Independent Haar-random unitaries."""
        rng = make_generator(seed)
        return cls(num_parties, tuple(haar_unitary(photons, rng) for _ in range(photons)))

    def to_records(self) -> List[List[List[List[float]]]]:
        return [
            [[[float(z.real), float(z.imag)] for z in row] for row in unitary]
            for unitary in self.unitaries
        ]


@dataclass(frozen=True)
class SampleResult:
    detected_modes: Tuple[int, ...]
    detecting_parties: Tuple[int, ...]
    aborted: bool


def run_adaptive(
    plan: AdaptivePlan, seed: SeedLike = 0, party_order: Optional[Sequence[int]] = None
) -> SampleResult:
    """One run of the adaptive sampling protocol on N copies of |W_K>.

    Parties act in order. Each applies U^(n), n - 1 being the number of
    photons found so far, to its N modes and detects all of them. The run
    stops once N photons are found; a party finding two or more aborts it.
    """
    if plan.num_parties < plan.photons**2:
        logging.warning(
            f"K={plan.num_parties} < N^2={plan.photons ** 2}: collisions will be frequent."
        )
    rng = make_generator(seed)
    register = PartyRegister(plan.num_parties, plan.photons)
    modes: List[int] = []
    parties: List[int] = []
    for party in _checked_order(plan, party_order):
        counts = register.measure(party, plan.unitaries[len(modes)], rng)
        photons = sum(counts)
        if photons >= 2:
            return SampleResult(tuple(modes), tuple(parties), True)
        if photons == 1:
            modes.append(counts.index(1))
            parties.append(party)
        if len(modes) == plan.photons:
            break
    return SampleResult(tuple(modes), tuple(parties), len(modes) < plan.photons)


def sample_frequencies(plan: AdaptivePlan, trials: int, seed: SeedLike = 0) -> Dict[str, object]:
    """Runs trials independent samples, trial t on stream seed + t."""
    tally: Counter = Counter()
    aborted = 0
    for trial in range(trials):
        result = run_adaptive(plan, make_generator(seed, trial))
        if result.aborted:
            aborted += 1
        else:
            tally[result.detected_modes] += 1
    return {"counts": dict(tally), "aborted": aborted, "trials": trials}


def stacked_matrix(plan: AdaptivePlan, outcome: Sequence[int]) -> np.ndarray:
    """Row n is row k_n of U^(n), all scaled by (N!)^(-1/(2N)).

    Raises:
        DimensionMismatch: If the outcome does not have N entries.
        InvalidModeSet: If an entry is outside [0, N).
    """
    photons = plan.photons
    if len(outcome) != photons:
        raise DimensionMismatch(f"{len(outcome)} detected modes for N={photons}.")
    if any(k < 0 or k >= photons for k in outcome):
        raise InvalidModeSet(f"Detected modes {list(outcome)} outside [0, {photons}).")
    scale = math.factorial(photons) ** (-1.0 / (2 * photons))
    return scale * np.array([plan.unitaries[n][k] for n, k in enumerate(outcome)])


def outcome_probability(plan: AdaptivePlan, outcome: Sequence[int]) -> float:
    """|Per(M)|^2 for the stacked matrix of the outcome."""
    return abs(permanent_exact(stacked_matrix(plan, outcome))) ** 2


def collision_free_weight(num_parties: int, photons: int) -> float:
    """K! / ((K - N)! K^N): chance that N copies sit at distinct parties."""
    return math.prod((num_parties - i) / num_parties for i in range(photons))


def _checked_order(plan: AdaptivePlan, party_order: Optional[Sequence[int]]) -> List[int]:
    if party_order is None:
        return list(range(plan.num_parties))
    order = [int(party) for party in party_order]
    if sorted(order) != list(range(plan.num_parties)):
        raise InvalidConfiguration(f"Party order {order} is not a permutation of the K parties.")
    return order


def _state_vector_distribution(plan: AdaptivePlan, order: List[int]) -> Dict[Outcome, float]:
    """Branches the full sparse state over every non-aborting outcome."""
    state, layout = w_copies(plan.num_parties, plan.photons)
    branches = [(1.0, state, ModeTracker(state.num_modes), ())]
    for party in order:
        expanded = []
        for weight, current, tracker, detected in branches:
            if len(detected) == plan.photons:
                expanded.append((weight, current, tracker, detected))
                continue
            positions = tracker.locate(layout.modes_of(party))
            evolved = apply(current, embed(plan.unitaries[len(detected)], positions))
            for counts, probability in detection_distribution(evolved, positions).items():
                if probability < MIN_OUTCOME_PROBABILITY or sum(counts) >= 2:
                    continue
                found = detected + (counts.index(1),) if sum(counts) == 1 else detected
                expanded.append(
                    (
                        weight * probability,
                        collapse(evolved, positions, counts).state,
                        tracker.after_detection(positions),
                        found,
                    )
                )
        branches = expanded
    distribution: Dict[Outcome, float] = defaultdict(float)
    for weight, _, _, detected in branches:
        if len(detected) == plan.photons:
            distribution[detected] += weight
    return dict(distribution)


def _register_distribution(plan: AdaptivePlan, order: List[int]) -> Dict[Outcome, float]:
    """Same enumeration on the party-sequential register."""
    distribution: Dict[Outcome, float] = defaultdict(float)

    def explore(register: PartyRegister, position: int, detected: Outcome, weight: float) -> None:
        if len(detected) == plan.photons:
            distribution[detected] += weight
            return
        if position == len(order):
            return
        party = order[position]
        unitary = plan.unitaries[len(detected)]
        for counts, probability in register.outcome_distribution(party, unitary, 1).items():
            if probability < MIN_OUTCOME_PROBABILITY:
                continue
            child = register.copy()
            child.project(party, unitary, counts)
            found = detected + (counts.index(1),) if sum(counts) else detected
            explore(child, position + 1, found, weight * probability)

    explore(PartyRegister(plan.num_parties, plan.photons), 0, (), 1.0)
    return dict(distribution)


def distribution_crosscheck(
    plan: AdaptivePlan,
    exhaustive: bool = True,
    party_order: Optional[Sequence[int]] = None,
) -> Dict[str, object]:
    """Compares the exact outcome distribution of run_adaptive with the
    permanent formula.

    The protocol reports ordered outcomes (k_1 before k_2) and only in
    the collision-free sector, so the simulated probability of k equals
    K! / ((K - N)! K^N) times |Per(M)|^2; that factor is the reported
    normalization and the rest is the aborted weight.

    Args:
        plan (AdaptivePlan): The interferometers.
        exhaustive (bool): Enumerate the full sparse state vector (N <= 3,
            K <= 8); otherwise enumerate on the party register.
        party_order (Sequence[int], optional): Order in which parties act.

    Raises:
        TooLarge: If exhaustive and N > 3 or K > 8.
    """
    photons, num_parties = plan.photons, plan.num_parties
    if exhaustive and (photons > CROSSCHECK_MAX_PHOTONS or num_parties > CROSSCHECK_MAX_PARTIES):
        raise TooLarge(
            f"Exhaustive crosscheck handles N <= {CROSSCHECK_MAX_PHOTONS}, "
            f"K <= {CROSSCHECK_MAX_PARTIES}; got N={photons}, K={num_parties}."
        )
    order = _checked_order(plan, party_order)
    if exhaustive:
        simulated = _state_vector_distribution(plan, order)
    else:
        simulated = _register_distribution(plan, order)
    normalization = collision_free_weight(num_parties, photons)
    model = {k: outcome_probability(plan, k) for k in product(range(photons), repeat=photons)}

    rows = []
    for k in sorted(model):
        expected = normalization * model[k]
        observed = simulated.get(k, 0.0)
        rows.append(
            {
                "outcome": "-".join(map(str, k)),
                "probability_model": expected,
                "probability_simulated": observed,
                "abs_diff": abs(expected - observed),
            }
        )
    max_abs_diff = max(row["abs_diff"] for row in rows)
    aborted_weight = 1.0 - math.fsum(simulated.values())
    model_total = math.fsum(model.values())
    logging.info(
        f"Crosscheck N={photons}, K={num_parties}: max diff {max_abs_diff:.3e}, "
        f"normalization {normalization:.12f}."
    )
    return {
        "N": photons,
        "K": num_parties,
        "exhaustive": exhaustive,
        "party_order": order,
        "normalization": normalization,
        "aborted_weight": aborted_weight,
        "model_total": model_total,
        "max_abs_diff": max_abs_diff,
        "outcomes": rows,
        "criteria": {
            "max_abs_diff": max_abs_diff <= NORMALIZATION_TOL,
            "aborted_weight_is_collision_weight": abs(aborted_weight - (1.0 - normalization))
            <= NORMALIZATION_TOL,
            "model_sums_to_one": abs(model_total - 1.0) <= NORMALIZATION_TOL,
        },
    }


def norm_exceedance_demo(
    trials: int, seed: SeedLike = 0, photon_range: Tuple[int, int] = (3, 5)
) -> Dict[str, object]:
    """How often the stacked matrix of a random plan and outcome has
    operator norm above one, which voids the additive error guarantee of
    the Gurvits estimator."""
    if trials < 1:
        raise InvalidConfiguration(f"trials must be positive, got {trials}.")
    norms = []
    exceeding_photons = set()
    for trial in range(trials):
        rng = make_generator(seed, trial)
        photons = int(rng.integers(photon_range[0], photon_range[1] + 1))
        plan = AdaptivePlan.random(photons**2, photons, rng)
        outcome = [int(k) for k in rng.integers(0, photons, size=photons)]
        norm = operator_norm(stacked_matrix(plan, outcome))
        norms.append(norm)
        if norm > 1.0:
            exceeding_photons.add(photons)
    exceed = sum(1 for norm in norms if norm > 1.0)
    return {
        "trials": trials,
        "exceed_fraction": exceed / trials,
        "max_norm": max(norms),
        "min_norm": min(norms),
        "exceeding_photon_numbers": sorted(exceeding_photons),
        "criteria": {
            "norm_exceeds_one": max(norms) > 1.0,
            "norms_nonnegative": min(norms) >= 0.0,
        },
    }
