import logging
import math
from functools import lru_cache
from itertools import permutations, product
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from PhotonicProtocols.constants import BELL_FIDELITY_TOL, MIN_OUTCOME_PROBABILITY, NORMALIZATION_TOL
from PhotonicProtocols.models.exceptions import (
    DecompositionMismatch,
    InvalidConfiguration,
)
from PhotonicProtocols.models.fock_state import FockState, inner_product, tensor, vacuum
from PhotonicProtocols.models.linear_optics import (
    apply,
    beamsplitter,
    embed,
    hadamard_tensor_hadamard,
)
from PhotonicProtocols.models.measurement import collapse, detection_distribution
from PhotonicProtocols.models.party_register import PartyRegister
from PhotonicProtocols.models.random_streams import SeedLike, make_generator
from PhotonicProtocols.models.resource_states import (
    collision_probability_formula,
    sigma_state,
)

LOCAL_MODES = 4
PAIR_PARTITIONS: Tuple[Tuple[Tuple[int, int], Tuple[int, int]], ...] = (
    ((0, 1), (2, 3)),
    ((0, 2), (1, 3)),
    ((0, 3), (1, 2)),
)


class BellState(NamedTuple):
    label: str
    matrix: np.ndarray
    state: FockState


def bell_matrix(partition: Tuple[Tuple[int, int], Tuple[int, int]], sign: int) -> np.ndarray:
    """Amplitude matrix T[k, l] of a two-party state with one photon per
    party: the symmetric pair state on the first pair plus sign times the
    one on the complementary pair."""
    matrix = np.zeros((LOCAL_MODES, LOCAL_MODES), dtype=complex)
    for (k, l), weight in zip(partition, (1.0, float(sign))):
        matrix[k, l] = matrix[l, k] = 0.5 * weight
    return matrix


def pair_state(matrix: np.ndarray) -> FockState:
    """One photon at each of two parties with 4 local modes each; entry
    [k, l] is the amplitude of mode k at the first party and l at the
    second."""
    amplitudes = {}
    for k, l in product(range(LOCAL_MODES), repeat=2):
        if matrix[k, l] != 0:
            occ = [0] * (2 * LOCAL_MODES)
            occ[k] = 1
            occ[LOCAL_MODES + l] = 1
            amplitudes[tuple(occ)] = complex(matrix[k, l])
    return FockState(amplitudes, 2 * LOCAL_MODES)


def pair_matrix(state: FockState) -> np.ndarray:
    """Inverse of pair_state, ignoring terms without one photon per party."""
    matrix = np.zeros((LOCAL_MODES, LOCAL_MODES), dtype=complex)
    for occ, amp in state:
        first, second = occ[:LOCAL_MODES], occ[LOCAL_MODES:]
        if sum(first) == 1 and sum(second) == 1:
            matrix[first.index(1), second.index(1)] = amp
    return matrix


def dual_rail_bell_states() -> List[BellState]:
    """The six third-quantized Bell states of two parties holding one
    photon each in four local modes, minus sign first for each pair
    partition."""
    states = []
    for index, partition in enumerate(PAIR_PARTITIONS):
        for sign in (-1, 1):
            matrix = bell_matrix(partition, sign)
            label = f"B{2 * index + (1 if sign < 0 else 2)}"
            states.append(BellState(label, matrix, pair_state(matrix)))
    return states


@lru_cache(maxsize=None)
def _permuted_bell_matrices() -> Tuple[np.ndarray, Tuple[str, ...]]:
    """Every Bell matrix under independent local mode permutations at the
    two parties, unpermuted ones first, duplicates dropped."""
    matrices, labels, seen = [], [], set()
    orders = list(permutations(range(LOCAL_MODES)))
    bells = dual_rail_bell_states()
    candidates = [(bell, order, order) for bell in bells for order in orders[:1]]
    candidates += [(bell, first, second) for bell in bells for first in orders for second in orders]
    for bell, first, second in candidates:
        matrix = bell.matrix[np.ix_(first, second)]
        key = np.round(matrix, 12).tobytes()
        if key not in seen:
            seen.add(key)
            matrices.append(matrix)
            labels.append(bell.label)
    return np.array(matrices), tuple(labels)


def bell_fidelity(psi: np.ndarray) -> Tuple[float, str]:
    """Best fidelity of a normalized pair amplitude matrix with the six
    dual-rail Bell states up to mode permutations within each party, and
    the label of the Bell state attaining it."""
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    matrices, labels = _permuted_bell_matrices()
    scores = np.abs(np.einsum("nkl,kl->n", matrices.conj(), psi)) ** 2
    best = int(np.argmax(scores >= scores.max() - 1e-12))
    return float(scores[best]), labels[best]


def is_residual(psi: np.ndarray, tol: float = 1e-9) -> bool:
    """Zero diagonal and equal-magnitude off-diagonal amplitudes: the
    state left when the two detecting parties see the same outcome."""
    magnitudes = np.abs(psi / np.linalg.norm(psi))
    off_diagonal = magnitudes[~np.eye(LOCAL_MODES, dtype=bool)]
    return bool(
        np.max(np.diag(magnitudes)) <= tol
        and np.ptp(off_diagonal) <= tol
    )


def majorization_bound(psi: np.ndarray) -> float:
    """Optimal LOCC probability of reaching a maximally entangled state of
    the same Schmidt rank: min_l sum_{i>=l} lambda_i / sum_{i>=l} 1/d."""
    singular = np.linalg.svd(np.asarray(psi, dtype=complex), compute_uv=False)
    weights = np.sort(singular**2 / np.sum(singular**2))[::-1]
    size = len(weights)
    return float(
        min(np.sum(weights[l:]) / ((size - l) / size) for l in range(size))
    )


def residual_conversion(state: FockState) -> Dict[str, object]:
    """Local filter at the first party turning a one-photon-per-party
    state into a dual-rail Bell state.

    The first party rotates its modes onto the Schmidt basis, sends each
    mode whose Schmidt coefficient exceeds the smallest through a
    beamsplitter with transmission amplitude sigma_min / sigma_i into a
    fresh vacuum ancilla, and keeps the run when no ancilla clicks. A
    final local interferometer maps the flattened state onto B2.

    Returns:
        Dict[str, object]: Success probability, the majorization bound,
            the output state and its Bell fidelity.
    """
    psi = pair_matrix(state)
    psi = psi / np.linalg.norm(psi)
    left, singular, right = np.linalg.svd(psi)
    smallest = singular[-1]
    filtered = [mode for mode in range(LOCAL_MODES) if singular[mode] > smallest * (1 + 1e-9)]

    working = tensor(state, vacuum(len(filtered))) if filtered else state
    working = apply(working, embed(left.conj().T, range(LOCAL_MODES), "schmidt"))
    for offset, mode in enumerate(filtered):
        transmission = smallest / singular[mode]
        reflection = math.sqrt(max(0.0, 1.0 - transmission**2))
        splitter = np.array(
            [[transmission, -reflection], [reflection, transmission]], dtype=complex
        )
        working = apply(working, embed(splitter, (mode, 2 * LOCAL_MODES + offset), "filter"))
    ancillas = list(range(2 * LOCAL_MODES, 2 * LOCAL_MODES + len(filtered)))
    heralded = collapse(working, ancillas, [0] * len(filtered))

    target = dual_rail_bell_states()[1].matrix
    correction = 2.0 * target @ right.conj().T
    converted = apply(heralded.state, embed(correction, range(LOCAL_MODES), "correction"))
    score, label = bell_fidelity(pair_matrix(converted))
    return {
        "probability": heralded.probability,
        "majorization_bound": majorization_bound(psi),
        "schmidt_coefficients": [float(s) for s in singular],
        "fidelity": score,
        "bell_state": label,
        "state": converted,
    }


def beamsplitter_follow_up(state: FockState) -> Dict[str, object]:
    """Each party interferes its modes (0, 2) and (1, 3) on 50:50
    beamsplitters and detects one of its four modes, keeping runs where
    both detectors see vacuum.

    A vacuum herald leaves at most three modes per party, so the heralded
    state has Schmidt rank at most 3 and its best fidelity with a rank-4
    dual-rail Bell state under any further local unitaries is
    (sum of normalized Schmidt coefficients)^2 / 4.

    Returns:
        Dict[str, object]: One row per detected mode pair and the best
            Bell fidelity over all of them.
    """
    working = state
    for base in (0, LOCAL_MODES):
        for first, second in ((0, 2), (1, 3)):
            working = apply(working, beamsplitter((base + first, base + second)))

    rows = []
    kept = LOCAL_MODES - 1
    for first_mode, second_mode in product(range(LOCAL_MODES), repeat=2):
        measured = [first_mode, LOCAL_MODES + second_mode]
        probability = detection_distribution(working, measured).probability((0, 0))
        if probability < MIN_OUTCOME_PROBABILITY:
            continue
        heralded = collapse(working, measured, (0, 0)).state
        matrix = np.zeros((kept, kept), dtype=complex)
        for occ, amp in heralded:
            if sum(occ[:kept]) == 1 and sum(occ[kept:]) == 1:
                matrix[occ[:kept].index(1), occ[kept:].index(1)] = amp
        singular = np.linalg.svd(matrix, compute_uv=False)
        singular = singular / np.linalg.norm(singular)
        rows.append(
            {
                "modes": (first_mode, second_mode),
                "probability": probability,
                "schmidt_rank": int(np.sum(singular > 1e-9)),
                "max_bell_fidelity": float(np.sum(singular) ** 2 / LOCAL_MODES),
            }
        )
    return {
        "heralds": rows,
        "max_bell_fidelity": max((row["max_bell_fidelity"] for row in rows), default=0.0),
    }


def bleeding_analytic() -> Dict[str, object]:
    """Exact bleeding protocol on the four-party symmetric state.

    Parties A and B apply H x H to their four modes and detect them. For
    every joint outcome the state left at C and D is classified as a
    dual-rail Bell state or as the residual class, and residual states
    are converted with residual_conversion.
    """
    resource = sigma_state(4, LOCAL_MODES)
    hh = hadamard_tensor_hadamard()
    state = apply(resource, hh.relabelled(range(LOCAL_MODES)))
    state = apply(state, hh.relabelled(range(LOCAL_MODES, 2 * LOCAL_MODES)))
    detected = list(range(2 * LOCAL_MODES))

    bell_weight = 0.0
    residual_weight = 0.0
    other_weight = 0.0
    converted_weight = 0.0
    conversions = []
    residual_psi = None
    follow_up_fidelity = 0.0
    outcomes = []
    for counts, probability in detection_distribution(state, detected).items():
        if probability < MIN_OUTCOME_PROBABILITY:
            continue
        remainder = collapse(state, detected, counts).state
        psi = pair_matrix(remainder)
        score, label = bell_fidelity(psi)
        if score >= 1.0 - BELL_FIDELITY_TOL:
            branch = "bell"
            bell_weight += probability
        elif is_residual(psi):
            branch = "residual"
            residual_weight += probability
            residual_psi = psi
            conversion = residual_conversion(remainder)
            conversions.append(conversion["probability"])
            converted_weight += probability * conversion["probability"]
            follow_up = beamsplitter_follow_up(remainder)["max_bell_fidelity"]
            follow_up_fidelity = max(follow_up_fidelity, follow_up)
        else:
            branch = "other"
            other_weight += probability
        outcomes.append(
            {
                "outcome": "-".join(map(str, counts)),
                "probability": probability,
                "branch": branch,
                "bell_state": label if branch == "bell" else "",
            }
        )

    conversion = converted_weight / residual_weight if residual_weight else 0.0
    bound = majorization_bound(residual_psi) if residual_psi is not None else 0.0
    success = bell_weight + converted_weight
    total = bell_weight + residual_weight + other_weight
    logging.info(
        f"Bleeding: Bell branch {bell_weight:.12f}, conversion {conversion:.12f}, "
        f"success {success:.12f}."
    )
    return {
        "bell_branch_probability": bell_weight,
        "residual_branch_probability": residual_weight,
        "other_branch_probability": other_weight,
        "conversion_probability": conversion,
        "conversion_spread": (max(conversions) - min(conversions)) if conversions else 0.0,
        "majorization_bound": bound,
        "beamsplitter_follow_up_fidelity": follow_up_fidelity,
        "success_probability": success,
        "outcomes": outcomes,
        "criteria": {
            "bell_branch_is_half": abs(bell_weight - 0.5) <= NORMALIZATION_TOL,
            "conversion_is_one_third": abs(conversion - 1.0 / 3.0) <= NORMALIZATION_TOL,
            "conversion_meets_majorization_bound": abs(conversion - bound) <= NORMALIZATION_TOL,
            "success_is_two_thirds": abs(success - 2.0 / 3.0) <= NORMALIZATION_TOL,
            "branches_sum_to_one": abs(total - 1.0) <= NORMALIZATION_TOL,
        },
    }


def sigma_bell_decomposition_check() -> Dict[str, object]:
    """Searches orderings of the pair partitions and sign assignments for
    the one under which (1/sqrt 6) sum_i (-1)^i |B_i>_AB |B_i>_CD equals
    the four-party symmetric state.

    Raises:
        DecompositionMismatch: If no convention reaches fidelity 1.
    """
    target = sigma_state(4, LOCAL_MODES)
    bell_states = dual_rail_bell_states()
    products = [tensor(bell.state, bell.state) for bell in bell_states]
    overlaps = [
        abs(inner_product(a.state, b.state))
        for i, a in enumerate(bell_states)
        for b in bell_states[i + 1:]
    ]

    best: Optional[Dict[str, object]] = None
    for order in permutations(range(len(PAIR_PARTITIONS))):
        for flips in product((False, True), repeat=len(PAIR_PARTITIONS)):
            sequence: List[int] = []
            for partition in order:
                minus, plus = 2 * partition, 2 * partition + 1
                sequence.extend((plus, minus) if flips[partition] else (minus, plus))
            candidate = products[sequence[0]].scaled(-1.0 / math.sqrt(6.0))
            for position, index in enumerate(sequence[1:], start=2):
                candidate = candidate + products[index].scaled((-1) ** position / math.sqrt(6.0))
            score = abs(inner_product(candidate, target)) ** 2 / candidate.norm_squared()
            if best is None or score > best["fidelity"]:
                best = {
                    "fidelity": score,
                    "order": [bell_states[i].label for i in sequence],
                }
    if best["fidelity"] < 1.0 - BELL_FIDELITY_TOL:
        raise DecompositionMismatch(
            f"Best convention reaches fidelity {best['fidelity']:.12f}."
        )
    return {
        "fidelity": best["fidelity"],
        "convention": best["order"],
        "term_norms": [product_state.norm() for product_state in products],
        "max_bell_overlap": max(overlaps),
        "criteria": {
            "fidelity_is_one": abs(best["fidelity"] - 1.0) <= BELL_FIDELITY_TOL,
            "terms_normalized": all(
                abs(product_state.norm() - 1.0) <= NORMALIZATION_TOL for product_state in products
            ),
            "bell_states_orthogonal": max(overlaps) <= NORMALIZATION_TOL,
        },
    }


class _SequentialTally:
    def __init__(self):
        self.aborted = 0.0
        self.bell_clean = 0.0
        self.residual_clean = 0.0
        self.bell_contaminated = 0.0
        self.residual_contaminated = 0.0

    def add_pair(
        self, register: PartyRegister, weight: float, collided: Optional[bool] = None
    ) -> None:
        """Books a branch that reached two single detections. Without a
        sampled collision flag the exact collision-free chance splits it."""
        if collided is None:
            clean = register.collision_free_probability()
        else:
            clean = 0.0 if collided else 1.0
        if bell_fidelity(register.pair_matrix())[0] >= 1.0 - BELL_FIDELITY_TOL:
            self.bell_clean += weight * clean
            self.bell_contaminated += weight * (1.0 - clean)
        else:
            self.residual_clean += weight * clean
            self.residual_contaminated += weight * (1.0 - clean)

    @property
    def contaminated(self) -> float:
        return self.aborted + self.bell_contaminated + self.residual_contaminated

    @property
    def clean(self) -> float:
        return self.bell_clean + self.residual_clean


def _check_sequential_size(num_parties: int) -> None:
    if num_parties < 8:
        raise InvalidConfiguration(f"Sequential bleeding needs K >= 8, got {num_parties}.")


def bleeding_sequential(num_parties: int, trials: int, seed: SeedLike = 0) -> Dict[str, object]:
    """Sampled sequential bleeding on four copies of |W_K>.

    Parties in order apply H x H and detect their four modes until two of
    them have each seen a single photon. A party seeing two or more
    photons first aborts the trial as collision-contaminated. After the
    second single detection the remaining two photons are classified
    exactly; whether they also sit at distinct parties is drawn from
    their exact collision probability.
    """
    _check_sequential_size(num_parties)
    if trials < 1:
        raise InvalidConfiguration(f"trials must be positive, got {trials}.")
    hh = hadamard_tensor_hadamard().matrix
    tally = _SequentialTally()
    for trial in range(trials):
        rng = make_generator(seed, trial)
        register = PartyRegister(num_parties, LOCAL_MODES)
        singles = 0
        aborted = False
        for party in range(num_parties):
            photons = sum(register.measure(party, hh, rng))
            if photons >= 2:
                aborted = True
                break
            singles += photons
            if singles == 2:
                break
        if aborted or singles < 2:
            tally.aborted += 1
            continue
        collided = rng.random() >= register.collision_free_probability()
        tally.add_pair(register, 1.0, collided)

    expected = collision_probability_formula(num_parties, LOCAL_MODES)
    contaminated = tally.contaminated / trials
    contamination_sigma = math.sqrt(expected * (1.0 - expected) / trials)
    clean_trials = int(round(tally.clean))
    bell_rate = tally.bell_clean / tally.clean if tally.clean else 0.0
    bell_sigma = math.sqrt(0.25 / clean_trials) if clean_trials else math.inf
    logging.info(
        f"Sequential bleeding K={num_parties}: Bell rate {bell_rate:.4f} over "
        f"{clean_trials} clean trials, contamination {contaminated:.4f}."
    )
    return {
        "K": num_parties,
        "trials": trials,
        "aborted_fraction": tally.aborted / trials,
        "contaminated_fraction": contaminated,
        "expected_contaminated_fraction": expected,
        "clean_trials": clean_trials,
        "bell_rate_clean": bell_rate,
        "bell_rate_contaminated": (
            tally.bell_contaminated / (tally.bell_contaminated + tally.residual_contaminated)
            if tally.bell_contaminated + tally.residual_contaminated
            else 0.0
        ),
        "criteria": {
            "bell_rate_within_5_sigma": abs(bell_rate - 0.5) <= 5.0 * bell_sigma,
            "contamination_within_5_sigma": abs(contaminated - expected)
            <= 5.0 * contamination_sigma,
        },
    }


def bleeding_sequential_exact(num_parties: int) -> Dict[str, object]:
    """Enumerates every branch of the sequential protocol exactly."""
    _check_sequential_size(num_parties)
    hh = hadamard_tensor_hadamard().matrix
    tally = _SequentialTally()

    def explore(register: PartyRegister, party: int, singles: int, weight: float) -> None:
        if singles == 2:
            tally.add_pair(register, weight)
            return
        if party == num_parties:
            tally.aborted += weight
            return
        tally.aborted += weight * float(np.sum(register.photon_count_distribution(party)[2:]))
        for outcome, probability in register.outcome_distribution(party, hh, max_photons=1).items():
            if probability < MIN_OUTCOME_PROBABILITY:
                continue
            photons = sum(outcome)
            child = register.copy()
            child.project(party, hh, outcome)
            explore(child, party + 1, singles + photons, weight * probability)

    explore(PartyRegister(num_parties, LOCAL_MODES), 0, 0, 1.0)
    expected = collision_probability_formula(num_parties, LOCAL_MODES)
    reached = tally.bell_clean + tally.residual_clean + tally.bell_contaminated + tally.residual_contaminated
    bell_given_pair = (tally.bell_clean + tally.bell_contaminated) / reached
    bell_given_clean = tally.bell_clean / tally.clean
    return {
        "K": num_parties,
        "aborted_probability": tally.aborted,
        "contaminated_probability": tally.contaminated,
        "expected_contaminated_probability": expected,
        "collision_free_probability": tally.clean,
        "bell_given_two_singles": bell_given_pair,
        "bell_given_collision_free": bell_given_clean,
        "bell_probability": tally.bell_clean,
        "criteria": {
            "contamination_matches_formula": abs(tally.contaminated - expected) <= NORMALIZATION_TOL,
            "bell_given_collision_free_is_half": abs(bell_given_clean - 0.5) <= NORMALIZATION_TOL,
            "total_is_one": abs(tally.contaminated + tally.clean - 1.0) <= NORMALIZATION_TOL,
        },
    }
