import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from PhotonicProtocols.constants import MIN_OUTCOME_PROBABILITY, NORMALIZATION_TOL
from PhotonicProtocols.models.exceptions import (
    DimensionMismatch,
    ImpossibleOutcome,
    InvalidConfiguration,
    InvalidModeSet,
    NotNormalized,
)
from PhotonicProtocols.models.fock_state import FockState, normalize
from PhotonicProtocols.models.random_streams import SeedLike, make_generator

Counts = Tuple[int, ...]


@dataclass(frozen=True, order=True)
class DetectionOutcome:
    """Photon counts recorded on a list of modes. Outcomes order
    lexicographically by their counts."""

    counts: Counts
    modes: Tuple[int, ...] = field(compare=False)

    def __post_init__(self):
        if len(self.counts) != len(self.modes):
            raise DimensionMismatch(
                f"{len(self.counts)} counts for {len(self.modes)} modes."
            )
        if any(count < 0 for count in self.counts):
            raise ValueError(f"Negative photon count in {self.counts}.")

    @property
    def mode_counts(self) -> Dict[int, int]:
        return dict(zip(self.modes, self.counts))

    @property
    def total(self) -> int:
        return sum(self.counts)

    def label(self) -> str:
        return "-".join(str(count) for count in self.counts)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities of photon-count patterns on a list of modes."""

    modes: Tuple[int, ...]
    probabilities: Mapping[Counts, float]

    def items(self) -> List[Tuple[Counts, float]]:
        return sorted(self.probabilities.items())

    def outcomes(self) -> List[DetectionOutcome]:
        return [DetectionOutcome(counts, self.modes) for counts, _ in self.items()]

    def probability(self, counts: Sequence[int]) -> float:
        return self.probabilities.get(tuple(counts), 0.0)

    def total(self) -> float:
        return math.fsum(self.probabilities.values())

    def total_variation(self, other: "OutcomeDistribution") -> float:
        keys = set(self.probabilities) | set(other.probabilities)
        return 0.5 * math.fsum(
            abs(self.probability(key) - other.probability(key)) for key in keys
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "outcome": ["-".join(map(str, counts)) for counts, _ in self.items()],
                "probability": [p for _, p in self.items()],
            }
        )


class Collapsed(NamedTuple):
    state: FockState
    mode_map: Dict[int, int]
    probability: float


def _checked_modes(state: FockState, modes: Sequence[int]) -> Tuple[int, ...]:
    modes = tuple(int(mode) for mode in modes)
    if len(set(modes)) != len(modes):
        raise InvalidModeSet(f"Repeated modes in {list(modes)}.")
    if any(mode < 0 or mode >= state.num_modes for mode in modes):
        raise InvalidModeSet(
            f"Modes {list(modes)} outside a {state.num_modes}-mode state."
        )
    return modes


def remaining_mode_map(num_modes: int, measured: Sequence[int]) -> Dict[int, int]:
    """Maps every unmeasured mode to its dense index after collapse."""
    measured = set(measured)
    kept = [mode for mode in range(num_modes) if mode not in measured]
    return {old: new for new, old in enumerate(kept)}


class ModeTracker:
    """Follows original mode labels through successive collapses, which
    re-index the surviving modes densely."""

    def __init__(self, num_modes: int):
        self.current = {mode: mode for mode in range(num_modes)}
        self.num_modes = num_modes

    def locate(self, modes: Sequence[int]) -> List[int]:
        missing = [mode for mode in modes if mode not in self.current]
        if missing:
            raise InvalidConfiguration(f"Modes {missing} were already detected.")
        return [self.current[mode] for mode in modes]

    def after_detection(self, measured: Sequence[int]) -> "ModeTracker":
        mode_map = remaining_mode_map(self.num_modes, measured)
        tracker = ModeTracker(0)
        tracker.current = {
            mode: mode_map[index]
            for mode, index in self.current.items()
            if index in mode_map
        }
        tracker.num_modes = len(mode_map)
        return tracker


def detection_distribution(state: FockState, modes: Sequence[int]) -> OutcomeDistribution:
    """Marginal photon-count distribution over the listed modes.

    Args:
        state (FockState): A normalized state.
        modes (Sequence[int]): Distinct modes to detect.

    Returns:
        OutcomeDistribution: Probabilities keyed by counts on modes.

    Raises:
        NotNormalized: If the state norm differs from 1.
        InvalidModeSet: If modes repeat or fall outside the state.
    """
    modes = _checked_modes(state, modes)
    if not state.is_normalized():
        raise NotNormalized(f"State norm^2 is {state.norm_squared():.12f}.")
    weights: Dict[Counts, List[float]] = defaultdict(list)
    for occ, amp in state:
        weights[tuple(occ[mode] for mode in modes)].append(abs(amp) ** 2)
    return OutcomeDistribution(
        modes, {counts: math.fsum(values) for counts, values in weights.items()}
    )


def collapse(
    state: FockState,
    modes: Sequence[int],
    outcome: Union[DetectionOutcome, Sequence[int]],
) -> Collapsed:
    """Projects the measured modes onto an outcome and removes them.

    Args:
        state (FockState): The pre-measurement state.
        modes (Sequence[int]): Measured modes.
        outcome (Union[DetectionOutcome, Sequence[int]]): Observed counts.

    Returns:
        Collapsed: The renormalized state on the remaining modes, the
            old-to-new mode map and the outcome probability.

    Raises:
        ImpossibleOutcome: If the outcome probability is below 1e-12.
    """
    modes = _checked_modes(state, modes)
    counts = tuple(outcome.counts if isinstance(outcome, DetectionOutcome) else outcome)
    if len(counts) != len(modes):
        raise DimensionMismatch(f"{len(counts)} counts for {len(modes)} modes.")

    mode_map = remaining_mode_map(state.num_modes, modes)
    kept = sorted(mode_map, key=mode_map.get)
    projected: Dict[Tuple[int, ...], complex] = {}
    for occ, amp in state:
        if all(occ[mode] == count for mode, count in zip(modes, counts)):
            projected[tuple(occ[mode] for mode in kept)] = amp
    remainder = FockState._trusted(projected, len(kept))
    probability = remainder.norm_squared() / state.norm_squared()
    if probability < MIN_OUTCOME_PROBABILITY:
        raise ImpossibleOutcome(
            f"Outcome {counts} on {list(modes)} has probability {probability:.3e}."
        )
    return Collapsed(normalize(remainder), mode_map, probability)


def sample_from(distribution: OutcomeDistribution, rng: np.random.Generator) -> DetectionOutcome:
    """Inverse-CDF draw over lexicographically ordered outcomes."""
    items = distribution.items()
    cumulative = np.cumsum([p for _, p in items])
    index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return DetectionOutcome(items[min(index, len(items) - 1)][0], distribution.modes)


def sample_detection(
    state: FockState, modes: Sequence[int], rng_seed: SeedLike
) -> Tuple[DetectionOutcome, FockState]:
    """Draws a detection outcome from the exact distribution and returns
    it together with the collapsed state.

    Args:
        state (FockState): A normalized state.
        modes (Sequence[int]): Modes to detect.
        rng_seed (SeedLike): Seed or generator.

    Returns:
        Tuple[DetectionOutcome, FockState]: The outcome and the state of
            the remaining modes, re-indexed densely.
    """
    distribution = detection_distribution(state, modes)
    if abs(distribution.total() - 1.0) > NORMALIZATION_TOL:
        logging.warning(f"Outcome distribution sums to {distribution.total()}.")
    outcome = sample_from(distribution, make_generator(rng_seed))
    return outcome, collapse(state, modes, outcome).state
