import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np
from scipy.stats import unitary_group

from PhotonicProtocols.constants import (
    FAUX_CHECK_MAX_MODES,
    FAUX_CHECK_MAX_PHOTONS,
    MIN_OUTCOME_PROBABILITY,
    NORMALIZATION_TOL,
)
from PhotonicProtocols.models.exceptions import (
    InvalidConfiguration,
    InvalidDimension,
    TooLarge,
)
from PhotonicProtocols.models.fock_state import FockState, make_basis_state
from PhotonicProtocols.models.linear_optics import Interferometer, apply, embed
from PhotonicProtocols.models.measurement import (
    DetectionOutcome,
    collapse,
    detection_distribution,
    ModeTracker,
    sample_detection,
)
from PhotonicProtocols.models.random_streams import SeedLike, make_generator
from PhotonicProtocols.models.resource_states import PartyLayout, sigma_state

Counts = Tuple[int, ...]
TranscriptKey = Tuple[Tuple[int, int, Counts], ...]


@dataclass(frozen=True)
class ProtocolStep:
    """One action every party performs: an interferometer on some of its
    local modes, then photodetection of detect_modes (also local).

    adaptivity_rule maps a serialized transcript prefix
    (Transcript.prefix_key) to the step a party runs instead.
    """

    interferometer: Interferometer
    detect_modes: Tuple[int, ...] = ()
    adaptivity_rule: Mapping[str, "ProtocolStep"] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "detect_modes", tuple(int(m) for m in self.detect_modes))
        if len(set(self.detect_modes)) != len(self.detect_modes):
            raise InvalidConfiguration(f"Repeated detect modes {list(self.detect_modes)}.")

    def resolve(self, prefix: str) -> "ProtocolStep":
        return self.adaptivity_rule.get(prefix, self)


@dataclass(frozen=True)
class TranscriptEvent:
    party: int
    step: int
    interferometer: str
    outcome: DetectionOutcome

    def to_record(self) -> dict:
        return {
            "party": self.party,
            "step": self.step,
            "interferometer": self.interferometer,
            "modes": list(self.outcome.modes),
            "counts": list(self.outcome.counts),
        }


@dataclass
class Transcript:
    """Classical messages in broadcast order."""

    events: List[TranscriptEvent] = field(default_factory=list)

    def record(self, event: TranscriptEvent) -> None:
        self.events.append(event)

    def prefix_key(self) -> str:
        return ";".join(
            f"{event.party}:{event.step}:{event.outcome.label()}" for event in self.events
        )

    def key(self) -> TranscriptKey:
        return tuple((e.party, e.step, e.outcome.counts) for e in self.events)

    def detected_photons(self) -> int:
        return sum(event.outcome.total for event in self.events)

    def clicks(self) -> List[TranscriptEvent]:
        return [event for event in self.events if event.outcome.total > 0]

    def to_records(self) -> List[dict]:
        return [event.to_record() for event in self.events]


def _global_modes(layout: PartyLayout, party: int, local: Sequence[int]) -> List[int]:
    modes = layout.modes_of(party)
    if any(index < 0 or index >= len(modes) for index in local):
        raise InvalidConfiguration(
            f"Local modes {list(local)} outside party {party}'s {len(modes)} modes."
        )
    return [modes[index] for index in local]


def faux_execute(
    resource: FockState,
    layout: PartyLayout,
    schedule: Sequence[ProtocolStep],
    seed: SeedLike = 0,
) -> Transcript:
    """Runs a schedule on a distributed resource state.

    For every step, parties act in index order: each applies the step's
    interferometer to its local modes and detects its detect modes, and
    the outcome is broadcast before the next party acts.

    Args:
        resource (FockState): Normalized state over the layout's modes.
        layout (PartyLayout): Party ownership of the modes.
        schedule (Sequence[ProtocolStep]): Steps shared by all parties.
        seed (SeedLike): Seed or generator.

    Returns:
        Transcript: Every detection event in order.

    Raises:
        InvalidConfiguration: If the layout does not match the state or a
            step references a missing local mode.
    """
    layout.validate(resource)
    rng = make_generator(seed)
    state = resource
    tracker = ModeTracker(resource.num_modes)
    transcript = Transcript()
    for step_index, step in enumerate(schedule):
        for party in range(layout.num_parties):
            active = step.resolve(transcript.prefix_key())
            intf = active.interferometer
            targets = _global_modes(layout, party, intf.target_modes)
            state = apply(state, intf.relabelled(tracker.locate(targets)))
            detected = _global_modes(layout, party, active.detect_modes)
            positions = tracker.locate(detected)
            outcome, state = sample_detection(state, positions, rng)
            tracker = tracker.after_detection(positions)
            transcript.record(
                TranscriptEvent(
                    party,
                    step_index,
                    intf.name,
                    DetectionOutcome(outcome.counts, active.detect_modes),
                )
            )
    logging.debug(f"Faux run finished with {len(transcript.events)} events.")
    return transcript


def transcript_distribution(
    resource: FockState,
    layout: PartyLayout,
    schedule: Sequence[ProtocolStep],
) -> Dict[TranscriptKey, float]:
    """Exact distribution of the transcripts faux_execute can produce,
    obtained by branching on every detection instead of sampling."""
    layout.validate(resource)
    branches = [(1.0, resource, ModeTracker(resource.num_modes), Transcript())]
    for step_index, step in enumerate(schedule):
        for party in range(layout.num_parties):
            expanded = []
            for weight, state, tracker, transcript in branches:
                active = step.resolve(transcript.prefix_key())
                intf = active.interferometer
                targets = _global_modes(layout, party, intf.target_modes)
                state = apply(state, intf.relabelled(tracker.locate(targets)))
                positions = tracker.locate(_global_modes(layout, party, active.detect_modes))
                for counts, probability in detection_distribution(state, positions).items():
                    if probability < MIN_OUTCOME_PROBABILITY:
                        continue
                    collapsed = collapse(state, positions, counts)
                    child = Transcript(list(transcript.events))
                    child.record(
                        TranscriptEvent(
                            party,
                            step_index,
                            intf.name,
                            DetectionOutcome(counts, active.detect_modes),
                        )
                    )
                    expanded.append(
                        (
                            weight * probability,
                            collapsed.state,
                            tracker.after_detection(positions),
                            child,
                        )
                    )
            branches = expanded
    distribution: Dict[TranscriptKey, float] = defaultdict(float)
    for weight, _, _, transcript in branches:
        distribution[transcript.key()] += weight
    return dict(distribution)


@dataclass(frozen=True)
class FauxStage:
    """A unitary on some faux modes, then detection of some faux modes.
    Mode labels refer to the original M modes and vanish once detected."""

    matrix: np.ndarray
    target_modes: Tuple[int, ...]
    detect_modes: Tuple[int, ...] = ()


StageLike = Union[FauxStage, Tuple[np.ndarray, Sequence[int]]]


def _normalized_stages(stages: Sequence[StageLike], modes: int) -> List[FauxStage]:
    """Accepts FauxStage objects or (unitary, detect) pairs whose unitary
    acts on every live mode in increasing order."""
    live = list(range(modes))
    normalized = []
    for stage in stages:
        if not isinstance(stage, FauxStage):
            matrix, detect = stage
            stage = FauxStage(np.asarray(matrix, dtype=complex), tuple(live), tuple(detect))
        if len(stage.target_modes) != np.asarray(stage.matrix).shape[0]:
            raise InvalidDimension(
                f"{len(stage.target_modes)} targets for a {np.asarray(stage.matrix).shape} matrix."
            )
        unknown = [m for m in (*stage.target_modes, *stage.detect_modes) if m not in live]
        if unknown:
            raise InvalidConfiguration(f"Faux modes {unknown} are not live.")
        live = [m for m in live if m not in stage.detect_modes]
        normalized.append(stage)
    return normalized


def _direct_distribution(photons: int, modes: int, stages: List[FauxStage]) -> Dict[Tuple[Counts, ...], float]:
    """Second-quantized run on |1...1 0...0> over the M faux modes."""
    start = make_basis_state([1] * photons + [0] * (modes - photons))
    branches = [(1.0, start, ModeTracker(modes), ())]
    for stage in stages:
        expanded = []
        for weight, state, tracker, record in branches:
            state = apply(state, embed(stage.matrix, tracker.locate(stage.target_modes)))
            positions = tracker.locate(stage.detect_modes)
            for counts, probability in detection_distribution(state, positions).items():
                if probability < MIN_OUTCOME_PROBABILITY:
                    continue
                expanded.append(
                    (
                        weight * probability,
                        collapse(state, positions, counts).state,
                        tracker.after_detection(positions),
                        record + (counts,),
                    )
                )
        branches = expanded
    distribution: Dict[Tuple[Counts, ...], float] = defaultdict(float)
    for weight, _, _, record in branches:
        distribution[record] += weight
    return dict(distribution)


def _faux_schedule(stages: List[FauxStage]) -> List[ProtocolStep]:
    return [
        ProtocolStep(
            Interferometer(stage.matrix, stage.target_modes, f"stage{index}"),
            stage.detect_modes,
        )
        for index, stage in enumerate(stages)
    ]


def _aggregate(key: TranscriptKey, stages: List[FauxStage]) -> Tuple[Counts, ...]:
    """Sums party detections per faux mode, stage by stage."""
    totals = [[0] * len(stage.detect_modes) for stage in stages]
    for _, step, counts in key:
        for position, count in enumerate(counts):
            totals[step][position] += count
    return tuple(tuple(row) for row in totals)


def _third_quantized_distribution(
    photons: int, modes: int, stages: List[FauxStage]
) -> Dict[Tuple[Counts, ...], float]:
    """The same protocol run by N parties on the symmetric state, each
    party applying the stage unitary to its own copy of the faux modes."""
    resource = sigma_state(photons, modes)
    layout = PartyLayout.blocked(photons, modes)
    distribution: Dict[Tuple[Counts, ...], float] = defaultdict(float)
    for key, probability in transcript_distribution(resource, layout, _faux_schedule(stages)).items():
        distribution[_aggregate(key, stages)] += probability
    return dict(distribution)


def total_variation(p: Mapping, q: Mapping) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(key, 0.0) - q.get(key, 0.0)) for key in keys)


def random_faux_protocol(
    photons: int, modes: int, seed: SeedLike, stages: int = 2
) -> List[FauxStage]:
    """Haar-random unitaries on random live-mode subsets, each followed by
    detection of a random (possibly empty) subset of the targets."""
    rng = make_generator(seed)
    live = list(range(modes))
    protocol = []
    for _ in range(stages):
        if not live:
            break
        size = int(rng.integers(1, len(live) + 1))
        targets = tuple(sorted(int(m) for m in rng.choice(live, size=size, replace=False)))
        if size == 1:
            matrix = np.array([[np.exp(1j * rng.uniform(0, 2 * np.pi))]])
        else:
            matrix = unitary_group.rvs(size, random_state=rng)
        detect_count = int(rng.integers(0, min(2, size) + 1))
        detect = tuple(sorted(int(m) for m in rng.choice(targets, size=detect_count, replace=False)))
        protocol.append(FauxStage(matrix, targets, detect))
        live = [m for m in live if m not in detect]
    return protocol


def faux_equivalence_check(
    photons: int,
    modes: int,
    protocol: Sequence[StageLike],
    trials: int = 0,
    seed: SeedLike = 0,
) -> Dict[str, object]:
    """Compares a linear-optics protocol on N photons in M modes with its
    third-quantized execution by N parties holding the symmetric state.

    Both distributions are enumerated exactly. With trials > 0 the
    third-quantized side is also sampled through faux_execute and the
    empirical distance reported.

    Raises:
        TooLarge: If N > 3 or M > 4.
        InvalidConfiguration: If N > M or N < 1.
    """
    if photons > FAUX_CHECK_MAX_PHOTONS or modes > FAUX_CHECK_MAX_MODES:
        raise TooLarge(
            f"Faux check is exact only up to N={FAUX_CHECK_MAX_PHOTONS}, "
            f"M={FAUX_CHECK_MAX_MODES}; got N={photons}, M={modes}."
        )
    if photons < 1 or modes < photons:
        raise InvalidConfiguration(f"Need M >= N >= 1, got N={photons}, M={modes}.")
    stages = _normalized_stages(protocol, modes)
    direct = _direct_distribution(photons, modes, stages)
    faux = _third_quantized_distribution(photons, modes, stages)
    distance = total_variation(direct, faux)

    report: Dict[str, object] = {
        "N": photons,
        "M": modes,
        "stages": len(stages),
        "total_variation": distance,
        "direct_total": math.fsum(direct.values()),
        "faux_total": math.fsum(faux.values()),
        "outcomes": [
            {
                "outcome": "|".join("-".join(map(str, counts)) for counts in key),
                "probability_direct": direct.get(key, 0.0),
                "probability_faux": faux.get(key, 0.0),
            }
            for key in sorted(set(direct) | set(faux))
        ],
        "criteria": {"exact_total_variation": distance <= NORMALIZATION_TOL},
    }
    if trials > 0:
        resource = sigma_state(photons, modes)
        layout = PartyLayout.blocked(photons, modes)
        schedule = _faux_schedule(stages)
        empirical: Dict[Tuple[Counts, ...], float] = defaultdict(float)
        for trial in range(trials):
            transcript = faux_execute(resource, layout, schedule, make_generator(seed, trial))
            empirical[_aggregate(transcript.key(), stages)] += 1.0 / trials
        report["sampled_trials"] = trials
        report["sampled_total_variation"] = total_variation(direct, empirical)
    logging.info(f"Faux check N={photons}, M={modes}: TV {distance:.3e}.")
    return report
