# pytest -s -v PhotonicProtocols/tests/test_measurement.py
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from PhotonicProtocols.models.exceptions import (
    DimensionMismatch,
    ImpossibleOutcome,
    InvalidConfiguration,
    InvalidModeSet,
    NotNormalized,
)
from PhotonicProtocols.models.fock_state import FockState, total_photon_number, vacuum
from PhotonicProtocols.models.measurement import (
    DetectionOutcome,
    ModeTracker,
    collapse,
    detection_distribution,
    remaining_mode_map,
    sample_detection,
)
from PhotonicProtocols.models.random_streams import make_generator
from PhotonicProtocols.tests.strategies import sector_states


def test_w2_distribution(w2: FockState) -> None:
    """Testing if W_2 gives each single-photon pattern half the time.

    Args:
        w2 (FockState): The two-mode W state.
    """
    distribution = detection_distribution(w2, [0, 1])
    assert distribution.probability((1, 0)) == pytest.approx(0.5)
    assert distribution.probability((0, 1)) == pytest.approx(0.5)
    assert distribution.probability((1, 1)) == 0.0
    assert [outcome.label() for outcome in distribution.outcomes()] == ["0-1", "1-0"]


def test_psi_plus_distribution(psi_plus: FockState) -> None:
    """Testing if the two-party symmetric state has two equal outcomes.

    Args:
        psi_plus (FockState): (|1001) + |0110)) / sqrt 2.
    """
    distribution = detection_distribution(psi_plus, range(4))
    assert dict(distribution.items()) == pytest.approx({(0, 1, 1, 0): 0.5, (1, 0, 0, 1): 0.5})


def test_vacuum_distribution() -> None:
    """Testing if the vacuum always gives zero counts."""
    distribution = detection_distribution(vacuum(3), [0, 2])
    assert distribution.items() == [((0, 0), 1.0)]


def test_distribution_input_checks(w2: FockState) -> None:
    """Testing if bad states and mode lists are rejected.

    Args:
        w2 (FockState): The two-mode W state.
    """
    with pytest.raises(NotNormalized):
        detection_distribution(w2.scaled(2.0), [0])
    with pytest.raises(InvalidModeSet):
        detection_distribution(w2, [0, 0])
    with pytest.raises(InvalidModeSet):
        detection_distribution(w2, [2])


def test_collapse_w2(w2: FockState) -> None:
    """Testing if seeing no photon in mode 0 leaves the photon in mode 1.

    Args:
        w2 (FockState): The two-mode W state.
    """
    collapsed = collapse(w2, [0], (0,))
    assert collapsed.state.isclose(FockState({(1,): 1.0}, 1))
    assert collapsed.mode_map == {1: 0}
    assert collapsed.probability == pytest.approx(0.5)


def test_collapse_impossible_outcome(w2: FockState) -> None:
    """Testing if a zero-probability outcome cannot be collapsed onto.

    Args:
        w2 (FockState): The two-mode W state.
    """
    with pytest.raises(ImpossibleOutcome):
        collapse(w2, [0, 1], (1, 1))
    with pytest.raises(DimensionMismatch):
        collapse(w2, [0, 1], (1,))


def test_collapse_accepts_detection_outcome(psi_plus: FockState) -> None:
    """Testing if collapse takes a DetectionOutcome as well as counts.

    Args:
        psi_plus (FockState): (|1001) + |0110)) / sqrt 2.
    """
    outcome = DetectionOutcome((1, 0), (0, 1))
    collapsed = collapse(psi_plus, outcome.modes, outcome)
    assert collapsed.state.isclose(FockState({(0, 1): 1.0}, 2))
    assert outcome.mode_counts == {0: 1, 1: 0}


def test_remaining_mode_map() -> None:
    """Testing if unmeasured modes are re-indexed densely in order."""
    assert remaining_mode_map(5, [1, 3]) == {0: 0, 2: 1, 4: 2}


def test_mode_tracker() -> None:
    """Testing if original labels survive two rounds of collapse."""
    tracker = ModeTracker(5).after_detection([1])
    assert tracker.locate([0, 2, 4]) == [0, 1, 3]
    tracker = tracker.after_detection(tracker.locate([3]))
    assert tracker.locate([4]) == [2]
    with pytest.raises(InvalidConfiguration):
        tracker.locate([1])


def test_sample_vacuum() -> None:
    """Testing if sampling the vacuum returns zero counts and the rest."""
    outcome, state = sample_detection(vacuum(3), [1], 0)
    assert outcome.counts == (0,)
    assert state.isclose(vacuum(2))


def test_sampling_is_deterministic(w2: FockState) -> None:
    """Testing if equal seeds give equal outcomes.

    Args:
        w2 (FockState): The two-mode W state.
    """
    for seed in range(20):
        first, _ = sample_detection(w2, [0], seed)
        second, _ = sample_detection(w2, [0], seed)
        assert first == second


def test_sampling_frequencies(w2: FockState) -> None:
    """Testing if W_2 sampled on mode 0 finds the photon half the time.

    Args:
        w2 (FockState): The two-mode W state.
    """
    trials = 100_000
    hits = sum(sample_detection(w2, [0], make_generator(3, t))[0].total for t in range(trials))
    assert abs(hits / trials - 0.5) <= 0.01


@settings(max_examples=100, deadline=None)
@given(sector_states(), st.data())
def test_born_rule_totals_one(state: FockState, data: st.DataObject) -> None:
    """Testing if the outcome probabilities over any mode set sum to one.

    Args:
        state (FockState): A normalized single-sector state.
        data (st.DataObject): Source of the mode subset.
    """
    modes = data.draw(
        st.lists(st.integers(0, state.num_modes - 1), min_size=1, unique=True)
    )
    assert abs(detection_distribution(state, modes).total() - 1.0) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(sector_states())
def test_full_detection_counts_every_photon(state: FockState) -> None:
    """Testing if detecting all modes always finds all photons.

    Args:
        state (FockState): A normalized single-sector state.
    """
    photons = total_photon_number(state)
    distribution = detection_distribution(state, range(state.num_modes))
    assert all(sum(counts) == photons for counts, _ in distribution.items())


@settings(max_examples=100, deadline=None)
@given(sector_states(max_modes=4, max_photons=2), st.data())
def test_sequential_detection_matches_joint(state: FockState, data: st.DataObject) -> None:
    """Testing if detecting mode a then mode b on the collapsed state
    gives the joint distribution of detecting both at once.

    Args:
        state (FockState): A normalized single-sector state.
        data (st.DataObject): Source of the two modes.
    """
    first, second = data.draw(
        st.lists(st.integers(0, state.num_modes - 1), min_size=2, max_size=2, unique=True)
    )
    joint = detection_distribution(state, [first, second])
    chained = {}
    for (count_a,), p_a in detection_distribution(state, [first]).items():
        if p_a < 1e-12:
            continue
        collapsed = collapse(state, [first], (count_a,))
        position = collapsed.mode_map[second]
        for (count_b,), p_b in detection_distribution(collapsed.state, [position]).items():
            chained[(count_a, count_b)] = p_a * p_b
    keys = set(chained) | set(joint.probabilities)
    assert max(abs(chained.get(k, 0.0) - joint.probability(k)) for k in keys) <= 1e-9
    assert math.isclose(sum(chained.values()), 1.0, abs_tol=1e-9)
