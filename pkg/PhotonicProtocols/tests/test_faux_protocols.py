# pytest -s -v PhotonicProtocols/tests/test_faux_protocols.py
import math

import numpy as np
import pytest

from PhotonicProtocols.models.exceptions import (
    InvalidConfiguration,
    InvalidDimension,
    TooLarge,
)
from PhotonicProtocols.models.fock_state import FockState
from PhotonicProtocols.models.linear_optics import Interferometer, beamsplitter, identity
from PhotonicProtocols.models.faux_protocols import (
    FauxStage,
    ProtocolStep,
    faux_equivalence_check,
    faux_execute,
    random_faux_protocol,
    total_variation,
    transcript_distribution,
)
from PhotonicProtocols.models.resource_states import (
    PartyLayout,
    dephase,
    sigma_state,
    w_copies,
)

DETECT_BOTH = [ProtocolStep(identity([0, 1]), (0, 1))]


def test_symmetric_state_gives_one_photon_per_party(psi_plus: FockState) -> None:
    """Testing if each party of the two-party symmetric state sees one
    photon, in opposite local modes.

    Args:
        psi_plus (FockState): sigma_state(2, 2).
    """
    layout = PartyLayout.blocked(2, 2)
    for seed in range(10):
        transcript = faux_execute(psi_plus, layout, DETECT_BOTH, seed)
        first, second = transcript.events
        assert first.outcome.total == second.outcome.total == 1
        assert first.outcome.counts != second.outcome.counts
        assert transcript.detected_photons() == 2


def test_w_copies_report_two_photons() -> None:
    """Testing if two W_12 copies always yield two detected photons, as
    two single clicks whenever no party holds both."""
    state, layout = w_copies(12, 2)
    schedule = [ProtocolStep(beamsplitter(), (0, 1))]
    for seed in range(10):
        transcript = faux_execute(state, layout, schedule, seed)
        assert transcript.detected_photons() == 2
        assert len(transcript.events) == 12
        clicks = transcript.clicks()
        if all(event.outcome.total < 2 for event in clicks):
            assert len(clicks) == 2


def test_faux_execute_is_deterministic(psi_plus: FockState) -> None:
    """Testing if equal seeds give equal transcripts.

    Args:
        psi_plus (FockState): sigma_state(2, 2).
    """
    layout = PartyLayout.blocked(2, 2)
    first = faux_execute(psi_plus, layout, DETECT_BOTH, 42)
    second = faux_execute(psi_plus, layout, DETECT_BOTH, 42)
    assert first.to_records() == second.to_records()
    assert first.to_records()[0]["interferometer"] == "I"


def test_adaptivity_rule_changes_later_parties(psi_plus: FockState) -> None:
    """Testing if a party runs the override step keyed by the transcript
    prefix it has seen.

    Args:
        psi_plus (FockState): sigma_state(2, 2).
    """
    swap = ProtocolStep(Interferometer(np.array([[0, 1], [1, 0]]), (0, 1), "swap"), (0, 1))
    schedule = [ProtocolStep(identity([0, 1]), (0, 1), {"0:0:1-0": swap})]
    distribution = transcript_distribution(psi_plus, PartyLayout.blocked(2, 2), schedule)
    assert distribution == pytest.approx(
        {
            ((0, 0, (0, 1)), (1, 0, (1, 0))): 0.5,
            ((0, 0, (1, 0)), (1, 0, (1, 0))): 0.5,
        }
    )


def test_layout_must_match_resource(psi_plus: FockState) -> None:
    """Testing if a layout not covering the state is refused.

    Args:
        psi_plus (FockState): sigma_state(2, 2).
    """
    with pytest.raises(InvalidConfiguration):
        faux_execute(psi_plus, PartyLayout.blocked(3, 2), DETECT_BOTH)
    with pytest.raises(InvalidConfiguration):
        faux_execute(psi_plus, PartyLayout.blocked(2, 2), [ProtocolStep(identity([0, 1]), (0, 2))])


def test_dephasing_leaves_transcripts_unchanged() -> None:
    """Testing if rotating whole labs does not change transcript odds."""
    resource = sigma_state(3, 3)
    layout = PartyLayout.blocked(3, 3)
    schedule = [
        ProtocolStep(beamsplitter(), (0,)),
        ProtocolStep(beamsplitter((1, 2)), (1, 2)),
    ]
    plain = transcript_distribution(resource, layout, schedule)
    rotated = transcript_distribution(dephase(resource, layout, [0.4, 2.0, 5.1]), layout, schedule)
    assert total_variation(plain, rotated) <= 1e-9
    assert math.fsum(plain.values()) == pytest.approx(1.0)


def test_hong_ou_mandel_equivalence() -> None:
    """Testing if two photons on a beamsplitter bunch in both pictures."""
    report = faux_equivalence_check(2, 2, [(beamsplitter().matrix, (0,))])
    assert report["total_variation"] <= 1e-9
    assert report["criteria"]["exact_total_variation"]
    probabilities = {row["outcome"]: row["probability_direct"] for row in report["outcomes"]}
    assert probabilities["0"] == pytest.approx(0.5)
    assert probabilities["2"] == pytest.approx(0.5)
    assert probabilities.get("1", 0.0) == pytest.approx(0.0, abs=1e-12)


def test_single_mode_marginal_equivalence(random_unitary_3: np.ndarray) -> None:
    """Testing if photon counts in one mode after a 3-mode unitary agree.

    Args:
        random_unitary_3 (np.ndarray): A fixed Haar unitary.
    """
    report = faux_equivalence_check(3, 3, [(random_unitary_3, (0,))])
    assert report["total_variation"] <= 1e-9
    assert report["direct_total"] == pytest.approx(1.0)
    assert report["faux_total"] == pytest.approx(1.0)
    for row in report["outcomes"]:
        assert abs(row["probability_direct"] - row["probability_faux"]) <= 1e-9


def test_detecting_nothing_is_trivial() -> None:
    """Testing if a protocol with no detections has distance zero."""
    report = faux_equivalence_check(2, 3, [(np.eye(3), ())])
    assert report["total_variation"] == pytest.approx(0.0, abs=1e-12)


def test_random_protocols_agree() -> None:
    """Testing if twenty random adaptive-free protocols agree exactly."""
    for seed in range(20):
        photons = 2 + seed % 2
        modes = photons + seed % (5 - photons)
        protocol = random_faux_protocol(photons, modes, seed)
        report = faux_equivalence_check(photons, modes, protocol)
        assert report["total_variation"] <= 1e-9, f"seed {seed}"


def test_sampled_faux_runs() -> None:
    """Testing if sampled third-quantized runs approach the exact answer."""
    report = faux_equivalence_check(
        2, 2, [(beamsplitter().matrix, (0,))], trials=2000, seed=1
    )
    assert report["sampled_trials"] == 2000
    assert report["sampled_total_variation"] <= 0.05


def test_equivalence_limits() -> None:
    """Testing if sizes beyond the exact limits are refused."""
    with pytest.raises(TooLarge):
        faux_equivalence_check(4, 4, [])
    with pytest.raises(InvalidConfiguration):
        faux_equivalence_check(3, 2, [])
    with pytest.raises(InvalidConfiguration):
        faux_equivalence_check(2, 2, [(np.eye(2), (0,)), (np.eye(1), (0,))])
    with pytest.raises(InvalidDimension):
        faux_equivalence_check(2, 3, [FauxStage(np.eye(2), (0, 1, 2))])


def test_total_variation() -> None:
    """Testing if total variation halves the L1 distance over all keys."""
    assert total_variation({"a": 1.0}, {"b": 1.0}) == 1.0
    assert total_variation({"a": 0.5, "b": 0.5}, {"a": 0.25, "b": 0.75}) == pytest.approx(0.25)
    assert math.isclose(total_variation({}, {}), 0.0)
