# pytest -s -v PhotonicProtocols/tests/test_adaptive_sampling.py
import math

import numpy as np
import pytest

from PhotonicProtocols.models.adaptive_sampling import (
    AdaptivePlan,
    collision_free_weight,
    distribution_crosscheck,
    norm_exceedance_demo,
    outcome_probability,
    run_adaptive,
    sample_frequencies,
    stacked_matrix,
)
from PhotonicProtocols.models.exceptions import (
    DimensionMismatch,
    InvalidConfiguration,
    InvalidModeSet,
    NotUnitary,
    TooLarge,
)


def test_plan_validation() -> None:
    """Testing if malformed plans are refused."""
    hadamard = np.array([[1, 1], [1, -1]]) / np.sqrt(2.0)
    with pytest.raises(InvalidConfiguration):
        AdaptivePlan(1, (hadamard, hadamard))
    with pytest.raises(DimensionMismatch):
        AdaptivePlan(4, (hadamard, np.eye(3)))
    with pytest.raises(NotUnitary):
        AdaptivePlan(4, (hadamard, np.ones((2, 2))))


def test_plan_is_frozen(hadamard_pair_plan: AdaptivePlan) -> None:
    """Testing if a plan's unitaries cannot be edited.

    Args:
        hadamard_pair_plan (AdaptivePlan): Hadamard for both photons.
    """
    with pytest.raises(ValueError):
        hadamard_pair_plan.unitaries[0][0, 0] = 1.0
    assert hadamard_pair_plan.photons == 2


def test_single_photon_probability() -> None:
    """Testing if one photon gives |U_k0|^2."""
    plan = AdaptivePlan(3, (np.array([[1j]]),))
    assert outcome_probability(plan, [0]) == pytest.approx(1.0)
    assert stacked_matrix(plan, [0])[0, 0] == pytest.approx(1j)


def test_hadamard_pair_probabilities(hadamard_pair_plan: AdaptivePlan) -> None:
    """Testing if two Hadamard detections give 1/2 on equal modes and 0
    on different ones.

    Args:
        hadamard_pair_plan (AdaptivePlan): Hadamard for both photons.
    """
    probabilities = {
        k: outcome_probability(hadamard_pair_plan, k) for k in [(0, 0), (0, 1), (1, 0), (1, 1)]
    }
    assert probabilities == pytest.approx({(0, 0): 0.5, (0, 1): 0.0, (1, 0): 0.0, (1, 1): 0.5})


def test_stacked_matrix(hadamard_pair_plan: AdaptivePlan) -> None:
    """Testing if rows are scaled by (N!)^(-1/2N) and outcomes checked.

    Args:
        hadamard_pair_plan (AdaptivePlan): Hadamard for both photons.
    """
    matrix = stacked_matrix(hadamard_pair_plan, [1, 0])
    scale = 2 ** (-0.25)
    assert np.allclose(matrix, scale * np.array([[1, -1], [1, 1]]) / np.sqrt(2.0))
    with pytest.raises(DimensionMismatch):
        stacked_matrix(hadamard_pair_plan, [0])
    with pytest.raises(InvalidModeSet):
        stacked_matrix(hadamard_pair_plan, [0, 2])


def test_collision_free_weight() -> None:
    """Testing if K!/((K-N)! K^N) is computed."""
    assert collision_free_weight(4, 2) == pytest.approx(3 / 4)
    assert collision_free_weight(6, 3) == pytest.approx(6 * 5 * 4 / 216)
    assert collision_free_weight(5, 1) == 1.0


@pytest.mark.parametrize("parties,photons,seed", [(4, 1, 0), (6, 2, 1), (6, 3, 2)])
def test_exhaustive_crosscheck(parties: int, photons: int, seed: int) -> None:
    """Testing if the permanent formula matches the full state vector.

    Args:
        parties (int): K.
        photons (int): N.
        seed (int): Plan seed.
    """
    report = distribution_crosscheck(AdaptivePlan.random(parties, photons, seed))
    assert report["max_abs_diff"] <= 1e-9
    assert report["normalization"] == pytest.approx(collision_free_weight(parties, photons))
    assert all(report["criteria"].values())
    assert len(report["outcomes"]) == photons**photons


def test_register_crosscheck_for_larger_k() -> None:
    """Testing if the register enumeration agrees at K = 12, N = 3."""
    report = distribution_crosscheck(AdaptivePlan.random(12, 3, 4), exhaustive=False)
    assert all(report["criteria"].values())
    with pytest.raises(TooLarge):
        distribution_crosscheck(AdaptivePlan.random(12, 3, 4))


def test_party_order_does_not_matter(random_plan: AdaptivePlan) -> None:
    """Testing if reversing the party order keeps the distribution.

    Args:
        random_plan (AdaptivePlan): K = 6, N = 2.
    """
    forward = distribution_crosscheck(random_plan, exhaustive=False)
    backward = distribution_crosscheck(random_plan, exhaustive=False, party_order=range(5, -1, -1))
    assert backward["party_order"] == [5, 4, 3, 2, 1, 0]
    for a, b in zip(forward["outcomes"], backward["outcomes"]):
        assert a["probability_simulated"] == pytest.approx(b["probability_simulated"], abs=1e-9)
    with pytest.raises(InvalidConfiguration):
        distribution_crosscheck(random_plan, party_order=[0, 0, 1, 2, 3, 4])


def test_run_adaptive_single_photon() -> None:
    """Testing if one photon is found by a uniformly random party."""
    plan = AdaptivePlan(4, (np.eye(1),))
    trials = 4000
    parties = [run_adaptive(plan, seed).detecting_parties[0] for seed in range(trials)]
    for party in range(4):
        share = parties.count(party) / trials
        assert abs(share - 0.25) <= 5 * math.sqrt(0.25 * 0.75 / trials)


def test_run_adaptive_is_deterministic(random_plan: AdaptivePlan) -> None:
    """Testing if a seed fixes the sample.

    Args:
        random_plan (AdaptivePlan): K = 6, N = 2.
    """
    for seed in range(20):
        assert run_adaptive(random_plan, seed) == run_adaptive(random_plan, seed)
        result = run_adaptive(random_plan, seed)
        if not result.aborted:
            assert len(result.detected_modes) == 2
            assert len(set(result.detecting_parties)) == 2


def test_sampled_frequencies_match_model() -> None:
    """Testing if sampled outcome frequencies stay within five sigma."""
    plan = AdaptivePlan.random(8, 2, 21)
    trials = 20_000
    tally = sample_frequencies(plan, trials, seed=5)
    normalization = collision_free_weight(8, 2)
    assert tally["aborted"] + sum(tally["counts"].values()) == trials
    for k in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        expected = normalization * outcome_probability(plan, k)
        observed = tally["counts"].get(k, 0) / trials
        sigma = math.sqrt(max(expected * (1 - expected), 1e-12) / trials)
        assert abs(observed - expected) <= 5 * sigma + 1e-12


def test_norm_exceedance_demo() -> None:
    """Testing if stacked matrices of random plans exceed norm one."""
    report = norm_exceedance_demo(1000, seed=0)
    assert report["criteria"]["norm_exceeds_one"]
    assert report["exceed_fraction"] > 0.0
    assert report["max_norm"] > 1.0
    with pytest.raises(InvalidConfiguration):
        norm_exceedance_demo(0)
