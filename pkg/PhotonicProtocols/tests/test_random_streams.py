# pytest -s -v PhotonicProtocols/tests/test_random_streams.py
import numpy as np
import pytest

from PhotonicProtocols.models.random_streams import make_generator


def test_streams_are_keyed_by_seed_plus_trial() -> None:
    """Testing if trial t of seed s replays the stream keyed s + t."""
    a = make_generator(5, 3).random(4)
    b = make_generator(8).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(make_generator(5, 0).random(4), a)


def test_generator_passes_through() -> None:
    """Testing if a ready generator is returned unchanged."""
    rng = np.random.Generator(np.random.Philox(key=1))
    assert make_generator(rng, 7) is rng


def test_negative_seed() -> None:
    """Testing if negative seeds are refused."""
    with pytest.raises(ValueError):
        make_generator(-1)
