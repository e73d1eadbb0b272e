# pytest -s -v PhotonicProtocols/tests/test_fock_state.py
import math

import pytest
from hypothesis import given, settings

from PhotonicProtocols.models.exceptions import (
    DimensionMismatch,
    InvalidOccupation,
    MixedSector,
    ZeroNorm,
)
from PhotonicProtocols.models.fock_state import (
    FockState,
    global_phase_aligned,
    inner_product,
    make_basis_state,
    normalize,
    tensor,
    total_photon_number,
    vacuum,
)
from PhotonicProtocols.models.resource_states import sigma_state, w_state
from PhotonicProtocols.tests.strategies import fock_states


def test_basis_state_is_normalized() -> None:
    """Testing if a basis state carries amplitude one on its occupation."""
    state = make_basis_state([0, 2, 1])
    assert state.amplitude((0, 2, 1)) == 1.0
    assert state.num_modes == 3
    assert state.is_normalized()


@pytest.mark.parametrize("occ", [[-1, 0], [0, 256], [0.5, 1]])
def test_invalid_occupation(occ: list) -> None:
    """Testing if negative, oversized and fractional counts are rejected.

    Args:
        occ (list): A bad occupation vector.
    """
    with pytest.raises(InvalidOccupation):
        make_basis_state(occ)


def test_wrong_length_occupation() -> None:
    """Testing if an occupation with the wrong mode count is rejected."""
    with pytest.raises(DimensionMismatch):
        FockState({(1, 0, 0): 1.0}, 2)


def test_tiny_amplitudes_are_pruned() -> None:
    """Testing if amplitudes below the prune threshold vanish."""
    state = FockState({(1, 0): 1.0, (0, 1): 1e-16}, 2)
    assert len(state) == 1


def test_vacuum_tensor_vacuum() -> None:
    """Testing if the tensor product of vacua is the vacuum."""
    assert tensor(vacuum(1), vacuum(1)).isclose(vacuum(2))
    assert tensor(vacuum(2), vacuum(0)).isclose(vacuum(2))


def test_tensor_concatenates_modes() -> None:
    """Testing if tensor places the modes of b after those of a."""
    c = complex(0.6, 0.8)
    product = tensor(make_basis_state([1]), FockState({(0,): c}, 1))
    assert product.num_modes == 2
    assert product.amplitude((1, 0)) == c


def test_tensor_of_w_states(w2: FockState) -> None:
    """Testing if two W_2 copies give four terms of amplitude one half.

    Args:
        w2 (FockState): The two-mode W state.
    """
    product = tensor(w2, w2)
    assert len(product) == 4
    assert all(abs(amp - 0.5) <= 1e-15 for _, amp in product)
    assert product.is_normalized()


def test_inner_product_values(w2: FockState) -> None:
    """Testing if inner products of basis and W states are correct.

    Args:
        w2 (FockState): The two-mode W state.
    """
    assert inner_product(make_basis_state([1, 0]), make_basis_state([0, 1])) == 0
    assert abs(inner_product(w2, w2) - 1.0) <= 1e-15
    assert abs(inner_product(make_basis_state([1, 0]), w2) - 1 / math.sqrt(2)) <= 1e-15


def test_inner_product_is_conjugate_linear_in_first() -> None:
    """Testing if <ia|b> = -i <a|b>."""
    a = make_basis_state([1, 0])
    assert abs(inner_product(a.scaled(1j), a) - (-1j)) <= 1e-15
    assert abs(inner_product(a, a.scaled(1j)) - 1j) <= 1e-15


def test_inner_product_mode_mismatch() -> None:
    """Testing if states over different mode counts cannot be compared."""
    with pytest.raises(DimensionMismatch):
        inner_product(vacuum(2), vacuum(3))


def test_normalize() -> None:
    """Testing if normalize rescales and rejects the zero state."""
    assert normalize(FockState({(1,): 2.0}, 1)).amplitude((1,)) == 1.0
    with pytest.raises(ZeroNorm):
        normalize(FockState({}, 1))


def test_normalize_six_permutation_terms() -> None:
    """Testing if six equal permutation terms normalize to 1/sqrt 6."""
    raw = FockState({occ: 1.0 for occ, _ in sigma_state(3, 3)}, 9)
    state = normalize(raw)
    assert len(state) == 6
    assert all(abs(amp - 1 / math.sqrt(6)) <= 1e-15 for _, amp in state)


def test_total_photon_number() -> None:
    """Testing if the photon number is read off single-sector states."""
    assert total_photon_number(vacuum(3)) == 0
    assert total_photon_number(w_state(5)) == 1
    assert total_photon_number(sigma_state(3, 3)) == 3
    with pytest.raises(MixedSector):
        total_photon_number(FockState({(0, 0): 1.0, (1, 0): 1.0}, 2))
    with pytest.raises(ZeroNorm):
        total_photon_number(FockState({}, 2))


def test_permute_modes() -> None:
    """Testing if new mode i takes old mode order[i]."""
    state = make_basis_state([2, 0, 1]).permute_modes([2, 0, 1])
    assert state.amplitude((1, 2, 0)) == 1.0
    with pytest.raises(DimensionMismatch):
        state.permute_modes([0, 0, 1])


def test_addition_and_subtraction(w2: FockState) -> None:
    """Testing if sums merge terms and differences cancel them.

    Args:
        w2 (FockState): The two-mode W state.
    """
    assert len(w2 - w2) == 0
    assert (w2 + w2).amplitude((1, 0)) == pytest.approx(math.sqrt(2))


def test_global_phase_alignment(w2: FockState) -> None:
    """Testing if a global phase is removed against a reference.

    Args:
        w2 (FockState): The two-mode W state.
    """
    rotated = w2.scaled(complex(math.cos(1.1), math.sin(1.1)))
    assert not rotated.isclose(w2)
    assert global_phase_aligned(w2, rotated).isclose(w2)


def test_records(w2: FockState) -> None:
    """Testing if records are sorted by occupation and rebuild the state.

    Args:
        w2 (FockState): The two-mode W state.
    """
    records = w2.to_records()
    assert [record["occ"] for record in records] == [[0, 1], [1, 0]]
    assert FockState.from_records(records).isclose(w2)


@settings(max_examples=100, deadline=None)
@given(fock_states(2), fock_states(2))
def test_norm_is_multiplicative(a: FockState, b: FockState) -> None:
    """Testing if ||a (x) b|| = ||a|| ||b||.

    Args:
        a (FockState): A random state.
        b (FockState): Another random state.
    """
    expected = a.norm() * b.norm()
    assert abs(tensor(a, b).norm() - expected) <= 1e-12 * max(1.0, expected)


@settings(max_examples=100, deadline=None)
@given(fock_states(3), fock_states(3))
def test_inner_product_is_hermitian(a: FockState, b: FockState) -> None:
    """Testing if <a|b> is the conjugate of <b|a>.

    Args:
        a (FockState): A random state.
        b (FockState): Another random state.
    """
    assert abs(inner_product(a, b) - inner_product(b, a).conjugate()) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(fock_states(3))
def test_normalized_states_have_unit_norm(state: FockState) -> None:
    """Testing if normalize always returns a unit vector.

    Args:
        state (FockState): A random nonzero state.
    """
    assert normalize(state).is_normalized()
