import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abspin.errors import InvalidObservable, ValidationError
from abspin.spin_algebra import (
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    SpinState,
    check_transverse_spin_condition,
    commutator,
    expectation,
    is_hermitian,
    pauli,
)

bloch_vectors = st.tuples(
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)
).map(np.array).filter(lambda v: np.linalg.norm(v) <= 1)


def test_pauli_z_is_diagonal():
    np.testing.assert_array_equal(pauli("z"), np.diag([1, -1]))


@pytest.mark.parametrize("axis", "xyz")
def test_pauli_squares_to_identity_exactly(axis):
    p = pauli(axis)
    np.testing.assert_array_equal(p @ p, IDENTITY)
    assert is_hermitian(p)


@pytest.mark.parametrize("axis", "xyz")
def test_pauli_spectrum_has_no_zero(axis):
    vals = np.linalg.eigvalsh(pauli(axis))
    assert vals.tolist() == [-1.0, 1.0]


def test_pauli_rejects_unknown_axis():
    with pytest.raises(ValidationError):
        pauli("w")


def test_pauli_returns_copies():
    p = pauli("x")
    p[0, 0] = 5
    assert pauli("x")[0, 0] == 0


@pytest.mark.parametrize("a, b, c", [("x", "y", "z"), ("y", "z", "x"), ("z", "x", "y")])
def test_commutation_relations_are_exact(a, b, c):
    np.testing.assert_array_equal(commutator(pauli(a), pauli(b)), 2j * pauli(c))


def test_self_commutator_vanishes():
    np.testing.assert_array_equal(commutator(SIGMA_Z, SIGMA_Z), np.zeros((2, 2)))


def test_identity_multiple_commutes_with_sigma_z():
    c = 0.3 * IDENTITY
    assert np.max(np.abs(commutator(c, SIGMA_Z))) == 0


@pytest.mark.parametrize("axis, op, expected", [
    ("z", SIGMA_Z, 1.0), ("z", SIGMA_X, 0.0), ("z", SIGMA_Y, 0.0),
    ("x", SIGMA_X, 1.0), ("y", SIGMA_Y, 1.0),
])
def test_expectation_in_eigenstates(axis, op, expected):
    assert expectation(SpinState.eigenstate(axis, 1), op) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("op", [SIGMA_X, SIGMA_Y, SIGMA_Z])
def test_unpolarized_expectations_vanish(op):
    assert expectation(SpinState.unpolarized(), op) == 0.0


def test_expectation_rejects_non_hermitian():
    with pytest.raises(InvalidObservable):
        expectation(SpinState.unpolarized(), SIGMA_X + 1j * SIGMA_Y)


def test_eigenstate_sign_and_bloch():
    np.testing.assert_allclose(SpinState.eigenstate("y", -1).bloch_vector, [0, -1, 0], atol=1e-12)
    assert np.linalg.norm(SpinState.unpolarized().bloch_vector) <= 1e-12


@pytest.mark.parametrize("rho", [
    np.array([[1, 0], [0, 1]]),  # trace 2
    np.array([[1.2, 0], [0, -0.2]]),  # negative eigenvalue
    np.array([[0.5, 0.5j], [0.5j, 0.5]]),  # not Hermitian
])
def test_invalid_density_matrices(rho):
    with pytest.raises(ValidationError):
        SpinState(rho)


def test_spinor_must_be_normalised():
    with pytest.raises(ValidationError):
        SpinState.from_spinor([1, 1])


def test_bloch_vector_outside_ball_rejected():
    with pytest.raises(ValidationError):
        SpinState.from_bloch([1, 1, 0])


def test_states_are_immutable():
    s = SpinState.unpolarized()
    with pytest.raises(ValueError):
        s.rho[0, 0] = 1


def test_transverse_condition_sigma_z_eigenstate():
    rep = check_transverse_spin_condition(SpinState.eigenstate("z", 1))
    assert rep.mean_sx == pytest.approx(0, abs=1e-12)
    assert rep.mean_sx2 == pytest.approx(1, abs=1e-12)
    assert rep.averages_vanish and not rep.satisfiable


def test_transverse_condition_sigma_x_eigenstate():
    rep = check_transverse_spin_condition(SpinState.eigenstate("x", 1))
    assert rep.mean_sx == pytest.approx(1, abs=1e-12)
    assert rep.mean_sx2 == pytest.approx(1, abs=1e-12)
    assert not rep.averages_vanish


def test_transverse_condition_unpolarized():
    rep = check_transverse_spin_condition(SpinState.unpolarized())
    assert (rep.mean_sx2, rep.mean_sy2) == (1.0, 1.0)


@settings(max_examples=200)
@given(bloch_vectors)
def test_density_matrix_invariants(r):
    s = SpinState.from_bloch(r)
    assert abs(np.trace(s.rho) - 1) <= 1e-12
    assert np.linalg.norm(s.bloch_vector) <= 1 + 1e-12
    np.testing.assert_allclose(s.bloch_vector, r, atol=1e-12)
    assert expectation(s, SIGMA_X @ SIGMA_X) == pytest.approx(1, abs=1e-12)
