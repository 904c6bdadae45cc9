import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abspin.errors import NotUnitary, ValidationError
from abspin.spin_algebra import IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, SpinState, expectation, is_unitary
from abspin.spin_dynamics import (
    FieldProfile,
    FieldSegment,
    Particle,
    heisenberg_evolve,
    oracle_propagator,
    precession_frequency,
    precession_residual,
    propagator,
)

from conftest import expm_hermitian_generator, sigma_dot_ref

unit_vectors = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(
    lambda v: np.linalg.norm(v) > 0.1
).map(lambda v: tuple(np.asarray(v) / np.linalg.norm(v)))
segments = st.tuples(st.floats(0, 3), st.floats(-3, 3), unit_vectors)


def reference_propagator(particle, profile):
    # exp(-i H t / hbar) with H = -mu sigma.B, one eigendecomposition per segment
    u = IDENTITY
    for seg in profile.segments:
        h = particle.mu * seg.magnitude * sigma_dot_ref(seg.direction) / particle.hbar
        u = expm_hermitian_generator(h, seg.duration) @ u
    return u


def test_zero_field_is_identity():
    p = Particle()
    np.testing.assert_array_equal(propagator(p, FieldProfile.constant(0.0, 2.0)), IDENTITY)
    np.testing.assert_allclose(oracle_propagator(p, FieldProfile.constant(0.0, 2.0), 7), IDENTITY, atol=1e-15)


def test_single_z_segment_closed_form():
    p = Particle(mu=0.7, hbar=1.3)
    b, tau = 1.9, 0.8
    theta = p.mu * b * tau / p.hbar
    expected = np.diag([np.exp(1j * theta), np.exp(-1j * theta)])
    np.testing.assert_allclose(propagator(p, FieldProfile.constant(b, tau)), expected, atol=1e-14)
    np.testing.assert_allclose(oracle_propagator(p, FieldProfile.constant(b, tau), 1000), expected, atol=1e-12)


def test_same_direction_segments_add():
    p = Particle(mu=1.1)
    n = (0.0, 0.6, 0.8)
    split = FieldProfile(((0.4, 1.5, n), (0.9, -0.3, n)))
    joined = FieldProfile.constant(1.0, 0.4 * 1.5 + 0.9 * -0.3, n)
    np.testing.assert_allclose(propagator(p, split), propagator(p, joined), atol=1e-14)


def test_non_unit_direction_rejected():
    with pytest.raises(ValidationError):
        FieldSegment(1.0, 1.0, (1.0, 1.0, 0.0))


def test_negative_duration_rejected():
    with pytest.raises(ValidationError):
        FieldSegment(-1.0, 1.0)


def test_oracle_requires_positive_steps():
    with pytest.raises(ValidationError):
        oracle_propagator(Particle(), FieldProfile.constant(1.0, 1.0), 0)


@settings(max_examples=60, deadline=None)
@given(st.lists(segments, min_size=1, max_size=4), st.floats(-2, 2))
def test_propagator_matches_eigendecomposition(segs, mu):
    p = Particle(mu=mu)
    prof = FieldProfile(tuple(segs))
    u = propagator(p, prof)
    assert is_unitary(u)
    np.testing.assert_allclose(u, reference_propagator(p, prof), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(segments, min_size=1, max_size=4), st.lists(segments, min_size=1, max_size=4))
def test_composition(a, b):
    p = Particle(mu=0.9)
    pa, pb = FieldProfile(tuple(a)), FieldProfile(tuple(b))
    np.testing.assert_allclose(propagator(p, pa.then(pb)), propagator(p, pb) @ propagator(p, pa), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 2), st.floats(-2, 2)), min_size=1, max_size=5), unit_vectors,
       st.integers(1, 50))
def test_oracle_exact_for_fixed_direction(parts, n, steps):
    p = Particle(mu=0.8)
    prof = FieldProfile(tuple((d, b, n) for d, b in parts))
    np.testing.assert_allclose(oracle_propagator(p, prof, steps), propagator(p, prof), atol=1e-12)


def test_oracle_second_order_for_direction_changes():
    p = Particle(mu=0.8)
    prof = FieldProfile(((1.0, 1.0, (1, 0, 0)), (2.0, 0.7, (0, 0.6, 0.8))))
    exact = propagator(p, prof)
    errs = [np.max(np.abs(oracle_propagator(p, prof, s) - exact)) for s in (20, 40, 80)]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


def test_heisenberg_sigma_z_unchanged_under_z_field():
    u = propagator(Particle(), FieldProfile.constant(1.3, 0.77))
    np.testing.assert_allclose(heisenberg_evolve(SIGMA_Z, u), SIGMA_Z, atol=1e-15)


def test_heisenberg_sigma_x_precesses():
    p = Particle(mu=0.6, hbar=0.9)
    b, t = 1.7, 1.3
    omega = 2 * p.mu * b / p.hbar
    sx_t = heisenberg_evolve(SIGMA_X, propagator(p, FieldProfile.constant(b, t)))
    np.testing.assert_allclose(sx_t, math.cos(omega * t) * SIGMA_X + math.sin(omega * t) * SIGMA_Y, atol=1e-14)


def test_heisenberg_identity_propagator():
    op = 0.3 * SIGMA_X - 1.2 * SIGMA_Y
    np.testing.assert_array_equal(heisenberg_evolve(op, IDENTITY), op)


def test_heisenberg_rejects_non_unitary():
    with pytest.raises(NotUnitary):
        heisenberg_evolve(SIGMA_X, 2 * IDENTITY)


@settings(max_examples=50, deadline=None)
@given(st.lists(segments, min_size=1, max_size=3))
def test_heisenberg_preserves_spectrum(segs):
    u = propagator(Particle(), FieldProfile(tuple(segs)))
    for s in (SIGMA_X, SIGMA_Y, SIGMA_Z):
        e = heisenberg_evolve(s, u)
        np.testing.assert_allclose(e, e.conj().T, atol=1e-12)
        np.testing.assert_allclose(np.linalg.eigvalsh(e), [-1, 1], atol=1e-10)


@pytest.mark.parametrize("t", np.linspace(0, 7, 8))
def test_polarized_transverse_means_vanish(t):
    up = SpinState.eigenstate("z", 1)
    u = propagator(Particle(mu=1.2), FieldProfile.constant(0.9, t))
    for s in (SIGMA_X, SIGMA_Y):
        st_ = heisenberg_evolve(s, u)
        assert abs(expectation(up, st_)) <= 1e-12
        assert expectation(up, st_ @ st_) == pytest.approx(1, abs=1e-12)


def test_precession_frequency():
    assert precession_frequency(Particle(), 0.0) == 0.0
    assert precession_frequency(Particle(mu=math.pi / 4), 1.0) == pytest.approx(math.pi / 2)
    assert precession_frequency(Particle(mu=-1.0), 2.0) < 0


def test_precession_residual_is_second_order():
    p = Particle(mu=0.8)
    r1 = precession_residual(p, 1.4, 0.9, dt=1e-2).residual
    r2 = precession_residual(p, 1.4, 0.9, dt=5e-3).residual
    assert r1 / r2 == pytest.approx(4, rel=0.01)
    # measured constant: residual <= C dt^2 with C from the coarse step
    c = r1 / 1e-4
    assert precession_residual(p, 1.4, 2.3, dt=1e-3).residual <= 1.01 * c * 1e-6


def test_precession_residual_zero_field():
    assert precession_residual(Particle(), 0.0, 1.0).residual <= 1e-15


def test_precession_residual_sigma_z_component():
    assert precession_residual(Particle(), 2.0, 0.4, dt=1e-2).components[2] <= 1e-13


def test_particle_validation():
    with pytest.raises(ValidationError):
        Particle(hbar=0)
    with pytest.raises(ValidationError):
        Particle(mass=-1)
    assert Particle(mu=-1.913).mu < 0
