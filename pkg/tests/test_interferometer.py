import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abspin.errors import ReductionInvalid, ValidationError
from abspin.interferometer import (
    FieldPulse,
    Free,
    OpticalPhase,
    ShieldedPotential,
    arm_unitary,
    energy_independence_scan,
    run_mach_zehnder,
    scalar_reduction_check,
    visibility_sweep,
)
from abspin.spin_algebra import IDENTITY, SpinState
from abspin.spin_dynamics import Particle

from conftest import expm_hermitian_generator, sigma_dot_ref

unit = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1).map(
    lambda v: tuple(np.asarray(v) / np.linalg.norm(v)))
elements = st.one_of(
    st.builds(FieldPulse, st.floats(-3, 3), st.floats(0, 2), unit),
    st.builds(ShieldedPotential, st.floats(-3, 3), st.floats(0, 2)),
    st.builds(Free, st.floats(0, 2)),
)
arms = st.lists(elements, max_size=4)
spinors = st.tuples(*[st.floats(-1, 1)] * 4).filter(lambda v: np.linalg.norm(v) > 0.1).map(
    lambda v: np.array([v[0] + 1j * v[1], v[2] + 1j * v[3]]) / np.linalg.norm(v))


def reference_arm(arm, p):
    v = IDENTITY.astype(complex)
    for el in arm:
        if isinstance(el, FieldPulse):
            h = p.mu * el.B * sigma_dot_ref(el.direction) / p.hbar
            v = expm_hermitian_generator(h, el.tau) @ v
        elif isinstance(el, ShieldedPotential):
            v = np.exp(1j * p.charge * el.dV * el.tau / p.hbar) * v
    return v


def reference_intensity(arm1, arm2, chi, p):
    # amplitude at port 1 is (V1 + V2) chi / 2
    v1, v2 = reference_arm(arm1, p), reference_arm(arm2, p)
    return float(np.linalg.norm((v1 + v2) @ chi / 2) ** 2)


def test_identical_arms_full_brightness():
    arm = [FieldPulse(1.2, 0.4, (0, 1, 0)), ShieldedPotential(0.3, 1.0)]
    out = run_mach_zehnder(arm, arm, SpinState.unpolarized(), Particle())
    assert out.I1 == pytest.approx(1.0, abs=1e-12)
    assert out.I2 == pytest.approx(0.0, abs=1e-12)
    assert out.visibility == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("delta_phi", [0.0, 0.3, math.pi / 2, math.pi, 2 * math.pi, 4.1])
@pytest.mark.parametrize("beam", [SpinState.eigenstate("z", 1), SpinState.eigenstate("z", -1),
                                  SpinState.unpolarized()])
def test_sab_intensity(delta_phi, beam):
    p = Particle(mu=0.5)
    tau = 2.0
    b = delta_phi * p.hbar / (p.mu * tau)
    out = run_mach_zehnder([FieldPulse(b, tau)], [Free(tau)], beam, p)
    assert out.I1 == pytest.approx(math.cos(delta_phi / 2) ** 2, abs=1e-12)
    assert out.I1 + out.I2 == pytest.approx(1.0, abs=1e-12)


def test_sab_depends_only_on_b_tau():
    p = Particle(mu=1.3)
    a = run_mach_zehnder([FieldPulse(2.0, 0.5)], [Free(0.5)], SpinState.eigenstate("z", 1), p)
    b = run_mach_zehnder([FieldPulse(0.25, 4.0)], [Free(4.0)], SpinState.eigenstate("z", 1), p)
    assert a.I1 == pytest.approx(b.I1, abs=1e-12)
    assert a.relative_phase == pytest.approx(b.relative_phase, abs=1e-12)


def test_eab_intensity():
    p = Particle(charge=1.0, hbar=2.0)
    out = run_mach_zehnder([ShieldedPotential(0.5, 3.0)], [Free(3.0)], SpinState.unpolarized(), p)
    assert out.relative_phase == pytest.approx(0.75, abs=1e-12)
    assert out.I1 == pytest.approx(math.cos(0.75 / 2) ** 2, abs=1e-12)


def test_unpolarized_is_average_of_eigenstates():
    p = Particle(mu=0.9)
    arm1, arm2 = [FieldPulse(1.1, 0.8, (0.6, 0, 0.8))], [FieldPulse(-0.4, 0.5, (0, 1, 0))]
    up = run_mach_zehnder(arm1, arm2, SpinState.eigenstate("z", 1), p)
    dn = run_mach_zehnder(arm1, arm2, SpinState.eigenstate("z", -1), p)
    mix = run_mach_zehnder(arm1, arm2, SpinState.unpolarized(), p)
    assert mix.I1 == pytest.approx((up.I1 + dn.I1) / 2, abs=1e-12)


def test_spin_flip_arm_removes_fringes():
    # mu B tau / hbar = pi/2 along x gives i sigma_x: spin-up turns into spin-down
    arm1 = [FieldPulse(math.pi / 2, 1.0, (1, 0, 0))]
    out = run_mach_zehnder(arm1, [Free(1.0)], SpinState.eigenstate("z", 1), Particle())
    assert out.visibility == pytest.approx(0.0, abs=1e-12)
    assert out.I1 == pytest.approx(0.5, abs=1e-12)


def test_visibility_sweep_matches_overlap():
    p = Particle()
    arm1 = [FieldPulse(0.7, 1.0, (1, 0, 0))]
    beam = SpinState.eigenstate("z", 1)
    out = run_mach_zehnder(arm1, [Free(1.0)], beam, p)
    assert out.visibility == pytest.approx(abs(math.cos(0.7)), abs=1e-12)
    assert visibility_sweep(arm1, [Free(1.0)], beam, p) == pytest.approx(out.visibility, abs=1e-4)


def test_arm_unitary_phase_accounting():
    p = Particle(charge=2.0)
    u, phase = arm_unitary([ShieldedPotential(0.5, 1.0), OpticalPhase(((1.0, 0.25), (2.0, 0.5))), Free(3)], p)
    np.testing.assert_array_equal(u, IDENTITY)
    assert phase == pytest.approx(1.0 + 1.25)


@pytest.mark.parametrize("bad", [lambda: FieldPulse(1.0, -1.0), lambda: Free(-0.1),
                                 lambda: ShieldedPotential(math.nan, 1.0)])
def test_element_validation(bad):
    with pytest.raises(ValidationError):
        bad()


@settings(max_examples=100, deadline=None)
@given(arms, arms, spinors)
def test_intensities_match_amplitude_oracle(arm1, arm2, chi):
    p = Particle(mu=0.7)
    out = run_mach_zehnder(arm1, arm2, SpinState.from_spinor(chi), p)
    assert out.I1 == pytest.approx(reference_intensity(arm1, arm2, chi, p), abs=1e-12)
    assert out.I1 + out.I2 == pytest.approx(1.0, abs=1e-12)
    assert -1e-12 <= out.I1 <= 1 + 1e-12
    assert out.visibility <= 1 + 1e-12


@settings(max_examples=50, deadline=None)
@given(arms, arms, spinors, st.floats(-10, 10))
def test_global_phase_invariance(arm1, arm2, chi, phase):
    p = Particle()
    beam = SpinState.from_spinor(chi)
    a = run_mach_zehnder(arm1, arm2, beam, p)
    b = run_mach_zehnder(arm1, arm2, beam, p, common_phase=phase)
    assert b.I1 == pytest.approx(a.I1, abs=1e-12)
    assert b.visibility == pytest.approx(a.visibility, abs=1e-12)
    assert abs(math.remainder(b.relative_phase - a.relative_phase, 2 * math.pi)) <= 1e-9


@pytest.mark.parametrize("sign", [1, -1])
def test_scalar_reduction_holds_for_eigenstates(sign):
    rep = scalar_reduction_check(1.7, 0.9, Particle(mu=0.6), SpinState.eigenstate("z", sign))
    assert rep.equivalent
    assert rep.max_difference <= 1e-12


@pytest.mark.parametrize("beam", [SpinState.eigenstate("x", 1), SpinState.unpolarized()])
def test_scalar_reduction_rejects_other_beams(beam):
    with pytest.raises(ReductionInvalid):
        scalar_reduction_check(1.0, 1.0, Particle(), beam)


def test_energy_scan_is_flat():
    arm1 = [FieldPulse(0.8, 1.0), ShieldedPotential(0.3, 1.0)]
    scan = energy_independence_scan(arm1, [Free(2.0)], Particle(), np.linspace(0, 50, 11))
    assert scan.spread <= 1e-12
    assert len(scan.outputs) == 11


def test_energy_scan_rejects_negative_energy():
    with pytest.raises(ValidationError):
        energy_independence_scan([Free(1)], [Free(1)], Particle(), [-1.0])
