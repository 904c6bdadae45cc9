import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from abspin.errors import ConsistencyError, SingularityError, ValidationError
from abspin.gauge import (
    GaugeBump,
    GaugeField,
    PlanarPath,
    ab_phase_difference,
    ac_effective_field,
    gauge_invariance_report,
    line_integral,
    vector_potential,
    winding_number,
)
from abspin.selftest import crossing_winding
from abspin.spin_dynamics import Particle

BUMPS = (GaugeBump((0.5, -0.2), 1.3, 0.7), GaugeBump((-1.0, 0.8), -0.6, 1.1))


def midpoint_integral(field, vertices, samples=20000):
    # independent composite midpoint rule on A = flux/(2 pi r^2) (-y, x) + grad chi
    total = 0.0
    fp = np.asarray(field.flux_point)
    for a, b in zip(vertices[:-1], vertices[1:]):
        s = (np.arange(samples) + 0.5) / samples
        pts = a + s[:, None] * (b - a)
        d = pts - fp
        r2 = np.sum(d * d, axis=1)
        ax = -field.flux * d[:, 1] / (2 * np.pi * r2)
        ay = field.flux * d[:, 0] / (2 * np.pi * r2)
        for bump in field.bumps:
            e = pts - bump.center
            g = bump.amplitude * np.exp(-np.sum(e * e, axis=1) / (2 * bump.width**2)) / bump.width**2
            ax -= g * e[:, 0]
            ay -= g * e[:, 1]
        total += np.sum(ax * (b - a)[0] + ay * (b - a)[1]) / samples
    return total


def test_vector_potential_tangential_magnitude():
    a = vector_potential(GaugeField(2 * math.pi), (1.0, 0.0))
    np.testing.assert_allclose(a, [0.0, 1.0], atol=1e-15)
    a = vector_potential(GaugeField(2 * math.pi, (1.0, 1.0)), (1.0, 3.0))
    np.testing.assert_allclose(a, [-0.5, 0.0], atol=1e-15)


def test_vector_potential_singular_at_flux_point():
    with pytest.raises(SingularityError):
        vector_potential(GaugeField(1.0), (0.0, 0.0))


def test_gauge_term_is_gradient_of_chi():
    field = GaugeField(0.0, bumps=BUMPS)
    x = np.array([0.3, 0.4])
    h = 1e-6
    num = [(field.chi(x + h * e) - field.chi(x - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(vector_potential(field, x), num, atol=1e-8)


@pytest.mark.parametrize("flux", [1.0, -2.5, 0.0])
def test_loop_around_flux_gives_flux(flux):
    assert line_integral(GaugeField(flux), PlanarPath.circle()) == pytest.approx(flux, abs=1e-12)


def test_loop_not_enclosing_gives_zero():
    path = PlanarPath.circle(radius=0.5, center=(2.0, 0.0))
    assert line_integral(GaugeField(3.0), path) == pytest.approx(0.0, abs=1e-12)
    assert winding_number(path) == 0


def test_double_loop():
    path = PlanarPath.circle(n=32, turns=2)
    assert winding_number(path) == 2
    assert line_integral(GaugeField(0.7), path) == pytest.approx(1.4, abs=1e-12)


def test_clockwise_loop_is_negative():
    assert winding_number(PlanarPath.circle(turns=-1)) == -1


def test_open_path_returns_fraction():
    half = PlanarPath([(1, 0), (1, 1), (-1, 1), (-1, 0)])
    assert winding_number(half) == pytest.approx(0.5, abs=1e-14)


def test_zero_length_path_rejected():
    with pytest.raises(ValidationError):
        winding_number(PlanarPath([(1, 0), (1, 0)]))


def test_path_through_flux_point_rejected():
    with pytest.raises(SingularityError):
        PlanarPath([(-1, 0), (1, 0)])
    with pytest.raises(SingularityError):
        PlanarPath([(-1, 0), (1, 0)], eps=1e-9, flux_point=(0.0, 1e-10))


def test_exact_and_quadrature_solenoid_agree():
    field = GaugeField(1.7, (0.1, -0.2))
    path = PlanarPath([(2, -1), (1.5, 2), (-1, 1.5), (-2, -2)], flux_point=(0.1, -0.2))
    exact = line_integral(field, path)
    quad = line_integral(field, path, samples_per_segment=50000, solenoid="quadrature")
    assert quad == pytest.approx(exact, abs=1e-8)
    with pytest.raises(ValidationError):
        line_integral(field, path, solenoid="simpson")


def test_line_integral_matches_independent_quadrature():
    field = GaugeField(0.9, bumps=BUMPS)
    verts = np.array([(2.0, 0.0), (0.5, 1.5), (-1.5, 0.5), (-0.5, -2.0)])
    ref = midpoint_integral(field, verts)
    assert line_integral(field, PlanarPath(verts), 20000) == pytest.approx(ref, abs=1e-9)


def test_open_path_gauge_shift_is_chi_difference():
    verts = [(2.0, 0.0), (0.0, 2.0), (-2.0, 0.3)]
    plain, gauged = GaugeField(1.0), GaugeField(1.0, bumps=BUMPS)
    shift = line_integral(gauged, PlanarPath(verts)) - line_integral(plain, PlanarPath(verts))
    assert shift == pytest.approx(gauged.chi(verts[-1]) - gauged.chi(verts[0]), abs=1e-9)


def test_closed_path_gauge_invariant():
    path = PlanarPath.circle(radius=1.5, n=16)
    a = line_integral(GaugeField(1.0, bumps=BUMPS), path, 100000)
    assert a == pytest.approx(1.0, abs=1e-9)


def test_mismatched_flux_point_rejected():
    with pytest.raises(ValidationError):
        line_integral(GaugeField(1.0, (1.0, 1.0)), PlanarPath.circle())


def test_ab_phase_for_paths_either_side():
    upper = PlanarPath([(-1, 0), (-1, 1), (1, 1), (1, 0)])
    lower = PlanarPath([(-1, 0), (-1, -1), (1, -1), (1, 0)])
    p = Particle(charge=2.0, hbar=0.5, c=4.0)
    r = ab_phase_difference(lower, upper, 3.0, p)
    assert r.delta_n == 1
    assert r.phase == pytest.approx(3.0, abs=1e-12)
    assert ab_phase_difference(upper, lower, 3.0, p).delta_n == -1
    assert ab_phase_difference(upper, upper, 3.0, p).phase == 0.0


def test_ab_phase_with_gauge_field():
    upper = PlanarPath([(-1, 0), (-1, 1), (1, 1), (1, 0)])
    lower = PlanarPath([(-1, 0), (-1, -1), (1, -1), (1, 0)])
    field = GaugeField(1.5, bumps=BUMPS)
    r = ab_phase_difference(lower, upper, 1.5, Particle(), field=field, samples_per_segment=100000)
    assert r.phase == pytest.approx(1.5, abs=1e-9)


def test_ab_phase_requires_shared_endpoints():
    with pytest.raises(ValidationError):
        ab_phase_difference(PlanarPath([(1, 0), (0, 1)]), PlanarPath([(1, 0), (0, -1)]), 1.0, Particle())


def test_ab_phase_flux_must_agree_with_field():
    path = PlanarPath([(1, 0), (0, 1)])
    with pytest.raises(ValidationError):
        ab_phase_difference(path, path, 1.0, Particle(), field=GaugeField(2.0))


def test_gauge_report_dichotomy():
    upper = PlanarPath([(-1, 0), (-1, 1), (1, 1), (1, 0)])
    lower = PlanarPath([(-1, 0), (-1, -1), (1, -1), (1, 0)])
    rep = gauge_invariance_report(GaugeField(1.0), [upper, lower, PlanarPath.circle(n=12)],
                                  trials=5, samples_per_segment=100000)
    assert rep.invariant and rep.gauge_dependent
    assert rep.closed_max_shift < 1e-9 and rep.pair_max_shift < 1e-9
    assert rep.open_max_shift > 1e-3


def test_gauge_report_needs_open_and_closed_paths():
    with pytest.raises(ValidationError):
        gauge_invariance_report(GaugeField(1.0), [PlanarPath.circle()])


def test_consistency_error_type():
    assert issubclass(ConsistencyError, Exception)


polygon = st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=3, max_size=9)


@settings(max_examples=150, deadline=None)
@given(polygon)
def test_winding_matches_crossing_count(pts):
    verts = np.array(pts + [pts[0]], dtype=float)
    seg = np.diff(verts, axis=0)
    # keep well away from the flux point and from degenerate edges
    d = []
    for a, s in zip(verts[:-1], seg):
        ss = s @ s
        assume(ss > 1e-6)
        t = np.clip(-(a @ s) / ss, 0, 1)
        d.append(np.linalg.norm(a + t * s))
    assume(min(d) > 1e-3)
    path = PlanarPath(verts)
    n = winding_number(path)
    assert n == crossing_winding(verts, (0.0, 0.0))
    assert line_integral(GaugeField(1.3), path) == pytest.approx(1.3 * n, abs=1e-10)


def test_ac_effective_field_examples():
    p = Particle(mass=2.0, c=3.0)
    np.testing.assert_allclose(ac_effective_field(p, (6, 0, 0), (0, 1, 0)), [0, 0, 1])
    np.testing.assert_array_equal(ac_effective_field(p, (1, 0, 0), (2, 0, 0)), [0, 0, 0])


vec = st.tuples(*[st.floats(-5, 5)] * 3).map(np.array)


@settings(max_examples=100)
@given(vec, vec, vec, st.floats(-3, 3))
def test_ac_effective_field_bilinear_and_orthogonal(p1, p2, e, a):
    part = Particle(mass=1.5, c=2.0)
    lhs = ac_effective_field(part, a * p1 + p2, e)
    rhs = a * ac_effective_field(part, p1, e) + ac_effective_field(part, p2, e)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)
    b = ac_effective_field(part, p1, e)
    assert abs(b @ p1) <= 1e-9 * (1 + np.linalg.norm(p1) ** 2 * np.linalg.norm(e))
    assert abs(b @ e) <= 1e-9 * (1 + np.linalg.norm(e) ** 2 * np.linalg.norm(p1))
