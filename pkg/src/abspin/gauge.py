"""Vector potentials, line integrals and winding numbers around a point flux.

The solenoid is idealised as a flux ``flux`` concentrated at ``flux_point``:

    A(r) = flux / (2 pi |r - r0|) e_phi + grad chi(r)

where chi is a single-valued gauge function built from Gaussian bumps.
Line integrals of the solenoid term are done exactly by summing subtended
angles; the gauge term is integrated numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ConsistencyError, SingularityError, ValidationError
from .spin_dynamics import Particle

DEFAULT_EPS = 1e-9
DEFAULT_SAMPLES = 200_000
PHASE_TOL = 1e-9
TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class GaugeBump:
    """chi(r) = amplitude * exp(-|r - center|^2 / (2 width^2))."""

    center: tuple
    amplitude: float
    width: float

    def __post_init__(self):
        c = tuple(float(x) for x in np.asarray(self.center, dtype=float).reshape(2))
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "width", float(self.width))
        if not (math.isfinite(self.amplitude) and all(map(math.isfinite, c))):
            raise ValidationError("gauge bump parameters must be finite")
        if not self.width > 0:
            raise ValidationError(f"gauge bump width must be positive, got {self.width!r}")


@dataclass(frozen=True)
class GaugeField:
    flux: float
    flux_point: tuple = (0.0, 0.0)
    bumps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "flux", float(self.flux))
        object.__setattr__(
            self, "flux_point", tuple(float(x) for x in np.asarray(self.flux_point, dtype=float).reshape(2))
        )
        object.__setattr__(
            self, "bumps", tuple(b if isinstance(b, GaugeBump) else GaugeBump(*b) for b in self.bumps)
        )

    def with_bumps(self, bumps) -> "GaugeField":
        return GaugeField(self.flux, self.flux_point, tuple(bumps))

    @property
    def bump_arrays(self):
        centers = np.array([b.center for b in self.bumps], dtype=float).reshape(-1, 2)
        amps = np.array([b.amplitude for b in self.bumps], dtype=float)
        widths = np.array([b.width for b in self.bumps], dtype=float)
        return centers, amps, widths

    def chi(self, point) -> float:
        """Gauge function at ``point``."""
        x, y = np.asarray(point, dtype=float)
        return float(sum(
            b.amplitude * math.exp(-((x - b.center[0]) ** 2 + (y - b.center[1]) ** 2) / (2 * b.width**2))
            for b in self.bumps
        ))

    def grad_chi(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        g = np.zeros(2)
        for b in self.bumps:
            d = p - b.center
            g -= b.amplitude * math.exp(-d @ d / (2 * b.width**2)) / b.width**2 * d
        return g


@dataclass(frozen=True, eq=False)
class PlanarPath:
    """Polyline that must stay at least ``eps`` away from ``flux_point``."""

    vertices: np.ndarray
    flux_point: tuple = (0.0, 0.0)
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise ValidationError("a path needs at least two 2D vertices")
        if not np.all(np.isfinite(v)):
            raise ValidationError("path vertices must be finite")
        p = tuple(float(x) for x in np.asarray(self.flux_point, dtype=float).reshape(2))
        d = kernels.min_distance(v, *p)
        if d <= self.eps:
            raise SingularityError(f"path passes within {d:.3e} of the flux point (eps={self.eps:g})")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "flux_point", p)

    @classmethod
    def circle(cls, radius=1.0, center=(0.0, 0.0), n=64, turns=1, start_angle=0.0,
               flux_point=(0.0, 0.0)) -> "PlanarPath":
        """Closed regular polygon approximating a circle, ``turns`` times around."""
        k = int(n * abs(turns))
        ang = start_angle + np.sign(turns) * np.linspace(0, TWO_PI * abs(turns), k + 1)
        v = np.column_stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)])
        v[-1] = v[0]
        return cls(v, flux_point)

    @property
    def start(self) -> np.ndarray:
        return self.vertices[0]

    @property
    def end(self) -> np.ndarray:
        return self.vertices[-1]

    @property
    def closed(self) -> bool:
        return bool(np.array_equal(self.start, self.end))

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.vertices, axis=0), axis=1)))

    def reversed(self) -> "PlanarPath":
        return PlanarPath(self.vertices[::-1], self.flux_point, self.eps)

    def then(self, other: "PlanarPath") -> "PlanarPath":
        """Concatenate; ``other`` must start where this path ends."""
        if not np.allclose(self.end, other.start, rtol=0, atol=1e-12):
            raise ValidationError("paths do not join")
        return PlanarPath(np.vstack([self.vertices, other.vertices[1:]]), self.flux_point, self.eps)


def _check_point(field: GaugeField, path: PlanarPath):
    if path.flux_point != field.flux_point:
        raise ValidationError("path and field refer to different flux points")


def vector_potential(field: GaugeField, point) -> np.ndarray:
    d = np.asarray(point, dtype=float) - field.flux_point
    r2 = float(d @ d)
    if r2 == 0.0:
        raise SingularityError("vector potential is singular at the flux point")
    return field.flux / (TWO_PI * r2) * np.array([-d[1], d[0]]) + field.grad_chi(point)


def subtended_angle(path: PlanarPath) -> float:
    """Total signed angle swept around the flux point."""
    return kernels.angle_sum(path.vertices, *path.flux_point)


def line_integral(field: GaugeField, path: PlanarPath, samples_per_segment: int = DEFAULT_SAMPLES,
                  solenoid: str = "exact") -> float:
    """Integral of A.dr along ``path``.

    ``solenoid="exact"`` uses flux * angle / 2pi for the solenoid term;
    ``"quadrature"`` integrates it with the same composite midpoint rule as
    the gauge term (useful only as a cross-check).
    """
    _check_point(field, path)
    if samples_per_segment < 1:
        raise ValidationError("samples_per_segment must be >= 1")
    if solenoid == "exact":
        base = field.flux * subtended_angle(path) / TWO_PI
    elif solenoid == "quadrature":
        base = kernels.solenoid_line_integral(path.vertices, *field.flux_point, field.flux,
                                              int(samples_per_segment))
    else:
        raise ValidationError(f"unknown solenoid method {solenoid!r}")
    if not field.bumps:
        return base
    return base + kernels.gauge_line_integral(path.vertices, *field.bump_arrays, int(samples_per_segment))


def winding_number(path: PlanarPath):
    """Integer winding about the flux point for closed paths, angle/2pi otherwise."""
    if np.all(np.linalg.norm(np.diff(path.vertices, axis=0), axis=1) == 0):
        raise ValidationError("winding number of a zero-length path is undefined")
    turns = subtended_angle(path) / TWO_PI
    if path.closed:
        return int(round(turns))
    return turns


@dataclass(frozen=True)
class ABPhase:
    phase: float
    delta_n: int
    expected: float  # delta_n * e * flux / (hbar c)


def ab_phase_difference(path1: PlanarPath, path2: PlanarPath, flux: float, particle: Particle,
                        field: GaugeField = None, samples_per_segment: int = DEFAULT_SAMPLES) -> ABPhase:
    """Phase difference (e / hbar c)(integral along path1 - integral along path2)."""
    if not (np.allclose(path1.start, path2.start, rtol=0, atol=1e-12)
            and np.allclose(path1.end, path2.end, rtol=0, atol=1e-12)):
        raise ValidationError("paths must share both endpoints")
    if field is None:
        field = GaugeField(flux, path1.flux_point)
    elif field.flux != flux:
        raise ValidationError("flux disagrees with the supplied gauge field")
    coupling = particle.charge / (particle.hbar * particle.c)
    phase = coupling * (line_integral(field, path1, samples_per_segment)
                        - line_integral(field, path2, samples_per_segment))
    delta_n = winding_number(path1.then(path2.reversed()))
    expected = delta_n * coupling * flux
    if abs(phase - expected) > PHASE_TOL * max(1.0, abs(expected)):
        raise ConsistencyError(f"phase {phase!r} differs from winding prediction {expected!r}")
    return ABPhase(phase=phase, delta_n=delta_n, expected=expected)


def random_gauge(rng: np.random.Generator, anchors, n_bumps: int = 3, amplitude: float = 1.0,
                 width_range=(0.5, 1.5)) -> tuple:
    """Random bumps centred near the given anchor points."""
    anchors = np.asarray(anchors, dtype=float).reshape(-1, 2)
    bumps = []
    for _ in range(n_bumps):
        c = anchors[rng.integers(len(anchors))] + rng.normal(scale=0.3, size=2)
        bumps.append(GaugeBump(tuple(c), amplitude * rng.normal(), rng.uniform(*width_range)))
    return tuple(bumps)


@dataclass(frozen=True)
class GaugeReport:
    trials: int
    closed_max_shift: float
    pair_max_shift: float
    open_max_shift: float
    per_path_max_shift: tuple
    invariant: bool  # closed loops and same-endpoint differences unchanged
    gauge_dependent: bool  # some single open path changed
    tolerance: float = PHASE_TOL
    witness_threshold: float = 1e-3


def gauge_invariance_report(field: GaugeField, paths: Sequence[PlanarPath], trials: int = 20,
                            seed: int = 0, samples_per_segment: int = DEFAULT_SAMPLES,
                            n_bumps: int = 3) -> GaugeReport:
    """Apply random single-valued gauge transformations and record integral shifts."""
    paths = list(paths)
    if not any(p.closed for p in paths) or all(p.closed for p in paths):
        raise ValidationError("gauge report needs at least one open and one closed path")
    for p in paths:
        _check_point(field, p)
    rng = np.random.default_rng(seed)
    anchors = np.vstack([p.vertices for p in paths])
    base = [line_integral(field, p, samples_per_segment) for p in paths]
    pairs = [
        (i, j) for i in range(len(paths)) for j in range(i + 1, len(paths))
        if not paths[i].closed and not paths[j].closed
        and np.allclose(paths[i].start, paths[j].start) and np.allclose(paths[i].end, paths[j].end)
    ]
    per_path = np.zeros(len(paths))
    pair_max = 0.0
    for _ in range(trials):
        gauged = field.with_bumps(field.bumps + random_gauge(rng, anchors, n_bumps))
        shifts = [line_integral(gauged, p, samples_per_segment) - b for p, b in zip(paths, base)]
        per_path = np.maximum(per_path, np.abs(shifts))
        for i, j in pairs:
            pair_max = max(pair_max, abs(shifts[i] - shifts[j]))
    closed_max = max((s for s, p in zip(per_path, paths) if p.closed), default=0.0)
    open_max = max((s for s, p in zip(per_path, paths) if not p.closed), default=0.0)
    return GaugeReport(
        trials=trials,
        closed_max_shift=float(closed_max),
        pair_max_shift=float(pair_max),
        open_max_shift=float(open_max),
        per_path_max_shift=tuple(float(s) for s in per_path),
        invariant=closed_max < PHASE_TOL and pair_max < PHASE_TOL,
        gauge_dependent=open_max > 1e-3,
    )


def ac_effective_field(particle: Particle, momentum, efield) -> np.ndarray:
    """Rest-frame magnetic field (p / m c) x E seen by a moving magnetic moment."""
    p = np.asarray(momentum, dtype=float).reshape(3)
    e = np.asarray(efield, dtype=float).reshape(3)
    return np.cross(p, e) / (particle.mass * particle.c)
