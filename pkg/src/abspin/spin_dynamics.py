"""Spin propagation under H = -mu sigma.B(t) with piecewise-constant fields.

Natural units are the default (hbar = 1). Every phase computed here is a
dimensionless combination such as mu*B*tau/hbar, so any consistent unit
system can be used through :class:`Particle`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ValidationError
from .spin_algebra import (
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    dagger,
    require_unitary,
    sigma_dot,
)

UNIT_TOL = 1e-12
Z_HAT = (0.0, 0.0, 1.0)


def _finite(name, value):
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class Particle:
    """Physical constants for one particle species.

    ``mu`` is the magnetic moment (energy per field unit, may be negative),
    ``charge`` is e in the gauge couplings e/hbar and e/(hbar c).
    """

    mu: float = 1.0
    mass: float = 1.0
    hbar: float = 1.0
    c: float = 1.0
    charge: float = 1.0

    def __post_init__(self):
        for name in ("mu", "mass", "hbar", "c", "charge"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        for name in ("mass", "hbar", "c"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"particle {name} must be positive")


@dataclass(frozen=True)
class FieldSegment:
    duration: float
    magnitude: float
    direction: tuple = Z_HAT

    def __post_init__(self):
        duration = _finite("duration", self.duration)
        if duration < 0:
            raise ValidationError(f"segment duration must be >= 0, got {duration!r}")
        magnitude = _finite("magnitude", self.magnitude)
        n = tuple(float(x) for x in np.asarray(self.direction, dtype=float).reshape(3))
        if abs(math.sqrt(sum(x * x for x in n)) - 1) > UNIT_TOL:
            raise ValidationError(f"field direction {n} is not a unit vector")
        object.__setattr__(self, "duration", duration)
        object.__setattr__(self, "magnitude", magnitude)
        object.__setattr__(self, "direction", n)

    @property
    def field(self) -> np.ndarray:
        return self.magnitude * np.asarray(self.direction)


@dataclass(frozen=True)
class FieldProfile:
    """B(t) as an ordered sequence of constant-field segments."""

    segments: tuple = ()

    def __post_init__(self):
        segs = tuple(
            s if isinstance(s, FieldSegment) else FieldSegment(*s) for s in self.segments
        )
        object.__setattr__(self, "segments", segs)

    @classmethod
    def constant(cls, magnitude, duration, direction=Z_HAT) -> "FieldProfile":
        return cls((FieldSegment(duration, magnitude, direction),))

    def then(self, other: "FieldProfile") -> "FieldProfile":
        return FieldProfile(self.segments + other.segments)

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)

    def rates(self, particle: Particle) -> np.ndarray:
        """Angular-rate vectors mu*B*n/hbar, one row per segment."""
        return np.array(
            [particle.mu * s.field / particle.hbar for s in self.segments]
        ).reshape(-1, 3)


def rotation_unitary(angle: float, direction: Sequence[float]) -> np.ndarray:
    """exp(i angle sigma.n) = cos(angle) + i sin(angle) sigma.n for unit n."""
    return math.cos(angle) * IDENTITY + 1j * math.sin(angle) * sigma_dot(direction)


def segment_unitary(particle: Particle, seg: FieldSegment) -> np.ndarray:
    return rotation_unitary(particle.mu * seg.magnitude * seg.duration / particle.hbar, seg.direction)


def propagator(particle: Particle, profile: FieldProfile) -> np.ndarray:
    """Time-ordered spin propagator for the whole profile.

    Segments are applied in order, so the first segment is the rightmost
    factor.
    """
    u = IDENTITY.copy()
    for seg in profile.segments:
        u = segment_unitary(particle, seg) @ u
    return u


def oracle_propagator(particle: Particle, profile: FieldProfile, steps_per_segment: int) -> np.ndarray:
    """Independent sub-stepped propagator for cross-checking :func:`propagator`.

    The whole profile is cut into ``steps_per_segment * len(segments)``
    uniform steps that ignore segment boundaries. Each step uses the
    exponential of the time-averaged generator over that step (a midpoint
    exponential rule), evaluated by scaled Taylor series rather than the
    Pauli closed form. For a fixed field direction all generators commute and
    the result is exact; otherwise steps that straddle a direction change
    carry an O(dt^2) error, so the global error is second order.
    """
    if int(steps_per_segment) != steps_per_segment or steps_per_segment < 1:
        raise ValidationError(f"steps_per_segment must be a positive integer, got {steps_per_segment!r}")
    if not profile.segments:
        return IDENTITY.copy()
    durations = np.array([s.duration for s in profile.segments])
    nsteps = int(steps_per_segment) * len(profile.segments)
    return kernels.magnus_product(durations, profile.rates(particle), nsteps)


def heisenberg_evolve(op, u) -> np.ndarray:
    """Heisenberg-picture operator U^+ op U for the propagator U from 0 to t."""
    u = require_unitary(u)
    return dagger(u) @ np.asarray(op, dtype=complex) @ u


def precession_frequency(particle: Particle, magnitude: float) -> float:
    """omega = 2 mu B / hbar."""
    return 2.0 * particle.mu * magnitude / particle.hbar


def evolved_sigmas(particle: Particle, field, t: float) -> tuple:
    """sigma_x(t), sigma_y(t), sigma_z(t) for a constant field vector.

    ``t`` may be negative; this is used for centred finite differences.
    """
    field = np.asarray(field, dtype=float).reshape(3)
    b = float(np.linalg.norm(field))
    n = field / b if b > 0 else np.array(Z_HAT)
    u = rotation_unitary(particle.mu * b * t / particle.hbar, n)
    return tuple(heisenberg_evolve(s, u) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z))


@dataclass(frozen=True)
class PrecessionResidual:
    t: float
    dt: float
    residual: float  # max over components of the operator norm
    components: tuple  # (x, y, z) operator norms


def precession_residual(particle: Particle, magnitude: float, t: float, dt: float = 1e-3,
                        direction: Iterable[float] = Z_HAT) -> PrecessionResidual:
    """Residual of (hbar/2) dsigma/dt - mu sigma(t) x B at time ``t``.

    The derivative is a centred difference, so the residual is O(dt^2).
    """
    if dt <= 0:
        raise ValidationError("dt must be positive")
    field = magnitude * np.asarray(tuple(direction), dtype=float)
    plus = evolved_sigmas(particle, field, t + dt)
    minus = evolved_sigmas(particle, field, t - dt)
    now = evolved_sigmas(particle, field, t)
    bx, by, bz = field
    cross = (
        now[1] * bz - now[2] * by,
        now[2] * bx - now[0] * bz,
        now[0] * by - now[1] * bx,
    )
    norms = tuple(
        float(np.linalg.norm(particle.hbar / 2 * (p - m) / (2 * dt) - particle.mu * c, 2))
        for p, m, c in zip(plus, minus, cross)
    )
    return PrecessionResidual(t=t, dt=dt, residual=max(norms), components=norms)
