"""Spin autocorrelation operators, correlation angle, and torque moments.

For a constant field B along z the transverse spin precesses at
omega = 2 mu B / hbar. The symmetrised autocorrelations

    C(t) = 1/4 [sx(0) sx(t) + sy(0) sy(t) + h.c.]
    S(t) = 1/4 [sx(0) sy(t) - sy(0) sx(t) + h.c.]

are multiples of the identity, cos(omega t) and -sin(omega t), whatever
the spin state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, ValidationError
from .spin_algebra import (
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    SpinState,
    dagger,
    expectation,
    identity_coefficient,
)
from .spin_dynamics import Particle, evolved_sigmas, precession_frequency

# Diagnostic codes surfaced by the scenario runner when the matching code path runs.
EOM_SIGN_NOTE = (
    "autocorr-eom-sign: dS/dt is implemented as -omega*C; the form dS/dt = +omega*C "
    "is not satisfied by C = cos(omega t), S = -sin(omega t)"
)
TORQUE_MOMENT_NOTE = (
    "torque-second-moment: <Lx^2> = <Ly^2> is reported as (mu*B)^2; the form (m*B)^2 "
    "with m a mass is dimensionally not a torque squared"
)

OPERATOR_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class AutocorrResult:
    t: float
    C: np.ndarray
    S: np.ndarray
    c_value: float
    s_value: float
    theta: float  # principal value in (-pi, pi]


def _autocorr_operators(sx0, sy0, sxt, syt):
    c = sx0 @ sxt + sy0 @ syt
    s = sx0 @ syt - sy0 @ sxt
    return (c + dagger(c)) / 4, (s + dagger(s)) / 4


def autocorrelation(particle: Particle, magnitude: float, t: float) -> AutocorrResult:
    """Build C(t), S(t) from Heisenberg-evolved Pauli operators (field along z)."""
    sxt, syt, _ = evolved_sigmas(particle, (0.0, 0.0, magnitude), t)
    C, S = _autocorr_operators(SIGMA_X, SIGMA_Y, sxt, syt)
    c_val = identity_coefficient(C).real
    s_val = identity_coefficient(S).real
    # both must be proportional to the identity
    off = max(np.max(np.abs(C - c_val * IDENTITY)), np.max(np.abs(S - s_val * IDENTITY)))
    if off > OPERATOR_TOL:
        raise ConsistencyError(f"autocorrelation operators not proportional to identity ({off:.2e})")
    return AutocorrResult(t=float(t), C=C, S=S, c_value=c_val, s_value=s_val,
                          theta=math.atan2(-s_val, c_val))


@dataclass(frozen=True)
class EomResidual:
    dC: float  # |dC/dt - omega S|
    dS: float  # |dS/dt + omega C|, the consistent sign
    dS_printed_sign: float  # |dS/dt - omega C|, kept for comparison
    notes: tuple = (EOM_SIGN_NOTE,)


def autocorr_eom_residual(particle: Particle, magnitude: float, t: float, dt: float) -> EomResidual:
    if dt <= 0:
        raise ValidationError("dt must be positive")
    omega = precession_frequency(particle, magnitude)
    plus = autocorrelation(particle, magnitude, t + dt)
    minus = autocorrelation(particle, magnitude, t - dt)
    now = autocorrelation(particle, magnitude, t)
    c_dot = (plus.C - minus.C) / (2 * dt)
    s_dot = (plus.S - minus.S) / (2 * dt)

    def norm(a):
        return float(np.max(np.abs(a)))

    return EomResidual(
        dC=norm(c_dot - omega * now.S),
        dS=norm(s_dot + omega * now.C),
        dS_printed_sign=norm(s_dot - omega * now.C),
    )


@dataclass(frozen=True)
class CorrelationAngle:
    theta: float  # omega * tau
    delta_phi: float  # mu B tau / hbar
    ratio: float  # theta / delta_phi, nan when delta_phi == 0


def correlation_angle(particle: Particle, magnitude: float, tau: float) -> CorrelationAngle:
    """Correlation angle after time ``tau`` together with the SAB phase mu B tau / hbar."""
    theta = precession_frequency(particle, magnitude) * tau
    delta_phi = particle.mu * magnitude * tau / particle.hbar
    if abs(theta - 2 * delta_phi) > 1e-12 * max(1.0, abs(theta)):
        raise ConsistencyError(f"theta={theta!r} differs from 2*delta_phi={2 * delta_phi!r}")
    ratio = theta / delta_phi if delta_phi != 0 else math.nan
    return CorrelationAngle(theta=theta, delta_phi=delta_phi, ratio=ratio)


def autocorrelation_series(particle: Particle, magnitude: float, times, state: SpinState) -> dict:
    """Column table t, c_value, s_value, theta, sx, sy, sz.

    ``theta`` is unwrapped so that it grows continuously as omega*t; the
    principal value is in each :class:`AutocorrResult`. sx, sy, sz are the
    Heisenberg-picture expectations in ``state``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) <= 0):
        raise ValidationError("time grid must be one-dimensional and strictly increasing")
    rows = []
    for t in times:
        r = autocorrelation(particle, magnitude, t)
        sig = evolved_sigmas(particle, (0.0, 0.0, magnitude), t)
        rows.append((t, r.c_value, r.s_value, r.theta, *(expectation(state, s) for s in sig)))
    cols = np.array(rows, dtype=float).reshape(-1, 7).T
    table = dict(zip(("t", "c_value", "s_value", "theta", "sx", "sy", "sz"), cols))
    table["theta"] = np.unwrap(table["theta"])
    return table


def torque_operator(particle: Particle, field) -> tuple:
    """Components of L = mu sigma x B."""
    bx, by, bz = np.asarray(field, dtype=float).reshape(3)
    mu = particle.mu
    return (
        mu * (SIGMA_Y * bz - SIGMA_Z * by),
        mu * (SIGMA_Z * bx - SIGMA_X * bz),
        mu * (SIGMA_X * by - SIGMA_Y * bx),
    )


@dataclass(frozen=True)
class TorqueStats:
    mean_Lx: float
    mean_Ly: float
    mean_Lx2: float
    mean_Ly2: float
    var_Lx: float
    var_Ly: float
    notes: tuple = (TORQUE_MOMENT_NOTE,)


def torque_fluctuations(state: SpinState, particle: Particle, field) -> TorqueStats:
    lx, ly, _ = torque_operator(particle, field)
    mx, my = expectation(state, lx), expectation(state, ly)
    mx2, my2 = expectation(state, lx @ lx), expectation(state, ly @ ly)
    return TorqueStats(
        mean_Lx=mx,
        mean_Ly=my,
        mean_Lx2=mx2,
        mean_Ly2=my2,
        var_Lx=max(mx2 - mx * mx, 0.0),
        var_Ly=max(my2 - my * my, 0.0),
    )


def spin_rate_expectation(state: SpinState, particle: Particle, field) -> np.ndarray:
    """<d sigma/dt> * hbar/2 at t = 0, which must equal <L>."""
    field = np.asarray(field, dtype=float).reshape(3)
    sig = (SIGMA_X, SIGMA_Y, SIGMA_Z)
    # i/hbar [H, sigma] with H = -mu sigma.B
    h = -particle.mu * sum(b * s for b, s in zip(field, sig))
    rates = [1j / particle.hbar * (h @ s - s @ h) for s in sig]
    return np.array([particle.hbar / 2 * expectation(state, r) for r in rates])
