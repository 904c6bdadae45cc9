"""Balanced two-path Mach-Zehnder interferometer on path x spin space.

Each arm is a list of elements applied in time order. An arm contributes a
spin operator U_k and a spin-independent phase p_k, combined as
V_k = exp(i p_k) U_k. With 50/50 splitting and recombination the output
amplitudes are (V1 + V2)|chi>/2 (port 1) and (V1 - V2)|chi>/2 (port 2), so

    I1 = (1 + Re g) / 2,   I2 = (1 - Re g) / 2,   g = tr(rho V2^+ V1).

The relative phase is arg g and the fringe visibility is |g|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ReductionInvalid, ValidationError
from .spin_algebra import ATOL, IDENTITY, SIGMA_Z, SpinState, dagger, expectation
from .spin_dynamics import FieldProfile, FieldSegment, Particle, Z_HAT, propagator


def _nonneg(name, value):
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ValidationError(f"{name} must be finite and >= 0, got {value!r}")
    return value


def _finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class FieldPulse:
    B: float
    tau: float
    direction: tuple = Z_HAT

    def __post_init__(self):
        seg = FieldSegment(self.tau, self.B, self.direction)
        object.__setattr__(self, "B", seg.magnitude)
        object.__setattr__(self, "tau", seg.duration)
        object.__setattr__(self, "direction", seg.direction)

    @property
    def segment(self) -> FieldSegment:
        return FieldSegment(self.tau, self.B, self.direction)

    @property
    def duration(self) -> float:
        return self.tau


@dataclass(frozen=True)
class ShieldedPotential:
    """Potential step dV applied for ``tau`` while the particle is shielded."""

    dV: float
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "dV", _finite("dV", self.dV))
        object.__setattr__(self, "tau", _nonneg("tau", self.tau))

    @property
    def duration(self) -> float:
        return self.tau


@dataclass(frozen=True)
class OpticalPhase:
    """Time-programmed phase shifter: piecewise (phase rate, duration) pairs."""

    profile: tuple = ()

    def __post_init__(self):
        prof = tuple(
            (_finite("phase rate", r), _nonneg("duration", d)) for r, d in self.profile
        )
        object.__setattr__(self, "profile", prof)

    @property
    def phase(self) -> float:
        return sum(r * d for r, d in self.profile)

    @property
    def duration(self) -> float:
        return sum(d for _, d in self.profile)


@dataclass(frozen=True)
class Free:
    tau: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tau", _nonneg("tau", self.tau))

    @property
    def duration(self) -> float:
        return self.tau


ArmElement = Union[FieldPulse, ShieldedPotential, OpticalPhase, Free]


def arm_unitary(arm: Sequence[ArmElement], particle: Particle) -> tuple:
    """Spin operator and spin-independent phase accumulated along one arm."""
    u = IDENTITY.copy()
    phase = 0.0
    for el in arm:
        if isinstance(el, FieldPulse):
            u = propagator(particle, FieldProfile((el.segment,))) @ u
        elif isinstance(el, ShieldedPotential):
            # H = -e V gives exp(+i e V tau / hbar)
            phase += particle.charge * el.dV * el.tau / particle.hbar
        elif isinstance(el, OpticalPhase):
            phase += el.phase
        elif isinstance(el, Free):
            pass
        else:
            raise ValidationError(f"unknown arm element {el!r}")
    return u, phase


def arm_duration(arm: Sequence[ArmElement]) -> float:
    return sum(el.duration for el in arm)


@dataclass(frozen=True)
class BeamOutput:
    I1: float
    I2: float
    relative_phase: float
    visibility: float
    overlap: complex = field(default=0j, compare=False)


def _output(v1, v2, beam: SpinState) -> BeamOutput:
    rho = beam.rho
    plus, minus = v1 + v2, v1 - v2
    i1 = np.trace(plus @ rho @ dagger(plus)).real / 4
    i2 = np.trace(minus @ rho @ dagger(minus)).real / 4
    g = complex(np.trace(rho @ dagger(v2) @ v1))
    return BeamOutput(I1=float(i1), I2=float(i2), relative_phase=math.atan2(g.imag, g.real),
                      visibility=float(abs(g)), overlap=g)


def run_mach_zehnder(arm1, arm2, beam: SpinState, particle: Particle,
                     common_phase: float = 0.0) -> BeamOutput:
    """Output intensities for a beam split into ``arm1`` and ``arm2``.

    ``common_phase`` is added to both arms (e.g. a kinetic phase) and cannot
    affect the result.
    """
    u1, p1 = arm_unitary(arm1, particle)
    u2, p2 = arm_unitary(arm2, particle)
    v1 = np.exp(1j * (p1 + common_phase)) * u1
    v2 = np.exp(1j * (p2 + common_phase)) * u2
    return _output(v1, v2, beam)


def visibility_sweep(arm1, arm2, beam: SpinState, particle: Particle, points: int = 721) -> float:
    """Fringe swing max(I1) - min(I1) when an extra phase is swept on arm 1."""
    i1 = [
        run_mach_zehnder(list(arm1) + [OpticalPhase(((phi, 1.0),))], arm2, beam, particle).I1
        for phi in np.linspace(0, 2 * np.pi, points)
    ]
    return max(i1) - min(i1)


@dataclass(frozen=True)
class ReductionReport:
    full: BeamOutput
    scalar: BeamOutput
    max_difference: float
    equivalent: bool


def scalar_reduction_check(B: float, tau: float, particle: Particle,
                           beam: SpinState = None, atol: float = 1e-12) -> ReductionReport:
    """Compare the spin Hamiltonian with the scalar one where sigma_z -> eigenvalue.

    Arm 1 carries a field pulse B along z for ``tau``; arm 2 is free for the
    same time. The reduction only holds for sigma_z eigenstates.
    """
    beam = SpinState.eigenstate("z", +1) if beam is None else beam
    sz = expectation(beam, SIGMA_Z)
    if abs(abs(sz) - 1) > ATOL:
        raise ReductionInvalid("scalar reduction requires a sigma_z eigenstate beam "
                               f"(got <sigma_z> = {sz:.6g})")
    eigen = round(sz)
    full = run_mach_zehnder([FieldPulse(B, tau)], [Free(tau)], beam, particle)
    scalar = run_mach_zehnder(
        [OpticalPhase(((eigen * particle.mu * B / particle.hbar, tau),))], [Free(tau)], beam, particle
    )
    dphase = abs(math.remainder(full.relative_phase - scalar.relative_phase, 2 * math.pi))
    diff = max(abs(full.I1 - scalar.I1), abs(full.I2 - scalar.I2),
               abs(full.visibility - scalar.visibility), dphase)
    return ReductionReport(full=full, scalar=scalar, max_difference=diff, equivalent=diff <= atol)


@dataclass(frozen=True)
class EnergyScan:
    energies: tuple
    phases: tuple
    outputs: tuple
    spread: float


def energy_independence_scan(arm1, arm2, particle: Particle, kinetic_energies,
                             beam: SpinState = None) -> EnergyScan:
    """Relative phase as a function of kinetic energy at fixed element timing.

    The kinetic term contributes exp(-i E T / hbar) with T the common transit
    time; it multiplies both arms and drops out of every observable.
    """
    beam = SpinState.eigenstate("z", +1) if beam is None else beam
    transit = max(arm_duration(arm1), arm_duration(arm2))
    phases, outputs = [], []
    for e in kinetic_energies:
        e = _nonneg("kinetic energy", e)
        out = run_mach_zehnder(arm1, arm2, beam, particle, common_phase=-e * transit / particle.hbar)
        phases.append(out.relative_phase)
        outputs.append(out)
    spread = float(np.ptp(phases)) if phases else 0.0
    return EnergyScan(tuple(float(e) for e in kinetic_energies), tuple(phases), tuple(outputs), spread)

