"""Spin-1/2 Aharonov-Bohm-type interferometry.

Precession and Heisenberg-picture dynamics of a magnetic moment, spin
autocorrelation operators and torque moments, a two-path interferometer on
path x spin space, and the vector-potential / winding-number side of the
magnetic AB effect.
"""

from .correlation import (
    autocorr_eom_residual,
    autocorrelation,
    autocorrelation_series,
    correlation_angle,
    torque_fluctuations,
    torque_operator,
)
from .errors import AbspinError, SingularityError, ValidationError
from .gauge import (
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
from .interferometer import (
    FieldPulse,
    Free,
    OpticalPhase,
    ShieldedPotential,
    arm_unitary,
    energy_independence_scan,
    run_mach_zehnder,
    scalar_reduction_check,
)
from .kernels import BACKEND
from .scenario import emit, parse_scenario, run_scenario
from .spin_algebra import SpinState, check_transverse_spin_condition, commutator, expectation, pauli
from .spin_dynamics import (
    FieldProfile,
    FieldSegment,
    Particle,
    heisenberg_evolve,
    oracle_propagator,
    precession_frequency,
    precession_residual,
    propagator,
)

__version__ = "0.1.0"
