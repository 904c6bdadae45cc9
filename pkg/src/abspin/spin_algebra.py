"""2x2 operator algebra and spin-1/2 states.

Operators are plain ``(2, 2)`` complex numpy arrays. States are wrapped in
:class:`SpinState`, which always holds a density matrix and optionally the
spinor it came from.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidObservable, NotUnitary, ValidationError

ATOL = 1e-12

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}
for _m in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.setflags(write=False)


def pauli(axis: str) -> np.ndarray:
    """Return the Pauli matrix for ``axis`` in the sigma_z-diagonal representation."""
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise ValidationError(f"unknown Pauli axis {axis!r}; expected x, y or z") from None


def sigma_dot(v) -> np.ndarray:
    """sigma . v for a real 3-vector ``v``."""
    x, y, z = np.asarray(v, dtype=float)
    return x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z


def as_operator(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.shape != (2, 2):
        raise ValidationError(f"spin operator must be 2x2, got shape {a.shape}")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conjugate(np.transpose(a))


def commutator(a, b) -> np.ndarray:
    a, b = as_operator(a), as_operator(b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = as_operator(a), as_operator(b)
    return a @ b + b @ a


def is_hermitian(a, atol: float = ATOL) -> bool:
    a = as_operator(a)
    return bool(np.max(np.abs(a - dagger(a))) <= atol)


def is_unitary(u, atol: float = ATOL) -> bool:
    u = as_operator(u)
    return bool(np.max(np.abs(dagger(u) @ u - IDENTITY)) <= atol)


def require_unitary(u, atol: float = ATOL) -> np.ndarray:
    u = as_operator(u)
    if not is_unitary(u, atol):
        err = np.max(np.abs(dagger(u) @ u - IDENTITY))
        raise NotUnitary(f"operator is not unitary (max |U^+U - 1| = {err:.3e})")
    return u


def identity_coefficient(a) -> complex:
    """Coefficient of the identity in the Pauli expansion, tr(a)/2."""
    return complex(np.trace(as_operator(a))) / 2


def pauli_components(a) -> np.ndarray:
    """Return (a0, ax, ay, az) with a = a0*1 + ax*sx + ay*sy + az*sz."""
    a = as_operator(a)
    return np.array([np.trace(a @ p) / 2 for p in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z)])


@dataclass(frozen=True, eq=False)
class SpinState:
    """A spin-1/2 state stored as a density matrix.

    Use the constructors rather than the raw initialiser: :meth:`from_spinor`,
    :meth:`from_bloch`, :meth:`eigenstate`, :meth:`unpolarized`.
    """

    rho: np.ndarray
    spinor: Optional[np.ndarray] = None

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.shape != (2, 2):
            raise ValidationError(f"density matrix must be 2x2, got {rho.shape}")
        if not is_hermitian(rho):
            raise ValidationError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1) > ATOL:
            raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -ATOL:
            raise ValidationError("density matrix has a negative eigenvalue")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        if self.spinor is not None:
            psi = np.array(self.spinor, dtype=complex)
            psi.setflags(write=False)
            object.__setattr__(self, "spinor", psi)

    @classmethod
    def from_spinor(cls, psi) -> "SpinState":
        psi = np.asarray(psi, dtype=complex).reshape(2)
        norm = np.linalg.norm(psi)
        if abs(norm - 1) > ATOL:
            raise ValidationError(f"spinor norm is {norm!r}, expected 1")
        return cls(np.outer(psi, psi.conj()), psi)

    @classmethod
    def from_bloch(cls, r) -> "SpinState":
        r = np.asarray(r, dtype=float).reshape(3)
        if np.linalg.norm(r) > 1 + ATOL:
            raise ValidationError(f"Bloch vector length {np.linalg.norm(r)!r} exceeds 1")
        return cls((IDENTITY + sigma_dot(r)) / 2)

    @classmethod
    def eigenstate(cls, axis: str, sign: int = +1) -> "SpinState":
        """Pure eigenstate of sigma_axis with eigenvalue ``sign``."""
        if sign not in (1, -1):
            raise ValidationError(f"eigenvalue must be +1 or -1, got {sign!r}")
        vals, vecs = np.linalg.eigh(pauli(axis))
        psi = vecs[:, 1 if sign > 0 else 0]
        # fix the global phase so the first nonzero amplitude is real positive
        k = int(np.argmax(np.abs(psi) > 1e-9))
        psi = psi * np.exp(-1j * np.angle(psi[k]))
        return cls.from_spinor(psi)

    @classmethod
    def unpolarized(cls) -> "SpinState":
        return cls(IDENTITY / 2)

    @property
    def is_pure(self) -> bool:
        return abs(np.trace(self.rho @ self.rho).real - 1) <= 1e-10

    @property
    def bloch_vector(self) -> np.ndarray:
        return np.array([np.trace(self.rho @ p).real for p in (SIGMA_X, SIGMA_Y, SIGMA_Z)])

    def evolve(self, u) -> "SpinState":
        """Schroedinger-picture update rho -> U rho U^+."""
        u = require_unitary(u)
        rho = u @ self.rho @ dagger(u)
        rho = (rho + dagger(rho)) / 2
        spinor = None if self.spinor is None else u @ self.spinor
        return SpinState(rho, spinor)


def expectation(state: SpinState, op) -> float:
    """<op> = tr(rho op) for a Hermitian ``op``."""
    op = as_operator(op)
    if not is_hermitian(op, atol=ATOL * max(1.0, float(np.max(np.abs(op))))):
        raise InvalidObservable("expectation requires a Hermitian operator")
    value = np.trace(state.rho @ op)
    if abs(value.imag) > 1e-10 * max(1.0, float(np.max(np.abs(op)))):
        raise InvalidObservable(f"expectation has imaginary part {value.imag!r}")
    return float(value.real)


@dataclass(frozen=True)
class TransverseSpinReport:
    mean_sx: float
    mean_sy: float
    mean_sx2: float
    mean_sy2: float
    # sigma_x = sigma_y = 0 as an operator statement: never satisfiable
    satisfiable: bool
    averages_vanish: bool


def check_transverse_spin_condition(state: SpinState) -> TransverseSpinReport:
    """Test whether a state could have sigma_x = sigma_y = 0.

    Only the averages can vanish. Since sigma_x**2 = sigma_y**2 = 1 as
    operators, <sigma_x**2> = <sigma_y**2> = 1 in every state, so the
    operator condition is never met.
    """
    sx, sy = expectation(state, SIGMA_X), expectation(state, SIGMA_Y)
    sx2 = expectation(state, SIGMA_X @ SIGMA_X)
    sy2 = expectation(state, SIGMA_Y @ SIGMA_Y)
    # zero must be an eigenvalue of both for the condition to hold in some state
    zero_allowed = any(
        np.min(np.abs(np.linalg.eigvalsh(p))) <= ATOL for p in (SIGMA_X, SIGMA_Y)
    )
    return TransverseSpinReport(
        mean_sx=sx,
        mean_sy=sy,
        mean_sx2=sx2,
        mean_sy2=sy2,
        satisfiable=zero_allowed and sx2 <= ATOL and sy2 <= ATOL,
        averages_vanish=abs(sx) <= ATOL and abs(sy) <= ATOL,
    )
