"""Single-qubit states and rotations.

States are stored as Bloch vectors; rotations follow the convention
``U = exp(-i theta n.sigma / 2)``, so a rotation acts on the Bloch vector as
a right-handed SO(3) rotation by ``theta`` about ``n``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

UNIT_TOL = 1e-12
ALGEBRA_TOL = 1e-10


@dataclass(frozen=True)
class Rotation:
    """Rotation by ``angle`` radians about the unit vector ``axis``."""

    axis: tuple[float, float, float]
    angle: float

    def __post_init__(self):
        axis = tuple(float(a) for a in self.axis)
        if len(axis) != 3:
            raise InvalidInputError(f"rotation axis must have 3 components, got {len(axis)}")
        if abs(np.linalg.norm(axis) - 1.0) > UNIT_TOL:
            raise InvalidInputError(f"rotation axis {axis} is not a unit vector")
        if not np.isfinite(self.angle):
            raise InvalidInputError("rotation angle must be finite")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "angle", float(self.angle))

    @classmethod
    def in_plane(cls, phase: float, angle: float) -> "Rotation":
        """Rotation about the xy-plane axis at azimuth ``phase``."""
        return cls((np.cos(phase), np.sin(phase), 0.0), angle)

    @classmethod
    def about_z(cls, angle: float) -> "Rotation":
        return cls((0.0, 0.0, 1.0), angle)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls((0.0, 0.0, 1.0), 0.0)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Rotation":
        """Axis-angle form of a 3x3 rotation matrix."""
        m = np.asarray(m, dtype=float)
        cos_a = np.clip((np.trace(m) - 1.0) / 2.0, -1.0, 1.0)
        angle = float(np.arccos(cos_a))
        if angle < 1e-12:
            return cls.identity()
        w = np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
        if np.pi - angle > 1e-6:
            axis = w / (2.0 * np.sin(angle))
        else:
            # Near pi the antisymmetric part vanishes; use the symmetric part.
            b = (m + np.eye(3)) / 2.0
            k = int(np.argmax(np.diag(b)))
            axis = b[:, k] / np.sqrt(b[k, k])
            if np.dot(w, axis) < 0:
                axis = -axis
        return cls(tuple(axis / np.linalg.norm(axis)), angle)

    def matrix(self) -> np.ndarray:
        """SO(3) matrix (Rodrigues formula)."""
        return rotation_matrix(self.axis, self.angle)

    def unitary(self) -> np.ndarray:
        return rotation_unitary(self)


@dataclass(frozen=True)
class QubitState:
    """Qubit state as a Bloch vector ``r`` with ``rho = (1 + r.sigma) / 2``."""

    bloch: tuple[float, float, float]

    def __post_init__(self):
        r = tuple(float(x) for x in self.bloch)
        if len(r) != 3 or not np.all(np.isfinite(r)):
            raise InvalidInputError(f"invalid Bloch vector {self.bloch!r}")
        if np.linalg.norm(r) > 1.0 + 1e-9:
            raise InvalidInputError(f"Bloch vector norm {np.linalg.norm(r)} exceeds 1")
        object.__setattr__(self, "bloch", r)

    @classmethod
    def ground(cls) -> "QubitState":
        """``|0><0|``, the +z state."""
        return cls((0.0, 0.0, 1.0))

    @classmethod
    def excited(cls) -> "QubitState":
        return cls((0.0, 0.0, -1.0))

    @classmethod
    def plus_x(cls) -> "QubitState":
        return cls((1.0, 0.0, 0.0))

    @classmethod
    def mixed(cls) -> "QubitState":
        return cls((0.0, 0.0, 0.0))

    @classmethod
    def from_density(cls, rho: np.ndarray) -> "QubitState":
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (2, 2):
            raise InvalidInputError("density matrix must be 2x2")
        if np.max(np.abs(rho - rho.conj().T)) > UNIT_TOL:
            raise InvalidInputError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > UNIT_TOL:
            raise InvalidInputError("density matrix trace differs from 1")
        return cls(tuple(float(np.real(np.trace(rho @ s))) for s in PAULIS))

    def density(self) -> np.ndarray:
        x, y, z = self.bloch
        return 0.5 * (IDENTITY + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.bloch)


def rotation_matrix(axis, angle: float) -> np.ndarray:
    n = np.asarray(axis, dtype=float)
    k = np.array([[0.0, -n[2], n[1]], [n[2], 0.0, -n[0]], [-n[1], n[0], 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rotation_unitary(r: Rotation) -> np.ndarray:
    """``exp(-i angle n.sigma / 2)`` for the rotation ``r``."""
    if not isinstance(r, Rotation):
        raise InvalidInputError("rotation_unitary expects a Rotation")
    nx, ny, nz = r.axis
    half = r.angle / 2.0
    return np.cos(half) * IDENTITY - 1j * np.sin(half) * (nx * SIGMA_X + ny * SIGMA_Y + nz * SIGMA_Z)


def check_unitary(u: np.ndarray, tol: float = ALGEBRA_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise InvalidInputError("expected a 2x2 matrix")
    if np.max(np.abs(u @ u.conj().T - IDENTITY)) > tol or abs(abs(np.linalg.det(u)) - 1.0) > tol:
        raise InvalidInputError("matrix is not unitary")
    return u


def unitary_to_so3(u: np.ndarray) -> np.ndarray:
    """SO(3) image of ``u``: ``M_ij = tr(sigma_i u sigma_j u^dag) / 2``."""
    u = np.asarray(u, dtype=complex)
    ud = u.conj().T
    return np.array([[0.5 * np.real(np.trace(si @ u @ sj @ ud)) for sj in PAULIS] for si in PAULIS])


def phase_insensitive_overlap(u: np.ndarray, v: np.ndarray) -> float:
    """``|tr(u^dag v)| / 2``; equals 1 iff ``u`` and ``v`` agree up to a global phase."""
    return float(abs(np.trace(np.asarray(u).conj().T @ np.asarray(v))) / 2.0)


def apply(u: np.ndarray, s: QubitState) -> QubitState:
    """Return the state ``u rho u^dag``."""
    check_unitary(u)
    r = unitary_to_so3(u) @ s.vector
    norm = np.linalg.norm(r)
    if norm > 1.0:
        r = r / norm
    return QubitState(tuple(r))


def expect_sz(s: QubitState) -> float:
    """``tr(rho sigma_z)``."""
    return s.bloch[2]


def expect_sx(s: QubitState) -> float:
    return s.bloch[0]


def trace_fidelity(a: QubitState, b: QubitState) -> float:
    """Trace overlap ``tr(rho_a rho_b) = (1 + r_a.r_b) / 2``.

    Equals 1 for identical pure states and ``1 - d/2`` between a pure state
    and its depolarized copy ``(1-d) rho + d/2``.
    """
    return 0.5 * (1.0 + float(np.dot(a.vector, b.vector)))
