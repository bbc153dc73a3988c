"""Two-level system algebra, drive parametrization and qubit states.

All operators are plain ``(2, 2)`` complex numpy arrays. Basis ordering is
``|0> = (1, 0)`` (the excited state of ``omega0 * sigma_z`` at ``t = 0``) and
``|1> = (0, 1)``. Units: hbar = 1, energies in the same unit as ``omega0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SP = np.array([[0, 1], [0, 0]], dtype=complex)  # sigma_+ = |0><1|
SM = np.array([[0, 0], [1, 0]], dtype=complex)  # sigma_- = |1><0|

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-8


class InvalidStateError(ValueError):
    """Raised when a matrix fails density-matrix validation."""


def dag(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().swapaxes(-1, -2)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


@dataclass(frozen=True)
class DriveParams:
    """Parameters of ``H_S(t) = omega0 sigma_z + Omega sin(omega t) sigma_x``.

    Use :meth:`from_ratios` to build from the dimensionless ratios
    ``lambda_Omega = Omega/omega0`` and ``lambda_omega = omega/omega0``.
    """

    omega0: float = 1.0
    Omega: float = 0.0
    omega: float = 1.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be > 0, got {self.omega0}")
        if not self.Omega >= 0:
            raise ValueError(f"Omega must be >= 0, got {self.Omega}")
        if not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")

    @classmethod
    def from_ratios(cls, lambda_Omega: float, lambda_omega: float,
                    omega0: float = 1.0) -> "DriveParams":
        return cls(omega0=omega0, Omega=lambda_Omega * omega0,
                   omega=lambda_omega * omega0)

    @property
    def lambda_Omega(self) -> float:
        return self.Omega / self.omega0

    @property
    def lambda_omega(self) -> float:
        return self.omega / self.omega0

    @property
    def lam(self) -> float:
        """Adiabatic parameter ``lambda_Omega * lambda_omega``."""
        return self.lambda_Omega * self.lambda_omega

    @property
    def t_s(self) -> float:
        return 1.0 / self.omega0

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def drive(self, t):
        """Transverse field ``Omega sin(omega t)``; accepts arrays."""
        return self.Omega * np.sin(self.omega * t)

    def energy(self, t):
        """Instantaneous eigenvalue ``E(t)``; accepts arrays."""
        h = self.drive(t)
        return np.sqrt(self.omega0 ** 2 + h * h)

    def mixing_angle(self, t):
        """``phi(t)`` with ``tan(phi) = Omega sin(omega t) / omega0``."""
        return np.arctan2(self.drive(t), self.omega0)


def hamiltonian(t: float, p: DriveParams) -> np.ndarray:
    return p.omega0 * SZ + p.drive(t) * SX


@dataclass(frozen=True)
class SpectralSnapshot:
    t: float
    E: float
    gap: float
    phi: float

    @property
    def excited(self) -> np.ndarray:
        return np.array([math.cos(self.phi / 2), math.sin(self.phi / 2)],
                        dtype=complex)

    @property
    def ground(self) -> np.ndarray:
        return np.array([-math.sin(self.phi / 2), math.cos(self.phi / 2)],
                        dtype=complex)


def spectral_snapshot(t: float, p: DriveParams) -> SpectralSnapshot:
    E = float(p.energy(t))
    return SpectralSnapshot(t=t, E=E, gap=2.0 * E, phi=float(p.mixing_angle(t)))


class DensityMatrix:
    """Validated 2x2 density matrix.

    Validation runs once in the constructor; call :meth:`check` to re-run it.
    The stored array is read-only.
    """

    __slots__ = ("_m",)

    def __init__(self, matrix, validate: bool = True):
        m = np.array(matrix, dtype=complex)
        if m.shape != (2, 2):
            raise InvalidStateError(f"expected a 2x2 matrix, got shape {m.shape}")
        m.setflags(write=False)
        self._m = m
        if validate:
            self.check()

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    def check(self) -> "DensityMatrix":
        m = self._m
        herm = np.max(np.abs(m - dag(m)))
        if herm >= HERMITIAN_TOL:
            raise InvalidStateError(f"not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        tr = np.trace(m)
        if abs(tr - 1.0) >= TRACE_TOL:
            raise InvalidStateError(f"trace {tr.real:.12g} differs from 1")
        lo = np.linalg.eigvalsh(0.5 * (m + dag(m)))[0]
        if lo < -POSITIVITY_TOL:
            raise InvalidStateError(f"negative eigenvalue {lo:.3e}")
        return self

    @classmethod
    def from_bloch(cls, n) -> "DensityMatrix":
        nx, ny, nz = (float(v) for v in n)
        return cls(0.5 * (I2 + nx * SX + ny * SY + nz * SZ))

    @property
    def bloch(self) -> np.ndarray:
        m = self._m
        return np.array([np.trace(m @ s).real for s in (SX, SY, SZ)])

    @property
    def purity(self) -> float:
        return float(np.trace(self._m @ self._m).real)

    def __array__(self, dtype=None, copy=None):
        return self._m if dtype is None else self._m.astype(dtype)

    def __repr__(self):
        return f"DensityMatrix({self._m.tolist()!r})"


class Observables(NamedTuple):
    P_e: float
    coherence: float
    sx: float
    sy: float
    sz: float


def observables(rho, t: float, p: DriveParams) -> Observables:
    """Excited population and coherence in the instantaneous eigenbasis of
    ``H_S(t)``, plus the Pauli expectations."""
    m = np.asarray(rho)
    snap = spectral_snapshot(t, p)
    e, g = snap.excited, snap.ground
    P_e = float(np.real(np.conj(e) @ m @ e))
    coh = float(abs(np.conj(e) @ m @ g))
    sx = float(np.real(m[0, 1] + m[1, 0]))
    sy = float(np.real(1j * (m[0, 1] - m[1, 0])))
    sz = float(np.real(m[0, 0] - m[1, 1]))
    return Observables(P_e, coh, sx, sy, sz)


def observables_batch(rhos: np.ndarray, t: np.ndarray, p: DriveParams) -> dict:
    """Vectorized :func:`observables` over a trajectory ``(n, 2, 2)``."""
    phi = p.mixing_angle(t)
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    r00, r01, r10, r11 = rhos[:, 0, 0], rhos[:, 0, 1], rhos[:, 1, 0], rhos[:, 1, 1]
    P_e = np.real(c * c * r00 + c * s * (r01 + r10) + s * s * r11)
    # <e| rho |g> with e = (c, s), g = (-s, c)
    eg = -c * s * r00 + c * c * r01 - s * s * r10 + s * c * r11
    purity = np.real(np.einsum("nij,nji->n", rhos, rhos))
    return {
        "P_e": P_e,
        "coherence": np.abs(eg),
        "sx": np.real(r01 + r10),
        "sy": np.real(1j * (r01 - r10)),
        "sz": np.real(r00 - r11),
        "purity": purity,
    }


def thermal_state(T_S: float, p: DriveParams) -> DensityMatrix:
    """Gibbs state of ``H_S(0) = omega0 sigma_z`` at temperature ``T_S``."""
    if not T_S > 0:
        raise ValueError("system temperature must be > 0")
    return DensityMatrix.from_bloch((0.0, 0.0, -math.tanh(p.omega0 / T_S)))


def superposition_state() -> DensityMatrix:
    """``(|g_0> + |e_0>)/sqrt(2)``, the +x eigenstate."""
    return DensityMatrix.from_bloch((1.0, 0.0, 0.0))


def maximally_mixed() -> DensityMatrix:
    return DensityMatrix(0.5 * I2)


def ground_state() -> DensityMatrix:
    return DensityMatrix.from_bloch((0.0, 0.0, -1.0))
