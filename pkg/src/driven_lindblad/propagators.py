"""Closed-system propagator of the driven qubit and its approximations.

The evolution operator is parametrized as ``U = [[alpha, beta], [-beta*, alpha*]]``
with ``alpha(0) = 1``, ``beta(0) = 0``. It is integrated by fixed-step RK4
(see :mod:`driven_lindblad.kernels`); the adiabatic operator and the
strong/weak driving expansions are closed forms evaluated on arbitrary times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import kernels
from .bath import QuadratureConfig
from .qubit import DriveParams

UNITARITY_TOL = 1e-8
UNITARITY_ABORT = 1e-6
RESONANCE_GUARD = 1e-6


class UnitarityError(RuntimeError):
    """RK4 drift of ``|alpha|^2 + |beta|^2`` beyond the abort threshold."""

    def __init__(self, t: float, drift: float):
        super().__init__(f"unitarity drift {drift:.3e} at t = {t:.6g}")
        self.t = t
        self.drift = drift


@dataclass(frozen=True)
class PropagatorEntries:
    alpha: complex
    beta: complex
    t: float

    @property
    def matrix(self) -> np.ndarray:
        return propagator_matrix(self.alpha, self.beta)

    @property
    def norm_drift(self) -> float:
        return abs(abs(self.alpha) ** 2 + abs(self.beta) ** 2 - 1.0)


@dataclass(frozen=True)
class AdiabaticPhase:
    dynamical_phase: float
    t: float


def propagator_matrix(alpha, beta) -> np.ndarray:
    """``[[alpha, beta], [-beta*, alpha*]]``; broadcasts to ``(..., 2, 2)``."""
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    out = np.empty(alpha.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = alpha
    out[..., 0, 1] = beta
    out[..., 1, 0] = -np.conj(beta)
    out[..., 1, 1] = np.conj(alpha)
    return out


@dataclass(frozen=True)
class ClosedTrajectory:
    """Propagator entries sampled on ``t``."""

    t: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    dt: float = float("nan")

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i) -> PropagatorEntries:
        return PropagatorEntries(complex(self.alpha[i]), complex(self.beta[i]),
                                 float(self.t[i]))

    def matrices(self) -> np.ndarray:
        return propagator_matrix(self.alpha, self.beta)

    @property
    def norm_drift(self) -> np.ndarray:
        return np.abs(np.abs(self.alpha) ** 2 + np.abs(self.beta) ** 2 - 1.0)


def step_grid(t_end: float, dt: float, stride: int):
    """Number of RK4 steps, the adjusted step and the sampled times.

    ``dt`` is shrunk so an integer number of steps lands exactly on ``t_end``.
    Samples are taken every ``stride`` steps plus the final step.
    """
    if not t_end > 0:
        raise ValueError("t_end must be > 0")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    nsteps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    dt = t_end / nsteps
    idx = np.arange(0, nsteps + 1, stride)
    if idx[-1] != nsteps:
        idx = np.append(idx, nsteps)
    return nsteps, dt, idx * dt


def propagate_closed(p: DriveParams, t_end: float, dt: float = None,
                     stride: int = 10, backend: str = None) -> ClosedTrajectory:
    """RK4 solution of the ``(alpha, beta)`` equations.

    Parameters
    ----------
    p : DriveParams
    t_end : float
        Final time.
    dt : float, optional
        Step, default ``1e-3 t_s``; must not exceed ``1e-2 t_s``.
    stride : int
        Store every ``stride`` steps.
    backend : {"cython", "python"}, optional
        Kernel implementation; the active default when omitted.

    Raises
    ------
    UnitarityError
        If ``| |alpha|^2 + |beta|^2 - 1 |`` exceeds ``1e-6`` at a sample.
    """
    if dt is None:
        dt = 1e-3 * p.t_s
    if dt > 1e-2 * p.t_s * (1 + 1e-12):
        raise ValueError(f"dt = {dt} exceeds 1e-2 t_s")
    nsteps, dt, t = step_grid(t_end, dt, stride)
    impl = kernels.get_backend(backend)
    alpha, beta = impl.closed_rk4(p.omega0, p.Omega, p.omega, dt, nsteps, stride)
    traj = ClosedTrajectory(t=t, alpha=alpha, beta=beta, dt=dt)
    drift = traj.norm_drift
    bad = np.flatnonzero(drift > UNITARITY_ABORT)
    if bad.size:
        i = bad[0]
        raise UnitarityError(float(t[i]), float(drift[i]))
    return traj


# -- adiabatic propagator -----------------------------------------------------

def _phase_quad(t: float, p: DriveParams, quad: QuadratureConfig) -> float:
    if t == 0:
        return 0.0
    # E(s) has period pi/omega; split so each panel covers at most one
    n = max(1, int(math.ceil(t * p.omega / math.pi)))
    edges = np.linspace(0.0, t, n + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(p.energy, lo, hi, epsabs=0.0,
                                epsrel=quad.quad_rel_tol, limit=quad.quad_max_panels)
        total += val
    return total


def dynamical_phase(t: np.ndarray, p: DriveParams) -> np.ndarray:
    """``int_0^t E(s) ds`` on the grid ``t`` (starting at 0) by cumulative Simpson."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t[0] != 0.0:
        raise ValueError("grid must be one-dimensional and start at t = 0")
    if t.size == 1:
        return np.zeros(1)
    return integrate.cumulative_simpson(p.energy(t), x=t, initial=0.0)


def _adiabatic_entries(theta, phi):
    return (np.exp(-1j * theta) * np.cos(phi / 2),
            -np.exp(1j * theta) * np.sin(phi / 2))


def adiabatic_propagator(t: float, p: DriveParams,
                         quad: QuadratureConfig = QuadratureConfig()) -> PropagatorEntries:
    """Adiabatic evolution operator ``sum_n exp(-i int E_n) |n_t><n_0|``.

    The dynamical phase is computed by adaptive quadrature; the geometric
    phase vanishes because the instantaneous eigenvectors are real.
    """
    theta = _phase_quad(float(t), p, quad)
    a, b = _adiabatic_entries(theta, float(p.mixing_angle(t)))
    return PropagatorEntries(complex(a), complex(b), float(t))


def adiabatic_phase(t: float, p: DriveParams,
                    quad: QuadratureConfig = QuadratureConfig()) -> AdiabaticPhase:
    return AdiabaticPhase(_phase_quad(float(t), p, quad), float(t))


def adiabatic_trajectory(t: np.ndarray, p: DriveParams) -> ClosedTrajectory:
    """Adiabatic entries on a grid, phase by cumulative Simpson on the same grid."""
    t = np.asarray(t, dtype=float)
    a, b = _adiabatic_entries(dynamical_phase(t, p), p.mixing_angle(t))
    return ClosedTrajectory(t=t, alpha=a, beta=b)


# -- asymptotic expansions ----------------------------------------------------

def strong_driving_expansion(t, p: DriveParams, order: str = "first"):
    """High-frequency (``lambda_omega >> 1``) approximations of ``(alpha, beta)``.

    ``order="rwa"`` gives the rotating-wave cos/sin form (exactly unitary);
    ``order="first"`` its lowest-order expansion in ``lambda_Omega/lambda_omega``.
    Returns arrays shaped like ``t``.
    """
    x = p.omega0 * np.asarray(t, dtype=float)
    theta = p.lambda_Omega / p.lambda_omega * (1.0 - np.cos(p.lambda_omega * x))
    if order == "rwa":
        return (np.exp(-1j * x) * np.cos(theta),
                -1j * np.exp(1j * x) * np.sin(theta))
    if order == "first":
        return np.exp(-1j * x) + 0j * theta, -1j * np.exp(1j * x) * theta
    raise ValueError(f"unknown order {order!r}")


def weak_driving_expansion(t, p: DriveParams, variant: str = "general"):
    """Weak-drive (``lambda_Omega << 1``) approximations of ``(alpha, beta)``.

    variant
        ``"general"``: first order in ``lambda_Omega``, any ``lambda_omega``
        away from the resonance ``lambda_omega = 2``.
        ``"low_frequency"``: additionally first order in ``lambda_omega``.
        ``"adiabatic"``: expansion of the adiabatic propagator.
    """
    x = p.omega0 * np.asarray(t, dtype=float)
    lO, lw = p.lambda_Omega, p.lambda_omega
    alpha = np.exp(-1j * x)
    if variant == "general":
        if abs(lw - 2.0) < RESONANCE_GUARD:
            raise ValueError("weak-driving expansion is singular at lambda_omega = 2")
        beta = 0.5j * lO * np.exp(-1j * x) * (
            (np.exp(-1j * (lw - 2) * x) - 1) / (lw - 2)
            + (np.exp(1j * (lw + 2) * x) - 1) / (lw + 2))
    elif variant == "low_frequency":
        beta = (-0.5 * lO * np.sin(lw * x) * np.exp(1j * x)
                + 0.25j * lO * lw * (np.exp(-1j * x) - np.exp(1j * x) * np.cos(lw * x)))
    elif variant == "adiabatic":
        beta = -0.5 * lO * np.sin(lw * x) * np.exp(1j * x)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return alpha, beta


# -- adiabatic convergence under time rescaling -------------------------------

@dataclass(frozen=True)
class ConvergenceResult:
    g: np.ndarray
    deviation: np.ndarray
    tau_star: float

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.deviation) <= 0))


def lemma_convergence_experiment(g_values=(0.3, 0.1, 0.03), omega0: float = 1.0,
                                 Omega: float = 1.0, omega_R: float = 1.0,
                                 tau_star: float = 1.0, dt: float = 1e-3,
                                 stride: int = 10) -> ConvergenceResult:
    """Distance between ``U_S`` and the adiabatic operator as ``g -> 0``.

    For each coupling ``g`` the drive runs at ``omega = g^2 omega_R`` and the
    propagator is followed to ``t = tau_star / g^2``, so the rescaled time
    ``tau = g^2 t`` covers ``[0, tau_star]``. The deviation is the maximum over
    samples of the entrywise max norm ``|U_S - U_ad|``.
    """
    dev = []
    for g in g_values:
        p = DriveParams(omega0=omega0, Omega=Omega, omega=g * g * omega_R)
        traj = propagate_closed(p, tau_star / (g * g), dt=dt, stride=stride)
        ad = adiabatic_trajectory(traj.t, p)
        diff = np.maximum(np.abs(traj.alpha - ad.alpha), np.abs(traj.beta - ad.beta))
        dev.append(float(diff.max()))
    return ConvergenceResult(g=np.asarray(g_values, dtype=float),
                             deviation=np.asarray(dev), tau_star=tau_star)
