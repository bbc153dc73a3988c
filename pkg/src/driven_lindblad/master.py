"""Time-dependent, adiabatic and unitary master equations for the driven qubit.

Generators have the GKLS form

    d rho/dt = -i[H + H_LS, rho] + sum_k gamma_k(t) D[L_k(t)] rho,
    D[L] rho = L rho L^dag - {L^dag L, rho}/2,

with ``k in {0, +, -}``. In the time-dependent equation the jump operators
are the interaction-picture operators ``A_k`` dressed by the closed propagator,
``L_k = U_S A_k U_S^dag``, so ``(alpha, beta)`` are integrated in lockstep
with ``rho``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate

from . import kernels
from .bath import (BathSpec, LambShiftTable, QuadratureConfig, RateTriple,
                   lamb_shift_energy, rates_from_energy)
from .propagators import (PropagatorEntries, propagator_matrix, step_grid,
                          strong_driving_expansion, weak_driving_expansion)
from .qubit import (POSITIVITY_TOL, SP, SM, SX, SY, SZ, DensityMatrix, DriveParams,
                    dag, hamiltonian, observables_batch)

SOLVERS = ("tdme", "adme", "unitary")
PICTURES = ("schroedinger", "interaction")
FLAVORS = ("tdme", "adme", "interaction", "strong_approx", "weak_approx", "unitary")

TRACE_TOL = 1e-8
HERMITICITY_TOL = 1e-10

_ZERO = np.zeros((2, 2), dtype=complex)


class PositivityError(RuntimeError):
    """Density matrix left the positive cone beyond tolerance."""

    def __init__(self, t: float, eigenvalue: float):
        super().__init__(f"negative eigenvalue {eigenvalue:.3e} at t = {t:.6g}")
        self.t = t
        self.eigenvalue = eigenvalue


@dataclass(frozen=True)
class JumpSet:
    """Jump operators, rates and Lamb-shift Hamiltonian at time ``t``."""

    L0: np.ndarray
    Lplus: np.ndarray
    Lminus: np.ndarray
    rates: RateTriple
    H_LS: np.ndarray
    t: float
    flavor: str

    def channels(self):
        """``[(gamma_k, L_k)]`` for ``k = 0, +, -``."""
        r = self.rates
        return [(r.gamma0, self.L0), (r.gamma_plus, self.Lplus),
                (r.gamma_minus, self.Lminus)]


@dataclass(frozen=True)
class EvolutionConfig:
    solver: str = "tdme"
    lamb_shift: bool = True
    picture: str = "schroedinger"
    dt: float = 1e-3
    t_end: float = 10.0
    stride: int = 10
    backend: str = None
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.picture not in PICTURES:
            raise ValueError(f"picture must be one of {PICTURES}, got {self.picture!r}")
        if self.picture == "interaction" and self.solver != "tdme":
            raise ValueError("the interaction picture is only defined for solver 'tdme'")
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be > 0")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


# -- jump sets ------------------------------------------------------------------

def _rates(t: float, E: float, b: BathSpec) -> RateTriple:
    g0, gp, gm = rates_from_energy(E, b)
    return RateTriple(float(g0), float(gp), float(gm), t)


def _lamb(E: float, b: BathSpec, quad: QuadratureConfig, lamb_shift: bool, S):
    if not lamb_shift:
        return 0.0
    if S is None:
        return lamb_shift_energy(E, b, quad)
    return float(S(E)) if callable(S) else float(S)


def dressed_paulis(alpha: complex, beta: complex):
    """``(U sigma_z U^dag, U sigma_+ U^dag)`` for ``U = [[alpha, beta], [-beta*, alpha*]]``."""
    ac, bc = np.conj(alpha), np.conj(beta)
    z = abs(alpha) ** 2 - abs(beta) ** 2
    Z = np.array([[z, -2 * alpha * beta], [-2 * ac * bc, -z]], dtype=complex)
    P = np.array([[alpha * bc, alpha * alpha], [-bc * bc, -alpha * bc]], dtype=complex)
    return Z, P


def jump_set_tdme(t: float, u: PropagatorEntries, p: DriveParams, b: BathSpec,
                  quad: QuadratureConfig = QuadratureConfig(), lamb_shift: bool = True,
                  S=None) -> JumpSet:
    """Schroedinger-picture jump set of the time-dependent master equation.

    ``S`` overrides the Lamb-shift coefficient: a number, or a callable of
    the energy such as :class:`LambShiftTable`. By default it is computed by
    quadrature.
    """
    if abs(u.t - t) > 1e-12 * max(1.0, abs(t)):
        raise ValueError(f"propagator time {u.t} does not match t = {t}")
    E = float(p.energy(t))
    phi = float(p.mixing_angle(t))
    Z, P = dressed_paulis(u.alpha, u.beta)
    Lp = math.cos(phi) * P
    s_val = _lamb(E, b, quad, lamb_shift, S)
    return JumpSet(L0=math.sin(phi) * Z, Lplus=Lp, Lminus=dag(Lp),
                   rates=_rates(t, E, b), H_LS=-0.5 * s_val * math.cos(phi) ** 2 * Z,
                   t=t, flavor="tdme")


def jump_set_interaction(t: float, p: DriveParams, b: BathSpec,
                         quad: QuadratureConfig = QuadratureConfig(),
                         lamb_shift: bool = True, S=None) -> JumpSet:
    """Interaction-picture operators ``A_k`` and ``H_LS``, diagonal in ``sigma_z``."""
    E = float(p.energy(t))
    phi = float(p.mixing_angle(t))
    c = math.cos(phi)
    s_val = _lamb(E, b, quad, lamb_shift, S)
    return JumpSet(L0=math.sin(phi) * SZ, Lplus=c * SP, Lminus=c * SM,
                   rates=_rates(t, E, b), H_LS=-0.5 * s_val * c * c * SZ,
                   t=t, flavor="interaction")


def jump_set_adme(t: float, p: DriveParams, b: BathSpec,
                  quad: QuadratureConfig = QuadratureConfig(), lamb_shift: bool = True,
                  S=None) -> JumpSet:
    """Adiabatic master equation: instantaneous-eigenbasis jump operators.

    The Lamb-shift Hamiltonian is ``-(1/2) S cos^2(phi) H_S / E`` so that it
    carries energy units and commutes with ``H_S``.
    """
    E = float(p.energy(t))
    phi = float(p.mixing_angle(t))
    c, s = math.cos(phi), math.sin(phi)
    n = c * SZ + s * SX  # H_S / E
    Lp = c * (-0.5 * s * SZ + math.cos(phi / 2) ** 2 * SP - math.sin(phi / 2) ** 2 * SM)
    s_val = _lamb(E, b, quad, lamb_shift, S)
    return JumpSet(L0=s * n, Lplus=Lp, Lminus=dag(Lp), rates=_rates(t, E, b),
                   H_LS=-0.5 * s_val * c * c * n, t=t, flavor="adme")


def jump_set_strong(t: float, p: DriveParams, b: BathSpec,
                    quad: QuadratureConfig = QuadratureConfig(), lamb_shift: bool = True,
                    S=None) -> JumpSet:
    """High-frequency approximation of the TDME jump set, with the global
    phase ``exp(-2 i omega0 t)`` removed from ``L_+``."""
    x = p.omega0 * t
    theta = p.lambda_Omega / p.lambda_omega * (1.0 - math.cos(p.lambda_omega * x))
    E = float(p.energy(t))
    phi = float(p.mixing_angle(t))
    c = math.cos(phi)
    z_approx = SZ - 2 * theta * SY
    Lp = c * (1j * theta * SZ + SP)
    s_val = _lamb(E, b, quad, lamb_shift, S)
    return JumpSet(L0=math.sin(phi) * z_approx, Lplus=Lp, Lminus=dag(Lp),
                   rates=_rates(t, E, b), H_LS=-0.5 * s_val * c * c * z_approx,
                   t=t, flavor="strong_approx")


def jump_set_weak(t: float, p: DriveParams, b: BathSpec, variant: str = "general",
                  quad: QuadratureConfig = QuadratureConfig(), lamb_shift: bool = True,
                  S=None) -> JumpSet:
    """Weak-drive approximations of the TDME jump set, first order in ``lambda_Omega``.

    The operators follow from inserting :func:`weak_driving_expansion` into
    ``U_S A_k U_S^dag``. For ``variant="general"`` the phase ``exp(-2 i x)``
    multiplying ``L_+`` is kept; the other variants drop it.
    """
    x = p.omega0 * t
    alpha, beta = weak_driving_expansion(t, p, variant)
    alpha, beta = complex(alpha), complex(beta)
    # first order: |alpha|^2 - |beta|^2 = 1, alpha^2 = exp(-2ix)
    coef = np.conj(beta) * np.exp(1j * x)  # alpha beta* / alpha^2
    Lp = coef * SZ + SP
    if variant == "general":
        Lp = np.exp(-2j * x) * Lp
    E = float(p.energy(t))
    Z = SZ - 2 * alpha * beta * SP - 2 * np.conj(alpha * beta) * SM
    s_val = _lamb(E, b, quad, lamb_shift, S)
    return JumpSet(L0=p.lambda_Omega * math.sin(p.lambda_omega * x) * SZ, Lplus=Lp,
                   Lminus=dag(Lp), rates=_rates(t, E, b), H_LS=-0.5 * s_val * Z,
                   t=t, flavor="weak_approx")


# -- generator ----------------------------------------------------------------

def dissipator(L: np.ndarray, rho: np.ndarray) -> np.ndarray:
    Ld = dag(L)
    LdL = Ld @ L
    return L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)


def generator_apply(rho, js: JumpSet, t: float, p: DriveParams,
                    cfg: EvolutionConfig = None) -> np.ndarray:
    """Right-hand side of the master equation at ``t``.

    ``js`` may be ``None`` for ``cfg.solver == "unitary"``. In the interaction
    picture only the Lamb-shift Hamiltonian drives the coherent part.
    """
    cfg = cfg or EvolutionConfig()
    rho = np.asarray(rho)
    if cfg.solver == "unitary":
        H = hamiltonian(t, p)
        return -1j * (H @ rho - rho @ H)
    expected = "interaction" if cfg.picture == "interaction" else cfg.solver
    if js.flavor != expected and not (
            cfg.solver == "tdme" and js.flavor in ("strong_approx", "weak_approx")):
        raise ValueError(f"jump set flavor {js.flavor!r} does not match solver {expected!r}")
    H = js.H_LS if cfg.lamb_shift else _ZERO
    if cfg.picture == "schroedinger":
        H = H + hamiltonian(t, p)
    out = -1j * (H @ rho - rho @ H)
    for gamma, L in js.channels():
        out = out + gamma * dissipator(L, rho)
    return out


# -- evolution ----------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of a master equation.

    ``rho`` is in the picture of the run; ``observables`` always refer to the
    Schroedinger-picture state.
    """

    t: np.ndarray
    rho: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    observables: dict
    picture: str
    max_trace_drift: float
    max_hermiticity: float
    min_eigenvalue: float

    def __len__(self):
        return len(self.t)

    def state(self, i: int) -> DensityMatrix:
        return DensityMatrix(self.rho[i], validate=False)

    def schroedinger_rho(self) -> np.ndarray:
        if self.picture == "schroedinger":
            return self.rho
        U = propagator_matrix(self.alpha, self.beta)
        return U @ self.rho @ dag(U)


_MODES = {"unitary": kernels.UNITARY, "adme": kernels.ADME, "tdme": kernels.TDME}


def _kernel_mode(cfg: EvolutionConfig) -> int:
    if cfg.picture == "interaction":
        return kernels.TDME_INTERACTION
    return _MODES[cfg.solver]


def lamb_table(p: DriveParams, b: BathSpec,
               quad: QuadratureConfig = QuadratureConfig()) -> LambShiftTable:
    return LambShiftTable.for_drive(p, b, quad)


def evolve(rho0, p: DriveParams, b: BathSpec, cfg: EvolutionConfig,
           table: LambShiftTable = None) -> Trajectory:
    """Fixed-step RK4 solution of the selected master equation.

    ``rho0`` is interpreted in the picture of the run; at ``t = 0`` both
    pictures coincide. ``table`` reuses a precomputed ``S(E)`` spline.

    Raises
    ------
    PositivityError
        If a sampled state has an eigenvalue below ``-1e-8``.
    """
    rho0 = np.asarray(DensityMatrix(rho0))
    nsteps, dt, t = step_grid(cfg.t_end, cfg.dt, cfg.stride)
    use_lamb = cfg.lamb_shift and cfg.solver != "unitary"
    if use_lamb:
        table = table or lamb_table(p, b, cfg.quad)
        x0, h, coef = table.spline_coefficients()
    else:
        x0, h, coef = 0.0, 1.0, np.zeros((1, 4))
    impl = kernels.get_backend(cfg.backend)
    rho, alpha, beta = impl.evolve_rk4(
        _kernel_mode(cfg), p.omega0, p.Omega, p.omega, b.a, b.wc, b.T, use_lamb,
        x0, h, coef, rho0, dt, nsteps, cfg.stride)
    rho = rho.reshape(-1, 2, 2)

    tr_drift = float(np.max(np.abs(np.trace(rho, axis1=1, axis2=2) - 1.0)))
    herm = float(np.max(np.abs(rho - dag(rho))))
    eigs = np.linalg.eigvalsh(0.5 * (rho + dag(rho)))[:, 0]
    bad = np.flatnonzero(eigs < -POSITIVITY_TOL)
    if bad.size:
        i = bad[0]
        raise PositivityError(float(t[i]), float(eigs[i]))

    if cfg.picture == "interaction":
        U = propagator_matrix(alpha, beta)
        obs = observables_batch(U @ rho @ dag(U), t, p)
    else:
        obs = observables_batch(rho, t, p)
    return Trajectory(t=t, rho=rho, alpha=alpha, beta=beta, observables=obs,
                      picture=cfg.picture, max_trace_drift=tr_drift,
                      max_hermiticity=herm, min_eigenvalue=float(eigs.min()))


# -- closed form in the interaction picture -------------------------------------

@dataclass(frozen=True)
class BlochInteraction:
    """``c_z = Tr(sigma_z rho)`` and ``c_plus = Tr(sigma_+ rho) = rho[1, 0]``
    of the interaction-picture state on the grid ``t``."""

    c_z: np.ndarray
    c_plus: np.ndarray
    t: np.ndarray

    def rho(self) -> np.ndarray:
        out = np.empty((len(self.t), 2, 2), dtype=complex)
        out[:, 0, 0] = 0.5 * (1 + self.c_z)
        out[:, 1, 1] = 0.5 * (1 - self.c_z)
        out[:, 1, 0] = 0.5 * self.c_plus
        out[:, 0, 1] = 0.5 * np.conj(self.c_plus)
        return out


def bloch_interaction(rho) -> tuple:
    """``(c_z, c_plus)`` of a state (or stack of states)."""
    rho = np.asarray(rho)
    return (np.real(rho[..., 0, 0] - rho[..., 1, 1]), 2 * rho[..., 1, 0])


def analytic_interaction_solution(c_z0: float, c_plus0: complex, p: DriveParams,
                                  b: BathSpec, t, quad: QuadratureConfig = QuadratureConfig(),
                                  lamb_shift: bool = True,
                                  table: LambShiftTable = None) -> BlochInteraction:
    """Closed-form interaction-picture solution on the grid ``t`` (from 0).

    ``zeta(t) = int_0^t (gamma_+ + gamma_-) cos^2 phi``;
    ``c_z`` relaxes towards the instantaneous detailed-balance value and
    ``c_plus`` decays with ``zeta/2 + 2 gamma_0 int sin^2 phi`` while rotating
    with ``int S cos^2 phi``. Time integrals use cumulative Simpson on ``t``.
    """
    if abs(c_z0) > 1 + 1e-12 or c_z0 ** 2 + abs(c_plus0) ** 2 > 1 + 1e-12:
        raise ValueError("initial Bloch components outside the unit ball")
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t[0] != 0.0 or t.size < 2:
        raise ValueError("t must be a 1-d grid starting at 0 with at least two points")
    E = p.energy(t)
    cos2 = np.cos(p.mixing_angle(t)) ** 2
    sin2 = 1.0 - cos2
    g0, gp, gm = rates_from_energy(E, b)

    def cum(f):
        return integrate.cumulative_simpson(f, x=t, initial=0.0)

    zeta = cum((gp + gm) * cos2)
    # int_0^t (g+ - g-) cos^2(s) e^{-(zeta(t) - zeta(s))} ds
    driven = np.exp(-zeta) * cum((gp - gm) * cos2 * np.exp(zeta))
    c_z = c_z0 * np.exp(-zeta) + driven
    if lamb_shift:
        table = table or LambShiftTable.for_drive(p, b, quad)
        S = np.asarray(table(E))
    else:
        S = np.zeros_like(t)
    phase = cum(S * cos2)
    damp = 0.5 * zeta + 2.0 * g0 * cum(sin2)
    c_plus = complex(c_plus0) * np.exp(-1j * phase - damp)
    return BlochInteraction(c_z=c_z, c_plus=c_plus, t=t)


# -- Lamb shift on/off comparison ---------------------------------------------

@dataclass(frozen=True)
class LambShiftComparison:
    t: np.ndarray
    with_shift: Trajectory
    without_shift: Trajectory
    sx_difference: np.ndarray
    gap: np.ndarray
    gap_shifted: np.ndarray

    @property
    def max_state_difference(self) -> float:
        return float(np.max(np.abs(self.with_shift.rho - self.without_shift.rho)))


def _gap_of(H: np.ndarray) -> np.ndarray:
    """Eigenvalue splitting of Hermitian 2x2 matrices ``(n, 2, 2)``."""
    d = 0.5 * np.real(H[:, 0, 0] - H[:, 1, 1])
    return 2.0 * np.sqrt(d * d + np.abs(H[:, 0, 1]) ** 2)


def lamb_shift_ab_test(rho0, p: DriveParams, b: BathSpec, cfg: EvolutionConfig,
                       table: LambShiftTable = None) -> LambShiftComparison:
    """Paired TDME runs differing only in the Lamb-shift term, with the gaps of
    ``H_S`` and ``H_S + H_LS`` along the shifted run."""
    if cfg.solver != "tdme":
        raise ValueError("the Lamb-shift comparison uses solver 'tdme'")
    table = table or lamb_table(p, b, cfg.quad)
    on = evolve(rho0, p, b, replace(cfg, lamb_shift=True), table)
    off = evolve(rho0, p, b, replace(cfg, lamb_shift=False))
    t = on.t
    H = np.array([hamiltonian(s, p) for s in t])
    Z = np.array([dressed_paulis(a, bb)[0] for a, bb in zip(on.alpha, on.beta)])
    cos2 = np.cos(p.mixing_angle(t)) ** 2
    H_LS = (-0.5 * np.asarray(table(p.energy(t))) * cos2)[:, None, None] * Z
    return LambShiftComparison(
        t=t, with_shift=on, without_shift=off,
        sx_difference=on.observables["sx"] - off.observables["sx"],
        gap=_gap_of(H), gap_shifted=_gap_of(H + H_LS))
