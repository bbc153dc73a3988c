"""Tensor-network reference: driven spin coupled to a discretized Ohmic bath.

The total Hamiltonian is

    H(t) = H_S(t) + sum_j w_j b_j^dag b_j + sigma_x (x) sum_j g_j (b_j + b_j^dag).

The joint state is a locally purified MPS (each site carries a physical and
an auxiliary leg of equal dimension) evolved by second-order TEBD. The
spin sits at the left end of a frequency-ordered chain and is swapped
through it, right then left, so every interaction gate is nearest-neighbour.

Site tensors have legs ``(left bond, physical, auxiliary, right bond)``.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .bath import BathSpec, bose, correlation_discrete
from .qubit import SX, SZ, I2, DensityMatrix, DriveParams, observables_batch


class TruncationError(RuntimeError):
    """Cumulative discarded weight exceeded the allowed budget."""

    def __init__(self, discarded: float, limit: float, t: float = float("nan")):
        super().__init__(f"discarded weight {discarded:.3e} exceeds {limit:.1e} "
                         f"(t = {t:.6g}); raise chi_max or lower the coupling")
        self.discarded = discarded
        self.limit = limit
        self.t = t


class GibbsTruncationError(ValueError):
    """A truncated oscillator loses too much thermal weight."""


# -- bath discretization --------------------------------------------------------

@dataclass(frozen=True)
class DiscretizedBath:
    """``N`` modes at ``w_j = j dw`` with ``g_j^2 = J(w_j) dw``.

    ``eps1`` bounds the neglected spectral weight above ``w_max`` and
    ``eps2`` the right Riemann-sum error below it (both energy^2).
    """

    N: int
    w_max: float
    dw: float
    w: np.ndarray
    g: np.ndarray
    d: tuple
    eps1: float
    eps2: float
    T: float

    @property
    def modes(self) -> list:
        return [(float(w), float(g), int(d)) for w, g, d in zip(self.w, self.g, self.d)]

    def correlation(self, t):
        return correlation_discrete(t, [(w, g) for w, g, _ in self.modes], self.T)


def discretization_errors(b: BathSpec, N: int, w_max: float):
    """``(eps1, eps2)`` for a right-sum discretization on ``(0, w_max]``."""
    eps1 = b.a * b.wc ** 2 * (w_max / b.wc + 1.0) * math.exp(-w_max / b.wc)
    eps2 = b.a * w_max ** 2 / (2.0 * N)
    return eps1, eps2


def local_dimension(nbar: float, occupancy_cutoff: float = 4.0) -> int:
    """``max(2, ceil(c nbar) + 2)``."""
    return max(2, int(math.ceil(occupancy_cutoff * nbar)) + 2)


def discretize_bath(b: BathSpec, N: int, w_max: float, occupancy_cutoff: float = 4.0,
                    d_max: int = None, d=None) -> DiscretizedBath:
    """Uniform discretization of the Ohmic bath.

    Parameters
    ----------
    occupancy_cutoff : float
        Prefactor ``c`` in ``d_j = max(2, ceil(c nbar_j) + 2)``.
    d_max : int, optional
        Upper cap on ``d_j``.
    d : int or sequence of int, optional
        Explicit local dimensions, overriding the occupancy rule.
    """
    if N < 1:
        raise ValueError("need at least one mode")
    if not w_max > 0:
        raise ValueError("w_max must be > 0")
    if w_max < b.wc:
        warnings.warn(f"w_max = {w_max} is below the cutoff w_c = {b.wc}; "
                      "the truncation error bound degrades", RuntimeWarning, stacklevel=2)
    dw = w_max / N
    w = dw * np.arange(1, N + 1)
    g = np.sqrt(b.a * w * np.exp(-w / b.wc) * dw)
    if d is None:
        dims = [local_dimension(float(n), occupancy_cutoff) for n in bose(w, b.T)]
        if d_max is not None:
            dims = [min(x, d_max) for x in dims]
    else:
        dims = [int(d)] * N if np.isscalar(d) else [int(x) for x in d]
        if len(dims) != N:
            raise ValueError("need one local dimension per mode")
    if min(dims) < 2:
        raise ValueError("local dimensions must be >= 2")
    eps1, eps2 = discretization_errors(b, N, w_max)
    return DiscretizedBath(N=N, w_max=w_max, dw=dw, w=w, g=g, d=tuple(dims),
                           eps1=eps1, eps2=eps2, T=b.T)


def gibbs_weights(w: float, T: float, d: int):
    """Truncated, renormalized thermal occupations of one oscillator and the
    discarded probability ``(nbar/(1+nbar))^d`` of the untruncated state."""
    k = np.arange(d)
    x = w / T
    logp = -x * k
    p = np.exp(logp - logp.max())
    p /= p.sum()
    loss = math.exp(-x * d)
    return p, loss


def recurrence_time(bath: DiscretizedBath, horizon: float = None,
                    decay: float = 0.1, revival: float = 0.5) -> float:
    """First time ``|R(t)|`` climbs back above ``revival |R(0)|`` after having
    dropped below ``decay |R(0)|``; ``inf`` if that does not happen before
    ``horizon`` (default slightly beyond the exact period ``2 pi / dw``)."""
    if horizon is None:
        horizon = 1.05 * 2 * math.pi / bath.dw
    step = 0.05 / bath.w_max
    t = np.arange(0.0, horizon + step, step)
    r = np.abs(bath.correlation(t))
    r0 = r[0]
    below = np.flatnonzero(r < decay * r0)
    if below.size == 0:
        return float("inf")
    after = np.flatnonzero(r[below[0]:] > revival * r0)
    if after.size == 0:
        return float("inf")
    return float(t[below[0] + after[0]])


# -- purified MPS ---------------------------------------------------------------

@dataclass
class TruncationConfig:
    """SVD truncation and local-dimension policy.

    Singular values below ``svd_cutoff`` times the largest one are dropped
    and at most ``chi_max`` are kept. The state is renormalized after each
    truncation and the run aborts once the accumulated discarded weight
    exceeds ``max_discarded``.
    """

    svd_cutoff: float = 1e-9
    chi_max: int = 64
    max_discarded: float = 1e-3
    occupancy_cutoff: float = 4.0
    d_max: int = None
    max_gibbs_loss: float = 1e-6

    def __post_init__(self):
        if not 0 <= self.svd_cutoff < 1:
            raise ValueError("svd_cutoff must lie in [0, 1)")
        if self.chi_max < 1:
            raise ValueError("chi_max must be >= 1")


@dataclass
class PurifiedMPS:
    """Chain of site tensors ``(chi_l, d, d, chi_r)``.

    ``order[i]`` is the site occupying chain position ``i``: ``0`` for the
    spin, ``j`` for mode ``j``. Between TEBD steps the spin is at position 0
    and is the orthogonality centre.
    """

    tensors: list
    order: list
    svd_cutoff: float = 1e-9
    chi_max: int = 64
    discarded: float = 0.0
    truncations: int = 0  # number of lossy SVDs; ``discarded`` is their summed weight

    @property
    def bond_dims(self) -> list:
        return [a.shape[3] for a in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def spin_position(self) -> int:
        return self.order.index(0)

    def norm(self) -> float:
        """``<psi|psi>`` by full contraction."""
        env = np.ones((1, 1), dtype=complex)
        for a in self.tensors:
            env = np.einsum("xy,xpar,ypas->rs", env, a, np.conj(a), optimize=True)
        return float(env[0, 0].real)

    def spin_density_matrix(self) -> np.ndarray:
        """Reduced spin state; assumes the spin is the orthogonality centre at
        position 0 (true between steps)."""
        if self.spin_position() != 0:
            raise RuntimeError("spin is not at the head of the chain")
        a = self.tensors[0][0]  # (2, 2, chi)
        rho = np.einsum("sar,tar->st", a, np.conj(a))
        return rho / np.trace(rho).real


def initial_purified_state(rho_S0, bath: DiscretizedBath, T_B: float = None,
                           svd_cutoff: float = 1e-9, chi_max: int = 64,
                           max_gibbs_loss: float = 1e-6) -> PurifiedMPS:
    """Product state: ``vec(sqrt(rho_S0))`` on the spin and the purified,
    truncated Gibbs state on each oscillator.

    Raises
    ------
    GibbsTruncationError
        If a mode's truncated Gibbs weight exceeds ``max_gibbs_loss``.
    """
    T = bath.T if T_B is None else T_B
    rho = np.asarray(DensityMatrix(rho_S0))
    evals, evecs = np.linalg.eigh(rho)
    sqrt_rho = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ np.conj(evecs.T)
    sqrt_rho /= np.linalg.norm(sqrt_rho)
    tensors = [sqrt_rho.reshape(1, 2, 2, 1).astype(complex)]
    for j, (w, _, d) in enumerate(bath.modes, start=1):
        p, loss = gibbs_weights(w, T, d)
        if loss > max_gibbs_loss:
            raise GibbsTruncationError(
                f"mode {j} (w = {w:.4g}, d = {d}) drops Gibbs weight {loss:.3e} "
                f"> {max_gibbs_loss:.1e}; increase its local dimension")
        tensors.append(np.diag(np.sqrt(p)).reshape(1, d, d, 1).astype(complex))
    return PurifiedMPS(tensors=tensors, order=list(range(bath.N + 1)),
                       svd_cutoff=svd_cutoff, chi_max=chi_max)


# -- gates ----------------------------------------------------------------------

def _ladder(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)


def interaction_gate(g: float, d: int, tau: float) -> np.ndarray:
    """``exp(-i tau sigma_x (x) g (b + b^dag))`` as a ``(2d, 2d)`` matrix."""
    b = _ladder(d)
    lam, V = np.linalg.eigh(g * (b + b.T))
    cos = (V * np.cos(lam * tau)) @ np.conj(V.T)
    sin = (V * np.sin(lam * tau)) @ np.conj(V.T)
    return np.kron(I2, cos) - 1j * np.kron(SX, sin)


def mode_phase(w: float, d: int, tau: float) -> np.ndarray:
    return np.diag(np.exp(-1j * w * tau * np.arange(d)))


def spin_half_step(t0: float, tau: float, p: DriveParams) -> np.ndarray:
    """``exp(-i tau H_S(t0 + tau/2))`` (midpoint drive, no time ordering)."""
    return linalg.expm(-1j * tau * (p.omega0 * SZ + p.drive(t0 + 0.5 * tau) * SX))


@dataclass(frozen=True)
class _BathGates:
    forward: list
    backward: list
    last: np.ndarray


def _bath_gates(bath: DiscretizedBath, dt: float) -> _BathGates:
    fwd, bwd = [], []
    for w, g, d in bath.modes:
        phase = np.kron(I2, mode_phase(w, d, 0.5 * dt))
        half = interaction_gate(g, d, 0.5 * dt)
        fwd.append(half @ phase)
        bwd.append(phase @ half)
    w, g, d = bath.modes[-1]
    phase = np.kron(I2, mode_phase(w, d, 0.5 * dt))
    last = phase @ interaction_gate(g, d, dt) @ phase
    return _BathGates(fwd, bwd, last)


# -- TEBD -----------------------------------------------------------------------

def _split(mat: np.ndarray, psi: PurifiedMPS, centre_left: bool):
    """SVD-truncate ``mat``; the singular values go left if ``centre_left``."""
    try:
        U, S, Vh = linalg.svd(mat, full_matrices=False, lapack_driver="gesdd")
    except linalg.LinAlgError:
        U, S, Vh = linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")
    w = S * S
    total = w.sum()
    tail = np.cumsum(w[::-1])[::-1]  # tail[k] = sum_{i >= k} w_i
    k_cut = int(np.count_nonzero(S > psi.svd_cutoff * S[0]))
    keep = max(1, min(k_cut, psi.chi_max))
    if keep < len(S):
        lost = float(tail[keep] / total)
        psi.discarded += lost
        psi.truncations += 1
        U, S, Vh = U[:, :keep], S[:keep], Vh[:keep]
        norm = math.sqrt(float(np.sum(S * S)))
    else:
        norm = math.sqrt(float(total))
    S = S / norm
    if centre_left:
        return U * S, Vh
    return U, S[:, None] * Vh


def _apply_forward(psi: PurifiedMPS, pos: int, gate: np.ndarray, swap: bool):
    """Gate on (spin at ``pos``, mode at ``pos + 1``); optionally swap them."""
    A, B = psi.tensors[pos], psi.tensors[pos + 1]
    l, _, _, _ = A.shape
    d, r = B.shape[1], B.shape[3]
    theta = np.tensordot(A, B, axes=(3, 0))  # l, s, a, n, b, r
    G = gate.reshape(2, d, 2, d)
    theta = np.einsum("SNsn,lsanbr->lSaNbr", G, theta, optimize=True)
    if swap:
        mat = theta.transpose(0, 3, 4, 1, 2, 5).reshape(l * d * d, 4 * r)
        left, right = _split(mat, psi, centre_left=False)
        chi = left.shape[1]
        psi.tensors[pos] = left.reshape(l, d, d, chi)
        psi.tensors[pos + 1] = right.reshape(chi, 2, 2, r)
        psi.order[pos], psi.order[pos + 1] = psi.order[pos + 1], psi.order[pos]
    else:
        mat = theta.reshape(l * 4, d * d * r)
        left, right = _split(mat, psi, centre_left=True)
        chi = left.shape[1]
        psi.tensors[pos] = left.reshape(l, 2, 2, chi)
        psi.tensors[pos + 1] = right.reshape(chi, d, d, r)


def _apply_backward(psi: PurifiedMPS, pos: int, gate: np.ndarray):
    """Gate on (mode at ``pos``, spin at ``pos + 1``), then swap them back."""
    A, B = psi.tensors[pos], psi.tensors[pos + 1]
    l, d = A.shape[0], A.shape[1]
    r = B.shape[3]
    theta = np.tensordot(A, B, axes=(3, 0))  # l, n, b, s, a, r
    G = gate.reshape(2, d, 2, d)
    theta = np.einsum("SNsn,lnbsar->lSaNbr", G, theta, optimize=True)
    mat = theta.reshape(l * 4, d * d * r)
    left, right = _split(mat, psi, centre_left=True)
    chi = left.shape[1]
    psi.tensors[pos] = left.reshape(l, 2, 2, chi)
    psi.tensors[pos + 1] = right.reshape(chi, d, d, r)
    psi.order[pos], psi.order[pos + 1] = psi.order[pos + 1], psi.order[pos]


def tebd_step(psi: PurifiedMPS, t: float, dt: float, p: DriveParams,
              bath: DiscretizedBath, gates: _BathGates = None) -> PurifiedMPS:
    """One second-order step ``t -> t + dt`` (in place; also returned).

    Sequence: spin half-step, then for each mode in turn a bath half-phase
    and an interaction half-gate followed by a swap, the last mode taking a
    full interaction step, and the mirror sequence back to the head of the
    chain ending with the second spin half-step. One-site factors are fused
    into the neighbouring two-site gates.
    """
    if psi.spin_position() != 0:
        raise RuntimeError("spin must start the step at the head of the chain")
    gates = gates or _bath_gates(bath, dt)
    N = bath.N
    us1 = np.kron(spin_half_step(t, 0.5 * dt, p), np.eye(bath.d[0]))
    us2 = np.kron(spin_half_step(t + 0.5 * dt, 0.5 * dt, p), np.eye(bath.d[0]))
    if N == 1:
        _apply_forward(psi, 0, us2 @ gates.last @ us1, swap=False)
        return psi
    for j in range(1, N):
        gate = gates.forward[j - 1]
        if j == 1:
            gate = gate @ us1
        _apply_forward(psi, j - 1, gate, swap=True)
    _apply_forward(psi, N - 1, gates.last, swap=False)
    for j in range(N - 1, 0, -1):
        gate = gates.backward[j - 1]
        if j == 1:
            gate = us2 @ gate
        _apply_backward(psi, j - 1, gate)
    return psi


@dataclass(frozen=True)
class TNTrajectory:
    """Spin trajectory from a TEBD run.

    ``beyond_recurrence`` marks samples later than the recurrence guard
    ``t_max``; they are kept but should not be trusted. ``complete`` is False
    when the run stopped early at its wall-clock limit.
    """

    t: np.ndarray
    rho: np.ndarray
    observables: dict
    max_bond: np.ndarray
    discarded_weight: np.ndarray
    t_max: float
    beyond_recurrence: np.ndarray
    bath: DiscretizedBath
    complete: bool = True


def tn_run(rho_S0, p: DriveParams, b: BathSpec, N: int, w_max: float, dt: float,
           t_end: float, trunc: TruncationConfig = None, stride: int = 1,
           bath: DiscretizedBath = None, max_wall_seconds: float = None) -> TNTrajectory:
    """Evolve spin and bath to ``t_end`` and record the spin state every
    ``stride`` steps.

    ``bath`` overrides the discretization built from ``(b, N, w_max, trunc)``.
    With ``max_wall_seconds`` the run stops after the first recorded sample
    past that wall-clock time and returns the partial trajectory with
    ``complete = False``.

    Raises
    ------
    TruncationError
        When the accumulated discarded weight exceeds ``trunc.max_discarded``.
    """
    trunc = trunc or TruncationConfig()
    if bath is None:
        bath = discretize_bath(b, N, w_max, trunc.occupancy_cutoff, trunc.d_max)
    if not 1e-3 - 1e-15 <= dt * p.omega0 <= 1e-2 + 1e-15:
        warnings.warn(f"dt = {dt} outside the tested range [1e-3, 1e-2] t_s",
                      RuntimeWarning, stacklevel=2)
    nsteps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    dt = t_end / nsteps
    psi = initial_purified_state(rho_S0, bath, svd_cutoff=trunc.svd_cutoff,
                                 chi_max=trunc.chi_max,
                                 max_gibbs_loss=trunc.max_gibbs_loss)
    gates = _bath_gates(bath, dt)
    t_max = recurrence_time(bath)

    ts, rhos, bonds, disc = [0.0], [psi.spin_density_matrix()], [psi.max_bond], [0.0]
    start, complete = time.perf_counter(), True
    for k in range(nsteps):
        t = k * dt
        tebd_step(psi, t, dt, p, bath, gates)
        if psi.discarded > trunc.max_discarded:
            raise TruncationError(psi.discarded, trunc.max_discarded, t + dt)
        if (k + 1) % stride == 0 or k + 1 == nsteps:
            ts.append((k + 1) * dt)
            rhos.append(psi.spin_density_matrix())
            bonds.append(psi.max_bond)
            disc.append(psi.discarded)
            if (max_wall_seconds is not None and k + 1 < nsteps
                    and time.perf_counter() - start > max_wall_seconds):
                warnings.warn(f"wall-clock limit {max_wall_seconds} s reached at t = {ts[-1]}",
                              RuntimeWarning, stacklevel=2)
                complete = False
                break
    t_arr = np.array(ts)
    rho = np.array(rhos)
    return TNTrajectory(t=t_arr, rho=rho, observables=observables_batch(rho, t_arr, p),
                        max_bond=np.array(bonds), discarded_weight=np.array(disc),
                        t_max=t_max, beyond_recurrence=t_arr > t_max, bath=bath,
                        complete=complete)
