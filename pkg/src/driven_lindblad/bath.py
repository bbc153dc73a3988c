"""Ohmic bosonic bath: spectral density, correlation functions, rates and
Lamb-shift coefficients.

``J(w) = a w exp(-w / w_c)`` at temperature ``T_B`` (hbar = k_B = 1).
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .qubit import DriveParams

# Bernoulli numbers B_2 .. B_12 for the trigamma asymptotic series
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730)
_TRIGAMMA_SHIFT = 8.0
_SMALL_X = 1e-6


class QuadratureError(RuntimeError):
    """Quadrature finished with an error estimate above tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (error estimate {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class BathSpec:
    a: float
    wc: float
    T: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"coupling a must be > 0, got {self.a}")
        if not self.wc > 0:
            raise ValueError(f"cutoff w_c must be > 0, got {self.wc}")
        if not self.T > 0:
            raise ValueError(f"bath temperature must be > 0, got {self.T}")

    @property
    def beta(self) -> float:
        return 1.0 / self.T


@dataclass(frozen=True)
class QuadratureConfig:
    """Knobs of the principal-value and phase quadratures.

    ``pv_epsilon`` is the half-width of the symmetric window around the
    pole, ``tail_cutoff_factor`` places the upper integration limit at
    ``pole + tail_cutoff_factor * w_c``.
    """

    pv_epsilon: float = 1e-3
    quad_rel_tol: float = 1e-10
    quad_max_panels: int = 200
    tail_cutoff_factor: float = 40.0

    def __post_init__(self):
        if not self.pv_epsilon > 0:
            raise ValueError("pv_epsilon must be > 0")
        if not self.quad_rel_tol > 0:
            raise ValueError("quad_rel_tol must be > 0")
        if self.quad_max_panels < 1:
            raise ValueError("quad_max_panels must be >= 1")
        if not self.tail_cutoff_factor > 0:
            raise ValueError("tail_cutoff_factor must be > 0")


@dataclass(frozen=True)
class RateTriple:
    gamma0: float
    gamma_plus: float
    gamma_minus: float
    t: float = 0.0


@dataclass(frozen=True)
class LambCoeffs:
    S_t: float
    S0: float
    t: float = 0.0


# -- elementary functions ----------------------------------------------------

def bose(w, T):
    """Bose-Einstein occupation ``1/(exp(w/T) - 1)``."""
    return 1.0 / np.expm1(np.asarray(w, dtype=float) / T)


def spectral_density(w, b: BathSpec):
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral density is defined for w >= 0")
    out = b.a * w * np.exp(-w / b.wc)
    return float(out) if out.ndim == 0 else out


def _j_coth(w: float, b: BathSpec) -> float:
    # J(w) (1 + 2 n(w)) = J(w) coth(w / 2T); finite limit 2 a T at w -> 0
    x = w / (2.0 * b.T)
    if x < _SMALL_X:
        return b.a * math.exp(-w / b.wc) * 2.0 * b.T * (1.0 + x * x / 3.0)
    return b.a * w * math.exp(-w / b.wc) / math.tanh(x)


def _j_nbar(w: float, b: BathSpec) -> float:
    # J(w) n(w); finite limit a T at w -> 0
    x = w / b.T
    if x < _SMALL_X:
        return b.a * math.exp(-w / b.wc) * b.T * (1.0 - 0.5 * x)
    return b.a * w * math.exp(-w / b.wc) / math.expm1(x)


def _j_one_plus_nbar(w: float, b: BathSpec) -> float:
    return _j_nbar(w, b) + b.a * w * math.exp(-w / b.wc)


# -- rates -------------------------------------------------------------------

def rates_from_energy(E, b: BathSpec):
    """``(gamma0, gamma_plus, gamma_minus)`` for instantaneous eigenvalue ``E``.

    Works elementwise on arrays.
    """
    E = np.asarray(E, dtype=float)
    w = 2.0 * E
    j2 = 2.0 * math.pi * b.a * w * np.exp(-w / b.wc)
    n = bose(w, b.T)
    g0 = np.full_like(E, 4.0 * math.pi * b.a * b.T)
    return g0, j2 * n, j2 * (1.0 + n)


def rates(t: float, p: DriveParams, b: BathSpec) -> RateTriple:
    g0, gp, gm = rates_from_energy(p.energy(t), b)
    return RateTriple(float(g0), float(gp), float(gm), t)


# -- correlation functions -----------------------------------------------------

def _trigamma_scalar(z: complex) -> complex:
    acc = 0j
    while z.real < _TRIGAMMA_SHIFT:
        acc += 1.0 / (z * z)
        z += 1.0
    inv = 1.0 / z
    inv2 = inv * inv
    series = 0j
    power = inv * inv2
    for b2k in _BERNOULLI:
        series += b2k * power
        power *= inv2
    return acc + inv + 0.5 * inv2 + series


def trigamma(z):
    """Trigamma function for complex ``z`` with ``Re z > 0``.

    Argument shift until ``Re z >= 8``, then the asymptotic series through
    the ``B_12`` term.
    """
    if np.isscalar(z):
        return _trigamma_scalar(complex(z))
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    flat_in, flat_out = z.ravel(), out.ravel()
    for i, zi in enumerate(flat_in):
        flat_out[i] = _trigamma_scalar(complex(zi))
    return out


def correlation_continuum(t, b: BathSpec):
    """Bath correlation ``R(t)`` of the continuum Ohmic bath via trigamma."""
    beta = b.beta
    x = 1.0 / (beta * b.wc)
    if np.isscalar(t):
        if t < 0:
            raise ValueError("t must be >= 0")
        y = t / beta
        return b.a / beta ** 2 * (_trigamma_scalar(complex(x, y))
                                  + _trigamma_scalar(complex(x + 1.0, -y)))
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    y = t / beta
    return b.a / beta ** 2 * (trigamma(x + 1j * y) + trigamma(x + 1.0 - 1j * y))


def correlation_direct(t: float, b: BathSpec) -> complex:
    """``R(t)`` by direct quadrature of its spectral representation.

    Independent of the trigamma route; used as a cross-check. The integrand
    decays like ``exp(-w / w_c)``, so the range is cut at ``80 w_c`` and the
    oscillatory factor is handled by QUADPACK's weighted rule on that interval.
    """
    f = lambda w: _j_coth(w, b)  # noqa: E731
    j = lambda w: b.a * w * math.exp(-w / b.wc)  # noqa: E731
    upper = 80.0 * b.wc
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if t == 0:
            re, _ = integrate.quad(f, 0, upper, epsabs=0, epsrel=1e-13, limit=400)
            return complex(re, 0.0)
        re, _ = integrate.quad(f, 0, upper, weight="cos", wvar=t, epsabs=1e-15,
                               epsrel=1e-12, limit=800)
        im, _ = integrate.quad(j, 0, upper, weight="sin", wvar=t, epsabs=1e-15,
                               epsrel=1e-12, limit=800)
    return complex(re, -im)


def correlation_discrete(t, modes, T_B: float):
    """``R(t)`` for a finite set of modes ``[(w_j, g_j), ...]``."""
    modes = np.asarray(modes, dtype=float).reshape(-1, 2)
    w, g = modes[:, 0], modes[:, 1]
    if np.any(w <= 0):
        raise ValueError("mode frequencies must be > 0")
    weight = g * g / -np.expm1(-w / T_B)
    t_arr = np.asarray(t, dtype=float)
    phase = np.multiply.outer(t_arr, w)
    terms = weight * (np.exp(-1j * phase) + np.exp(1j * phase - w / T_B))
    return terms.sum(axis=-1)


# -- principal-value quadrature ----------------------------------------------

def _quad(f, lo, hi, cfg: QuadratureConfig, what: str):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, lo, hi, epsabs=1e-15, epsrel=cfg.quad_rel_tol,
                                  limit=cfg.quad_max_panels)
    if err > max(1e3 * cfg.quad_rel_tol * abs(val), 1e-13):
        raise QuadratureError(f"{what} did not converge on [{lo:g}, {hi:g}]", err)
    return val, err


def principal_value(f, pole: float, upper: float, cfg: QuadratureConfig):
    """``PV int_0^upper f(w) / (w - pole) dw`` for ``0 < pole < upper``.

    The window ``[pole - d, pole + d]`` is folded onto ``[0, d]`` so the odd
    part cancels analytically; the rest uses adaptive Gauss-Kronrod.
    Returns ``(value, error_estimate)``.
    """
    if not 0.0 < pole < upper:
        raise ValueError("pole must lie strictly inside (0, upper)")
    d = min(cfg.pv_epsilon, 0.5 * pole, 0.5 * (upper - pole))
    left, e1 = _quad(lambda w: f(w) / (w - pole), 0.0, pole - d, cfg, "PV left")
    mid, e2 = _quad(lambda u: (f(pole + u) - f(pole - u)) / u, 0.0, d, cfg,
                    "PV window")
    right, e3 = _quad(lambda w: f(w) / (w - pole), pole + d, upper, cfg, "PV right")
    return left + mid + right, e1 + e2 + e3


def _tail_bound(E: float, upper: float, b: BathSpec) -> float:
    # |int_upper^inf J coth (1/(w+2E) - 1/(w-2E))| <= 4E a coth(upper/2T) w_c e^{-upper/w_c} / (upper-2E)
    return (4.0 * E * b.a / math.tanh(upper / (2 * b.T)) * b.wc
            * math.exp(-upper / b.wc) / (upper - 2 * E))


def lamb_shift_energy(E: float, b: BathSpec,
                      quad: QuadratureConfig = QuadratureConfig()) -> float:
    """Lamb-shift coefficient ``S`` as a function of the eigenvalue ``E``:

    ``int_0^inf J(w)(1 + 2n(w)) [1/(w + 2E) - PV 1/(w - 2E)] dw``.
    """
    if not E > 0:
        raise ValueError("E must be > 0")
    pole = 2.0 * E
    upper = pole + quad.tail_cutoff_factor * b.wc
    f = lambda w: _j_coth(w, b)  # noqa: E731
    regular, e1 = _quad(lambda w: f(w) / (w + pole), 0.0, upper, quad, "regular part")
    pv, e2 = principal_value(f, pole, upper, quad)
    tail = _tail_bound(E, upper, b)
    value = regular - pv
    if tail > max(1e3 * quad.quad_rel_tol * abs(value), 1e-13):
        raise QuadratureError("tail beyond cutoff is not negligible", tail)
    return value


def lamb_shift_components(E: float, b: BathSpec,
                          quad: QuadratureConfig = QuadratureConfig()):
    """Per-channel coefficients ``(S_plus, S_minus)`` at Bohr frequencies
    ``-2E`` and ``+2E`` respectively.

    ``S_plus = -int J(1+n)/(w+2E) + PV int J n/(w-2E)`` and
    ``S_minus = -PV int J(1+n)/(w-2E) + int J n/(w+2E)``.
    """
    pole = 2.0 * E
    upper = pole + quad.tail_cutoff_factor * b.wc
    fn = lambda w: _j_nbar(w, b)  # noqa: E731
    fp = lambda w: _j_one_plus_nbar(w, b)  # noqa: E731
    reg_p, _ = _quad(lambda w: fp(w) / (w + pole), 0.0, upper, quad, "S+ regular")
    reg_n, _ = _quad(lambda w: fn(w) / (w + pole), 0.0, upper, quad, "S- regular")
    pv_n, _ = principal_value(fn, pole, upper, quad)
    pv_p, _ = principal_value(fp, pole, upper, quad)
    return -reg_p + pv_n, -pv_p + reg_n


def lamb_shift_static(b: BathSpec) -> float:
    """Zero-frequency coefficient ``S0 = -int J(w)/w dw = -a w_c``."""
    return -b.a * b.wc


def lamb_shift(t: float, p: DriveParams, b: BathSpec,
               quad: QuadratureConfig = QuadratureConfig()) -> LambCoeffs:
    return LambCoeffs(S_t=lamb_shift_energy(float(p.energy(t)), b, quad),
                      S0=lamb_shift_static(b), t=t)


class LambShiftTable:
    """Memoized ``S(E)`` on ``[E_min, E_max]`` with cubic-spline lookup.

    Nodes are computed once at construction (so concurrent reads need no
    locking); off-grid energies fall back to direct quadrature and are
    cached under a lock.
    """

    def __init__(self, b: BathSpec, E_min: float, E_max: float,
                 quad: QuadratureConfig = QuadratureConfig(), step: float = None):
        if not 0 < E_min <= E_max:
            raise ValueError("need 0 < E_min <= E_max")
        self.bath, self.quad = b, quad
        span = E_max - E_min
        if step is None:
            step = 0.02 * E_min
        n = max(8, int(math.ceil(span / step)) + 1)
        # pad one cell on each side so the spline ends never matter
        h = max(span, 1e-3 * E_min) / (n - 1)
        lo = max(0.5 * E_min, E_min - 2 * h)
        self.E_grid = lo + h * np.arange(n + 4)
        self.S_grid = np.array([lamb_shift_energy(float(E), b, quad) for E in self.E_grid])
        self._spline = CubicSpline(self.E_grid, self.S_grid)
        self._lo, self._hi = E_min, E_max
        self._extra: dict = {}
        self._lock = threading.Lock()

    @classmethod
    def for_drive(cls, p: DriveParams, b: BathSpec,
                  quad: QuadratureConfig = QuadratureConfig()) -> "LambShiftTable":
        return cls(b, p.omega0, math.hypot(p.omega0, p.Omega), quad)

    def __call__(self, E):
        E_arr = np.asarray(E, dtype=float)
        if np.all((E_arr >= self._lo - 1e-12) & (E_arr <= self._hi + 1e-12)):
            out = self._spline(E_arr)
            return float(out) if out.ndim == 0 else out
        if E_arr.ndim:
            return np.array([self(float(e)) for e in E_arr])
        key = float(E_arr)
        with self._lock:
            if key not in self._extra:
                self._extra[key] = lamb_shift_energy(key, self.bath, self.quad)
            return self._extra[key]

    def spline_coefficients(self):
        """``(x0, h, coef)`` with ``coef[i] = (c3, c2, c1, c0)`` on cell ``i``,
        so ``S = ((c3 s + c2) s + c1) s + c0`` with ``s = E - x_i``."""
        x = self.E_grid
        return float(x[0]), float(x[1] - x[0]), np.ascontiguousarray(self._spline.c.T)


# -- Markov integrability ------------------------------------------------------

@dataclass(frozen=True)
class MarkovConstant:
    C: float
    integral: float
    tail: float
    t_max: float
    converged: bool


def _abs_corr_integral(b: BathSpec, t_max: float, quad: QuadratureConfig) -> float:
    scale = min(b.beta, 1.0 / b.wc)
    edges = [0.0]
    t = scale
    while t < t_max:
        edges.append(t)
        t *= 2.0
    edges.append(t_max)
    f = lambda s: abs(correlation_continuum(s, b))  # noqa: E731
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = _quad(f, lo, hi, quad, "|R| integral")
        total += val
    return total


def _abs_corr_tail(b: BathSpec, t_max: float) -> float:
    # leading asymptote Re R ~ 2a/(beta w_c t^2); take the larger of that and
    # the observed t^2 |R| at t_max
    k_lead = 2.0 * b.a / (b.beta * b.wc)
    k_obs = t_max ** 2 * abs(correlation_continuum(t_max, b))
    return max(k_lead, k_obs) / t_max


def markov_constant(b: BathSpec, t_max: float = None,
                    quad: QuadratureConfig = QuadratureConfig(),
                    cauchy_tol: float = 1e-2) -> MarkovConstant:
    """``C = int_0^inf |R(t)| dt`` as a finite integral plus a ``1/t^2`` tail.

    The Cauchy test compares against the estimate at ``t_max / 2``.
    """
    if t_max is None:
        t_max = 100.0 * max(b.beta, 1.0 / b.wc)
    integral = _abs_corr_integral(b, t_max, quad)
    tail = _abs_corr_tail(b, t_max)
    C = integral + tail
    half = _abs_corr_integral(b, 0.5 * t_max, quad) + _abs_corr_tail(b, 0.5 * t_max)
    converged = abs(C - half) <= cauchy_tol * C
    return MarkovConstant(C=C, integral=integral, tail=tail, t_max=t_max,
                          converged=converged)
