import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from driven_lindblad.bath import (BathSpec, LambShiftTable, QuadratureConfig,
                                  correlation_continuum, correlation_direct,
                                  correlation_discrete, lamb_shift, lamb_shift_components,
                                  lamb_shift_energy, lamb_shift_static, markov_constant,
                                  principal_value, rates, rates_from_energy,
                                  spectral_density, trigamma)
from driven_lindblad.qubit import DriveParams

import oracles

HOT_BATH = BathSpec(a=5e-3, wc=2.0, T=4.0)
baths = st.builds(BathSpec, a=st.floats(1e-4, 1e-2), wc=st.floats(0.5, 5.0),
                  T=st.floats(0.2, 6.0))


def test_spectral_density_values():
    assert spectral_density(0.0, HOT_BATH) == 0.0
    assert spectral_density(2.0, HOT_BATH) == pytest.approx(5e-3 * 2 * math.exp(-1), rel=1e-15)
    assert spectral_density(2.0, HOT_BATH) == pytest.approx(3.679e-3, abs=5e-7)


def test_spectral_density_integral():
    val, _ = integrate.quad(lambda w: spectral_density(w, HOT_BATH), 0, np.inf, epsrel=1e-12)
    assert val == pytest.approx(HOT_BATH.a * HOT_BATH.wc ** 2, rel=1e-10)


def test_rates_reference_values():
    p = DriveParams.from_ratios(1.0, 10.0)
    r = rates(0.0, p, HOT_BATH)
    assert r.gamma0 == pytest.approx(0.08 * math.pi, rel=1e-14)
    assert r.gamma0 == pytest.approx(0.25133, abs=1e-5)
    assert r.gamma_minus == pytest.approx(0.05875, abs=1e-5)
    ref = oracles.ohmic_rates(1.0, HOT_BATH.a, HOT_BATH.wc, HOT_BATH.T)
    assert (r.gamma0, r.gamma_plus, r.gamma_minus) == pytest.approx(ref, rel=1e-13)


@given(st.floats(1.0, 10.0), baths)
def test_detailed_balance(E, b):
    _, gp, gm = rates_from_energy(E, b)
    assert gp >= 0 and gm > 0
    assert gp / gm - math.exp(-2 * E / b.T) == pytest.approx(0, abs=1e-12)


@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=50).filter(lambda z: z.real > 0.05))
def test_trigamma_recurrence_and_mpmath(z):
    assert abs(trigamma(z + 1) - (trigamma(z) - 1 / z ** 2)) < 1e-12 * max(1, abs(trigamma(z)))
    ref = complex(mpmath.psi(1, mpmath.mpc(z.real, z.imag)))
    assert abs(trigamma(z) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_correlation_at_zero_is_real_and_matches_quadrature():
    R0 = correlation_continuum(0.0, HOT_BATH)
    assert R0.imag == 0.0
    ref, _ = integrate.quad(lambda w: spectral_density(w, HOT_BATH) / math.tanh(w / (2 * HOT_BATH.T)),
                            0, np.inf, epsrel=1e-13)
    assert R0.real == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("b", [HOT_BATH, BathSpec(5e-3, 2.0, 0.5), BathSpec(1e-3, 3.0, 1.0)])
def test_correlation_trigamma_vs_quadrature(b):
    t = np.linspace(0, 20 * b.beta, 401)
    tri = correlation_continuum(t, b)
    quad = np.array([correlation_direct(s, b) for s in t])
    assert np.max(np.abs(tri - quad) / np.abs(quad)) < 1e-6


def test_correlation_matches_mpmath_oracle():
    t = np.linspace(0, 5, 11)
    assert np.allclose(correlation_continuum(t, HOT_BATH),
                       oracles.ohmic_correlation(t, HOT_BATH.a, HOT_BATH.wc, HOT_BATH.T), rtol=1e-12)


@given(baths)
def test_correlation_decays_like_inverse_square(b):
    t = np.linspace(10 * b.beta, 100 * b.beta, 200)
    scaled = t ** 2 * np.abs(correlation_continuum(t, b))
    # bounded by the leading asymptote 2a/(beta w_c) with generous headroom
    assert np.all(scaled < 10 * (2 * b.a / (b.beta * b.wc) + b.a))
    assert scaled[-1] <= 1.5 * scaled[len(t) // 2]


def test_discrete_single_mode_cold_limit():
    t = np.linspace(0, 5, 7)
    R = correlation_discrete(t, [(2.0, 0.1)], 1e-3)
    assert np.allclose(R, 0.01 * np.exp(-2j * t), atol=1e-15)


def test_discrete_at_zero():
    modes = [(0.5, 0.1), (1.0, 0.05), (3.0, 0.2)]
    R0 = correlation_discrete(0.0, modes, 0.7)
    ref = sum(g * g / math.tanh(w / 1.4) for w, g in modes)
    assert R0.imag == 0 and R0.real == pytest.approx(ref, rel=1e-14)


@pytest.mark.parametrize("T", [0.5, 1.0, 4.0])
def test_discrete_converges_to_continuum(T):
    b = BathSpec(5e-3, 2.0, T)
    dw, N = 0.1, 100
    w = dw * np.arange(1, N + 1)
    g = np.sqrt(b.a * w * np.exp(-w / b.wc) * dw)
    t = np.linspace(0, 10, 201)
    Rd = correlation_discrete(t, list(zip(w, g)), T)
    Rc = correlation_continuum(t, b)
    assert np.max(np.abs(Rd - Rc)) / abs(Rc[0]) < 0.02


def test_static_lamb_shift():
    assert lamb_shift_static(HOT_BATH) == pytest.approx(-0.01, rel=1e-15)
    assert lamb_shift(0.3, DriveParams.from_ratios(1, 10), HOT_BATH).S0 == pytest.approx(-0.01)


@pytest.mark.parametrize("E", [1.0, 1.2, 1.414])
def test_lamb_shift_excision_independence(E):
    s1 = lamb_shift_energy(E, HOT_BATH, QuadratureConfig(pv_epsilon=1e-3))
    s2 = lamb_shift_energy(E, HOT_BATH, QuadratureConfig(pv_epsilon=1e-4))
    assert s1 == pytest.approx(s2, rel=1e-6)


@pytest.mark.parametrize("b", [HOT_BATH, BathSpec(5e-3, 2.0, 0.5)])
@pytest.mark.parametrize("E", [1.0, 1.3])
def test_lamb_shift_against_cauchy_weight(b, E):
    # QUADPACK's Cauchy-weight rule is an independent principal-value method
    pole = 2 * E
    def f(w):
        # J(w) coth(w / 2T) -> 2 a T as w -> 0
        return 2 * b.a * b.T if w == 0 else spectral_density(w, b) / math.tanh(w / (2 * b.T))

    upper = pole + 40 * b.wc
    pv, _ = integrate.quad(f, 0, upper, weight="cauchy", wvar=pole, epsabs=1e-14,
                           epsrel=1e-12, limit=400)
    reg, _ = integrate.quad(lambda w: f(w) / (w + pole), 0, upper, epsabs=1e-14,
                            epsrel=1e-12, limit=400)
    assert lamb_shift_energy(E, b) == pytest.approx(reg - pv, rel=1e-8)


def test_lamb_shift_components_combine_to_minus_S():
    for E in (1.0, 1.2):
        sp, sm = lamb_shift_components(E, HOT_BATH)
        assert sp - sm == pytest.approx(-lamb_shift_energy(E, HOT_BATH), rel=1e-9)


def test_lamb_shift_depends_on_energy_only():
    p = DriveParams.from_ratios(1.0, 10.0)
    t1 = 0.1
    t2 = math.pi / p.omega - t1  # same |sin|, same E
    assert lamb_shift(t1, p, HOT_BATH).S_t == pytest.approx(lamb_shift(t2, p, HOT_BATH).S_t, rel=1e-12)


def test_principal_value_simple_pole():
    # PV int_0^2 1/(w-1) dw = 0
    val, _ = principal_value(lambda w: 1.0, 1.0, 2.0, QuadratureConfig())
    assert val == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        principal_value(lambda w: 1.0, 3.0, 2.0, QuadratureConfig())


def test_lamb_table_spline_accuracy():
    p = DriveParams.from_ratios(1.0, 10.0)
    table = LambShiftTable.for_drive(p, HOT_BATH)
    for E in np.linspace(1.0, math.sqrt(2), 7):
        assert table(E) == pytest.approx(lamb_shift_energy(E, HOT_BATH), rel=1e-8)
    # off-grid energies fall back to direct quadrature
    assert table(2.0) == pytest.approx(lamb_shift_energy(2.0, HOT_BATH), rel=1e-12)


def test_markov_constant_properties():
    b = HOT_BATH
    c1 = markov_constant(b, t_max=50 * b.beta)
    c2 = markov_constant(b, t_max=100 * b.beta)
    assert c1.C > 0 and c2.converged
    assert abs(c2.C - c1.C) < 0.01 * c2.C
    c_half = markov_constant(BathSpec(b.a / 2, b.wc, b.T))
    assert c_half.C == pytest.approx(markov_constant(b).C / 2, rel=1e-9)


def test_bath_spec_validation():
    for kw in (dict(a=0, wc=1, T=1), dict(a=1e-3, wc=0, T=1), dict(a=1e-3, wc=1, T=0)):
        with pytest.raises(ValueError):
            BathSpec(**kw)
