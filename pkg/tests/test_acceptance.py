"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are collected into an "acceptance criteria" section at the end of
the pytest run. Runtime budgets are part of each criterion.
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy import integrate

from driven_lindblad.bath import (BathSpec, correlation_continuum, correlation_direct,
                                  trigamma)
from driven_lindblad.master import (EvolutionConfig, analytic_interaction_solution,
                                    bloch_interaction, evolve, generator_apply,
                                    jump_set_adme, jump_set_interaction, jump_set_tdme,
                                    lamb_shift_ab_test, lamb_table)
from driven_lindblad.propagators import (PropagatorEntries, lemma_convergence_experiment,
                                         propagate_closed, strong_driving_expansion)
from driven_lindblad.qubit import (DensityMatrix, DriveParams, observables_batch,
                                   superposition_state, thermal_state)
from driven_lindblad.tn import (TruncationConfig, discretization_errors, discretize_bath,
                                recurrence_time, tn_run)

import oracles

FAST = DriveParams.from_ratios(1.0, 10.0)
SLOW = DriveParams.from_ratios(0.1, 0.1)
# (T_B, T_S): bath hotter than system, and the mirror case
TEMPERATURES = ((4.0, 0.5), (0.5, 4.0))


def bath(T_B, a=5e-3):
    return BathSpec(a=a, wc=2.0, T=T_B)


def test_c01_gkls_structure(acceptance):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_rate, worst_trace, worst_herm = np.inf, 0.0, 0.0
    cfg_tdme, cfg_adme = EvolutionConfig("tdme"), EvolutionConfig("adme")
    cfg_int = EvolutionConfig("tdme", picture="interaction")
    for _ in range(10_000):
        t = rng.uniform(0, 50)
        p = DriveParams.from_ratios(rng.uniform(0, 5), rng.uniform(0.01, 30))
        b = BathSpec(rng.uniform(1e-4, 1e-2), rng.uniform(0.5, 5), rng.uniform(0.1, 8))
        v = rng.normal(size=3)
        v *= rng.uniform() ** (1 / 3) / np.linalg.norm(v)
        rho = np.asarray(DensityMatrix.from_bloch(v))
        ab = rng.normal(size=4)
        ab /= np.linalg.norm(ab)
        u = PropagatorEntries(complex(ab[0], ab[1]), complex(ab[2], ab[3]), t)
        S = rng.uniform(-0.1, 0.1)
        for js, cfg in ((jump_set_tdme(t, u, p, b, S=S), cfg_tdme),
                        (jump_set_adme(t, p, b, S=S), cfg_adme),
                        (jump_set_interaction(t, p, b, S=S), cfg_int)):
            r = js.rates
            worst_rate = min(worst_rate, r.gamma0, r.gamma_plus, r.gamma_minus)
            out = generator_apply(rho, js, t, p, cfg)
            worst_trace = max(worst_trace, abs(np.trace(out)))
            worst_herm = max(worst_herm, np.max(np.abs(out - out.conj().T)))
    elapsed = time.perf_counter() - t0
    ok = worst_rate >= 0 and worst_trace < 1e-14 and worst_herm < 1e-14 and elapsed < 10
    acceptance(1, ok, f"min rate {worst_rate:.2e}, |tr L rho| {worst_trace:.1e}, "
                      f"hermiticity {worst_herm:.1e}, {elapsed:.1f} s")
    assert ok


def test_c02_propagator_unitarity(acceptance):
    t0 = time.perf_counter()
    tr = propagate_closed(FAST, 100.0, 1e-3, stride=1)
    elapsed = time.perf_counter() - t0
    drift = float(tr.norm_drift.max())
    ok = drift < 1e-8 and elapsed < 5
    acceptance(2, ok, f"max drift {drift:.2e} over t <= 100, {elapsed:.2f} s")
    assert ok


def test_c03_state_validity(acceptance):
    t0 = time.perf_counter()
    worst_trace, worst_eig, worst_purity = 0.0, np.inf, 0.0
    for p, t_end in ((FAST, 10.0), (SLOW, 2 * math.pi / SLOW.omega)):
        for T_B, T_S in TEMPERATURES:
            b = bath(T_B)
            table = lamb_table(p, b)
            for rho0 in (thermal_state(T_S, p), superposition_state()):
                for solver in ("tdme", "adme", "unitary"):
                    tr = evolve(rho0, p, b, EvolutionConfig(solver, t_end=t_end), table)
                    worst_trace = max(worst_trace, tr.max_trace_drift)
                    worst_eig = min(worst_eig, tr.min_eigenvalue)
                    worst_purity = max(worst_purity, tr.observables["purity"].max())
    elapsed = time.perf_counter() - t0
    ok = (worst_trace < 1e-8 and worst_eig > -1e-8 and worst_purity <= 1 + 1e-10
          and elapsed < 30)
    acceptance(3, ok, f"trace drift {worst_trace:.1e}, min eigenvalue {worst_eig:.2e}, "
                      f"max purity - 1 {worst_purity - 1:.1e}, {elapsed:.1f} s")
    assert ok


def test_c04_analytic_vs_numeric(acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    for T_B, T_S in TEMPERATURES:
        b = bath(T_B)
        table = lamb_table(FAST, b)
        for rho0 in (thermal_state(T_S, FAST), superposition_state(),
                     DensityMatrix.from_bloch((0.3, -0.5, 0.6))):
            tr = evolve(rho0, FAST, b, EvolutionConfig("tdme", picture="interaction",
                                                       t_end=10.0, stride=1), table)
            cz0, cp0 = bloch_interaction(np.asarray(rho0))
            sol = analytic_interaction_solution(float(cz0), complex(cp0), FAST, b, tr.t,
                                                table=table)
            cz, cp = bloch_interaction(tr.rho)
            worst = max(worst, np.abs(sol.c_z - cz).max(), np.abs(sol.c_plus - cp).max())
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 30
    acceptance(4, ok, f"max |closed form - RK4| {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_c05_adiabatic_limit(acceptance):
    t0 = time.perf_counter()
    gaps = []
    t_end = 2 * math.pi / SLOW.omega
    for T_B, T_S in TEMPERATURES:
        b = bath(T_B)
        table = lamb_table(SLOW, b)
        rho0 = thermal_state(T_S, SLOW)
        td = evolve(rho0, SLOW, b, EvolutionConfig("tdme", t_end=t_end), table)
        ad = evolve(rho0, SLOW, b, EvolutionConfig("adme", t_end=t_end), table)
        gaps.append(float(np.abs(td.observables["P_e"] - ad.observables["P_e"]).max()))
    elapsed = time.perf_counter() - t0
    ok = max(gaps) < 1e-2 and elapsed < 60
    acceptance(5, ok, f"max |P_e(TDME) - P_e(ADME)| {gaps[0]:.2e} (T_B > T_S), "
                      f"{gaps[1]:.2e} (T_B < T_S), {elapsed:.1f} s")
    assert ok


def test_c06_strong_driving_scaling(acceptance):
    t0 = time.perf_counter()
    window = 2 * math.pi / 10.0  # one drive period of the lambda_omega = 10 run
    errs = {}
    for lw in (5.0, 10.0, 20.0):
        p = DriveParams.from_ratios(1.0, lw)
        tr = propagate_closed(p, window, 1e-4, stride=1)
        a, b = strong_driving_expansion(tr.t, p, "first")
        errs[lw] = float(max(np.abs(a - tr.alpha).max(), np.abs(b - tr.beta).max()))
    elapsed = time.perf_counter() - t0
    ratio = errs[10.0] / errs[20.0]
    ok = errs[5.0] > errs[10.0] > errs[20.0] and 1.5 <= ratio <= 3 and elapsed < 60
    acceptance(6, ok, f"errors {errs[5.0]:.3f} / {errs[10.0]:.3f} / {errs[20.0]:.3f} "
                      f"at lambda_omega 5 / 10 / 20, ratio(10/20) {ratio:.2f}, "
                      f"{elapsed:.1f} s")
    assert ok


def test_c07_correlation_suite(acceptance):
    t0 = time.perf_counter()
    worst_rel, worst_growth, worst_rec = 0.0, 0.0, 0.0
    for T_B in (4.0, 0.5, 1.0):
        b = bath(T_B)
        t = np.linspace(0, 20 * b.beta, 81)
        tri = correlation_continuum(t, b)
        quad = np.array([correlation_direct(s, b) for s in t])
        worst_rel = max(worst_rel, float(np.max(np.abs(tri - quad) / np.abs(quad))))
        tl = np.linspace(10 * b.beta, 100 * b.beta, 400)
        scaled = tl ** 2 * np.abs(correlation_continuum(tl, b))
        # bounded by the large-t limit 2 a / (beta w_c), approached from below
        worst_growth = max(worst_growth, float(scaled.max() / (2 * b.a / (b.beta * b.wc))))
    rng = np.random.default_rng(7)
    z = rng.uniform(0.05, 20, 200) + 1j * rng.uniform(-50, 50, 200)
    lhs, rhs = trigamma(z + 1), trigamma(z) - 1 / z ** 2
    worst_rec = float(np.max(np.abs(lhs - rhs) / np.maximum(1, np.abs(rhs))))
    elapsed = time.perf_counter() - t0
    ok = worst_rel < 1e-6 and worst_growth <= 1.05 and worst_rec < 1e-12 and elapsed < 30
    acceptance(7, ok, f"trigamma vs quadrature rel {worst_rel:.1e}, sup t^2|R| / limit "
                      f"{worst_growth:.3f}, recurrence {worst_rec:.1e}, {elapsed:.1f} s")
    assert ok


def test_c08_lamb_shift_inertness(acceptance):
    t0 = time.perf_counter()
    b = bath(4.0)
    cfg = EvolutionConfig("tdme", t_end=10.0)
    table = lamb_table(FAST, b)
    thermal = lamb_shift_ab_test(thermal_state(0.5, FAST), FAST, b, cfg, table)
    sup = lamb_shift_ab_test(superposition_state(), FAST, b, cfg, table)
    floor = 1e-10
    diff_th = thermal.max_state_difference
    diff_sx = float(np.abs(sup.sx_difference).max())
    elapsed = time.perf_counter() - t0
    ok = diff_th < floor and diff_sx > 100 * floor and elapsed < 60
    acceptance(8, ok, f"thermal max |drho| {diff_th:.1e}, superposition max |d<sx>| "
                      f"{diff_sx:.2e}, {elapsed:.1f} s")
    assert ok


def test_c09_tn_micro_oracle(acceptance):
    t0 = time.perf_counter()
    b = BathSpec(a=5e-2, wc=2.0, T=1.0)
    modes = discretize_bath(b, 2, 4.0, d=4)
    rho0 = superposition_state()
    tr = tn_run(rho0, FAST, b, 2, 4.0, 1e-3, 5.0, stride=50, bath=modes,
                trunc=TruncationConfig(max_gibbs_loss=1.0))
    ref = oracles.dense_spin_boson(rho0, FAST.omega0, FAST.Omega, FAST.omega, modes.w,
                                   modes.g, modes.d, b.T, tr.t)
    err = float(np.abs(tr.observables["P_e"] - observables_batch(ref, tr.t, FAST)["P_e"]).max())
    elapsed = time.perf_counter() - t0
    ok = err < 1e-4 and elapsed < 120
    acceptance(9, ok, f"max |P_e(TEBD) - P_e(dense)| {err:.2e} for t <= 5, {elapsed:.1f} s")
    assert ok


@pytest.mark.slow
def test_c10_tn_vs_tdme_desk_scale(acceptance):
    budget = 20 * 60
    t0 = time.perf_counter()
    parts, ok = [], True
    # cold bath first: it is the cheaper run, the hot one gets the remaining budget
    for T_B, T_S, d_max in ((0.5, 4.0, 6), (4.0, 0.5, 8)):
        b = bath(T_B)
        modes = discretize_bath(b, 30, 8.0, d_max=d_max)
        t_max = recurrence_time(modes)
        rho0 = thermal_state(T_S, FAST)
        remaining = max(0.0, budget - (time.perf_counter() - t0))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            tn = tn_run(rho0, FAST, b, 30, 8.0, 1e-2, t_max, stride=10, bath=modes,
                        trunc=TruncationConfig(svd_cutoff=1e-5, d_max=d_max,
                                               max_gibbs_loss=1.0),
                        max_wall_seconds=remaining)
        me = evolve(rho0, FAST, b, EvolutionConfig("tdme", t_end=t_max, stride=1))
        un = evolve(rho0, FAST, b, EvolutionConfig("unitary", t_end=t_max, stride=1))
        pe_me = np.interp(tn.t, me.t, me.observables["P_e"])
        gap = float(np.abs(tn.observables["P_e"] - pe_me).max())
        if T_B > T_S:
            excess = float(integrate.trapezoid(me.observables["P_e"] - un.observables["P_e"],
                                               me.t) / t_max)
            order = excess > 0 and me.observables["P_e"].max() > un.observables["P_e"].max()
            desc = f"P_e excess over unitary {excess:+.3e}"
        else:
            excess = float(integrate.trapezoid(
                me.observables["coherence"] - un.observables["coherence"], me.t) / t_max)
            order = excess > 0
            desc = f"coherence excess over unitary {excess:+.3e}"
        ok = ok and tn.complete and gap <= 0.02 and order
        reach = "" if tn.complete else f" (stopped at t {tn.t[-1]:.2f}, budget spent)"
        parts.append(f"T_B={T_B}: gap {gap:.3f} to t_max {t_max:.2f}{reach}, bond "
                     f"{tn.max_bond.max()}, {desc}")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < budget
    acceptance(10, ok, "; ".join(parts) + f"; {elapsed:.0f} s")
    assert ok


def test_c11_adiabatic_convergence(acceptance):
    t0 = time.perf_counter()
    res = lemma_convergence_experiment(g_values=(0.3, 0.1, 0.03))
    elapsed = time.perf_counter() - t0
    ok = res.monotone and elapsed < 120
    dev = " / ".join(f"{d:.2e}" for d in res.deviation)
    acceptance(11, ok, f"deviation {dev} at g = 0.3 / 0.1 / 0.03, {elapsed:.1f} s")
    assert ok


def test_c12_discretization_bookkeeping(acceptance):
    t0 = time.perf_counter()
    worst, halving = 0.0, 0.0
    for a, wc, w_max, N in ((1e-3, 3.0, 10.0, 100), (5e-3, 2.0, 8.0, 30),
                            (2e-3, 1.5, 12.0, 64)):
        eps1, eps2 = discretization_errors(BathSpec(a, wc, 1.0), N, w_max)
        ref1 = a * wc ** 2 * (w_max / wc + 1) * math.exp(-w_max / wc)
        ref2 = a * w_max ** 2 / (2 * N)
        worst = max(worst, abs(eps1 - ref1) / ref1, abs(eps2 - ref2) / ref2)
        eps2_double = discretization_errors(BathSpec(a, wc, 1.0), 2 * N, w_max)[1]
        halving = max(halving, abs(eps2_double / eps2 - 0.5))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and halving < 1e-12 and elapsed < 1
    acceptance(12, ok, f"closed-form mismatch {worst:.1e}, eps2 halving error "
                       f"{halving:.1e}, {elapsed:.3f} s")
    assert ok
