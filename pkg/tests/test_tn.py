import dataclasses
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from driven_lindblad.bath import BathSpec, bose, correlation_discrete
from driven_lindblad.propagators import propagate_closed
from driven_lindblad.qubit import (DriveParams, ground_state, observables_batch,
                                   superposition_state, thermal_state)
from driven_lindblad.tn import (GibbsTruncationError, TruncationConfig, TruncationError,
                                discretization_errors, discretize_bath, gibbs_weights,
                                initial_purified_state, interaction_gate, local_dimension,
                                recurrence_time, tebd_step, tn_run)

import oracles

FAST = DriveParams.from_ratios(1.0, 10.0)


def test_eps1_example():
    b = BathSpec(a=1e-3, wc=3.0, T=1.0)
    eps1, _ = discretization_errors(b, 100, 10.0)
    assert eps1 == pytest.approx(1e-3 * 9 * (10 / 3 + 1) * math.exp(-10 / 3), rel=1e-14)
    assert eps1 == pytest.approx(1.39e-3, abs=5e-6)


def test_first_coupling_example():
    bath = discretize_bath(BathSpec(a=1e-3, wc=3.0, T=1.0), 100, 10.0)
    assert bath.dw == pytest.approx(0.1)
    assert bath.g[0] == pytest.approx(3.11e-3, abs=5e-6)


@given(st.floats(1e-4, 1e-2), st.floats(0.5, 5), st.floats(0.1, 8), st.integers(1, 120),
       st.floats(1, 20))
def test_discretization_invariants(a, wc, T, N, w_max):
    b = BathSpec(a, wc, T)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        bath = discretize_bath(b, N, w_max)
    assert np.allclose(bath.w, bath.dw * np.arange(1, N + 1), rtol=1e-14)
    assert np.allclose(bath.g ** 2, a * bath.w * np.exp(-bath.w / wc) * bath.dw, rtol=1e-12)
    assert min(bath.d) >= 2
    assert all(x >= y for x, y in zip(bath.d, bath.d[1:]))
    assert bath.eps2 <= a * w_max ** 2 / (2 * N) * (1 + 1e-14)
    assert discretization_errors(b, 2 * N, w_max)[1] == pytest.approx(bath.eps2 / 2, rel=1e-14)


def test_local_dimension_rule():
    assert local_dimension(0.0) == 2
    assert local_dimension(0.2) == 3
    assert local_dimension(1.1, occupancy_cutoff=4.0) == 7
    b = BathSpec(5e-3, 2.0, 0.5)
    bath = discretize_bath(b, 30, 8.0)
    nb = bose(bath.w, 0.5)
    assert bath.d == tuple(max(2, math.ceil(4 * n) + 2) for n in nb)
    assert max(discretize_bath(BathSpec(5e-3, 2.0, 4.0), 30, 8.0, d_max=6).d) == 6


def test_low_cutoff_warns():
    with pytest.warns(RuntimeWarning):
        discretize_bath(BathSpec(5e-3, 2.0, 1.0), 10, 1.5)


def test_bath_correlation_is_correlation_discrete():
    b = BathSpec(5e-3, 2.0, 1.3)
    bath = discretize_bath(b, 30, 8.0)
    t = np.linspace(0, 30, 301)
    ref = correlation_discrete(t, list(zip(bath.w, bath.g)), b.T)
    assert np.max(np.abs(bath.correlation(t) - ref)) < 1e-12


def test_recurrence_time_desk_bath():
    bath = discretize_bath(BathSpec(5e-3, 2.0, 4.0), 30, 8.0)
    t_max = recurrence_time(bath)
    assert 20.0 < t_max < 2 * math.pi / bath.dw


def test_gibbs_weights_and_low_temperature_limit():
    p, loss = gibbs_weights(1.0, 0.5, 5)
    assert p.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.diff(p) < 0) and loss == pytest.approx(math.exp(-10))
    p, _ = gibbs_weights(1.0, 1e-3, 4)
    assert p[0] == pytest.approx(1.0, abs=1e-15)


def test_initial_state_ground_and_norm():
    bath = discretize_bath(BathSpec(5e-3, 2.0, 0.05), 4, 8.0)
    psi = initial_purified_state(ground_state(), bath)
    spin = psi.tensors[0].reshape(2, 2)
    # ground state is basis vector 1 in both legs
    assert np.allclose(spin, np.diag([0, 1]))
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert psi.bond_dims == [1] * 4
    for a in psi.tensors[1:]:
        assert abs(a[0, 0, 0, 0]) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(psi.spin_density_matrix(), np.asarray(ground_state()))


def test_initial_state_rejects_lossy_truncation():
    bath = discretize_bath(BathSpec(5e-3, 2.0, 4.0), 30, 8.0, d_max=4)
    with pytest.raises(GibbsTruncationError):
        initial_purified_state(thermal_state(0.5, FAST), bath)
    psi = initial_purified_state(thermal_state(0.5, FAST), bath, max_gibbs_loss=1.0)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)


def test_interaction_gate_is_unitary():
    G = interaction_gate(0.3, 5, 0.7)
    assert np.max(np.abs(G @ G.conj().T - np.eye(10))) < 1e-13


def test_uncoupled_spin_follows_closed_propagator():
    bath = discretize_bath(BathSpec(5e-3, 2.0, 1.0), 3, 8.0)
    bath = dataclasses.replace(bath, g=np.zeros(3))
    rho0 = superposition_state()
    tr = tn_run(rho0, FAST, None, 3, 8.0, 1e-3, 1.0, stride=100, bath=bath,
                trunc=TruncationConfig(max_gibbs_loss=1.0))
    U = propagate_closed(FAST, 1.0, 1e-3, stride=100).matrices()
    ref = U @ np.asarray(rho0) @ U.conj().transpose(0, 2, 1)
    fid = np.einsum("kij,kji->k", tr.rho, ref).real
    assert np.max(1 - fid) < 1e-8


def test_sweep_returns_spin_to_head():
    b = BathSpec(5e-3, 2.0, 1.0)
    bath = discretize_bath(b, 5, 8.0)
    psi = initial_purified_state(superposition_state(), bath, max_gibbs_loss=1.0)
    tebd_step(psi, 0.0, 1e-2, FAST, bath)
    assert psi.spin_position() == 0
    assert psi.order == list(range(6))
    assert psi.norm() == pytest.approx(1.0, abs=1e-10)


def test_trotter_error_is_second_order():
    b = BathSpec(0.05, 2.0, 1.0)
    bath = discretize_bath(b, 2, 4.0, d=4)
    rho0 = superposition_state()
    ref = tn_run(rho0, FAST, b, 2, 4.0, 1.25e-3, 1.0, bath=bath,
                 trunc=TruncationConfig(svd_cutoff=0.0, max_gibbs_loss=1.0)).rho[-1]
    errs = []
    for dt in (1e-2, 5e-3):
        rho = tn_run(rho0, FAST, b, 2, 4.0, dt, 1.0, bath=bath,
                     trunc=TruncationConfig(svd_cutoff=0.0, max_gibbs_loss=1.0)).rho[-1]
        errs.append(np.max(np.abs(rho - ref)))
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_small_run_matches_dense_oracle():
    b = BathSpec(0.05, 2.0, 1.0)
    bath = discretize_bath(b, 2, 4.0, d=4)
    rho0 = superposition_state()
    tr = tn_run(rho0, FAST, b, 2, 4.0, 1e-3, 2.0, bath=bath, stride=100,
                trunc=TruncationConfig(svd_cutoff=0.0, max_gibbs_loss=1.0))
    ref = oracles.dense_spin_boson(rho0, 1.0, 1.0, 10.0, bath.w, bath.g, bath.d, 1.0, tr.t)
    assert np.max(np.abs(tr.rho - ref)) < 1e-5


def test_run_diagnostics_and_positivity():
    b = BathSpec(5e-3, 2.0, 1.0)
    tr = tn_run(superposition_state(), FAST, b, 8, 8.0, 1e-2, 2.0, stride=10,
                trunc=TruncationConfig(svd_cutoff=1e-7, max_gibbs_loss=1.0))
    tr_rho = np.trace(tr.rho, axis1=1, axis2=2)
    assert np.max(np.abs(tr_rho - 1)) < 1e-6
    assert np.min(np.linalg.eigvalsh(tr.rho)) > -1e-10
    assert tr.max_bond[0] == 1 and tr.max_bond.max() <= 64
    assert np.all(np.diff(tr.discarded_weight) >= 0)
    assert not tr.beyond_recurrence.any()


def test_truncation_budget_aborts():
    b = BathSpec(5e-2, 2.0, 1.0)
    with pytest.raises(TruncationError) as exc:
        tn_run(superposition_state(), FAST, b, 6, 8.0, 1e-2, 2.0,
               trunc=TruncationConfig(chi_max=1, max_discarded=1e-6, max_gibbs_loss=1.0))
    assert exc.value.discarded > 1e-6


def test_step_outside_tested_range_warns():
    b = BathSpec(5e-3, 2.0, 1.0)
    with pytest.warns(RuntimeWarning):
        tn_run(superposition_state(), FAST, b, 2, 8.0, 5e-2, 0.1,
               trunc=TruncationConfig(max_gibbs_loss=1.0))


def test_wall_clock_limit_returns_partial_run():
    b = BathSpec(5e-3, 2.0, 1.0)
    with pytest.warns(RuntimeWarning, match="wall-clock"):
        tr = tn_run(superposition_state(), FAST, b, 4, 8.0, 1e-2, 5.0, stride=10,
                    trunc=TruncationConfig(max_gibbs_loss=1.0), max_wall_seconds=0.0)
    assert not tr.complete
    assert len(tr.t) == 2 and tr.t[-1] == pytest.approx(0.1)
    # the only recorded sample is the final one, so the limit never triggers
    full = tn_run(superposition_state(), FAST, b, 4, 8.0, 1e-2, 0.1, stride=10,
                  trunc=TruncationConfig(max_gibbs_loss=1.0), max_wall_seconds=0.0)
    assert full.complete


@pytest.mark.slow
def test_undriven_equilibrium_is_stationary():
    p = DriveParams(omega0=1.0, Omega=0.0, omega=1.0)
    b = BathSpec(5e-3, 2.0, 1.0)
    bath = discretize_bath(b, 12, 8.0, d_max=6)
    t_end = recurrence_time(bath)
    rho0 = thermal_state(1.0, p)
    tr = tn_run(rho0, p, b, 12, 8.0, 1e-2, t_end, stride=50, bath=bath,
                trunc=TruncationConfig(svd_cutoff=1e-5, max_gibbs_loss=1.0))
    P0 = np.asarray(rho0)[0, 0].real
    assert np.max(np.abs(tr.observables["P_e"] - P0)) < 5e-3


@pytest.mark.slow
def test_desk_bath_matches_tcl2_reference_at_early_times():
    # second-order memory-kernel equation: exact to O(a^2) for this weak coupling
    b = BathSpec(5e-3, 2.0, 0.5)
    rho0 = thermal_state(4.0, FAST)
    tr = tn_run(rho0, FAST, b, 30, 8.0, 1e-2, 3.0, stride=10,
                trunc=TruncationConfig(svd_cutoff=1e-6, d_max=6, max_gibbs_loss=1.0))
    t, rho = oracles.tcl2_spin(np.asarray(rho0), 1.0, 1.0, 10.0, b.a, b.wc, b.T, 3.0)
    ref = np.interp(tr.t, t, observables_batch(rho, t, FAST)["P_e"])
    assert np.max(np.abs(tr.observables["P_e"] - ref)) < 1e-3
