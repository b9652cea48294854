from __future__ import annotations

import numpy as np
import pytest

from dynamics.systems import integrate_mode_A, integrate_mode_B
from dynamics.transport import make_e_init
from hopf.background import make_background
from mollifiers.kernels import get_mollifier, heaviside_from, moment
from utils.errors import OrientationMismatch, ResolutionInsufficient
from verify.ansatz import SmoothAnsatz, build_smooth_ansatz
from verify.checks import _open_system, hopf_delta_exact, hopf_rarefaction, linear_history, nonuniqueness_demo
from verify.kdv_direct import grid_size, kdv_direct
from verify.residuals import (
    EPS_SWEEP,
    TestFunction,
    build_bank,
    fit_order,
    residual_pairing,
    two_pairing_check,
)


def test_bump_derivatives_match_finite_differences() -> None:
    fn = TestFunction(0.3, 1.2)
    x = np.linspace(-0.7, 1.3, 41)
    h = 1e-6
    values = fn.derivatives(x)
    for order in range(1, 4):
        lower = [fn.derivatives(x + h)[order - 1], fn.derivatives(x - h)[order - 1]]
        np.testing.assert_allclose(values[order], (lower[0] - lower[1]) / (2 * h), atol=1e-5, err_msg=f"order {order}")
    assert fn(np.array([-0.9, 1.5])).tolist() == [0.0, 0.0]
    assert fn(0.3) == pytest.approx(fn.sup_norm)


def test_fit_order_recovers_slope() -> None:
    eps = np.array(EPS_SWEEP)
    fit = fit_order(eps, 3.0 * eps**2)
    assert fit.slope == pytest.approx(2.0, abs=1e-10)
    assert fit.converged
    assert fit.excluded_eps is None
    assert not fit.at_floor


def test_fit_order_drops_pre_asymptotic_largest_eps() -> None:
    eps = np.array(EPS_SWEEP)
    values = 3.0 * eps**2
    values[0] *= 10.0
    fit = fit_order(eps, values)
    assert fit.excluded_eps == pytest.approx(0.2)
    assert fit.slope == pytest.approx(2.0, abs=1e-8)
    assert fit.converged


def test_fit_order_below_floor() -> None:
    fit = fit_order(EPS_SWEEP, [1e-14] * len(EPS_SWEEP))
    assert fit.at_floor
    assert np.isnan(fit.slope)


def test_bank_covers_the_soliton(mode_b_traj) -> None:
    bank = build_bank(mode_b_traj)
    assert len(bank) == 8
    assert {fn.width for fn in bank} == {0.5, 1.0, 2.0}
    assert bank.covers([mode_b_traj.phi_at(0.5)])


def test_ansatz_orientation_must_match_region(mode_b_traj) -> None:
    with pytest.raises(OrientationMismatch):
        SmoothAnsatz(mode_b_traj, heaviside_from(get_mollifier("sech2"), "plus"), 0.1)
    with pytest.raises(ValueError):
        build_smooth_ansatz(mode_b_traj, 0.0)


def test_ansatz_derivatives_match_finite_differences(mode_b_traj) -> None:
    ansatz = build_smooth_ansatz(mode_b_traj, 0.1)
    t = 0.5
    phi = mode_b_traj.phi_at(t)
    # behind the soliton, where e solves its transport law
    x = np.linspace(phi - 0.6, phi - 0.02, 25)
    u, ux, ut = ansatz.evaluate(x, t)
    np.testing.assert_allclose(u, ansatz(x, t), atol=1e-12)
    h = 1e-6
    np.testing.assert_allclose(ux, (ansatz(x + h, t) - ansatz(x - h, t)) / (2 * h), atol=1e-5)
    np.testing.assert_allclose(ut, (ansatz(x, t + h) - ansatz(x, t - h)) / (2 * h), atol=1e-4)


def test_counterexample_soliton_leaves_the_support() -> None:
    m = get_mollifier("sech2")
    assert moment(m, 2) == pytest.approx(1.0 / 3.0, abs=1e-10)
    result = hopf_delta_exact(m, 0.01, 1.0)
    assert result.support[1] == pytest.approx(0.2)
    assert result.predicted_phi == pytest.approx(1.0 / 3.0, abs=1e-10)
    assert result.predicted_outside_support
    assert result.weak_limit_error <= 1e-6 * 0.01
    assert result.mass == pytest.approx(0.01, rel=1e-10)
    row = result.as_row()
    assert set(row) >= {"kernel", "predicted_phi", "weak_limit_error"}
    assert row["support_right"] == pytest.approx(2.0 * np.sqrt(0.01 * 1.0))


def test_hopf_rarefaction_shape() -> None:
    w = hopf_rarefaction(np.array([-0.1, 0.1, 0.3]), 1.0, 0.01)
    np.testing.assert_allclose(w, [0.0, 0.05, 0.0])
    with pytest.raises(ValueError):
        hopf_delta_exact(get_mollifier("gaussian"), 0.01, 0.0)


def test_nonuniqueness_in_the_wedge(tanh_ramp) -> None:
    histories = (linear_history(1.0, 0.0), linear_history(1.0, 0.5))
    result = nonuniqueness_demo(tanh_ramp, 1.0, 0.0, histories, 1.0)
    assert result.wedge_width > 0.0
    assert result.max_difference > 1e-3
    for key, value in result.residuals.items():
        assert value <= 1e-6, key

    same = nonuniqueness_demo(tanh_ramp, 1.0, 0.0, (histories[1], histories[1]), 1.0, n_steps=100)
    assert same.max_difference == 0.0


def test_open_system_phi_for_a_linear_history(burgers) -> None:
    bf = make_background("constant", burgers, value=0.3)
    run = _open_system(bf, linear_history(1.0, 0.5), 0.0, lambda x: np.zeros(np.shape(x)), 1.0, 8)
    t = run.times
    assert t[-1] == pytest.approx(1.0)
    # phi_t = 2 u0 + 2 g / 3 with g = 1 + t / 2 integrates exactly under RK4
    np.testing.assert_allclose(run.phi, 0.6 * t + 2.0 / 3.0 * (t + 0.25 * t**2), atol=1e-12)
    np.testing.assert_allclose(run.phi_t, 0.6 + 2.0 / 3.0 * (1.0 + 0.5 * t), atol=1e-12)


def test_nonuniqueness_needs_a_common_start(tanh_ramp) -> None:
    with pytest.raises(ValueError):
        nonuniqueness_demo(tanh_ramp, 1.0, 0.0, (linear_history(1.0, 0.0), linear_history(2.0, 0.0)), 1.0)


def test_direct_solver_on_constant_background(burgers) -> None:
    bf = make_background("constant", burgers, value=0.0)
    run = kdv_direct(bf, 1.0, 0.0, 0.1, 0.5, check_domain=False)
    assert run.n_points == grid_size(40.0, 0.1) == 4096
    # exact soliton speed 2 u0 + 2 g / 3
    assert run.x_peak[-1] == pytest.approx(2.0 / 3.0 * 0.5, abs=0.01)
    np.testing.assert_allclose(run.amplitude, 1.0, rtol=0.01)
    assert run.mass_drift <= 1e-8
    assert list(run.to_frame().columns) == ["t", "x_peak", "amplitude"]


def test_direct_solver_grid_checks(burgers) -> None:
    assert grid_size(40.0, 0.05) == 8192
    bf = make_background("constant", burgers, value=0.0)
    with pytest.raises(ResolutionInsufficient):
        kdv_direct(bf, 1.0, 0.0, 0.1, 0.5, n_points=256, check_domain=False)


@pytest.mark.slow
def test_direct_solver_conserves_energy_on_constant_background(burgers) -> None:
    bf = make_background("constant", burgers, value=0.2)
    run = kdv_direct(bf, 1.0, 0.0, 0.1, 0.5, check_domain=False)
    assert run.energy_drift <= 1e-6
    assert run.domain_difference is None


@pytest.mark.slow
def test_direct_solver_domain_doubling(burgers) -> None:
    bf = make_background("constant", burgers, value=0.0)
    run = kdv_direct(bf, 1.0, 0.0, 0.1, 0.5, check_domain=True)
    assert run.domain_difference is not None
    assert run.domain_difference <= 1e-6
    assert run.x_peak[-1] == pytest.approx(2.0 / 3.0 * 0.5, abs=0.01)


@pytest.mark.slow
def test_exact_soliton_calibration(burgers) -> None:
    bf = make_background("constant", burgers, value=0.2)
    traj = integrate_mode_B(bf, 1.0, 0.0, make_e_init("zero"), 1.0, n_steps=20)
    ansatz = build_smooth_ansatz(traj, EPS_SWEEP[0])
    for fn in build_bank(traj):
        for eps in EPS_SWEEP:
            for pairing in ("L", "uL"):
                value = residual_pairing(ansatz, "kdv", fn, eps, 0.5, pairing)
                assert abs(value) <= 1e-10 * fn.sup_norm, (fn, eps, pairing)


@pytest.mark.slow
def test_behind_structure_converges_at_second_order(mode_b_traj) -> None:
    ansatz = build_smooth_ansatz(mode_b_traj, EPS_SWEEP[0])
    report = two_pairing_check(ansatz, None, EPS_SWEEP, build_bank(mode_b_traj), operator="kdv", threads=4)
    for pairing in ("L", "uL"):
        assert report.aggregate_slope(pairing) >= 1.8
        assert report.all_converged(pairing)


@pytest.mark.slow
def test_ahead_structure_converges_for_hopf(tanh_ramp) -> None:
    bump = make_e_init("gaussian", amplitude=0.2, center=3.0, width=1.0)
    traj = integrate_mode_A(tanh_ramp, None, 1.0, 0.0, bump, 1.0, n_steps=200)
    ansatz = build_smooth_ansatz(traj, EPS_SWEEP[0])
    report = two_pairing_check(ansatz, None, EPS_SWEEP, build_bank(traj), operator="hopf", pairings=("L",), threads=4)
    assert report.aggregate_slope("L") >= 1.8
    assert report.all_converged("L")


@pytest.mark.slow
def test_direct_solver_follows_behind_structure(mode_b_traj, tanh_ramp) -> None:
    eps = 0.05
    run = kdv_direct(tanh_ramp, 1.0, 0.0, eps, 1.0, check_domain=False)
    phi = np.array([mode_b_traj.phi_at(t) for t in run.times])
    g = np.array([mode_b_traj.g_at(t) for t in run.times])
    width = eps / np.sqrt(g / 6.0)
    assert np.all(np.abs(run.x_peak - phi) <= 0.05 * width)
    np.testing.assert_allclose(run.amplitude, g, rtol=0.05)
