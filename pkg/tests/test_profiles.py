from __future__ import annotations

import numpy as np
import pytest

from mollifiers.kernels import sech2
from profiles.profiles import (
    build_potential,
    find_turning_point,
    kdv_profile,
    profile_for_amplitude,
    profile_functionals,
    scaled_moments,
    solve_profile,
    speed_for_amplitude,
    zero_profile,
)
from utils.errors import NonPositiveAmplitude, NoSoliton, TailDivergence
from utils.fluxes import FluxModel
from verify.checks import profile_identity_residual

TAU = np.linspace(-10.0, 10.0, 2001)


@pytest.mark.parametrize("g", [0.5, 1.0, 2.0])
def test_burgers_profile_matches_sech2(g: float) -> None:
    prof = solve_profile(FluxModel("u2"), 0.0, 2.0 * g / 3.0)
    exact = g * sech2(np.sqrt(g / 6.0) * TAU)
    assert prof.amplitude == pytest.approx(g, rel=1e-10)
    assert np.max(np.abs(prof(TAU) - exact)) <= 1e-6
    assert prof.first_integral_residual(TAU) <= 1e-8


def test_profile_is_even_and_decays() -> None:
    prof = profile_for_amplitude(FluxModel("u2_u3"), 0.2, 1.0)
    np.testing.assert_allclose(prof(TAU), prof(-TAU), atol=1e-14)
    assert prof(40.0) < 1e-8 * prof.amplitude
    assert prof.decay_rate == pytest.approx(np.sqrt(prof.speed - FluxModel("u2_u3").prime(0.2)))


def test_speed_for_amplitude_closed_form() -> None:
    f = FluxModel("u2")
    assert speed_for_amplitude(f, 0.0, 1.2) == pytest.approx(0.8)
    assert speed_for_amplitude(f, 0.5, 1.2) == pytest.approx(1.0 + 0.8)
    # f = u^3, u0 = 0: c = 2 (a^4/4)/a^2
    assert speed_for_amplitude(FluxModel("u3"), 0.0, 2.0) == pytest.approx(2.0)
    with pytest.raises(NonPositiveAmplitude):
        speed_for_amplitude(f, 0.0, 0.0)


def test_turning_point_of_cubic_flux() -> None:
    f = FluxModel("u3")
    c = speed_for_amplitude(f, 0.3, 0.9)
    assert find_turning_point(build_potential(f, 0.3, c)) == pytest.approx(0.9, abs=1e-10)


def test_no_soliton_below_characteristic_speed() -> None:
    f = FluxModel("u2")
    with pytest.raises(NoSoliton):
        find_turning_point(build_potential(f, 0.0, -1.0))
    with pytest.raises(TailDivergence):
        solve_profile(f, 0.0, -1.0)


@pytest.mark.parametrize("g,u0", [(1.0, 0.0), (0.6, 0.4)])
def test_solved_moments_match_kdv_closed_forms(g: float, u0: float) -> None:
    f = FluxModel("u2")
    solved = profile_for_amplitude(f, u0, g)
    exact = kdv_profile(g, u0)
    assert solved.speed == pytest.approx(exact.speed, rel=1e-12)
    for key, value in exact.moments.as_dict().items():
        assert solved.moments.as_dict()[key] == pytest.approx(value, rel=1e-8)
    for key, value in exact.functionals.as_dict().items():
        assert solved.functionals.as_dict()[key] == pytest.approx(value, rel=1e-8)


def test_kdv_profile_derivatives() -> None:
    prof = kdv_profile(1.0, 0.0)
    h = 1e-4
    for order, fn, lower in ((1, prof.derivative, prof), (2, prof.second_derivative, prof.derivative),
                             (3, prof.third_derivative, prof.second_derivative)):
        fd = (lower(TAU + h) - lower(TAU - h)) / (2 * h)
        np.testing.assert_allclose(fn(TAU), fd, atol=1e-6, err_msg=f"order {order}")


def test_scaled_moments_convention() -> None:
    unit = {1: 2.0, 2: 4.0 / 3.0, 3: 16.0 / 15.0, 4: 16.0 / 15.0}
    g = 1.0
    alpha = np.sqrt(g / 6.0)
    out = scaled_moments(g, alpha, unit)
    exact = kdv_profile(g, 0.0).moments
    assert out[1] == pytest.approx(exact.omega1)
    assert out[2] == pytest.approx(exact.omega2)
    assert out[3] == pytest.approx(exact.omega3)
    assert out[4] == pytest.approx(exact.omega_delta)


def test_zero_profile() -> None:
    prof = zero_profile(0.3, 1.0)
    assert prof(np.array([0.0, 1.0])).tolist() == [0.0, 0.0]
    assert all(v == 0.0 for v in profile_functionals(prof, FluxModel("u2")).values())
    assert profile_identity_residual(prof, 0.3, 1.0).residual == 0.0


SAMPLES = [(u0, a) for u0 in (0.0, 0.3) for a in (0.4, 0.8, 1.2, 1.6, 2.4)]


@pytest.mark.parametrize("flux", [FluxModel("u2"), FluxModel("u3"), FluxModel("u2_u3", beta=0.1)], ids=str)
def test_profile_identities(flux: FluxModel) -> None:
    for u0, a in SAMPLES:
        prof = profile_for_amplitude(flux, u0, a)
        report = profile_identity_residual(prof, u0, prof.speed, flux)
        assert report.residual <= 1e-6, (u0, a)
        assert report.energy <= 1e-7, (u0, a)
        assert report.virial <= 1e-7, (u0, a)
        assert report.lambda_tilde_identity <= 1e-7, (u0, a)
        assert report.speed_consistency <= 1e-7, (u0, a)
