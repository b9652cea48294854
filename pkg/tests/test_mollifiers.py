from __future__ import annotations

import numpy as np
import pytest

from mollifiers.kernels import (
    delta_approx,
    get_mollifier,
    gradient_moment,
    heaviside_from,
    lambda_functional,
    moment,
    rescaled,
    theta_approx,
)
from utils.errors import NonIntegrable
from utils.fluxes import FluxModel


def test_kdv_kernel_moments() -> None:
    m = get_mollifier("kdv_sech2")
    assert moment(m, 1) == pytest.approx(2.0, abs=1e-8)
    assert moment(m, 2) == pytest.approx(4.0 / 3.0, abs=1e-8)
    assert moment(m, 3) == pytest.approx(16.0 / 15.0, abs=1e-8)
    assert gradient_moment(m) == pytest.approx(16.0 / 15.0, abs=1e-8)


@pytest.mark.parametrize("name", ["sech2", "gaussian", "bump", "cauchy"])
def test_unit_mass(name: str) -> None:
    assert moment(get_mollifier(name), 1) == pytest.approx(1.0, abs=1e-9)


def test_normalized_sech2_second_moment() -> None:
    assert moment(get_mollifier("sech2"), 2) == pytest.approx(1.0 / 3.0, abs=1e-10)


def test_rescaled_kernel_keeps_mass() -> None:
    m = rescaled(get_mollifier("gaussian"), 2.5)
    assert moment(m, 1) == pytest.approx(1.0, abs=1e-9)
    assert m(0.0) == pytest.approx(2.5 * get_mollifier("gaussian")(0.0))


@pytest.mark.parametrize("alpha", [0.5, 2.0])
@pytest.mark.parametrize("name", ["sech2", "kdv_sech2", "gaussian", "bump", "cauchy"])
def test_rescaled_moments_scale_homogeneously(name: str, alpha: float) -> None:
    m = get_mollifier(name)
    scaled = rescaled(m, alpha)
    for n in (1, 2, 3):
        assert moment(scaled, n) == pytest.approx(alpha ** (n - 1) * moment(m, n), rel=1e-7), n


@pytest.mark.parametrize("name", ["sech2", "gaussian", "bump", "cauchy"])
def test_heaviside_slope_is_the_kernel(name: str) -> None:
    m = get_mollifier(name)
    h = heaviside_from(m)
    z = np.linspace(-3.0, 3.0, 25)
    step = 1e-4
    np.testing.assert_allclose(h.derivative(z), m(z), atol=1e-14)
    np.testing.assert_allclose((h.omega0(z + step) - h.omega0(z - step)) / (2.0 * step), m(z), atol=1e-5)


def test_cauchy_heaviside_closed_form() -> None:
    h = heaviside_from(get_mollifier("cauchy"))
    z = np.linspace(-40.0, 40.0, 161)
    np.testing.assert_allclose(h.omega0(z), 0.5 + np.arctan(z) / np.pi, atol=1e-10)


@pytest.mark.parametrize("name", ["sech2", "gaussian", "bump"])
def test_heaviside_limits_and_orientation(name: str) -> None:
    m = get_mollifier(name)
    plus, minus = heaviside_from(m, "plus"), heaviside_from(m, "minus")
    assert plus.omega0(-60.0) == pytest.approx(0.0, abs=1e-12)
    assert plus.omega0(60.0) == pytest.approx(1.0, abs=1e-12)
    assert plus.omega0(0.0) == pytest.approx(0.5, abs=1e-12)
    z = np.array([-2.0, -0.3, 0.7, 1.9])
    np.testing.assert_allclose(minus.omega0(z), plus.omega0(-z), atol=1e-14)
    np.testing.assert_allclose(minus.derivative(z), -m(-z), atol=1e-14)


def test_heaviside_needs_unit_mass() -> None:
    with pytest.raises(ValueError, match="unit-mass"):
        heaviside_from(get_mollifier("kdv_sech2"))


def test_theta_and_delta_approximations() -> None:
    m = get_mollifier("sech2")
    h = heaviside_from(m)
    assert theta_approx(h, 1.0, 0.01) == pytest.approx(1.0, abs=1e-12)
    assert theta_approx(h, -1.0, 0.01) == pytest.approx(0.0, abs=1e-12)
    assert delta_approx(m, 0.0, 0.1) == pytest.approx(5.0)


def test_unknown_preset_and_bad_width() -> None:
    with pytest.raises(ValueError, match="Unsupported mollifier"):
        get_mollifier("triangle")
    with pytest.raises(ValueError):
        get_mollifier("sech2", width=0.0)


def test_lambda_functional_of_kdv_kernel() -> None:
    m = get_mollifier("kdv_sech2")
    f = FluxModel("u2")
    # f(u0 + w) - f(u0) = 2 u0 w + w^2
    assert lambda_functional(f, 0.0, m) == pytest.approx(4.0 / 3.0, abs=1e-9)
    assert lambda_functional(f, 1.0, m) == pytest.approx(4.0 + 4.0 / 3.0, abs=1e-9)


def test_slow_algebraic_decay_is_rejected() -> None:
    f = FluxModel(coefficients=[0.0, 1.0])
    with pytest.raises(NonIntegrable):
        lambda_functional(f, 0.0, lambda z: 1.0 / (1.0 + np.abs(z)), decay_class="cauchy")
