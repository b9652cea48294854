from __future__ import annotations

import math

import numpy as np
import pytest

from hopf.background import make_background, make_datum
from utils.errors import BeyondBreakingTime
from utils.fluxes import FluxModel

X = np.linspace(-6.0, 6.0, 49)


def test_constant_background(burgers) -> None:
    bf = make_background("constant", burgers, value=0.4)
    assert math.isinf(bf.breaking_time)
    np.testing.assert_allclose(bf.eval(X, 3.0), 0.4)
    u, ux, ut = bf.eval_all(X, 3.0)
    np.testing.assert_allclose(ux, 0.0)
    np.testing.assert_allclose(ut, 0.0)


def test_rarefaction_ramp_never_breaks(tanh_ramp) -> None:
    assert math.isinf(tanh_ramp.breaking_time)


def test_compressive_ramp_breaking_time(burgers) -> None:
    # min of f''(u) u0' = 2 b k sech^2(k x) is 2 b k at x = 0
    bf = make_background("tanh", burgers, a=0.0, b=-0.1, k=0.5)
    assert bf.breaking_time == pytest.approx(10.0, rel=1e-8)
    with pytest.raises(BeyondBreakingTime):
        bf.eval(0.0, 10.5)


def test_linear_datum_closed_form(burgers) -> None:
    # u_t + 2 u u_x = 0 with u(x, 0) = a + b x gives (a + b x)/(1 + 2 b t)
    bf = make_background("linear", burgers, a=0.2, b=0.5)
    t = 0.3
    np.testing.assert_allclose(bf.eval(X, t), (0.2 + 0.5 * X) / (1.0 + t), rtol=1e-12, atol=1e-12)
    falling = make_background("linear", burgers, a=0.0, b=-0.5)
    assert falling.breaking_time == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("flux", [FluxModel("u2"), FluxModel("u2_u3", beta=0.1)], ids=str)
def test_derivatives_match_finite_differences(flux: FluxModel) -> None:
    bf = make_background("gaussian", flux, a=0.1, b=0.3, w=1.5)
    t, h = 0.4, 1e-5
    u, ux, ut = bf.eval_all(X, t)
    np.testing.assert_allclose(ux, (bf.eval(X + h, t) - bf.eval(X - h, t)) / (2 * h), atol=1e-7)
    np.testing.assert_allclose(ut, (bf.eval(X, t + h) - bf.eval(X, t - h)) / (2 * h), atol=1e-7)
    uxx = (bf.eval_dx(X + h, t) - bf.eval_dx(X - h, t)) / (2 * h)
    np.testing.assert_allclose(bf.eval_dxx(X, t), uxx, atol=1e-6)
    # the background solves u_t + f'(u) u_x = 0
    np.testing.assert_allclose(ut + flux.prime(u) * ux, 0.0, atol=1e-14)


def test_characteristic_round_trip(tanh_ramp) -> None:
    xi = tanh_ramp.foot(X, 0.8)
    np.testing.assert_allclose(tanh_ramp.characteristic(xi, 0.8), X, atol=1e-11)
    assert np.all(tanh_ramp.jacobian(xi, 0.8) > 0.0)


def test_scalar_in_scalar_out(tanh_ramp) -> None:
    assert isinstance(tanh_ramp.eval(0.5, 0.2), float)
    assert tanh_ramp.along(0.5, 0.2, 1.0) == pytest.approx(
        tanh_ramp.eval_dt(0.5, 0.2) + tanh_ramp.eval_dx(0.5, 0.2)
    )


def test_unknown_datum() -> None:
    with pytest.raises(ValueError, match="Unsupported datum"):
        make_datum("sawtooth")
