from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import trapezoid

from mollifiers.kernels import MOLLIFIER_PRESETS, get_mollifier
from utils.errors import CenterMismatch, MissingMoment, MissingRate, OrientationMismatch, OutOfTruncation, UnreducedInput
from utils.fluxes import FluxModel
from weakalgebra.algebra import (
    AsymptoticDistribution,
    DeltaPrimeTerm,
    DeltaTerm,
    Field,
    Jet,
    KernelMoments,
    ThetaTerm,
    add,
    collect,
    compose,
    constant,
    delta,
    differentiate_t,
    differentiate_x,
    dispersion_term,
    is_reduced,
    multiply,
    reduce,
    scale,
    soliton_ansatz,
)


def kdv_soliton(g: float, u0: float = 0.0) -> AsymptoticDistribution:
    """Exact KdV soliton data: amplitude g, alpha = sqrt(g/6), speed 2 u0 + 2g/3."""
    moments = KernelMoments.from_kernel(get_mollifier("kdv_sech2"), Jet(np.sqrt(g / 6.0), 0.0))
    center = Jet(0.0, 2.0 * u0 + 2.0 * g / 3.0)
    return soliton_ansatz(Field.const(u0), Jet(g, 0.0), center, moments)


def test_jet_product_rule() -> None:
    a, b = Jet(2.0, 3.0), Jet(5.0, -1.0)
    assert (a * b).rate == pytest.approx(3.0 * 5.0 - 2.0)
    assert (a / b).rate == pytest.approx((3.0 * 5.0 + 2.0) / 25.0)
    assert (a**3).rate == pytest.approx(3 * 4.0 * 3.0)
    assert (a + Jet(1.0)).rate is None


@pytest.mark.parametrize("g,u0", [(1.0, 0.0), (0.5, 0.3), (2.0, -0.2)])
def test_exact_soliton_has_empty_hopf_ledger(g: float, u0: float) -> None:
    u = kdv_soliton(g, u0)
    ledger = collect(reduce(add(differentiate_t(u), differentiate_x(compose(FluxModel("u2"), u)))))
    assert ledger.c_delta == pytest.approx(0.0, abs=1e-12)
    assert ledger.c_delta_prime == pytest.approx(0.0, abs=1e-8)


def test_weight_uses_profile_moments() -> None:
    u = kdv_soliton(1.5)
    alpha = np.sqrt(1.5 / 6.0)
    assert u.weight().value == pytest.approx(1.5 * 2.0 / alpha, rel=1e-9)
    squared = multiply(u, u)
    # 2 u0 g Omega_1 / alpha + g^2 Omega_2 / alpha with u0 = 0
    assert squared.weight().value == pytest.approx(1.5**2 * (4.0 / 3.0) / alpha, rel=1e-9)


def test_reduce_moves_variable_coefficient_of_delta_prime() -> None:
    coef = Field(lambda x: 3.0 * np.asarray(x), lambda x: np.full(np.shape(x), 3.0))
    expr = AsymptoticDistribution(Field.zero(), Jet(2.0, 0.0), (), (DeltaPrimeTerm(coef),))
    assert not is_reduced(expr)
    ledger = collect(reduce(expr))
    assert ledger.c_delta_prime == pytest.approx(6.0)
    assert ledger.c_delta == pytest.approx(-3.0)


def test_collect_needs_reduced_input() -> None:
    expr = AsymptoticDistribution(Field.zero(), Jet(0.0, 0.0), (DeltaTerm(Jet(1.0), 0), DeltaTerm(Jet(2.0), 0)))
    with pytest.raises(UnreducedInput):
        collect(expr)
    assert collect(reduce(expr)).c_delta == pytest.approx(3.0)


def test_scale_and_constant_parts() -> None:
    expr = scale(add(constant(2.0), delta(Jet(1.0, 0.0), Jet(0.5, 1.0))), -2.0)
    ledger = collect(reduce(expr))
    assert ledger.c_delta == pytest.approx(-2.0)
    assert float(ledger.c0(0.0)) == pytest.approx(-4.0)


def test_theta_derivative_emits_delta() -> None:
    e = Field.const(0.7, 0.0)
    base = AsymptoticDistribution(Field.const(0.0), Jet(1.0, 2.0), (), (), (ThetaTerm(e, "plus"),))
    assert collect(reduce(differentiate_x(base))).c_delta == pytest.approx(0.7)
    assert collect(reduce(differentiate_t(base))).c_delta == pytest.approx(-0.7 * 2.0)
    minus = AsymptoticDistribution(Field.const(0.0), Jet(1.0, 2.0), (), (), (ThetaTerm(e, "minus"),))
    assert collect(reduce(differentiate_x(minus))).c_delta == pytest.approx(-0.7)


def test_dispersion_term_coefficient() -> None:
    moments = KernelMoments.from_kernel(get_mollifier("kdv_sech2"), Jet(0.5, 0.0))
    u = soliton_ansatz(Field.const(0.0), Jet(1.0, 0.0), Jet(0.0, 0.0), moments)
    ledger = collect(reduce(dispersion_term(u)))
    assert ledger.c_delta_prime == pytest.approx(-3.0 * 0.5 * 16.0 / 15.0, rel=1e-9)


def test_truncation_errors() -> None:
    u = kdv_soliton(1.0)
    with pytest.raises(OutOfTruncation):
        differentiate_x(differentiate_x(u))
    with pytest.raises(OutOfTruncation):
        multiply(differentiate_x(u), u)


def test_center_and_orientation_mismatch() -> None:
    with pytest.raises(CenterMismatch):
        add(delta(Jet(1.0), Jet(0.0, 0.0)), delta(Jet(1.0), Jet(1.0, 0.0)))
    e = Field.const(1.0)
    plus = AsymptoticDistribution(Field.zero(), Jet(0.0, 0.0), (), (), (ThetaTerm(e, "plus"),))
    minus = AsymptoticDistribution(Field.zero(), Jet(0.0, 0.0), (), (), (ThetaTerm(e, "minus"),))
    with pytest.raises(OrientationMismatch):
        add(plus, minus)


def test_missing_rate_and_moment() -> None:
    with pytest.raises(MissingRate):
        differentiate_t(delta(Jet(1.0, 0.0), Jet(0.0, None)))
    sparse = KernelMoments({1: 2.0}, Jet(1.0, 0.0), kernel=get_mollifier("kdv_sech2"))
    u = soliton_ansatz(Field.const(0.0), Jet(1.0, 0.0), Jet(0.0, 0.0), sparse)
    with pytest.raises(MissingMoment):
        multiply(u, u)


def linear_field(c0: float, c1: float, rate: float = 0.0) -> Field:
    return Field(
        lambda x: c0 + c1 * np.asarray(x, dtype=float),
        lambda x: np.full(np.shape(x), c1),
        lambda x: np.full(np.shape(x), rate),
    )


SECH2_MOMENTS = KernelMoments.from_kernel(get_mollifier("sech2"), Jet(0.8, 0.1))
SHARED_CENTER = Jet(0.3, 0.7)
GRID = np.linspace(-1.0, 1.5, 11)


def random_distribution(rng: np.random.Generator) -> AsymptoticDistribution:
    reg = linear_field(*rng.normal(size=2), rate=rng.normal())
    e = linear_field(*rng.normal(size=2))
    amplitude = Jet(rng.uniform(0.5, 1.5), rng.normal())
    return soliton_ansatz(reg, amplitude, SHARED_CENTER, SECH2_MOMENTS, e, "minus")


def assert_same_distribution(a: AsymptoticDistribution, b: AsymptoticDistribution) -> None:
    ra, rb = reduce(a), reduce(b)
    la, lb = collect(ra), collect(rb)
    assert la.c_delta == pytest.approx(lb.c_delta, rel=1e-12, abs=1e-12)
    assert ra.weight().rate == pytest.approx(rb.weight().rate, rel=1e-12, abs=1e-12)
    assert la.c_delta_prime == lb.c_delta_prime == 0.0
    np.testing.assert_allclose(la.c0(GRID), lb.c0(GRID), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(la.c_theta(GRID), lb.c_theta(GRID), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_add_and_multiply_commute(seed: int) -> None:
    a, b = (random_distribution(np.random.default_rng([seed, k])) for k in range(2))
    assert_same_distribution(add(a, b), add(b, a))
    assert_same_distribution(multiply(a, b), multiply(b, a))


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_add_and_multiply_associate(seed: int) -> None:
    a, b, c = (random_distribution(np.random.default_rng([seed, k])) for k in range(3))
    assert_same_distribution(add(add(a, b), c), add(a, add(b, c)))
    assert_same_distribution(multiply(multiply(a, b), c), multiply(a, multiply(b, c)))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_multiply_by_one(seed: int) -> None:
    a = random_distribution(np.random.default_rng(seed))
    one = constant(1.0)
    assert_same_distribution(multiply(a, one), a)
    assert_same_distribution(multiply(one, a), a)


@pytest.mark.parametrize("name", MOLLIFIER_PRESETS)
def test_compose_with_square_matches_multiply(name: str) -> None:
    moments = KernelMoments.from_kernel(get_mollifier(name), Jet(0.7, 0.1))
    # u0(phi) = 0
    a = soliton_ansatz(linear_field(-0.1, 0.2, rate=0.1), Jet(0.9, 0.05), Jet(0.5, 0.6), moments,
                       linear_field(0.5, -0.4), "plus")
    composed, squared = reduce(compose(FluxModel("u2"), a)), reduce(multiply(a, a))
    assert composed.weight().value == pytest.approx(squared.weight().value, rel=1e-9)
    assert composed.weight().rate == pytest.approx(squared.weight().rate, rel=1e-7)
    lc, ls = collect(composed), collect(squared)
    np.testing.assert_allclose(lc.c0(GRID), ls.c0(GRID), rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(lc.c_theta(GRID), ls.c_theta(GRID), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("g,u0", [(1.0, 0.0), (0.5, 0.3), (2.0, -0.2)])
def test_cube_of_kdv_soliton(g: float, u0: float) -> None:
    u = kdv_soliton(g, u0)
    cubed = compose(FluxModel("u3"), u)
    expected = np.sqrt(6.0) * (16.0 / 15.0 * g**2.5 + 4.0 * u0 * g**1.5 + 6.0 * u0**2 * g**0.5)
    assert cubed.weight().value == pytest.approx(expected, rel=1e-9)
    assert multiply(u, multiply(u, u)).weight().value == pytest.approx(expected, rel=1e-9)
    assert float(collect(reduce(cubed)).c0(0.5)) == pytest.approx(u0**3)


@pytest.mark.parametrize("u0", [0.0, 0.2])
def test_exponential_of_gaussian_delta(u0: float) -> None:
    kernel = get_mollifier("gaussian")
    a = soliton_ansatz(Field.const(u0), Jet(1.0, 0.0), Jet(0.0, 0.0), KernelMoments.from_kernel(kernel),
                       Field.const(0.3), "plus")
    ledger = collect(reduce(compose(np.exp, a)))
    tau = np.linspace(-20.0, 20.0, 8001)
    expected = np.exp(u0) * trapezoid(np.exp(kernel(tau)) - 1.0, tau)
    assert ledger.c_delta == pytest.approx(expected, rel=1e-10)
    assert float(ledger.c0(0.0)) == pytest.approx(np.exp(u0))
    assert float(ledger.c_theta(0.0)) == pytest.approx(0.3 * np.exp(u0), rel=1e-8)


@pytest.mark.parametrize(
    "u0,g,g_t,phi_t",
    [
        (linear_field(0.2, 0.5, rate=-0.3), 0.8, 0.4, 1.1),
        (linear_field(0.2, 0.0), 0.8, 0.0, 1.0 / 3.0 * 0.8 + 0.4),
    ],
)
def test_plain_delta_hopf_ledger(u0: Field, g: float, g_t: float, phi_t: float) -> None:
    # unit-mass kernel at alpha = 1: the profile is g eps*delta with Omega = 1/3
    center = Jet(0.6, phi_t)
    u = soliton_ansatz(u0, Jet(g, g_t), center, KernelMoments.from_kernel(get_mollifier("sech2")))
    ledger = collect(reduce(add(differentiate_t(u), differentiate_x(multiply(u, u)))))
    omega = 1.0 / 3.0
    u_phi = float(u0(0.6))
    assert ledger.c_delta == pytest.approx(g_t, abs=1e-12)
    assert ledger.c_delta_prime == pytest.approx(-g * phi_t + omega * g**2 + 2.0 * u_phi * g, rel=1e-9, abs=1e-12)
    x = np.array([-1.0, 0.0, 2.0])
    np.testing.assert_allclose(ledger.c0(x), u0.rate(x) + 2.0 * u0(x) * u0.derivative_x(x), atol=1e-12)


@pytest.mark.parametrize("phi", [0.0, 1.5])
def test_shifted_x_times_delta_prime_is_minus_delta(phi: float) -> None:
    coef = Field(lambda x: np.asarray(x, dtype=float) - phi, lambda x: np.ones(np.shape(x)))
    expr = AsymptoticDistribution(Field.zero(), Jet(phi, 0.0), (), (DeltaPrimeTerm(coef),))
    ledger = collect(reduce(expr))
    assert ledger.c_delta == pytest.approx(-1.0)
    assert ledger.c_delta_prime == pytest.approx(0.0, abs=1e-15)
