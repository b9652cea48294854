"""Asymptotic distributions u0 + a eps*delta + b eps*delta' + e eps*theta, truncated at O(eps^2).

The singular delta part is kept as a polynomial in the profile kernel,
sum_k c_k * omega(eta)^k with eta = alpha (x - phi)/eps, so products stay exact and
associative; its weak weight sum_k c_k Omega_k / alpha is taken only in `collect`.
Scalar coefficients are `Jet`s (value plus time rate) so that `differentiate_t` works
from caller-supplied parameter rates and never differences in t.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, ClassVar, Mapping

import numpy as np

from mollifiers.kernels import Mollifier, Orientation, gradient_moment, integrate_like, moment
from utils.errors import (
    CenterMismatch,
    MissingMoment,
    MissingRate,
    OrientationMismatch,
    OutOfTruncation,
    UnreducedInput,
)

_FD_STEP = 1e-5
_CENTER_TOL = 1e-12


def _central_difference(fn: Callable, x):
    x = np.asarray(x, dtype=float)
    h = _FD_STEP * np.maximum(1.0, np.abs(x))
    return (np.asarray(fn(x + h)) - np.asarray(fn(x - h))) / (2.0 * h)


@dataclass(frozen=True)
class Jet:
    """A time-dependent scalar at a fixed instant: value and d/dt (None when unknown)."""

    value: float
    rate: float | None = None

    @classmethod
    def const(cls, value: float) -> "Jet":
        return cls(float(value), 0.0)

    def _other(self, other) -> "Jet":
        return other if isinstance(other, Jet) else Jet.const(other)

    def __add__(self, other) -> "Jet":
        o = self._other(other)
        rate = None if self.rate is None or o.rate is None else self.rate + o.rate
        return Jet(self.value + o.value, rate)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.value, None if self.rate is None else -self.rate)

    def __sub__(self, other) -> "Jet":
        return self + (-self._other(other))

    def __rsub__(self, other) -> "Jet":
        return self._other(other) - self

    def __mul__(self, other) -> "Jet":
        o = self._other(other)
        rate = None if self.rate is None or o.rate is None else self.rate * o.value + self.value * o.rate
        return Jet(self.value * o.value, rate)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        o = self._other(other)
        rate = None if self.rate is None or o.rate is None else (self.rate * o.value - self.value * o.rate) / o.value**2
        return Jet(self.value / o.value, rate)

    def __pow__(self, n: int) -> "Jet":
        rate = None if self.rate is None else n * self.value ** (n - 1) * self.rate
        return Jet(self.value**n, rate)

    def without_rate(self) -> "Jet":
        return Jet(self.value, None)


@dataclass(frozen=True)
class Field:
    """Space-time coefficient at a fixed instant: x -> value, with optional d/dx and d/dt."""

    value: Callable = field(repr=False)
    dx: Callable | None = field(default=None, repr=False)
    dt: Callable | None = field(default=None, repr=False)
    constant: float | None = None

    @classmethod
    def const(cls, c: float, rate: float | None = 0.0) -> "Field":
        c = float(c)
        return cls(
            value=lambda x: np.full(np.shape(x), c),
            dx=lambda x: np.zeros(np.shape(x)),
            dt=None if rate is None else (lambda x: np.full(np.shape(x), float(rate))),
            constant=c,
        )

    @classmethod
    def zero(cls) -> "Field":
        return cls.const(0.0)

    def __call__(self, x):
        return self.value(x)

    def derivative_x(self, x):
        return self.dx(x) if self.dx is not None else _central_difference(self.value, x)

    def rate(self, x):
        if self.dt is None:
            raise MissingRate("coefficient field carries no time rate")
        return self.dt(x)

    def at(self, center: Jet) -> Jet:
        """Localize at x = phi(t); the rate is the total derivative along the center."""
        value = float(self.value(center.value))
        if self.dt is None or center.rate is None:
            return Jet(value, None)
        return Jet(value, float(self.dt(center.value)) + float(self.derivative_x(center.value)) * center.rate)

    def differentiated(self) -> "Field":
        return Field(value=self.derivative_x, constant=0.0 if self.constant is not None else None)

    def __add__(self, other: "Field") -> "Field":
        a, b = self, other
        dt = None if a.dt is None or b.dt is None else (lambda x: a.dt(x) + b.dt(x))
        const = None if a.constant is None or b.constant is None else a.constant + b.constant
        return Field(lambda x: a.value(x) + b.value(x), lambda x: a.derivative_x(x) + b.derivative_x(x), dt, const)

    def __mul__(self, other: "Field") -> "Field":
        a, b = self, other
        dt = None if a.dt is None or b.dt is None else (lambda x: a.dt(x) * b.value(x) + a.value(x) * b.dt(x))
        const = None if a.constant is None or b.constant is None else a.constant * b.constant
        return Field(
            lambda x: a.value(x) * b.value(x),
            lambda x: a.derivative_x(x) * b.value(x) + a.value(x) * b.derivative_x(x),
            dt,
            const,
        )

    def scaled(self, c: float) -> "Field":
        a = self
        return Field(
            lambda x: c * a.value(x),
            lambda x: c * a.derivative_x(x),
            None if a.dt is None else (lambda x: c * a.dt(x)),
            None if a.constant is None else c * a.constant,
        )


@dataclass(frozen=True)
class KernelMoments:
    """Moments of the profile kernel omega(eta), eta = alpha (x - phi)/eps.

    `omegas[k]` is Omega_k = integral of omega^k; `omega_delta` is the integral of omega'^2.
    """

    omegas: Mapping[int, float]
    alpha: Jet = Jet(1.0, 0.0)
    omega_delta: float | None = None
    kernel: Mollifier | None = None

    @classmethod
    def from_kernel(cls, kernel: Mollifier, alpha: Jet = Jet(1.0, 0.0), max_power: int = 3) -> "KernelMoments":
        omegas = {k: moment(kernel, k) for k in range(1, max_power + 1)}
        return cls(omegas, alpha, gradient_moment(kernel), kernel)

    def omega(self, k: int) -> float:
        if k not in self.omegas:
            raise MissingMoment(f"Omega_{k} not supplied (have {sorted(self.omegas)})")
        return self.omegas[k]


@dataclass(frozen=True)
class DeltaTerm:
    """c * omega(eta)^power; power 0 marks an already integrated eps*delta weight."""

    coef: Jet
    power: int


@dataclass(frozen=True)
class DeltaPrimeTerm:
    coef: Field


@dataclass(frozen=True)
class ThetaTerm:
    coef: Field
    orientation: Orientation


@dataclass(frozen=True)
class AsymptoticDistribution:
    regular: Field
    center: Jet | None = None
    delta_terms: tuple[DeltaTerm, ...] = ()
    delta_prime_terms: tuple[DeltaPrimeTerm, ...] = ()
    theta_terms: tuple[ThetaTerm, ...] = ()
    moments: KernelMoments | None = None

    remainder_order: ClassVar[str] = "O(eps^2)"

    @property
    def is_singular(self) -> bool:
        return bool(self.delta_terms or self.delta_prime_terms or self.theta_terms)

    @property
    def orientation(self) -> Orientation | None:
        return self.theta_terms[0].orientation if self.theta_terms else None

    def weight(self) -> Jet:
        """eps*delta coefficient of the delta part."""
        total = Jet.const(0.0)
        for term in self.delta_terms:
            if term.power == 0:
                total = total + term.coef
                continue
            if self.moments is None:
                raise MissingMoment("profile moments needed to weigh omega^k terms")
            total = total + term.coef * self.moments.omega(term.power) / self.moments.alpha
        return total


def constant(c: float) -> AsymptoticDistribution:
    return AsymptoticDistribution(Field.const(c))


def regular(u0: Field) -> AsymptoticDistribution:
    return AsymptoticDistribution(u0)


def delta(weight: Jet, center: Jet) -> AsymptoticDistribution:
    """weight * eps*delta(x - phi) with no profile attached."""
    return AsymptoticDistribution(Field.zero(), center, (DeltaTerm(weight, 0),))


def soliton_ansatz(
    u0: Field,
    amplitude: Jet,
    center: Jet,
    moments: KernelMoments,
    e: Field | None = None,
    orientation: Orientation = "plus",
) -> AsymptoticDistribution:
    """u0 + amplitude * omega(alpha (x - phi)/eps) + e eps*theta(+-(x - phi))."""
    theta = () if e is None else (ThetaTerm(e, orientation),)
    return AsymptoticDistribution(u0, center, (DeltaTerm(amplitude, 1),), (), theta, moments)


def _shared_center(a: AsymptoticDistribution, b: AsymptoticDistribution) -> Jet | None:
    if a.center is None or not a.is_singular:
        return b.center if b.is_singular else (a.center or b.center)
    if b.center is None or not b.is_singular:
        return a.center
    if abs(a.center.value - b.center.value) > _CENTER_TOL * max(1.0, abs(a.center.value)):
        raise CenterMismatch(f"centers {a.center.value!r} and {b.center.value!r} differ")
    return a.center


def _shared_orientation(*dists: AsymptoticDistribution) -> None:
    found = {d.orientation for d in dists if d.orientation is not None}
    if len(found) > 1:
        raise OrientationMismatch(f"theta orientations {sorted(found)} in one expression")


def _moments_of(m: KernelMoments | None, *dists: AsymptoticDistribution) -> KernelMoments | None:
    if m is not None:
        return m
    for d in dists:
        if d.moments is not None:
            return d.moments
    return None


def add(a: AsymptoticDistribution, b: AsymptoticDistribution) -> AsymptoticDistribution:
    center = _shared_center(a, b)
    _shared_orientation(a, b)
    return AsymptoticDistribution(
        a.regular + b.regular,
        center,
        a.delta_terms + b.delta_terms,
        a.delta_prime_terms + b.delta_prime_terms,
        a.theta_terms + b.theta_terms,
        _moments_of(None, a, b),
    )


def scale(a: AsymptoticDistribution, c: float) -> AsymptoticDistribution:
    return AsymptoticDistribution(
        a.regular.scaled(c),
        a.center,
        tuple(DeltaTerm(t.coef * c, t.power) for t in a.delta_terms),
        tuple(DeltaPrimeTerm(t.coef.scaled(c)) for t in a.delta_prime_terms),
        tuple(ThetaTerm(t.coef.scaled(c), t.orientation) for t in a.theta_terms),
        a.moments,
    )


def multiply(
    a: AsymptoticDistribution, b: AsymptoticDistribution, m: KernelMoments | None = None
) -> AsymptoticDistribution:
    center = _shared_center(a, b)
    _shared_orientation(a, b)
    m = _moments_of(m, a, b)

    if (a.delta_prime_terms and (b.delta_terms or b.delta_prime_terms or b.theta_terms)) or (
        b.delta_prime_terms and (a.delta_terms or a.theta_terms)
    ):
        raise OutOfTruncation("delta' times a singular factor is outside the truncation")

    deltas: list[DeltaTerm] = []
    if a.delta_terms or b.delta_terms:
        ra = a.regular.at(center)
        rb = b.regular.at(center)
        deltas += [DeltaTerm(rb * t.coef, t.power) for t in a.delta_terms]
        deltas += [DeltaTerm(ra * t.coef, t.power) for t in b.delta_terms]
    for ta in a.delta_terms:
        for tb in b.delta_terms:
            if ta.power == 0 or tb.power == 0:
                raise MissingMoment("an integrated delta weight carries no profile to multiply")
            power = ta.power + tb.power
            if m is None:
                raise MissingMoment("profile moments needed for delta x delta")
            m.omega(power)
            deltas.append(DeltaTerm(ta.coef * tb.coef, power))

    primes = [DeltaPrimeTerm(b.regular * t.coef) for t in a.delta_prime_terms]
    primes += [DeltaPrimeTerm(a.regular * t.coef) for t in b.delta_prime_terms]

    # delta x theta and theta x theta are O(eps^2)
    thetas = [ThetaTerm(b.regular * t.coef, t.orientation) for t in a.theta_terms]
    thetas += [ThetaTerm(a.regular * t.coef, t.orientation) for t in b.theta_terms]

    return AsymptoticDistribution(a.regular * b.regular, center, tuple(deltas), tuple(primes), tuple(thetas), m)


def _derivative_of(F: Callable, name: str) -> Callable:
    method = getattr(F, name, None)
    if method is not None:
        return method
    if name == "prime":
        return lambda u: _central_difference(F, u)
    first = _derivative_of(F, "prime")
    return lambda u: _central_difference(first, u)


def compose(F: Callable, a: AsymptoticDistribution, m: KernelMoments | None = None) -> AsymptoticDistribution:
    """F(u0) + Lambda eps*delta + F'(u0) e eps*theta.

    Lambda = (1/alpha) * integral of [F(u0(phi) + s(eta)) - F(u0(phi))] d eta, where s is
    the delta part's profile polynomial.
    """
    if a.delta_prime_terms:
        raise OutOfTruncation("nonlinear function of delta' is outside the truncation")
    m = _moments_of(m, a)
    dF = _derivative_of(F, "prime")
    d2F = _derivative_of(F, "second")
    u0 = a.regular

    reg = Field(
        lambda x: F(u0.value(x)),
        lambda x: dF(u0.value(x)) * u0.derivative_x(x),
        None if u0.dt is None else (lambda x: dF(u0.value(x)) * u0.dt(x)),
    )
    slope = Field(
        lambda x: dF(u0.value(x)),
        lambda x: d2F(u0.value(x)) * u0.derivative_x(x),
        None if u0.dt is None else (lambda x: d2F(u0.value(x)) * u0.dt(x)),
    )
    thetas = tuple(ThetaTerm(slope * t.coef, t.orientation) for t in a.theta_terms)

    deltas: tuple[DeltaTerm, ...] = ()
    if a.delta_terms:
        if any(t.power == 0 for t in a.delta_terms):
            raise MissingMoment("an integrated delta weight carries no profile to compose")
        if m is None or m.kernel is None:
            raise MissingMoment("compose needs the profile kernel")
        kernel = m.kernel
        base = u0.at(a.center)
        terms = a.delta_terms

        def profile(eta):
            w = kernel.shape(eta)
            return sum(t.coef.value * w**t.power for t in terms)

        f0 = float(F(base.value))
        lam = integrate_like(lambda eta: F(base.value + profile(eta)) - f0, kernel)
        weight = Jet(lam, None)
        rates_known = base.rate is not None and m.alpha.rate is not None and all(t.coef.rate is not None for t in terms)
        if rates_known:
            df0 = float(dF(base.value))

            def profile_rate(eta):
                w = kernel.shape(eta)
                return sum(t.coef.rate * w**t.power for t in terms)

            lam_rate = integrate_like(
                lambda eta: dF(base.value + profile(eta)) * (base.rate + profile_rate(eta)) - df0 * base.rate, kernel
            )
            weight = Jet(lam, lam_rate)
        deltas = (DeltaTerm(weight / m.alpha, 0),)

    return AsymptoticDistribution(reg, a.center, deltas, (), thetas, m)


def differentiate_x(a: AsymptoticDistribution) -> AsymptoticDistribution:
    if a.delta_prime_terms:
        raise OutOfTruncation("delta'' is outside the truncation")
    deltas: list[DeltaTerm] = []
    primes: tuple[DeltaPrimeTerm, ...] = ()
    if a.delta_terms:
        w = a.weight()
        primes = (DeltaPrimeTerm(Field.const(w.value, w.rate)),)
    thetas = []
    for t in a.theta_terms:
        sign = 1.0 if t.orientation == "plus" else -1.0
        deltas.append(DeltaTerm(t.coef.at(a.center).without_rate() * sign, 0))
        thetas.append(ThetaTerm(t.coef.differentiated(), t.orientation))
    return AsymptoticDistribution(a.regular.differentiated(), a.center, tuple(deltas), primes, tuple(thetas), a.moments)


def differentiate_t(a: AsymptoticDistribution) -> AsymptoticDistribution:
    """d/dt through the coefficient rates: (w eps*delta)_t = w_t eps*delta - w phi_t eps*delta'."""
    if a.regular.dt is None:
        raise MissingRate("regular part carries no time rate")
    reg = Field(a.regular.dt)
    deltas: list[DeltaTerm] = []
    primes: list[DeltaPrimeTerm] = []
    phi_t = None if a.center is None else a.center.rate
    if (a.delta_terms or a.theta_terms) and phi_t is None:
        raise MissingRate("center carries no speed")
    if a.delta_terms:
        w = a.weight()
        if w.rate is None:
            raise MissingRate("delta weight carries no time rate")
        deltas.append(DeltaTerm(Jet(w.rate), 0))
        primes.append(DeltaPrimeTerm(Field.const(-w.value * phi_t, None)))
    for t in a.delta_prime_terms:
        if t.coef.constant is None or t.coef.constant != 0.0:
            raise OutOfTruncation("time derivative of a delta' term produces delta''")
    thetas = []
    for t in a.theta_terms:
        sign = 1.0 if t.orientation == "plus" else -1.0
        if t.coef.dt is None:
            raise MissingRate("theta coefficient carries no time rate")
        thetas.append(ThetaTerm(Field(t.coef.dt), t.orientation))
        deltas.append(DeltaTerm(Jet(-sign * float(t.coef.value(a.center.value)) * phi_t), 0))
    return AsymptoticDistribution(reg, a.center, tuple(deltas), tuple(primes), tuple(thetas), a.moments)


def reduce(a: AsymptoticDistribution) -> AsymptoticDistribution:
    """a(x) delta'(x - phi) = a(phi) delta' - a'(phi) delta, then merge like terms."""
    lumped = Jet.const(0.0)
    has_lumped = False
    powers: dict[int, Jet] = {}
    for t in a.delta_terms:
        if t.power == 0:
            lumped = lumped + t.coef
            has_lumped = True
        else:
            powers[t.power] = powers[t.power] + t.coef if t.power in powers else t.coef

    prime_value = Jet.const(0.0)
    for t in a.delta_prime_terms:
        if t.coef.constant is not None:
            rate = None if t.coef.dt is None else float(t.coef.dt(a.center.value if a.center else 0.0))
            prime_value = prime_value + Jet(t.coef.constant, rate)
            continue
        if a.center is None:
            raise CenterMismatch("delta' term without a center")
        prime_value = prime_value + t.coef.at(a.center)
        lumped = lumped - Jet(float(t.coef.derivative_x(a.center.value)), None)
        has_lumped = True

    deltas = tuple(DeltaTerm(c, k) for k, c in sorted(powers.items()))
    if has_lumped:
        deltas = (DeltaTerm(lumped, 0),) + deltas
    primes = (DeltaPrimeTerm(Field.const(prime_value.value, prime_value.rate)),) if a.delta_prime_terms else ()

    thetas: tuple[ThetaTerm, ...] = ()
    if a.theta_terms:
        coef = a.theta_terms[0].coef
        for t in a.theta_terms[1:]:
            coef = coef + t.coef
        thetas = (ThetaTerm(coef, a.theta_terms[0].orientation),)
    return replace(a, delta_terms=deltas, delta_prime_terms=primes, theta_terms=thetas)


def is_reduced(a: AsymptoticDistribution) -> bool:
    powers = [t.power for t in a.delta_terms]
    return (
        len(powers) == len(set(powers))
        and len(a.delta_prime_terms) <= 1
        and all(t.coef.constant is not None for t in a.delta_prime_terms)
        and len(a.theta_terms) <= 1
    )


@dataclass(frozen=True)
class CoefficientLedger:
    """Coefficients of eps^0, eps*delta, eps*delta' and eps*theta at the shared center."""

    c0: Field
    c_delta: float
    c_delta_prime: float
    c_theta: Field
    center: float | None = None
    orientation: Orientation | None = None

    def evaluate(self, x) -> dict:
        return {
            "c0": self.c0(x),
            "c_delta": self.c_delta,
            "c_delta_prime": self.c_delta_prime,
            "c_theta": self.c_theta(x),
        }


def collect(expr: AsymptoticDistribution) -> CoefficientLedger:
    if not is_reduced(expr):
        raise UnreducedInput("collect needs a reduced expression; call reduce first")
    c_delta = expr.weight().value if expr.delta_terms else 0.0
    c_prime = float(expr.delta_prime_terms[0].coef.constant) if expr.delta_prime_terms else 0.0
    c_theta = expr.theta_terms[0].coef if expr.theta_terms else Field.zero()
    return CoefficientLedger(
        expr.regular, c_delta, c_prime, c_theta, None if expr.center is None else expr.center.value, expr.orientation
    )


def dispersion_term(a: AsymptoticDistribution) -> AsymptoticDistribution:
    """Weak eps*delta' part of eps^2 [(u^2)_xx - 3 u_x^2]_x for a single c*omega(eta) term.

    Only -3 eps^2 (u_x^2)_x survives at O(eps): coefficient -3 c^2 alpha Omega_Delta.
    """
    profile_terms = [t for t in a.delta_terms if t.power != 0]
    if len(profile_terms) != 1 or profile_terms[0].power != 1:
        raise MissingMoment("dispersion needs a single first-power profile term")
    if a.moments is None or a.moments.omega_delta is None:
        raise MissingMoment("Omega_Delta not supplied")
    c = profile_terms[0].coef
    coef = c * c * a.moments.alpha * (-3.0 * a.moments.omega_delta)
    return AsymptoticDistribution(
        Field.zero(), a.center, (), (DeltaPrimeTerm(Field.const(coef.value, coef.rate)),), (), a.moments
    )
