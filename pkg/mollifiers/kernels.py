"""Approximation kernels, delta/theta approximations, moments and Lambda-functionals."""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
from loguru import logger
from scipy.integrate import quad

from utils.errors import NonIntegrable, QuadratureFailure

DecayClass = Literal["compact", "rapid", "cauchy"]
Orientation = Literal["plus", "minus"]

MOLLIFIER_PRESETS = ("sech2", "kdv_sech2", "gaussian", "bump", "cauchy")

# below this the rapid-class kernel is treated as zero
_RAPID_CUTOFF = 1e-14


def _scalar_or_array(value: np.ndarray, z) -> float | np.ndarray:
    return float(value) if np.ndim(z) == 0 else value


def sech2(z):
    """Overflow-free sech^2."""
    a = np.exp(-2.0 * np.abs(np.asarray(z, dtype=float)))
    return 4.0 * a / (1.0 + a) ** 2


@dataclass(frozen=True)
class Mollifier:
    """Kernel omega(z) of a dimensionless argument.

    `shape` and `dshape` accept floats or arrays. `normalized` is False only for the
    KdV profile kernel cosh^-2, whose mass is 2.
    """

    name: str
    shape: Callable = field(repr=False)
    dshape: Callable = field(repr=False)
    decay_class: DecayClass
    params: tuple[tuple[str, float], ...] = ()
    support: tuple[float, float] | None = None
    normalized: bool = True

    def __call__(self, z):
        return _scalar_or_array(np.asarray(self.shape(np.asarray(z, dtype=float)), dtype=float), z)

    def derivative(self, z):
        return _scalar_or_array(np.asarray(self.dshape(np.asarray(z, dtype=float)), dtype=float), z)

    def param(self, key: str, default: float | None = None) -> float | None:
        return dict(self.params).get(key, default)

    def truncation(self) -> tuple[float, float]:
        """Finite integration window: exact support, or where |omega| drops below 1e-14."""
        if self.decay_class == "compact":
            if self.support is None:
                raise NonIntegrable(f"compact kernel {self.name} has no support interval")
            return self.support
        if self.decay_class == "cauchy":
            return (-np.inf, np.inf)
        return _rapid_window(self)


@lru_cache(maxsize=None)
def _rapid_window(m: Mollifier) -> tuple[float, float]:
    half = 1.0
    while half < 1e6:
        tails = np.abs(m.shape(np.array([-half, half])))
        if np.all(tails < _RAPID_CUTOFF):
            return (-half, half)
        half *= 2.0
    raise NonIntegrable(f"kernel {m.name} does not fall below {_RAPID_CUTOFF:g} within |z| < 1e6")


def _check_rapid_decay(fn: Callable, window: tuple[float, float], label: str) -> None:
    """|fn(z)| (1+|z|)^3 must stay bounded beyond the truncation window."""
    reach = max(abs(window[0]), abs(window[1]), 1.0)
    z = reach * np.geomspace(1.0, 64.0, 13)
    z = np.concatenate([z, -z])
    bound = np.abs(np.asarray(fn(z), dtype=float)) * (1.0 + np.abs(z)) ** 3
    near = bound[np.abs(z) <= 2.0 * reach]
    far = bound[np.abs(z) >= 16.0 * reach]
    if not np.all(np.isfinite(far)) or far.max() > 10.0 * near.max() + 1e-300:
        raise NonIntegrable(f"{label} does not decay like (1+|z|)^-3")


def _algebraic_decay_exponent(fn: Callable) -> float:
    z1, z2 = 1e3, 1e4
    v1 = max(abs(float(fn(np.array([z1]))[0])), abs(float(fn(np.array([-z1]))[0])))
    v2 = max(abs(float(fn(np.array([z2]))[0])), abs(float(fn(np.array([-z2]))[0])))
    if v2 == 0.0:
        return np.inf
    if v1 == 0.0:
        return 0.0
    return -np.log10(v2 / v1)


def _line_integral(fn: Callable, decay_class: DecayClass, window: tuple[float, float], label: str) -> float:
    """Integral of `fn` over the real line for an integrand of the given decay class."""
    if decay_class == "cauchy":
        exponent = _algebraic_decay_exponent(fn)
        if exponent <= 1.0 + 1e-3:
            raise NonIntegrable(f"{label} decays like |z|^-{exponent:.3g}, not integrable")

        def substituted(s):
            z = np.tan(s)
            return float(fn(np.array([z]))[0]) / np.cos(s) ** 2

        value, err = quad(substituted, -np.pi / 2, np.pi / 2, points=[0.0], limit=400, epsabs=1e-13, epsrel=1e-13)
    else:
        lo, hi = window
        points = [p for p in (0.0,) if lo < p < hi]
        value, err = quad(
            lambda z: float(fn(np.array([z]))[0]), lo, hi, points=points or None, limit=400, epsabs=1e-13, epsrel=1e-13
        )
    if not np.isfinite(value):
        raise QuadratureFailure(f"quadrature of {label} returned {value}")
    logger.trace("integral of {} = {:.15g} (err {:.1e})", label, value, err)
    return float(value)


@lru_cache(maxsize=None)
def _bump_mass() -> float:
    value, _ = quad(lambda s: np.exp(-1.0 / (1.0 - s * s)), -1.0, 1.0, epsabs=1e-15, epsrel=1e-15, limit=200)
    return float(value)


def _bump_raw(s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    denom = np.where(inside, 1.0 - s * s, 1.0)
    return np.where(inside, np.exp(-1.0 / denom), 0.0), inside, denom


@lru_cache(maxsize=None)
def get_mollifier(name: str, width: float = 1.0) -> Mollifier:
    """Preset kernels: sech2 (unit mass), kdv_sech2 (cosh^-2, mass 2), gaussian, bump, cauchy."""
    if width <= 0:
        raise ValueError(f"Kernel width must be positive, got {width}.")
    w = float(width)
    params = (("width", w),)

    if name == "sech2":
        return Mollifier(
            name, lambda z: sech2(z / w) / (2.0 * w), lambda z: -sech2(z / w) * np.tanh(z / w) / w**2, "rapid", params
        )
    if name == "kdv_sech2":
        return Mollifier(
            name, lambda z: sech2(z / w), lambda z: -2.0 * sech2(z / w) * np.tanh(z / w) / w, "rapid", params,
            normalized=False,
        )
    if name == "gaussian":
        norm = 1.0 / (w * np.sqrt(2.0 * np.pi))
        return Mollifier(
            name,
            lambda z: norm * np.exp(-0.5 * (np.asarray(z) / w) ** 2),
            lambda z: -np.asarray(z) / w**2 * norm * np.exp(-0.5 * (np.asarray(z) / w) ** 2),
            "rapid",
            params,
        )
    if name == "bump":
        mass = _bump_mass() * w

        def bump(z):
            return _bump_raw(np.asarray(z) / w)[0] / mass

        def dbump(z):
            value, inside, denom = _bump_raw(np.asarray(z) / w)
            s = np.asarray(z) / w
            return np.where(inside, -2.0 * s / denom**2, 0.0) * value / (mass * w)

        return Mollifier(name, bump, dbump, "compact", params, support=(-w, w))
    if name == "cauchy":
        return Mollifier(
            name,
            lambda z: 1.0 / (np.pi * w * (1.0 + (np.asarray(z) / w) ** 2)),
            lambda z: -2.0 * np.asarray(z) / (np.pi * w**3 * (1.0 + (np.asarray(z) / w) ** 2) ** 2),
            "cauchy",
            params,
        )
    raise ValueError(f"Unsupported mollifier preset: {name}. Choose one of {', '.join(MOLLIFIER_PRESETS)}.")


@lru_cache(maxsize=None)
def rescaled(m: Mollifier, alpha: float) -> Mollifier:
    """omega_alpha(z) = alpha * omega(alpha z)."""
    if alpha <= 0:
        raise ValueError(f"Rescaling factor must be positive, got {alpha}.")
    support = None if m.support is None else (m.support[0] / alpha, m.support[1] / alpha)
    return Mollifier(
        f"{m.name}@{alpha:g}",
        lambda z: alpha * m.shape(alpha * np.asarray(z)),
        lambda z: alpha**2 * m.dshape(alpha * np.asarray(z)),
        m.decay_class,
        m.params + (("alpha", float(alpha)),),
        support,
        m.normalized,
    )


def moment(m: Mollifier, n: int) -> float:
    """Omega_n = integral of omega^n, memoized per (kernel, n)."""
    if n < 1:
        raise ValueError(f"Moment order must be a positive integer, got {n}.")
    return _moment_cached(m, int(n))


@lru_cache(maxsize=None)
def _moment_cached(m: Mollifier, n: int) -> float:
    if m.decay_class == "cauchy" and n == 1:
        logger.debug("first moment of cauchy-class kernel {} is conditionally the normalization", m.name)
    window = m.truncation()
    if m.decay_class == "rapid":
        _check_rapid_decay(m.shape, window, f"kernel {m.name}")
    return _line_integral(lambda z: m.shape(z) ** n, m.decay_class, window, f"{m.name}^{n}")


def gradient_moment(m: Mollifier) -> float:
    """Integral of (omega')^2; Omega_4 of the KdV kernel."""
    return _gradient_moment_cached(m)


@lru_cache(maxsize=None)
def _gradient_moment_cached(m: Mollifier) -> float:
    return _line_integral(lambda z: m.dshape(z) ** 2, m.decay_class, m.truncation(), f"({m.name}')^2")


def delta_approx(m: Mollifier, x, eps: float):
    """delta(x, eps) = omega(x/eps)/eps."""
    return m(np.asarray(x, dtype=float) / eps) / eps


# cumulative table resolution
_ANCHORS = 513
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


class _CumulativeTable:
    """Cached cumulative integral of a kernel, evaluated from the nearest anchor by Gauss-Legendre."""

    def __init__(self, m: Mollifier):
        self.kernel = m
        if m.decay_class == "cauchy":
            scale = m.param("width", 1.0) or 1.0
            self.forward = lambda z: np.arctan(np.asarray(z) / scale)
            self.integrand = lambda s: m.shape(scale * np.tan(s)) * scale / np.cos(s) ** 2
            lo, hi = -np.pi / 2, np.pi / 2
            below = 0.0
        else:
            lo, hi = m.truncation()
            self.forward = lambda z: np.asarray(z, dtype=float)
            self.integrand = m.shape
            if m.decay_class == "rapid":
                below, _ = quad(lambda z: float(m.shape(np.array([z]))[0]), -np.inf, lo, epsabs=1e-16)
            else:
                below = 0.0
        self.lo, self.hi = lo, hi
        self.anchors = np.linspace(lo, hi, _ANCHORS)
        pieces = self._segments(self.anchors[:-1], self.anchors[1:])
        self.cumulative = below + np.concatenate([[0.0], np.cumsum(pieces)])

    def _segments(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        y = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        y = np.clip(y, self.lo, self.hi)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            values = np.nan_to_num(np.asarray(self.integrand(y), dtype=float), nan=0.0, posinf=0.0)
        return half * (values @ _GL_WEIGHTS)

    def __call__(self, z) -> np.ndarray:
        y = np.clip(np.atleast_1d(self.forward(z)).astype(float), self.lo, self.hi)
        idx = np.clip(np.rint((y - self.lo) / (self.hi - self.lo) * (_ANCHORS - 1)).astype(int), 0, _ANCHORS - 1)
        a = self.anchors[idx]
        return self.cumulative[idx] + self._segments(a, y)


@dataclass(frozen=True)
class HeavisideApprox:
    """theta(x, eps) = omega0(x/eps); orientation minus approximates theta(-x)."""

    kernel: Mollifier
    orientation: Orientation = "plus"
    table: _CumulativeTable = field(repr=False, compare=False, hash=False, default=None)

    def omega0(self, z):
        z_arr = np.asarray(z, dtype=float)
        arg = z_arr if self.orientation == "plus" else -z_arr
        return _scalar_or_array(self.table(arg).reshape(np.shape(z_arr)), z)

    def derivative(self, z):
        z_arr = np.asarray(z, dtype=float)
        if self.orientation == "plus":
            return self.kernel(z_arr)
        return -self.kernel(-z_arr)

    @property
    def sign(self) -> float:
        return 1.0 if self.orientation == "plus" else -1.0


@lru_cache(maxsize=None)
def heaviside_from(m: Mollifier, orientation: Orientation = "plus") -> HeavisideApprox:
    if not m.normalized:
        raise ValueError(f"Kernel {m.name} is not unit-mass; a Heaviside approximation needs a normalized kernel.")
    if orientation not in ("plus", "minus"):
        raise ValueError(f"Unsupported orientation: {orientation}. Choose 'plus' or 'minus'.")
    return HeavisideApprox(m, orientation, _CumulativeTable(m))


def theta_approx(h: HeavisideApprox, x, eps: float):
    return h.omega0(np.asarray(x, dtype=float) / eps)


def lambda_functional(f: Callable, u0_val: float, profile_shape, decay_class: DecayClass | None = None) -> float:
    """Lambda = integral of f(u0 + omega(tau)) - f(u0) over the line.

    `profile_shape` is a Mollifier, a solved profile (anything with `shape`, `decay_class`
    and `truncation()`), or a bare callable treated as rapidly decaying.
    """
    if hasattr(profile_shape, "truncation"):
        shape = profile_shape.shape
        decay = decay_class or profile_shape.decay_class
        window = profile_shape.truncation()
    else:
        shape = profile_shape
        decay = decay_class or "rapid"
        window = _callable_window(shape)

    base = float(f(u0_val))

    def integrand(tau):
        return f(u0_val + shape(tau)) - base

    if decay == "rapid":
        _check_rapid_decay(integrand, window, "Lambda integrand")
    return _line_integral(integrand, decay, window, "Lambda integrand")


def _callable_window(shape: Callable) -> tuple[float, float]:
    half = 1.0
    while half < 1e6:
        if np.all(np.abs(shape(np.array([-half, half]))) < _RAPID_CUTOFF):
            return (-half, half)
        half *= 2.0
    # (1+|z|)^-3 decay check decides integrability
    return (-50.0, 50.0)


def integrate_like(fn: Callable, like) -> float:
    """Integral of `fn` over the line using the decay class and window of the kernel `like`."""
    window = like.truncation()
    if like.decay_class == "rapid":
        _check_rapid_decay(fn, window, "integrand")
    return _line_integral(fn, like.decay_class, window, "integrand")
