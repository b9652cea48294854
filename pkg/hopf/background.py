"""Smooth background u0(x, t) of u_t + (f(u))_x = 0 by straight characteristics."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from loguru import logger
from scipy.optimize import minimize_scalar

from utils.errors import BeyondBreakingTime, NewtonStall
from utils.fluxes import FluxModel

DATUM_PRESETS = ("constant", "tanh", "gaussian", "linear")
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


@dataclass(frozen=True)
class Datum:
    """Initial datum u0^0 with analytic first and second derivatives."""

    name: str
    params: tuple[tuple[str, float], ...]
    value: Callable = field(repr=False, compare=False)
    d1: Callable = field(repr=False, compare=False)
    d2: Callable = field(repr=False, compare=False)
    scale: float = 1.0

    def __call__(self, x):
        return self.value(x)


def make_datum(name: str, **params: float) -> Datum:
    """
    Build an initial datum from a preset

    Args:
        name: 'constant' (value), 'tanh' (a + b tanh(k x)), 'gaussian' (a + b exp(-(x/w)^2))
            or 'linear' (a + b x)
    """
    if name == "constant":
        c = float(params.get("value", 0.0))
        return Datum(
            name, (("value", c),),
            lambda x: np.full(np.shape(x), c) if np.ndim(x) else c,
            lambda x: np.zeros(np.shape(x)) if np.ndim(x) else 0.0,
            lambda x: np.zeros(np.shape(x)) if np.ndim(x) else 0.0,
        )
    if name == "tanh":
        a, b, k = float(params.get("a", 0.0)), float(params.get("b", 0.1)), float(params.get("k", 1.0))

        def d1(x):
            return b * k / np.cosh(k * x) ** 2

        def d2(x):
            return -2.0 * b * k**2 * np.tanh(k * x) / np.cosh(k * x) ** 2

        return Datum(name, (("a", a), ("b", b), ("k", k)), lambda x: a + b * np.tanh(k * x), d1, d2, 1.0 / abs(k))
    if name == "gaussian":
        a, b, w = float(params.get("a", 0.0)), float(params.get("b", 0.1)), float(params.get("w", 1.0))

        def value(x):
            return a + b * np.exp(-((x / w) ** 2))

        def d1(x):
            return -2.0 * b * x / w**2 * np.exp(-((x / w) ** 2))

        def d2(x):
            return b * np.exp(-((x / w) ** 2)) * (4.0 * x**2 / w**4 - 2.0 / w**2)

        return Datum(name, (("a", a), ("b", b), ("w", w)), value, d1, d2, abs(w))
    if name == "linear":
        a, b = float(params.get("a", 0.0)), float(params.get("b", 0.5))
        return Datum(
            name, (("a", a), ("b", b)),
            lambda x: a + b * np.asarray(x, dtype=float),
            lambda x: np.full(np.shape(x), b) if np.ndim(x) else b,
            lambda x: np.zeros(np.shape(x)) if np.ndim(x) else 0.0,
        )
    raise ValueError(f"Unsupported datum preset: {name}. Choose one of {', '.join(DATUM_PRESETS)}.")


def _out(values: np.ndarray, like):
    return float(np.asarray(values).reshape(-1)[0]) if np.ndim(like) == 0 else values


class BackgroundField:
    def __init__(self, initial_datum: Datum, flux: FluxModel, scan_halfwidth: float | None = None):
        """
        Smooth Hopf-type background evaluated through the characteristic map

        Args:
            initial_datum: u0^0
            flux: f
            scan_halfwidth: half-width of the grid searched for the breaking time; defaults
                to 40 datum scales
        """
        self.initial_datum = initial_datum
        self.flux = flux
        self.scan_halfwidth = scan_halfwidth or 40.0 * initial_datum.scale

    def __repr__(self) -> str:
        return f"BackgroundField({self.initial_datum.name}, {self.flux!r})"

    def slope(self, xi):
        """s(xi) = d/dxi f'(u0^0(xi)); characteristics cross where s < 0."""
        return self.flux.second(self.initial_datum(xi)) * self.initial_datum.d1(xi)

    @cached_property
    def breaking_time(self) -> float:
        grid = np.linspace(-self.scan_halfwidth, self.scan_halfwidth, 40001)
        s = self.slope(grid)
        i = int(np.argmin(s))
        if s[i] >= 0.0:
            return float("inf")
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
        best = s[i]
        if hi > lo:
            res = minimize_scalar(lambda xi: float(self.slope(xi)), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12})
            best = min(best, float(res.fun))
        T = -1.0 / best
        logger.debug("breaking time {:.10g} from min slope {:.6g}", T, best)
        return float(T)

    def _check_time(self, t: float) -> None:
        if t < 0.0:
            raise BeyondBreakingTime(f"t = {t} is negative")
        if t >= self.breaking_time:
            raise BeyondBreakingTime(f"t = {t} is not below the breaking time {self.breaking_time:.6g}")

    def characteristic(self, xi, t: float):
        return xi + self.flux.prime(self.initial_datum(xi)) * t

    def jacobian(self, xi, t: float):
        """J = d x / d xi = 1 + f''(u0^0) u0^0' t, positive before breaking."""
        return 1.0 + self.slope(xi) * t

    def foot(self, x, t: float):
        """xi solving x = xi + f'(u0^0(xi)) t."""
        self._check_time(t)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if t == 0.0:
            return x.copy()
        xi = x - self.flux.prime(self.initial_datum(x)) * t
        active = np.ones(x.shape, dtype=bool)
        for _ in range(NEWTON_MAX_ITER):
            r = self.characteristic(xi[active], t) - x[active]
            done = np.abs(r) <= NEWTON_TOL * np.maximum(1.0, np.abs(x[active]))
            step = r / self.jacobian(xi[active], t)
            idx = np.nonzero(active)[0]
            xi[idx[~done]] -= step[~done]
            active[idx[done]] = False
            if not active.any():
                return xi
        logger.debug("Newton left {} characteristic feet unresolved; bisecting", int(active.sum()))
        xi[active] = self._bisect_feet(x[active], t)
        return xi

    def _bisect_feet(self, x: np.ndarray, t: float) -> np.ndarray:
        width = np.ones_like(x)
        lo, hi = x - width, x + width
        for _ in range(200):
            bad = (self.characteristic(lo, t) > x) | (self.characteristic(hi, t) < x)
            if not bad.any():
                break
            width[bad] *= 2.0
            lo[bad], hi[bad] = x[bad] - width[bad], x[bad] + width[bad]
        else:
            raise NewtonStall("no bracket for the characteristic foot")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            right = self.characteristic(mid, t) > x
            hi = np.where(right, mid, hi)
            lo = np.where(right, lo, mid)
        xi = 0.5 * (lo + hi)
        residual = np.abs(self.characteristic(xi, t) - x)
        if np.any(residual > 1e-10 * np.maximum(1.0, np.abs(x))):
            raise NewtonStall(f"characteristic residual {residual.max():.3g} after bisection")
        return xi

    def eval(self, x, t: float):
        return _out(self.initial_datum(self.foot(x, t)), x)

    def eval_dx(self, x, t: float):
        xi = self.foot(x, t)
        return _out(self.initial_datum.d1(xi) / self.jacobian(xi, t), x)

    def eval_dt(self, x, t: float):
        xi = self.foot(x, t)
        u = self.initial_datum(xi)
        return _out(-self.flux.prime(u) * self.initial_datum.d1(xi) / self.jacobian(xi, t), x)

    def eval_all(self, x, t: float) -> tuple:
        """(u0, u0_x, u0_t) sharing one foot computation."""
        xi = self.foot(x, t)
        u = self.initial_datum(xi)
        ux = self.initial_datum.d1(xi) / self.jacobian(xi, t)
        return _out(u, x), _out(ux, x), _out(-self.flux.prime(u) * ux, x)

    def eval_dxx(self, x, t: float):
        """u0_xx = (u0^0'' J - u0^0' J_xi) / J^3."""
        xi = self.foot(x, t)
        u = self.initial_datum(xi)
        d1, d2 = self.initial_datum.d1(xi), self.initial_datum.d2(xi)
        J = self.jacobian(xi, t)
        J_xi = (self.flux.third(u) * d1**2 + self.flux.second(u) * d2) * t
        return _out((d2 * J - d1 * J_xi) / J**3, x)

    def along(self, x, t: float, velocity) -> float:
        """d/dt u0(x(t), t) for a path moving with the given velocity."""
        u, ux, ut = self.eval_all(x, t)
        return ut + ux * velocity


def make_background(name: str, flux: FluxModel, **params: float) -> BackgroundField:
    return BackgroundField(make_datum(name, **params), flux)
