"""Transport of the corrective field e along background characteristics.

e_t + (f'(u0) e)_x = 0 keeps e * J constant along x = xi + f'(u0^0(xi)) t, J = dx/dxi,
so every value is closed form once the characteristic origin is known: the initial line
(origin xi at t = 0) or, in the region behind the soliton, the soliton path itself
(emission time s with phi(s) = xi + f'(u0^0(xi)) s).
"""

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from loguru import logger

from hopf.background import BackgroundField
from utils.errors import QueryOutsideRegion

Region = Literal["ahead", "behind"]
_REGION_TOL = 1e-12
_FD_STEP = 1e-6


@dataclass(frozen=True)
class BoundaryHistory:
    """Soliton path phi(s) and the value e_b(s) it emits into the region behind it."""

    phi: Callable = field(repr=False)
    emission: Callable = field(repr=False)
    t_max: float = np.inf


@dataclass(frozen=True)
class CharacteristicRecord:
    """One characteristic of the fan: origin, carried value e*J and current position."""

    origin: Literal["initial", "boundary"]
    xi: float
    emitted_at: float | None
    carried: float
    position: float


def initial_origin(bf: BackgroundField, e_init: Callable, x, t: float):
    xi = bf.foot(x, t)
    return e_init(xi) / bf.jacobian(xi, t), xi


def emission_times(bf: BackgroundField, boundary: BoundaryHistory, xi: np.ndarray, t: float) -> np.ndarray:
    """s in (0, t) with phi(s) = xi + f'(u0^0(xi)) s, by vectorized bisection."""
    speed = bf.flux.prime(bf.initial_datum(xi))
    lo = np.zeros_like(xi)
    hi = np.full_like(xi, t)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        ahead = boundary.phi(mid) - xi - speed * mid > 0.0
        hi = np.where(ahead, mid, hi)
        lo = np.where(ahead, lo, mid)
    return 0.5 * (lo + hi)


def transport_e(
    bf: BackgroundField,
    region: Region,
    boundary_values: BoundaryHistory | None,
    e_init: Callable,
    x,
    t: float,
    phi0: float = 0.0,
):
    """e(x, t) by backward characteristic tracing; x is assumed inside the region."""
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if region == "ahead" or boundary_values is None:
        values, _ = initial_origin(bf, e_init, x_arr, t)
    else:
        xi = bf.foot(x_arr, t)
        values = np.empty_like(x_arr)
        from_initial = xi <= phi0
        if from_initial.any():
            values[from_initial] = e_init(xi[from_initial]) / bf.jacobian(xi[from_initial], t)
        emitted = ~from_initial
        if emitted.any():
            xe = xi[emitted]
            s = emission_times(bf, boundary_values, xe, t)
            values[emitted] = boundary_values.emission(s) * bf.jacobian(xe, s) / bf.jacobian(xe, t)
    return float(values[0]) if np.ndim(x) == 0 else values.reshape(np.shape(x))


class EField:
    def __init__(
        self,
        bf: BackgroundField,
        region: Region,
        e_init: Callable,
        phi_path: Callable,
        phi0: float,
        boundary: BoundaryHistory | None = None,
    ):
        """
        Corrective field on one side of the soliton path

        Args:
            region: 'ahead' (x > phi(t), initial data only) or 'behind' (x < phi(t), initial
                data plus boundary emission)
            phi_path: t -> phi(t) of the trajectory
            boundary: emission history; ignored ahead of the soliton
        """
        if region == "ahead" and boundary is not None:
            logger.warning("boundary values are ignored for the region ahead of the soliton")
            boundary = None
        self.bf = bf
        self.region = region
        self.e_init = e_init
        self.phi_path = phi_path
        self.phi0 = float(phi0)
        self.boundary = boundary

    def _check_inside(self, x: np.ndarray, t: float) -> None:
        phi = float(self.phi_path(t))
        tol = _REGION_TOL * max(1.0, abs(phi))
        outside = x < phi - tol if self.region == "ahead" else x > phi + tol
        if np.any(outside):
            raise QueryOutsideRegion(f"x = {x[outside][0]:.6g} is not {self.region} of phi({t:.6g}) = {phi:.6g}")

    def __call__(self, x, t: float):
        self._check_inside(np.atleast_1d(np.asarray(x, dtype=float)), t)
        return self._raw(x, t)

    def _raw(self, x, t: float):
        return transport_e(self.bf, self.region, self.boundary, self.e_init, x, t, self.phi0)

    def extended(self, x, t: float):
        """Smooth extension across phi(t): the transport formula ahead, a linear continuation behind."""
        if self.region == "ahead" or self.boundary is None:
            return self._raw(x, t)
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        phi = float(self.phi_path(t))
        h = _FD_STEP * max(1.0, abs(phi))
        inside = x_arr <= phi
        out = np.empty_like(x_arr)
        if inside.any():
            out[inside] = self._raw(x_arr[inside], t)
        if (~inside).any():
            e0, e1, e2 = self._raw(np.array([phi, phi - h, phi - 2.0 * h]), t)
            slope = (3.0 * e0 - 4.0 * e1 + e2) / (2.0 * h)
            out[~inside] = e0 + slope * (x_arr[~inside] - phi)
        return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))

    def dx(self, x, t: float):
        x = np.asarray(x, dtype=float)
        h = _FD_STEP * np.maximum(1.0, np.abs(x))
        return (self.extended(x + h, t) - self.extended(x - h, t)) / (2.0 * h)

    def dt(self, x, t: float):
        """e_t = -f''(u0) u0_x e - f'(u0) e_x."""
        u, ux, _ = self.bf.eval_all(x, t)
        f = self.bf.flux
        return -f.second(u) * ux * self.extended(x, t) - f.prime(u) * self.dx(x, t)

    def records(self, positions, t: float) -> list[CharacteristicRecord]:
        """The fan through the given positions at time t."""
        positions = np.atleast_1d(np.asarray(positions, dtype=float))
        self._check_inside(positions, t)
        xi = self.bf.foot(positions, t)
        values = np.atleast_1d(self._raw(positions, t))
        carried = values * self.bf.jacobian(xi, t)
        if self.boundary is None:
            return [CharacteristicRecord("initial", float(a), None, float(c), float(p))
                    for a, c, p in zip(xi, carried, positions)]
        out = []
        for a, c, p in zip(xi, carried, positions):
            if a <= self.phi0:
                out.append(CharacteristicRecord("initial", float(a), None, float(c), float(p)))
            else:
                s = float(emission_times(self.bf, self.boundary, np.array([a]), t)[0])
                out.append(CharacteristicRecord("boundary", float(a), s, float(c), float(p)))
        return out

    def last_initial_position(self, t: float) -> float:
        """Position of the characteristic leaving (phi0, 0); the wedge lies between it and phi(t)."""
        return float(self.bf.characteristic(np.array([self.phi0]), t)[0])


E_INIT_PRESETS = ("zero", "constant", "gaussian")


def make_e_init(kind: str = "zero", amplitude: float = 0.0, center: float = 0.0, width: float = 1.0) -> Callable:
    """Initial corrective field: 'zero', 'constant' (amplitude) or 'gaussian' bump."""
    if kind == "zero":
        return lambda x: np.zeros(np.shape(x)) if np.ndim(x) else 0.0
    if kind == "constant":
        return lambda x: np.full(np.shape(x), float(amplitude)) if np.ndim(x) else float(amplitude)
    if kind == "gaussian":
        return lambda x: amplitude * np.exp(-(((np.asarray(x, dtype=float) - center) / width) ** 2))
    raise ValueError(f"Unsupported e_init kind: {kind}. Choose one of {', '.join(E_INIT_PRESETS)}.")
