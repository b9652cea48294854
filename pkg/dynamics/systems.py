"""Soliton trajectory integrators for the four coupled systems.

Mode A: u^2 flux, corrective field ahead of the soliton, amplitude from the jump equation.
Mode B: u^2 flux, field behind, amplitude fixed by the conservation law g + 2 u0(phi) = K.
Mode C: general flux, field ahead, amplitude from the Omega_1 balance.
Mode D: general flux, field behind, amplitude from the Omega_2 conservation law.

None of the right-hand sides use the Heaviside approximation omega0; it only enters the
smooth ansatz built afterwards.
"""

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Literal

import numpy as np
import pandas as pd
from loguru import logger
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from dynamics.transport import BoundaryHistory, EField, initial_origin
from hopf.background import BackgroundField
from mollifiers.kernels import HeavisideApprox, Mollifier, get_mollifier, moment
from profiles.profiles import profile_data
from utils.errors import (
    AmplitudeCollapse,
    BeyondBreakingTime,
    ConfigError,
    ConstraintNewtonFail,
    CornerIncompatible,
    SingularJacobian,
    TimeOutOfRange,
)
from utils.fluxes import FluxModel

Mode = Literal["A", "B", "C", "D"]
Closure = Literal["kdv", "constant"]
REGION_OF_MODE = {"A": "ahead", "C": "ahead", "B": "behind", "D": "behind"}
ORIENTATION_OF_REGION = {"ahead": "plus", "behind": "minus"}
SQRT6 = np.sqrt(6.0)


@dataclass(frozen=True)
class StepRecord:
    step: int
    t: float
    h: float
    admissible: bool
    speed_margin: float
    conservation_residual: float


@dataclass
class Trajectory:
    """Accepted RK4 nodes with rates, diagnostics and the corrective field."""

    mode: Mode
    background: BackgroundField
    times: np.ndarray
    phi: np.ndarray
    g: np.ndarray
    phi_t: np.ndarray
    g_t: np.ndarray
    e_at_phi: np.ndarray
    speed_margin: np.ndarray
    conservation_residual: np.ndarray
    e_field: EField
    K: float | None = None
    kernel: Mollifier | None = None
    closure: Closure = "kdv"
    alpha0: float | None = None
    heaviside: HeavisideApprox | None = None
    log: list[StepRecord] = field(default_factory=list)
    extras: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def region(self) -> str:
        return REGION_OF_MODE[self.mode]

    @property
    def orientation(self) -> str:
        return ORIENTATION_OF_REGION[self.region]

    @property
    def flux(self) -> FluxModel:
        return self.background.flux

    @cached_property
    def _phi_spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.times, self.phi, self.phi_t)

    @cached_property
    def _g_spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.times, self.g, self.g_t)

    def _check(self, t) -> None:
        t_arr = np.asarray(t, dtype=float)
        slack = 1e-12 * max(1.0, self.t_end)
        if np.any(t_arr < -slack) or np.any(t_arr > self.t_end + slack):
            raise TimeOutOfRange(f"t outside the trajectory range [0, {self.t_end:g}]")

    def phi_at(self, t):
        self._check(t)
        return self._phi_spline(t)

    def g_at(self, t):
        self._check(t)
        return self._g_spline(t)

    def phi_rate_at(self, t):
        self._check(t)
        return self._phi_spline(t, 1)

    def g_rate_at(self, t):
        self._check(t)
        return self._g_spline(t, 1)

    def alpha(self, g: float) -> tuple[float, float]:
        """(alpha, d alpha/dg) of the closure."""
        if self.closure == "constant":
            return float(self.alpha0), 0.0
        alpha = np.sqrt(g / 6.0)
        return float(alpha), float(alpha / (2.0 * g))

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.times, self.phi, self.g):
            h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        return h.hexdigest()

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.times,
            "phi": self.phi,
            "g": self.g,
            "e_at_phi": self.e_at_phi,
            "conserved_K_residual": self.conservation_residual,
            "speed_margin": self.speed_margin,
        })


class ProfileFamily:
    """Profile quantities as functions of (u0, amplitude) for a general flux."""

    def __init__(self, flux: FluxModel, rel_step: float = 1e-5):
        self.flux = flux
        self.rel_step = rel_step

    def speed(self, u0: float, a: float) -> float:
        return profile_data(self.flux, float(u0), float(a))[0]

    def omega(self, k: int, u0: float, a: float) -> float:
        moments = profile_data(self.flux, float(u0), float(a))[1]
        return {1: moments.omega1, 2: moments.omega2, 3: moments.omega3}[k]

    def partials(self, k: int, u0: float, a: float) -> tuple[float, float]:
        """(d Omega_k/da, d Omega_k/du0) by central differences over the profile solver."""
        ha = self.rel_step * a
        hu = self.rel_step * max(1.0, abs(u0))
        d_a = (self.omega(k, u0, a + ha) - self.omega(k, u0, a - ha)) / (2.0 * ha)
        d_u = (self.omega(k, u0 + hu, a) - self.omega(k, u0 - hu, a)) / (2.0 * hu)
        return d_a, d_u

    def amplitude_for(self, k: int, target: float, u0: float, warm: float, tol: float = 1e-12, max_iter: int = 40) -> float:
        """Newton solve of Omega_k(u0, a) = target for a > 0, warm-started."""
        a = warm
        for _ in range(max_iter):
            residual = self.omega(k, u0, a) - target
            if abs(residual) <= tol * max(1.0, abs(target)):
                return a
            slope, _ = self.partials(k, u0, a)
            if abs(slope) < 1e-14:
                break
            step = residual / slope
            a_next = a - step
            # keep the iterate inside the admissible half line
            a = a_next if a_next > 0.0 else 0.5 * a
        raise ConstraintNewtonFail(f"Omega_{k} = {target:.10g} not reached from amplitude {warm:.6g} at u0 = {u0:.6g}")


def rk4(rhs: Callable, y0: np.ndarray, t_end: float, n_steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Classical fixed-step RK4; returns the node times and the states at every node."""
    h = t_end / n_steps
    ys = [np.asarray(y0, dtype=float)]
    y = ys[0]
    for k in range(n_steps):
        t = k * h
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys.append(y)
    times = np.arange(n_steps + 1, dtype=float) * h
    return times, np.array(ys)


def _check_horizon(bf: BackgroundField, t_end: float, n_steps: int) -> None:
    if t_end <= 0.0:
        raise ValueError(f"T_end must be positive, got {t_end}")
    if n_steps < 4:
        raise ValueError(f"n_steps must be at least 4, got {n_steps}")
    if t_end >= bf.breaking_time:
        raise BeyondBreakingTime(f"T_end = {t_end:g} is not below the breaking time {bf.breaking_time:.6g}")


def _scalar(v) -> float:
    return float(np.asarray(v).reshape(-1)[0])


def _require_burgers(bf: BackgroundField, mode: str) -> None:
    if not bf.flux.is_burgers:
        raise ConfigError(f"mode {mode} needs the flux f(u) = u^2, got {bf.flux!r}")


def _step_log(times: np.ndarray, g: np.ndarray, margin: np.ndarray, residual: np.ndarray) -> list[StepRecord]:
    h = float(times[1] - times[0]) if times.size > 1 else 0.0
    return [
        StepRecord(k, float(t), h, bool(gk > 0.0 and mk > 0.0), float(mk), float(rk))
        for k, (t, gk, mk, rk) in enumerate(zip(times, g, margin, residual))
    ]


def _corner_check(e_init: Callable, phi0: float, emitted: float, strict: bool) -> None:
    given = _scalar(e_init(np.array([phi0])))
    if abs(given - emitted) <= 1e-8 * max(1.0, abs(emitted)):
        return
    message = f"corner mismatch at phi0 = {phi0:g}: e_init = {given:.6g}, boundary emits {emitted:.6g}"
    if strict:
        raise CornerIncompatible(message)
    logger.warning("{}; the jump travels along one characteristic", message)


def integrate_mode_A(
    bf: BackgroundField,
    m: Mollifier | None,
    g0: float,
    phi0: float,
    e_init: Callable,
    T_end: float,
    n_steps: int = 200,
    closure: Closure = "kdv",
    alpha0: float | None = None,
    heaviside: HeavisideApprox | None = None,
) -> Trajectory:
    """phi_t = 2 u0(phi) + (Omega_2/Omega_1) g, g_t = e(phi) g Omega_2 / (Omega_1^2 d(g/alpha)/dg)."""
    _require_burgers(bf, "A")
    _check_horizon(bf, T_end, n_steps)
    if g0 <= 0.0:
        raise AmplitudeCollapse(f"g0 = {g0} must be positive")
    if closure == "constant" and (alpha0 is None or alpha0 <= 0.0):
        raise ConfigError("the constant closure needs alpha0 > 0")
    m = m or get_mollifier("kdv_sech2")
    o1, o2 = moment(m, 1), moment(m, 2)
    ratio = o2 / o1

    def d_scaled(g: float) -> float:
        """d(g/alpha)/dg."""
        return SQRT6 / (2.0 * np.sqrt(g)) if closure == "kdv" else 1.0 / alpha0

    def e_phi(phi: float, t: float) -> float:
        return _scalar(initial_origin(bf, e_init, np.array([phi]), t)[0])

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        phi, g = y
        if g <= 0.0:
            raise AmplitudeCollapse(f"g = {g:.6g} at t = {t:.6g}")
        u = bf.eval(phi, t)
        return np.array([2.0 * u + ratio * g, e_phi(phi, t) * g * o2 / (o1**2 * d_scaled(g))])

    times, ys = rk4(rhs, np.array([phi0, g0]), T_end, n_steps)
    rates = np.array([rhs(t, y) for t, y in zip(times, ys)])
    phi, g = ys[:, 0], ys[:, 1]
    margin = rates[:, 0] - 2.0 * np.array([bf.eval(p, t) for p, t in zip(phi, times)])
    e_vals = np.array([e_phi(p, t) for p, t in zip(phi, times)])
    residual = np.full(times.shape, np.nan)

    traj = Trajectory(
        "A", bf, times, phi, g, rates[:, 0], rates[:, 1], e_vals, margin, residual,
        e_field=None, kernel=m, closure=closure, alpha0=alpha0, heaviside=heaviside,
        log=_step_log(times, g, margin, residual),
    )
    traj.e_field = EField(bf, "ahead", e_init, traj.phi_at, phi0)
    logger.info("mode A finished: phi {:.6g} -> {:.6g}, g {:.6g} -> {:.6g}", phi[0], phi[-1], g[0], g[-1])
    return traj


def integrate_mode_B(
    bf: BackgroundField,
    g0: float,
    phi0: float,
    e_init: Callable,
    T_end: float,
    n_steps: int = 200,
    strict_compat: bool = False,
    heaviside: HeavisideApprox | None = None,
) -> Trajectory:
    """phi_t = (2/3) K + (2/3) u0(phi), g = K - 2 u0(phi), e_b = -(3 sqrt6/2) g_t / g^{3/2}."""
    _require_burgers(bf, "B")
    _check_horizon(bf, T_end, n_steps)
    if g0 <= 0.0:
        raise AmplitudeCollapse(f"g0 = {g0} must be positive")
    K = g0 + 2.0 * _scalar(bf.initial_datum(np.array([phi0])))

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        u = bf.eval(y[0], t)
        if K - 2.0 * u <= 0.0:
            raise AmplitudeCollapse(f"g = {K - 2.0 * u:.6g} at t = {t:.6g}")
        return np.array([2.0 / 3.0 * K + 2.0 / 3.0 * u])

    times, ys = rk4(rhs, np.array([phi0]), T_end, n_steps)
    phi = ys[:, 0]
    u, ux, ut = (np.array(col) for col in zip(*(bf.eval_all(p, t) for p, t in zip(phi, times))))
    phi_t = 2.0 / 3.0 * K + 2.0 / 3.0 * u
    g = K - 2.0 * u
    g_t = -2.0 * (ut + ux * phi_t)
    e_b = -1.5 * SQRT6 * g_t / g**1.5
    residual = np.abs(g + 2.0 * u - K)
    margin = phi_t - 2.0 * u
    _corner_check(e_init, phi0, float(e_b[0]), strict_compat)

    traj = Trajectory(
        "B", bf, times, phi, g, phi_t, g_t, e_b, margin, residual,
        e_field=None, K=K, kernel=get_mollifier("kdv_sech2"), heaviside=heaviside,
        log=_step_log(times, g, margin, residual),
    )
    boundary = BoundaryHistory(traj.phi_at, CubicSpline(times, e_b), float(times[-1]))
    traj.e_field = EField(bf, "behind", e_init, traj.phi_at, phi0, boundary)
    logger.info("mode B finished: K = {:.10g}, max conservation residual {:.3g}", K, residual.max())
    return traj


def integrate_mode_C(
    bf: BackgroundField,
    family: ProfileFamily | None,
    a0: float,
    phi0: float,
    e_init: Callable,
    T_end: float,
    n_steps: int = 100,
) -> Trajectory:
    """phi_t = Lambda/Omega_1 = c, (Omega_1)_t + [f'(u0) - c] e(phi) = 0 solved for da/dt."""
    _check_horizon(bf, T_end, n_steps)
    if a0 <= 0.0:
        raise AmplitudeCollapse(f"a0 = {a0} must be positive")
    family = family or ProfileFamily(bf.flux)
    f = bf.flux
    u_start = _scalar(bf.initial_datum(np.array([phi0])))
    if not f.is_convex_on(u_start, u_start + a0):
        logger.warning("f'' is not positive on [{:.4g}, {:.4g}]", u_start, u_start + a0)

    def rates(t: float, y: np.ndarray) -> tuple[np.ndarray, float, float]:
        phi, a = y
        if a <= 0.0:
            raise AmplitudeCollapse(f"amplitude {a:.6g} at t = {t:.6g}")
        u, ux, ut = bf.eval_all(phi, t)
        c = family.speed(u, a)
        du0 = ut + ux * c
        d_a, d_u = family.partials(1, u, a)
        if abs(d_a) < 1e-10:
            raise SingularJacobian(f"|dOmega_1/da| = {abs(d_a):.3g} at amplitude {a:.6g}")
        e = _scalar(initial_origin(bf, e_init, np.array([phi]), t)[0])
        a_t = -(d_u * du0 + (f.prime(u) - c) * e) / d_a
        return np.array([c, a_t]), e, c - f.prime(u)

    times, ys = rk4(lambda t, y: rates(t, y)[0], np.array([phi0, a0]), T_end, n_steps)
    diag = [rates(t, y) for t, y in zip(times, ys)]
    r = np.array([d[0] for d in diag])
    e_vals = np.array([d[1] for d in diag])
    margin = np.array([d[2] for d in diag])
    omega1 = np.array([family.omega(1, bf.eval(p, t), a) for t, (p, a) in zip(times, ys)])
    residual = np.full(times.shape, np.nan)

    traj = Trajectory(
        "C", bf, times, ys[:, 0], ys[:, 1], r[:, 0], r[:, 1], e_vals, margin, residual,
        e_field=None, log=_step_log(times, ys[:, 1], margin, residual), extras={"omega1": omega1},
    )
    traj.e_field = EField(bf, "ahead", e_init, traj.phi_at, phi0)
    logger.info("mode C finished: amplitude {:.6g} -> {:.6g}", ys[0, 1], ys[-1, 1])
    return traj


def integrate_mode_D(
    bf: BackgroundField,
    family: ProfileFamily | None,
    a0: float,
    phi0: float,
    e_init: Callable,
    T_end: float,
    n_steps: int = 100,
    strict_compat: bool = False,
) -> Trajectory:
    """State (phi, Q = Omega_2): phi_t = c, Q_t = -2 Omega_1 d u0(phi)/dt; amplitude by Newton on Omega_2 = Q."""
    _check_horizon(bf, T_end, n_steps)
    if a0 <= 0.0:
        raise AmplitudeCollapse(f"a0 = {a0} must be positive")
    family = family or ProfileFamily(bf.flux)
    f = bf.flux
    u_start = _scalar(bf.initial_datum(np.array([phi0])))
    Q0 = family.omega(2, u_start, a0)
    warm = [float(a0)]

    def amplitude(Q: float, u: float) -> float:
        if Q <= 0.0:
            raise AmplitudeCollapse(f"Omega_2 = {Q:.6g} is not positive")
        a = family.amplitude_for(2, Q, u, warm[0])
        warm[0] = a
        return a

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        phi, Q = y
        u, ux, ut = bf.eval_all(phi, t)
        a = amplitude(Q, u)
        c = family.speed(u, a)
        du0 = ut + ux * c
        return np.array([c, -2.0 * family.omega(1, u, a) * du0])

    times, ys = rk4(rhs, np.array([phi0, Q0]), T_end, n_steps)

    warm[0] = float(a0)
    rows = []
    for t, (phi, Q) in zip(times, ys):
        u, ux, ut = bf.eval_all(phi, t)
        a = amplitude(Q, u)
        c, moments, functionals = profile_data(f, float(u), float(a))
        du0 = ut + ux * c
        Q_t = -2.0 * moments.omega1 * du0
        d2_a, d2_u = family.partials(2, u, a)
        a_t = (Q_t - d2_u * du0) / d2_a
        d1_a, d1_u = family.partials(1, u, a)
        omega1_t = d1_a * a_t + d1_u * du0
        e_b = omega1_t / (f.prime(u) - c)
        identity = -c * (moments.omega2 + 2.0 * u * moments.omega1) + functionals.lam_tilde - 3.0 * moments.omega_delta
        rows.append((a, c, a_t, e_b, c - f.prime(u), abs(moments.omega2 - Q), identity))
    a, c, a_t, e_b, margin, residual, identity = (np.array(col) for col in zip(*rows))
    _corner_check(e_init, phi0, float(e_b[0]), strict_compat)

    traj = Trajectory(
        "D", bf, times, ys[:, 0], a, c, a_t, e_b, margin, residual,
        e_field=None, K=float(Q0), log=_step_log(times, a, margin, residual),
        extras={"omega2": ys[:, 1], "identity_residual": identity},
    )
    boundary = BoundaryHistory(traj.phi_at, CubicSpline(times, e_b), float(times[-1]))
    traj.e_field = EField(bf, "behind", e_init, traj.phi_at, phi0, boundary)
    logger.info("mode D finished: amplitude {:.6g} -> {:.6g}, max |identity residual| {:.3g}", a[0], a[-1],
                np.abs(identity).max())
    return traj


def step_halving_order(run: Callable[[int], Trajectory], n_steps: int) -> float:
    """Observed order log2(|phi_h - phi_h/2| / |phi_h/2 - phi_h/4|) at T_end; nan when already exact."""
    ends = [run(n).phi[-1] for n in (n_steps, 2 * n_steps, 4 * n_steps)]
    coarse, fine = abs(ends[0] - ends[1]), abs(ends[1] - ends[2])
    if fine < 1e-15 or coarse < 1e-15:
        return float("nan")
    order = float(np.log2(coarse / fine))
    logger.debug("step-halving differences {:.3g}, {:.3g}: order {:.3f}", coarse, fine, order)
    return order
