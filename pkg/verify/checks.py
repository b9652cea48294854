"""Closed-form counterexample, profile identities and the non-uniqueness construction."""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from loguru import logger
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from dynamics.systems import rk4
from dynamics.transport import BoundaryHistory, EField
from hopf.background import BackgroundField
from mollifiers.kernels import Mollifier, moment
from profiles.profiles import SolitonProfile, profile_functionals
from utils.errors import AmplitudeCollapse
from utils.fluxes import FluxModel
from verify.residuals import TestFunction

SQRT6 = np.sqrt(6.0)


@dataclass(frozen=True)
class CounterexampleResult:
    kernel: str
    eps: float
    t0: float
    support: tuple[float, float]
    predicted_phi: float
    predicted_outside_support: bool
    weak_limit_value: float
    weak_limit_target: float
    weak_limit_error: float
    mass: float

    def as_row(self) -> dict:
        return {
            "kernel": self.kernel,
            "eps": self.eps,
            "t0": self.t0,
            "support_right": self.support[1],
            "predicted_phi": self.predicted_phi,
            "predicted_outside_support": self.predicted_outside_support,
            "weak_limit_value": self.weak_limit_value,
            "weak_limit_target": self.weak_limit_target,
            "weak_limit_error": self.weak_limit_error,
            "mass": self.mass,
        }


def hopf_rarefaction(x, t: float, eps: float):
    """W(x, t, eps) = x/(2t) on [0, 2 sqrt(eps t)], zero elsewhere."""
    x = np.asarray(x, dtype=float)
    right = 2.0 * np.sqrt(eps * t)
    return np.where((x >= 0.0) & (x <= right), x / (2.0 * t), 0.0)


def hopf_delta_exact(m: Mollifier, eps: float, t0: float, probe_time: float = 1e-6, probe: TestFunction | None = None) -> CounterexampleResult:
    """Exact Hopf solution with eps*delta initial mass against the formal soliton position t0 * Omega_2."""
    if t0 <= 0.0:
        raise ValueError(f"t0 must be positive, got {t0}")
    right = 2.0 * np.sqrt(eps * t0)
    predicted = t0 * moment(m, 2)

    probe = probe or TestFunction(0.0, 1.0)
    edge = 2.0 * np.sqrt(eps * probe_time)
    value, _ = quad(lambda x: x / (2.0 * probe_time) * probe(x), 0.0, edge, epsabs=1e-16, epsrel=1e-13)
    target = eps * float(probe(0.0))
    mass, _ = quad(lambda x: x / (2.0 * t0), 0.0, right, epsabs=1e-16, epsrel=1e-13)
    result = CounterexampleResult(
        m.name, float(eps), float(t0), (0.0, float(right)), float(predicted), bool(predicted > right),
        float(value), target, abs(float(value) - target), float(mass),
    )
    logger.debug("counterexample: support [0, {:.6g}], predicted phi {:.6g}", right, predicted)
    return result


@dataclass(frozen=True)
class IdentityReport:
    residual: float
    energy: float
    virial: float
    lambda_tilde_identity: float
    speed_consistency: float

    def as_dict(self) -> dict:
        return {
            "identity_residual": self.residual,
            "energy_identity": self.energy,
            "virial_identity": self.virial,
            "lambda_tilde_identity": self.lambda_tilde_identity,
            "speed_consistency": self.speed_consistency,
        }


def profile_identity_residual(profile: SolitonProfile, u0_val: float, c: float, f: FluxModel | None = None) -> IdentityReport:
    """|-c(Omega_2 + 2 u0 Omega_1) + Lambda~ - 3 Omega_Delta| and the identities behind it."""
    f = f or (profile.potential.f if profile.potential is not None else FluxModel("u2"))
    if profile.amplitude == 0.0:
        return IdentityReport(0.0, 0.0, 0.0, 0.0, 0.0)
    fun = profile_functionals(profile, f)
    o1, o2 = profile.moments.omega1, profile.moments.omega2
    od = fun["omega_delta"]
    lam, lam_t, lam_t1, weighted = fun["lambda"], fun["lambda_tilde"], fun["lambda_tilde1"], fun["flux_weighted"]
    f0 = float(f(u0_val))
    return IdentityReport(
        abs(-c * (o2 + 2.0 * u0_val * o1) + lam_t - 3.0 * od),
        abs(-c * o2 - 2.0 * f0 * o1 + 2.0 * lam_t1 + od),
        abs(-c * o2 + weighted - od),
        abs(lam_t - (2.0 * u0_val * lam + 2.0 * f0 * o1 + 2.0 * weighted - 2.0 * lam_t1)),
        abs(c * o1 - lam),
    )


@dataclass(frozen=True)
class AmplitudeHistory:
    """Prescribed g(t) with its rate, for the closure-free behind-region system."""

    g: Callable
    g_t: Callable
    label: str = "custom"


def linear_history(g0: float, kappa: float) -> AmplitudeHistory:
    """g0 (1 + kappa t)."""
    return AmplitudeHistory(
        lambda t: g0 * (1.0 + kappa * np.asarray(t, dtype=float)),
        lambda t: g0 * kappa * np.ones(np.shape(t)) if np.ndim(t) else g0 * kappa,
        f"linear(kappa={kappa:g})",
    )


@dataclass
class OpenSystemRun:
    """phi(t) and the behind-region field for one amplitude history."""

    history: AmplitudeHistory
    times: np.ndarray
    phi: np.ndarray
    phi_t: np.ndarray
    e_field: EField = field(repr=False)

    def emission(self, s):
        g, g_t = self.history.g(s), self.history.g_t(s)
        return -1.5 * SQRT6 * g_t / np.asarray(g) ** 1.5


def _open_system(
    bf: BackgroundField, history: AmplitudeHistory, phi0: float, e_init: Callable, T_end: float, n_steps: int
) -> OpenSystemRun:
    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        g = float(history.g(t))
        if g <= 0.0:
            raise AmplitudeCollapse(f"prescribed g = {g:.6g} at t = {t:.6g}")
        return np.array([2.0 * float(bf.eval(y[0], t)) + 2.0 / 3.0 * g])

    times, ys = rk4(rhs, np.array([float(phi0)]), T_end, n_steps)
    phi = ys[:, 0]
    phi_t = np.array([rhs(t, y)[0] for t, y in zip(times, ys)])
    path = CubicHermiteSpline(times, phi, phi_t)
    run = OpenSystemRun(history, times, phi, phi_t, None)
    run.e_field = EField(bf, "behind", e_init, path, phi0, BoundaryHistory(path, run.emission, T_end))
    return run


@dataclass
class NonuniquenessResult:
    x: np.ndarray
    e_first: np.ndarray
    e_second: np.ndarray
    max_difference: float
    wedge: tuple[float, float]
    wedge_width: float
    residuals: dict[str, float]

    @property
    def difference(self) -> np.ndarray:
        return self.e_first - self.e_second


def system_residuals(bf: BackgroundField, run: OpenSystemRun, n_probe: int = 9) -> dict[str, float]:
    """Residuals of the behind-region system: speed law, transport law inside the wedge, boundary law."""
    T = float(run.times[-1])
    probe_t = np.linspace(0.2 * T, 0.9 * T, n_probe)
    path = run.e_field.phi_path
    speed = max(abs(float(path(t, 1)) - 2.0 * float(bf.eval(float(path(t)), t)) - 2.0 / 3.0 * float(run.history.g(t)))
                for t in probe_t)

    transport = 0.0
    for t in probe_t:
        lo, hi = run.e_field.last_initial_position(t), float(path(t))
        xs = lo + (hi - lo) * np.linspace(0.2, 0.8, 5)
        ht = 1e-4 * max(T, 1.0)
        hx = 1e-5 * max(1.0, float(np.max(np.abs(xs))))
        u, ux, _ = bf.eval_all(xs, t)
        ef = run.e_field
        e_t = (ef._raw(xs, t + ht) - ef._raw(xs, t - ht)) / (2.0 * ht)
        flux_x = (bf.flux.prime(bf.eval(xs + hx, t)) * ef._raw(xs + hx, t)
                  - bf.flux.prime(bf.eval(xs - hx, t)) * ef._raw(xs - hx, t)) / (2.0 * hx)
        transport = max(transport, float(np.max(np.abs(e_t + flux_x))))

    boundary = max(abs(float(run.e_field._raw(np.array([float(path(t))]), t)[0]) - float(run.emission(t)))
                   for t in probe_t)
    return {"speed": float(speed), "transport": transport, "boundary": float(boundary)}


def nonuniqueness_demo(
    bf: BackgroundField,
    g0: float,
    phi0: float,
    histories: tuple[AmplitudeHistory, AmplitudeHistory],
    T_end: float,
    e_init: Callable | None = None,
    n_steps: int = 400,
    n_points: int = 41,
) -> NonuniquenessResult:
    """Two amplitude histories with the same g(0) give two behind-region fields differing in the wedge."""
    if T_end >= bf.breaking_time:
        raise ValueError(f"T_end = {T_end} is not below the breaking time {bf.breaking_time:.6g}")
    for history in histories:
        if abs(float(history.g(0.0)) - g0) > 1e-12 * max(1.0, g0):
            raise ValueError(f"history {history.label} does not start at g0 = {g0}")
    e_init = e_init or (lambda x: np.zeros(np.shape(x)))
    first, second = (_open_system(bf, h, phi0, e_init, T_end, n_steps) for h in histories)

    # the wedge of the first run bounds the comparison: both fields are defined there
    lo = first.e_field.last_initial_position(T_end)
    hi = min(float(first.phi[-1]), float(second.phi[-1]))
    x = lo + (hi - lo) * np.linspace(0.05, 0.95, n_points)
    e1, e2 = first.e_field(x, T_end), second.e_field(x, T_end)
    diff = float(np.max(np.abs(e1 - e2)))

    residuals = {}
    for tag, run in (("first", first), ("second", second)):
        for key, value in system_residuals(bf, run).items():
            residuals[f"{tag}_{key}"] = value
    logger.info("non-uniqueness: wedge [{:.6g}, {:.6g}], max |e1 - e2| = {:.6g}", lo, hi, diff)
    return NonuniquenessResult(x, e1, e2, diff, (lo, hi), hi - lo, residuals)
