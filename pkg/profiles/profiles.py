"""Soliton profiles of -c w + f(u0 + w) - f(u0) + w_tautau = 0 for polynomial flux f.

Profiles are stored in the unscaled variable tau = (x - phi)/eps with the amplitude
folded into the shape. With the first integral 1/2 w_tau^2 + V(w) = 0 and the exact
factorisation V(w) = w^2 (w - a) S(w), every quadrature below has a smooth integrand:
sigma = sqrt(a - xi) near the turning point a, y = log(xi) in the exponential tail.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np
from loguru import logger
from numpy.polynomial import Polynomial
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import bisect

from mollifiers.kernels import sech2
from utils.errors import DegenerateRoot, NonPositiveAmplitude, NoSoliton, TailDivergence
from utils.fluxes import FluxModel

TAIL_CUT = 1e-12
SCAN_BOUND = 1e6
_W = Polynomial([0.0, 1.0])
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class Potential:
    """V(w) = int_0^w [f(z + u0) - f(u0)] dz - c w^2 / 2, exact as a polynomial in w."""

    f: FluxModel
    u0_val: float
    c: float
    V: Polynomial = field(repr=False)
    E: float = 0.0

    def __call__(self, w):
        return self.V(w)

    def dV(self, w):
        return self.V.deriv(1)(w)

    def d2V(self, w):
        return self.V.deriv(2)(w)

    @property
    def curvature(self) -> float:
        """V''(0) = f'(u0) - c; negative for an admissible soliton."""
        return float(self.f.prime(self.u0_val) - self.c)

    @property
    def well(self) -> Polynomial:
        """Q(w) = V(w)/w^2."""
        return self.V // (_W * _W)


def _shifted_excess(f: FluxModel, u0_val: float) -> Polynomial:
    """F(u0 + w) - F(u0) - f(u0) w as a polynomial in w with zero constant and linear terms."""
    shifted = Polynomial(f.model.integ(1)(Polynomial([u0_val, 1.0])).coef.copy())
    coef = shifted.coef.copy()
    coef = np.pad(coef, (0, max(0, 3 - coef.size)))
    coef[0] = 0.0
    coef[1] = 0.0
    return Polynomial(coef)


def build_potential(f: FluxModel, u0_val: float, c: float) -> Potential:
    excess = _shifted_excess(f, u0_val)
    V = excess - 0.5 * c * _W * _W
    coef = np.pad(V.coef.copy(), (0, max(0, 3 - V.coef.size)))
    coef[0] = 0.0
    coef[1] = 0.0
    return Potential(f, float(u0_val), float(c), Polynomial(coef))


def speed_for_amplitude(f: FluxModel, u0_val: float, a: float) -> float:
    """Speed c for which w = a is the turning point: V(a) = 0."""
    if a <= 0:
        raise NonPositiveAmplitude(f"amplitude must be positive, got {a}")
    return float(2.0 * (_shifted_excess(f, u0_val) // (_W * _W))(a))


def find_turning_point(p: Potential, scan_bound: float = SCAN_BOUND, warm_start: float | None = None) -> float:
    """Smallest w > 0 with V(w) = 0, by a geometric scan of Q = V/w^2 and bisection."""
    if p.curvature >= 0.0:
        raise NoSoliton(f"V''(0) = {p.curvature:.6g} >= 0: no potential well (c <= f'(u0))")
    Q = p.well

    bracket = None
    if warm_start is not None and warm_start > 0:
        lo, hi = 0.8 * warm_start, 1.25 * warm_start
        grid = np.linspace(lo, hi, 33)
        vals = Q(grid)
        # the warm bracket is only trusted when Q stays negative below it
        if vals[0] < 0.0 and np.all(Q(np.linspace(0.0, lo, 65)) < 0.0):
            hits = np.nonzero(vals >= 0.0)[0]
            if hits.size:
                bracket = (grid[hits[0] - 1], grid[hits[0]])
    if bracket is None:
        grid = np.concatenate([[0.0], np.geomspace(1e-8, scan_bound, 4000)])
        vals = Q(grid)
        hits = np.nonzero(vals >= 0.0)[0]
        if hits.size == 0:
            raise NoSoliton(f"no positive turning point below {scan_bound:g}")
        bracket = (grid[hits[0] - 1], grid[hits[0]])
    logger.debug("turning point bracket [{:.6g}, {:.6g}]", *bracket)

    lo, hi = bracket
    root = hi if Q(hi) == 0.0 else bisect(Q, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=200)
    slope = float(p.dV(root))
    if abs(slope) < 1e-10:
        raise DegenerateRoot(f"|V'(w_max)| = {abs(slope):.3g} at w_max = {root:.6g}: double root")
    return float(root)


@dataclass(frozen=True)
class ProfileMoments:
    omega1: float
    omega2: float
    omega3: float
    omega_delta: float

    def as_dict(self) -> dict:
        return {"omega1": self.omega1, "omega2": self.omega2, "omega3": self.omega3, "omega_delta": self.omega_delta}


@dataclass(frozen=True)
class ProfileFunctionals:
    lam: float
    lam_tilde: float
    lam_tilde1: float
    flux_weighted: float

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "lambda_tilde": self.lam_tilde,
            "lambda_tilde1": self.lam_tilde1,
            "flux_weighted": self.flux_weighted,
        }


class _Branch:
    """Quadrature over the decreasing branch, with V = w^2 (w - a) S(w) factored out."""

    def __init__(self, p: Potential, a: float):
        self.p, self.a = p, a
        self.S = (p.V // (_W * _W)) // Polynomial([-a, 1.0])
        probe = np.linspace(0.0, a, 65)
        if np.any(self.S(probe) <= 0.0):
            raise NoSoliton(f"w = {a:.6g} is not the first turning point of the potential")

    def root_term(self, xi):
        """sqrt(-2 V(xi)) / xi = sqrt(2 (a - xi) S(xi))."""
        return np.sqrt(2.0 * np.maximum(self.a - xi, 0.0) * self.S(xi))

    def core_dtau(self, sigma):
        xi = self.a - sigma**2
        return 2.0 / (xi * np.sqrt(2.0 * self.S(xi)))

    def tail_dtau(self, y):
        return 1.0 / self.root_term(np.exp(y))

    def weighted(self, g: Callable) -> float:
        """2 * int g(w) dtau over the half line = 2 int_0^a g(xi)/sqrt(-2V(xi)) d xi; g(xi) = O(xi)."""
        a = self.a
        half = 0.5 * a
        lower, _ = quad(lambda xi: g(xi) / (xi * self.root_term(xi)) if xi > 0 else 0.0, 0.0, half,
                        limit=200, epsabs=1e-14, epsrel=1e-13)
        upper, _ = quad(
            lambda s: 2.0 * g(a - s * s) / ((a - s * s) * np.sqrt(2.0 * self.S(a - s * s))),
            0.0, np.sqrt(half), limit=200, epsabs=1e-14, epsrel=1e-13,
        )
        return 2.0 * (lower + upper)

    def moments(self) -> ProfileMoments:
        return ProfileMoments(
            self.weighted(lambda xi: xi),
            self.weighted(lambda xi: xi**2),
            self.weighted(lambda xi: xi**3),
            # omega_tau^2 = -2V
            self.weighted(lambda xi: -2.0 * self.p(xi)),
        )

    def functionals(self) -> ProfileFunctionals:
        f, u0 = self.p.f, self.p.u0_val
        f0, ft0, F0 = f(u0), f.tilde(u0), f.tilde1(u0)
        return ProfileFunctionals(
            self.weighted(lambda xi: f(u0 + xi) - f0),
            self.weighted(lambda xi: f.tilde(u0 + xi) - ft0),
            self.weighted(lambda xi: f.tilde1(u0 + xi) - F0),
            self.weighted(lambda xi: (f(u0 + xi) - f0) * xi),
        )


def _cumulative_gl(fn: Callable, edges: np.ndarray) -> np.ndarray:
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    pieces = half * (fn(x) @ _GL_WEIGHTS)
    return np.concatenate([[0.0], np.cumsum(pieces)])


@dataclass(frozen=True)
class SolitonProfile:
    """Traveling-wave shape w(tau), even about its peak at tau = 0."""

    shape: Callable = field(repr=False, compare=False)
    amplitude: float
    speed: float
    u0_val: float
    moments: ProfileMoments
    functionals: ProfileFunctionals
    potential: Potential | None = field(default=None, repr=False, compare=False)
    d1: Callable | None = field(default=None, repr=False, compare=False)
    d2: Callable | None = field(default=None, repr=False, compare=False)
    d3: Callable | None = field(default=None, repr=False, compare=False)
    table_slope: Callable | None = field(default=None, repr=False, compare=False)
    window: tuple[float, float] = (-50.0, 50.0)
    decay_class: str = "rapid"

    def __call__(self, tau):
        return self.shape(tau)

    def derivative(self, tau):
        return self.d1(tau)

    def second_derivative(self, tau):
        return self.d2(tau)

    def third_derivative(self, tau):
        return self.d3(tau)

    def truncation(self) -> tuple[float, float]:
        return self.window

    @property
    def decay_rate(self) -> float:
        """kappa with w ~ exp(-kappa |tau|)."""
        return float(np.sqrt(max(self.speed - self._flux_slope(), 0.0)))

    def _flux_slope(self) -> float:
        return float(self.potential.f.prime(self.u0_val)) if self.potential is not None else 2.0 * self.u0_val

    def first_integral_residual(self, tau: np.ndarray) -> float:
        """max |1/2 w_tau^2 + V(w)| with w_tau differentiated from the tabulated branch."""
        slope = self.table_slope(tau) if self.table_slope is not None else self.d1(tau)
        return float(np.max(np.abs(0.5 * slope**2 + self.potential(self.shape(tau)))))


def _potential_derivatives(p: Potential, shape: Callable, branch: _Branch):
    def d1(tau):
        tau = np.asarray(tau, dtype=float)
        w = shape(tau)
        return -np.sign(tau) * w * branch.root_term(w)

    def d2(tau):
        return -p.dV(shape(tau))

    def d3(tau):
        return -p.d2V(shape(tau)) * d1(tau)

    return d1, d2, d3


def solve_profile(
    f: FluxModel, u0_val: float, c: float, n_core: int = 800, n_tail: int = 4000, tail_cut: float = TAIL_CUT
) -> SolitonProfile:
    p = build_potential(f, u0_val, c)
    if p.curvature >= 0.0:
        raise TailDivergence(f"V''(0) = {p.curvature:.6g} >= 0: the tail does not decay")
    a = find_turning_point(p)
    branch = _Branch(p, a)

    sigma_edges = np.linspace(0.0, np.sqrt(0.5 * a), n_core + 1)
    tau_core = _cumulative_gl(branch.core_dtau, sigma_edges)
    y_top = np.log(0.5 * a)
    y_edges = np.linspace(y_top, np.log(min(tail_cut, 0.25 * a)), n_tail + 1)
    # integrating from y_top downwards: d tau = -dy / root_term
    tau_tail = tau_core[-1] + _cumulative_gl(lambda y: -branch.tail_dtau(y), y_edges)

    core = CubicSpline(tau_core, sigma_edges)
    tail = CubicSpline(tau_tail, y_edges)
    tau_split, tau_end = tau_core[-1], tau_tail[-1]
    kappa = np.sqrt(-p.curvature)
    y_end = y_edges[-1]

    def shape(tau):
        t = np.abs(np.asarray(tau, dtype=float))
        in_core = t <= tau_split
        in_tail = (~in_core) & (t <= tau_end)
        out = np.empty_like(t)
        out[in_core] = a - core(t[in_core]) ** 2
        out[in_tail] = np.exp(tail(t[in_tail]))
        beyond = t > tau_end
        out[beyond] = np.exp(y_end - kappa * (t[beyond] - tau_end))
        return float(out) if out.ndim == 0 else out

    def table_slope(tau):
        tau = np.asarray(tau, dtype=float)
        t = np.abs(tau)
        in_core = t <= tau_split
        out = np.empty_like(t)
        out[in_core] = -2.0 * core(t[in_core]) * core(t[in_core], 1)
        rest = ~in_core
        inner = rest & (t <= tau_end)
        out[inner] = np.exp(tail(t[inner])) * tail(t[inner], 1)
        far = rest & ~inner
        out[far] = -kappa * np.exp(y_end - kappa * (t[far] - tau_end))
        return np.sign(tau) * out

    d1, d2, d3 = _potential_derivatives(p, shape, branch)
    reach = tau_end + np.log(tail_cut / 1e-14) / kappa
    logger.debug("solved profile: amplitude {:.10g}, core {:.4g}, tail end {:.4g}", a, tau_split, tau_end)
    return SolitonProfile(
        shape, a, float(c), float(u0_val), branch.moments(), branch.functionals(), p, d1, d2, d3, table_slope,
        (-reach, reach),
    )


@lru_cache(maxsize=4096)
def profile_data(f: FluxModel, u0_val: float, a: float) -> tuple[float, ProfileMoments, ProfileFunctionals]:
    """(speed, moments, functionals) of the profile with amplitude `a` on background `u0_val`.

    No tabulation; this is what the general-flux dynamics evaluate at every stage.
    """
    c = speed_for_amplitude(f, u0_val, a)
    p = build_potential(f, u0_val, c)
    if p.curvature >= 0.0:
        raise NoSoliton(f"amplitude {a:.6g} on background {u0_val:.6g} gives no potential well")
    branch = _Branch(p, a)
    return c, branch.moments(), branch.functionals()


@lru_cache(maxsize=256)
def profile_for_amplitude(f: FluxModel, u0_val: float, a: float) -> SolitonProfile:
    return solve_profile(f, u0_val, speed_for_amplitude(f, u0_val, a))


def kdv_profile(g: float, u0_val: float) -> SolitonProfile:
    """g sech^2(sqrt(g/6) tau), speed 2 u0 + 2g/3, for f(u) = u^2."""
    if g <= 0:
        raise NonPositiveAmplitude(f"KdV amplitude must be positive, got {g}")
    alpha = np.sqrt(g / 6.0)
    moments = ProfileMoments(2.0 * g / alpha, 4.0 / 3.0 * g**2 / alpha, 16.0 / 15.0 * g**3 / alpha, 16.0 / 15.0 * g**2 * alpha)
    o1, o2, o3 = moments.omega1, moments.omega2, moments.omega3
    functionals = ProfileFunctionals(
        2.0 * u0_val * o1 + o2,
        4.0 / 3.0 * (3.0 * u0_val**2 * o1 + 3.0 * u0_val * o2 + o3),
        u0_val**2 * o1 + u0_val * o2 + o3 / 3.0,
        2.0 * u0_val * o2 + o3,
    )
    speed = 2.0 * u0_val + 2.0 / 3.0 * g

    def shape(tau):
        return g * sech2(alpha * np.asarray(tau, dtype=float))

    def d1(tau):
        z = alpha * np.asarray(tau, dtype=float)
        return -2.0 * g * alpha * sech2(z) * np.tanh(z)

    def d2(tau):
        z = alpha * np.asarray(tau, dtype=float)
        s = sech2(z)
        return g * alpha**2 * s * (4.0 - 6.0 * s)

    def d3(tau):
        z = alpha * np.asarray(tau, dtype=float)
        s = sech2(z)
        return g * alpha**3 * s * np.tanh(z) * (24.0 * s - 8.0)

    # sech^2 falls below 1e-14 at |z| ~ 17
    reach = 17.5 / alpha
    return SolitonProfile(
        shape, float(g), float(speed), float(u0_val), moments, functionals,
        build_potential(FluxModel("u2"), u0_val, speed), d1, d2, d3, None, (-reach, reach),
    )


def scaled_moments(g: float, alpha: float, kernel_moments: Mapping[int, float]) -> dict:
    """Unit-kernel moments (Omega_1..Omega_4) of g*omega(alpha tau) in the unscaled convention."""
    out = {k: g**k * kernel_moments[k] / alpha for k in (1, 2, 3) if k in kernel_moments}
    if 4 in kernel_moments:
        out[4] = g**2 * alpha * kernel_moments[4]
    return out


def profile_functionals(p: SolitonProfile, f: FluxModel) -> dict:
    """Lambda, Lambda~, Lambda~1 and Omega_Delta of a profile for flux f, by quadrature."""
    if p.amplitude == 0.0:
        return {"lambda": 0.0, "lambda_tilde": 0.0, "lambda_tilde1": 0.0, "omega_delta": 0.0, "flux_weighted": 0.0}
    potential = build_potential(f, p.u0_val, p.speed)
    branch = _Branch(potential, p.amplitude)
    out = branch.functionals().as_dict()
    out["omega_delta"] = branch.moments().omega_delta
    return out


def zero_profile(u0_val: float, c: float) -> SolitonProfile:
    zero = ProfileMoments(0.0, 0.0, 0.0, 0.0)

    def shape(tau):
        return np.zeros(np.shape(tau)) if np.ndim(tau) else 0.0

    return SolitonProfile(
        shape, 0.0, float(c), float(u0_val), zero, ProfileFunctionals(0.0, 0.0, 0.0, 0.0), None, shape, shape, shape
    )
