"""Finite-eps smooth ansatz u*(x, t, eps) = u0 + profile term + eps e omega0(+-(x - phi)/eps)."""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from dynamics.systems import Trajectory
from mollifiers.kernels import HeavisideApprox, get_mollifier, heaviside_from
from profiles.profiles import profile_for_amplitude
from utils.errors import OrientationMismatch

ProfileSource = Literal["kernel", "family"]
_PARAM_STEP = 1e-4


@dataclass(frozen=True)
class Parameters:
    phi: float
    phi_t: float
    g: float
    g_t: float
    alpha: float
    alpha_t: float


class SmoothAnsatz:
    def __init__(self, traj: Trajectory, heaviside: HeavisideApprox, eps: float, profile_source: ProfileSource = "kernel"):
        """
        Smooth finite-eps rendering of a trajectory

        Args:
            traj: integrated soliton trajectory; its splines supply phi, g and their rates
            heaviside: omega0 of the corrective term, oriented like the trajectory region
            eps: dispersion scale
            profile_source: 'kernel' (g * kernel(alpha tau), modes A/B) or 'family' (the
                solved traveling-wave profile of amplitude g on u0(phi), modes C/D)
        """
        if eps <= 0.0:
            raise ValueError(f"eps must be positive, got {eps}")
        if heaviside.orientation != traj.orientation:
            raise OrientationMismatch(
                f"heaviside orientation {heaviside.orientation} does not match the {traj.region} region"
            )
        if profile_source == "kernel" and traj.kernel is None:
            raise ValueError(f"mode {traj.mode} trajectory needs profile_source='family'")
        self.traj = traj
        self.heaviside = heaviside
        self.eps = float(eps)
        self.profile_source = profile_source

    def with_eps(self, eps: float) -> "SmoothAnsatz":
        return SmoothAnsatz(self.traj, self.heaviside, eps, self.profile_source)

    def params(self, t: float) -> Parameters:
        traj = self.traj
        g, g_t = float(traj.g_at(t)), float(traj.g_rate_at(t))
        if self.profile_source == "kernel" and g > 0.0:
            alpha, dalpha = traj.alpha(g)
        else:
            alpha, dalpha = 1.0, 0.0
        return Parameters(float(traj.phi_at(t)), float(traj.phi_rate_at(t)), g, g_t, alpha, dalpha * g_t)

    def core_window(self, t: float, half_widths: float = 10.0) -> tuple[float, float]:
        p = self.params(t)
        half = half_widths * self.eps / p.alpha
        return p.phi - half, p.phi + half

    def _family_profile(self, g: float, t: float, phi: float):
        u_phi = float(self.traj.background.eval(phi, t))
        return profile_for_amplitude(self.traj.flux, u_phi, float(g)), u_phi

    def _profile_terms(self, x: np.ndarray, t: float, p: Parameters) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(value, d/dx, d/dt) of the profile term."""
        if p.g <= 0.0:
            zero = np.zeros_like(x)
            return zero, zero, zero
        eps = self.eps
        if self.profile_source == "kernel":
            kernel = self.traj.kernel
            eta = p.alpha * (x - p.phi) / eps
            w, dw = kernel(eta), kernel.derivative(eta)
            value = p.g * w
            dx = p.g * p.alpha / eps * dw
            dt = p.g_t * w + p.g * dw * (p.alpha_t * (x - p.phi) - p.alpha * p.phi_t) / eps
            return value, dx, dt
        tau = (x - p.phi) / eps
        prof, u_phi = self._family_profile(p.g, t, p.phi)
        w, dw = prof(tau), prof.derivative(tau)
        bf = self.traj.background
        u_rate = float(bf.along(p.phi, t, p.phi_t))
        ha = _PARAM_STEP * p.g
        hu = _PARAM_STEP * max(1.0, abs(u_phi))
        f = self.traj.flux
        d_a = (profile_for_amplitude(f, u_phi, p.g + ha)(tau) - profile_for_amplitude(f, u_phi, p.g - ha)(tau)) / (2 * ha)
        d_u = (profile_for_amplitude(f, u_phi + hu, p.g)(tau) - profile_for_amplitude(f, u_phi - hu, p.g)(tau)) / (2 * hu)
        return w, dw / eps, d_a * p.g_t + d_u * u_rate - dw * p.phi_t / eps

    def components(self, x, t: float) -> dict:
        x = np.asarray(x, dtype=float)
        p = self.params(t)
        profile, _, _ = self._profile_terms(x, t, p)
        z = (x - p.phi) / self.eps
        return {
            "background": self.traj.background.eval(x, t),
            "profile": profile,
            "theta": self.eps * self.traj.e_field.extended(x, t) * self.heaviside.omega0(z),
        }

    def __call__(self, x, t: float):
        parts = self.components(x, t)
        return parts["background"] + parts["profile"] + parts["theta"]

    def evaluate(self, x, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(u*, u*_x, u*_t) at one instant; all time derivatives by the parameter chain rule."""
        x = np.asarray(x, dtype=float)
        p = self.params(t)
        bf, ef, h = self.traj.background, self.traj.e_field, self.heaviside
        u0, u0x, u0t = bf.eval_all(x, t)
        prof, prof_x, prof_t = self._profile_terms(x, t, p)
        z = (x - p.phi) / self.eps
        w0, dw0 = h.omega0(z), h.derivative(z)
        e, e_x, e_t = ef.extended(x, t), ef.dx(x, t), ef.dt(x, t)
        u = u0 + prof + self.eps * e * w0
        ux = u0x + prof_x + self.eps * e_x * w0 + e * dw0
        ut = u0t + prof_t + self.eps * e_t * w0 - e * dw0 * p.phi_t
        return u, ux, ut

    def dx(self, x, t: float):
        return self.evaluate(x, t)[1]

    def dt(self, x, t: float):
        return self.evaluate(x, t)[2]


def build_smooth_ansatz(
    traj: Trajectory,
    eps: float,
    heaviside: HeavisideApprox | None = None,
    profile_source: ProfileSource | None = None,
) -> SmoothAnsatz:
    """Defaults: the trajectory's Heaviside approximation, else the unit-mass sech^2 one."""
    heaviside = heaviside or traj.heaviside or heaviside_from(get_mollifier("sech2"), traj.orientation)
    source = profile_source or ("kernel" if traj.kernel is not None else "family")
    return SmoothAnsatz(traj, heaviside, eps, source)
