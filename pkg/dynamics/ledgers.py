"""Residual ledgers of the soliton ansatz along a trajectory, assembled with the weak algebra."""

import numpy as np

from dynamics.systems import Trajectory
from weakalgebra.algebra import (
    AsymptoticDistribution,
    CoefficientLedger,
    Field,
    Jet,
    KernelMoments,
    add,
    collect,
    compose,
    differentiate_t,
    differentiate_x,
    dispersion_term,
    multiply,
    reduce,
    soliton_ansatz,
)


def ansatz_at(traj: Trajectory, t: float) -> AsymptoticDistribution:
    """u0 + g omega(alpha (x - phi)/eps) + e eps*theta at time t, with parameter rates from the trajectory."""
    if traj.kernel is None:
        raise ValueError(f"mode {traj.mode} trajectory carries no profile kernel")
    bf, ef = traj.background, traj.e_field
    u0 = Field(lambda x: bf.eval(x, t), lambda x: bf.eval_dx(x, t), lambda x: bf.eval_dt(x, t))
    e = Field(lambda x: ef.extended(x, t), lambda x: ef.dx(x, t), lambda x: ef.dt(x, t))
    g, g_t = float(traj.g_at(t)), float(traj.g_rate_at(t))
    alpha, dalpha = traj.alpha(g)
    moments = KernelMoments.from_kernel(traj.kernel, Jet(alpha, dalpha * g_t))
    center = Jet(float(traj.phi_at(t)), float(traj.phi_rate_at(t)))
    return soliton_ansatz(u0, Jet(g, g_t), center, moments, e, traj.orientation)


def hopf_ledger(traj: Trajectory, t: float) -> CoefficientLedger:
    """L_H[u] = u_t + (f(u))_x."""
    u = ansatz_at(traj, t)
    return collect(reduce(add(differentiate_t(u), differentiate_x(compose(traj.flux, u)))))


def kdv_ledger(traj: Trajectory, t: float) -> CoefficientLedger:
    # eps^2 u_xxx pairs at O(eps^3) with every term of the ansatz
    return hopf_ledger(traj, t)


def conservation_ledger(traj: Trajectory, t: float) -> CoefficientLedger:
    """uL[u] = (u^2)_t + (f~(u))_x + eps^2 [(u^2)_xx - 3 u_x^2]_x."""
    u = ansatz_at(traj, t)
    squared = differentiate_t(multiply(u, u))
    flux = differentiate_x(compose(traj.flux.tilde_model(), u))
    return collect(reduce(add(add(squared, flux), dispersion_term(u))))


def ledger_table(traj: Trajectory, times) -> list[dict]:
    """eps*delta and eps*delta' slots of both ledgers at the given times."""
    rows = []
    for t in np.atleast_1d(times):
        hopf = hopf_ledger(traj, float(t))
        cons = conservation_ledger(traj, float(t))
        rows.append({
            "t": float(t),
            "L_delta": hopf.c_delta,
            "L_delta_prime": hopf.c_delta_prime,
            "uL_delta": cons.c_delta,
            "uL_delta_prime": cons.c_delta_prime,
        })
    return rows
