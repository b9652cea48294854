"""Table builders for each subcommand and the atomic CSV/SVG writers behind them."""

import hashlib
import os
import tempfile
from pathlib import Path
from typing import Callable

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from loguru import logger

from data_models.models import EInitSpec, FluxSpec, Scenario
from dynamics.systems import (
    ORIENTATION_OF_REGION,
    ProfileFamily,
    Trajectory,
    integrate_mode_A,
    integrate_mode_B,
    integrate_mode_C,
    integrate_mode_D,
)
from dynamics.transport import make_e_init
from hopf.background import BackgroundField, make_background
from mollifiers.kernels import get_mollifier, gradient_moment, heaviside_from, moment
from profiles.profiles import profile_functionals, profile_for_amplitude, scaled_moments, solve_profile
from utils.errors import ConfigError
from utils.fluxes import FluxModel
from verify.ansatz import build_smooth_ansatz
from verify.checks import hopf_delta_exact, linear_history, nonuniqueness_demo, profile_identity_residual
from verify.kdv_direct import kdv_direct
from verify.residuals import build_bank, two_pairing_check

FLOAT_FORMAT = "%.12e"
matplotlib.rcParams["svg.hashsalt"] = "deltasoliton"


def build_flux(spec: FluxSpec) -> FluxModel:
    return FluxModel(preset=spec.preset, coefficients=spec.coefficients, beta=spec.beta)


def build_background(scenario: Scenario) -> BackgroundField:
    return make_background(scenario.background.preset, build_flux(scenario.flux), **scenario.background.params)


def build_e_init(spec: EInitSpec) -> Callable:
    return make_e_init(spec.kind, spec.amplitude, spec.center, spec.width)


def build_trajectory(scenario: Scenario, strict_compat: bool = False, n_steps: int | None = None) -> Trajectory:
    """Integrate the scenario's mode with its background, kernel and initial field."""
    bf = build_background(scenario)
    e_init = build_e_init(scenario.e_init)
    orientation = ORIENTATION_OF_REGION[scenario.resolved_region]
    heaviside = heaviside_from(get_mollifier(scenario.kernel.heaviside), orientation)
    steps = n_steps or scenario.n_steps
    args = (scenario.g0, scenario.phi0, e_init, scenario.t_end, steps)
    if scenario.mode == "A":
        kernel = get_mollifier(scenario.kernel.name, scenario.kernel.width)
        return integrate_mode_A(bf, kernel, *args, closure=scenario.kernel.closure,
                                alpha0=scenario.kernel.alpha0, heaviside=heaviside)
    if scenario.mode == "B":
        return integrate_mode_B(bf, *args, strict_compat=strict_compat, heaviside=heaviside)
    family = ProfileFamily(bf.flux)
    if scenario.mode == "C":
        traj = integrate_mode_C(bf, family, *args)
    else:
        traj = integrate_mode_D(bf, family, *args, strict_compat=strict_compat)
    traj.heaviside = heaviside
    return traj


def moments_table(scenario: Scenario) -> dict[str, pd.DataFrame]:
    """Omega_1..Omega_3 and Omega_Delta of the kernel, with the unscaled values for amplitude g0."""
    m = get_mollifier(scenario.kernel.name, scenario.kernel.width)
    unit = {1: moment(m, 1), 2: moment(m, 2), 3: moment(m, 3), 4: gradient_moment(m)}
    alpha = scenario.kernel.alpha0 if scenario.kernel.closure == "constant" else float(np.sqrt(scenario.g0 / 6.0))
    unscaled = scaled_moments(scenario.g0, alpha, unit)
    rows = [
        {"kernel": m.name, "n": "delta" if k == 4 else str(k), "omega_n": unit[k], "omega_n_unscaled": unscaled[k]}
        for k in (1, 2, 3, 4)
    ]
    return {"moments": pd.DataFrame(rows, columns=["kernel", "n", "omega_n", "omega_n_unscaled"])}


def profile_table(scenario: Scenario) -> dict[str, pd.DataFrame]:
    """Tabulated traveling-wave profile and its functionals for the profile query."""
    q = scenario.profile
    f = build_flux(scenario.flux)
    prof = profile_for_amplitude(f, q.u0, q.amplitude) if q.amplitude is not None else solve_profile(f, q.u0, q.speed)
    tau = np.linspace(-q.tau_max, q.tau_max, q.n_tau)
    table = pd.DataFrame({"tau": tau, "omega": prof(tau), "omega_tau": prof.derivative(tau)})

    quantities = {"amplitude": prof.amplitude, "speed": prof.speed, "u0": prof.u0_val}
    quantities.update(prof.moments.as_dict())
    quantities.update(profile_functionals(prof, f))
    quantities.update(profile_identity_residual(prof, q.u0, prof.speed, f).as_dict())
    quantities["first_integral_residual"] = prof.first_integral_residual(tau)
    summary = pd.DataFrame({"quantity": list(quantities), "value": [float(v) for v in quantities.values()]})
    return {"profile": table, "profile_functionals": summary}


def simulate_table(scenario: Scenario, strict_compat: bool = False) -> tuple[dict[str, pd.DataFrame], Trajectory]:
    traj = build_trajectory(scenario, strict_compat)
    return {"simulate": traj.to_frame()}, traj


def verify_order_tables(scenario: Scenario, strict_compat: bool = False, threads: int = 1) -> dict[str, pd.DataFrame]:
    """Residual pairings over the eps sweep and their slope fits."""
    if len(scenario.eps_list) < 4:
        raise ConfigError(f"verify-order needs at least 4 eps values, got {len(scenario.eps_list)}")
    traj = build_trajectory(scenario, strict_compat)
    eps_list = sorted(scenario.eps_list, reverse=True)
    ansatz = build_smooth_ansatz(traj, eps_list[0])
    operator = scenario.resolved_operator
    pairings = ("L", "uL") if operator == "kdv" else ("L",)
    report = two_pairing_check(ansatz, traj.flux, eps_list, build_bank(traj), operator=operator,
                               pairings=pairings, threads=threads)
    for pairing in pairings:
        logger.info("pairing {}: worst slope {:.3f}, all fits converged: {}", pairing,
                    report.aggregate_slope(pairing), report.all_converged(pairing))
    return {"verify_order": report.values_frame(), "verify_slopes": report.slopes_frame()}


def compare_direct_table(scenario: Scenario, strict_compat: bool = False) -> dict[str, pd.DataFrame]:
    """Peak path of the direct KdV solve against the conservation-law (mode B) prediction."""
    if scenario.mode != "B":
        raise ConfigError(f"compare-direct checks the mode B prediction; scenario has mode {scenario.mode}")
    traj = build_trajectory(scenario, strict_compat)
    d = scenario.direct
    run = kdv_direct(traj.background, scenario.g0, scenario.phi0, d.eps, scenario.t_end, d.length, d.n_out,
                     d.cfl, check_domain=d.check_domain)
    table = run.to_frame()
    table["phi_model"] = traj.phi_at(run.times)
    table["g_model"] = traj.g_at(run.times)
    table["position_error"] = np.abs(table["x_peak"] - table["phi_model"])
    table["amplitude_error"] = np.abs(table["amplitude"] - table["g_model"]) / table["g_model"]
    width = d.eps / np.sqrt(table["g_model"] / 6.0)
    logger.info("direct vs model: max position error {:.3g} soliton widths, max amplitude error {:.3g}",
                float(np.max(table["position_error"] / width)), float(table["amplitude_error"].max()))
    return {"compare_direct": table}


def counterexample_table(scenario: Scenario) -> dict[str, pd.DataFrame]:
    spec = scenario.counterexample
    rows = [hopf_delta_exact(get_mollifier(name), spec.eps, spec.t0).as_row() for name in spec.kernels]
    return {"counterexample": pd.DataFrame(rows)}


def nonuniqueness_tables(scenario: Scenario) -> dict[str, pd.DataFrame]:
    """Behind-region fields of two amplitude histories sharing g(0)."""
    bf = build_background(scenario)
    if not bf.flux.is_burgers:
        raise ConfigError("the non-uniqueness construction is written for f(u) = u^2")
    spec = scenario.nonuniqueness
    histories = tuple(linear_history(scenario.g0, k) for k in spec.kappas)
    result = nonuniqueness_demo(bf, scenario.g0, scenario.phi0, histories, scenario.t_end,
                                build_e_init(scenario.e_init), max(scenario.n_steps, 4), spec.n_points)
    fields = pd.DataFrame({"x": result.x, "e_first": result.e_first, "e_second": result.e_second,
                           "difference": result.difference})
    summary = {"max_difference": result.max_difference, "wedge_left": result.wedge[0],
               "wedge_right": result.wedge[1], "wedge_width": result.wedge_width}
    summary.update(result.residuals)
    return {"nonuniqueness": fields,
            "nonuniqueness_summary": pd.DataFrame({"quantity": list(summary), "value": list(summary.values())})}


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _atomic(path: Path, write: Callable) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            write(handle)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_table(df: pd.DataFrame, path: Path, scenario_digest: str) -> Path:
    """CSV with a trailing '# scenario_digest=' line; written to a temp file and renamed."""

    def write(handle):
        df.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        handle.write(f"# scenario_digest={scenario_digest}\n")

    _atomic(path, write)
    logger.debug("wrote {} ({} rows)", path, len(df))
    return Path(path)


def write_plot(table: str, df: pd.DataFrame, path: Path) -> Path | None:
    """SVG figure for the tables that have a natural plot; None for the rest."""
    layouts = {
        "simulate": ("t", ["phi", "g", "e_at_phi"]),
        "profile": ("tau", ["omega", "omega_tau"]),
        "compare_direct": ("t", ["x_peak", "phi_model"]),
        "nonuniqueness": ("x", ["e_first", "e_second"]),
    }
    if table == "verify_slopes":
        fig, ax = plt.subplots(figsize=(6, 4))
        for pairing, group in df.groupby("pairing", sort=True):
            ax.plot(group["t"], group["slope"], "o", label=f"<{pairing}, psi>")
        ax.axhline(2.0, color="k", lw=0.8, ls="--")
        ax.set_xlabel("t")
        ax.set_ylabel("fitted slope")
    elif table in layouts:
        x, ys = layouts[table]
        fig, ax = plt.subplots(figsize=(6, 4))
        for y in ys:
            ax.plot(df[x], df[y], label=y)
        ax.set_xlabel(x)
    else:
        return None
    ax.legend()
    fig.tight_layout()
    _atomic(path, lambda handle: fig.savefig(handle, format="svg", metadata={"Date": None}))
    plt.close(fig)
    return Path(path)
