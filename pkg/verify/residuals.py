"""Weak residual pairings of the smooth ansatz and convergence-order fits in eps."""

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger

from dynamics.systems import Trajectory
from utils.fluxes import FluxModel
from utils.quadrature import integrate_adaptive
from verify.ansatz import SmoothAnsatz

Operator = Literal["hopf", "kdv"]
Pairing = Literal["L", "uL"]
EPS_SWEEP = (0.2, 0.1, 0.05, 0.025, 0.0125)
FIT_RESIDUAL_MAX = 0.1
VALUE_FLOOR = 1e-12
_CORE_PANELS = 8


@dataclass(frozen=True)
class TestFunction:
    """psi(x) = exp(-1/(1 - s^2)), s = (x - center)/width, zero for |s| >= 1."""

    __test__ = False

    center: float
    width: float

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.width, self.center + self.width

    @property
    def sup_norm(self) -> float:
        return float(np.exp(-1.0))

    def derivatives(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(psi, psi', psi'', psi''') with psi = exp(h(s))."""
        s = (np.asarray(x, dtype=float) - self.center) / self.width
        inside = np.abs(s) < 1.0
        q = np.where(inside, 1.0 - s * s, 1.0)
        psi = np.where(inside, np.exp(-1.0 / q), 0.0)
        h1 = -2.0 * s / q**2
        h2 = -(2.0 + 6.0 * s * s) / q**3
        h3 = -24.0 * s * (1.0 + s * s) / q**4
        w = self.width
        return (
            psi,
            h1 * psi / w,
            (h2 + h1**2) * psi / w**2,
            (h3 + 3.0 * h1 * h2 + h1**3) * psi / w**3,
        )

    def __call__(self, x):
        return self.derivatives(x)[0]


@dataclass(frozen=True)
class TestFunctionBank:
    __test__ = False

    functions: tuple[TestFunction, ...]

    def __iter__(self):
        return iter(self.functions)

    def __len__(self) -> int:
        return len(self.functions)

    def covers(self, points: Sequence[float]) -> bool:
        return all(any(f.support[0] < p < f.support[1] for f in self.functions) for p in points)


def build_bank(traj: Trajectory) -> TestFunctionBank:
    """8 bumps of widths 0.5, 1, 2 around phi(T/2) and in both half-regions."""
    mid = float(traj.phi_at(0.5 * traj.t_end))
    layout = [(0.0, 0.5), (0.0, 1.0), (0.0, 2.0), (0.25, 0.5), (-1.5, 1.0), (1.5, 1.0), (-3.0, 2.0), (3.0, 2.0)]
    return TestFunctionBank(tuple(TestFunction(mid + dx, w) for dx, w in layout))


def _breakpoints(ansatz: SmoothAnsatz, testfn: TestFunction, t: float) -> np.ndarray:
    lo, hi = testfn.support
    core_lo, core_hi = ansatz.core_window(t)
    points = [lo, hi]
    core = np.linspace(core_lo, core_hi, _CORE_PANELS + 1)
    points += [p for p in core if lo < p < hi]
    return np.unique(points)


def residual_pairing(
    ansatz: SmoothAnsatz,
    operator: Operator,
    testfn: TestFunction,
    eps: float,
    t: float,
    pairing: Pairing = "L",
    flux: FluxModel | None = None,
) -> float:
    """<L[u*], psi> or <u* L[u*], psi>, all x-derivatives moved onto psi.

    L[u] = u_t + (f(u))_x (+ eps^2 u_xxx for 'kdv'); u L[u] = (u^2)_t + (f~(u))_x
    + eps^2 [(u^2)_xx - 3 u_x^2]_x.
    """
    if ansatz.eps != eps:
        ansatz = ansatz.with_eps(eps)
    f = flux or ansatz.traj.flux
    dispersion = eps**2 if operator == "kdv" else 0.0

    def integrand(x):
        psi, d1, _, d3 = testfn.derivatives(x)
        u, ux, ut = ansatz.evaluate(x, t)
        if pairing == "L":
            return ut * psi - f(u) * d1 - dispersion * u * d3
        return 2.0 * u * ut * psi - f.tilde(u) * d1 - dispersion * (u * u * d3 - 3.0 * ux * ux * d1)

    value, _ = integrate_adaptive(integrand, _breakpoints(ansatz, testfn, t), rel_tol=1e-12)
    return float(value)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    fit_residual: float
    converged: bool
    excluded_eps: float | None
    at_floor: bool


def fit_order(eps: Sequence[float], values: Sequence[float]) -> SlopeFit:
    """Least-squares slope of log|value| against log eps.

    The largest eps is dropped when it sits more than 3 sigma off the line through the
    others. Values below the floor are not fitted.
    """
    eps = np.asarray(eps, dtype=float)
    mags = np.abs(np.asarray(values, dtype=float))
    keep = mags >= VALUE_FLOOR
    if keep.sum() < 4:
        return SlopeFit(float("nan"), 0.0, keep.sum() == 0, None, True)
    x, y = np.log(eps[keep]), np.log(mags[keep])
    excluded = None
    order = np.argsort(x)
    x, y = x[order], y[order]
    if x.size >= 5:
        coef = np.polyfit(x[:-1], y[:-1], 1)
        resid = y[:-1] - np.polyval(coef, x[:-1])
        sigma = np.sqrt(np.sum(resid**2) / max(resid.size - 2, 1))
        off = abs(y[-1] - np.polyval(coef, x[-1]))
        if off > 3.0 * sigma and off > 1e-12:
            excluded = float(np.exp(x[-1]))
            logger.warning("eps = {:.4g} is {:.2f} off the fitted line; excluded from the slope fit", excluded, off)
            x, y = x[:-1], y[:-1]
    coef = np.polyfit(x, y, 1)
    rms = float(np.sqrt(np.mean((y - np.polyval(coef, x)) ** 2)))
    return SlopeFit(float(coef[0]), rms, rms <= FIT_RESIDUAL_MAX and x.size >= 4, excluded, False)


@dataclass
class ResidualReport:
    rows: list[dict] = field(default_factory=list)
    slopes: list[dict] = field(default_factory=list)

    def values_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["pairing", "testfn", "center", "width", "t", "eps", "value"])

    def slopes_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            self.slopes,
            columns=["pairing", "testfn", "t", "slope", "fit_residual", "converged", "excluded_eps", "at_floor"],
        )

    def aggregate_slope(self, pairing: Pairing) -> float:
        """Worst fitted slope over test functions and times for one pairing."""
        fitted = [s["slope"] for s in self.slopes if s["pairing"] == pairing and not s["at_floor"]]
        return float(min(fitted)) if fitted else float("inf")

    def all_converged(self, pairing: Pairing) -> bool:
        return all(s["converged"] for s in self.slopes if s["pairing"] == pairing)


def sample_times(traj: Trajectory) -> tuple[float, ...]:
    T = traj.t_end
    return (0.0, 0.25 * T, 0.5 * T, 0.75 * T, T)


def two_pairing_check(
    ansatz: SmoothAnsatz,
    flux: FluxModel | None,
    eps_list: Sequence[float],
    bank: TestFunctionBank,
    times: Sequence[float] | None = None,
    operator: Operator = "kdv",
    pairings: Sequence[Pairing] = ("L", "uL"),
    threads: int = 1,
) -> ResidualReport:
    """Both pairings for every bank member, eps and sample time, with one slope fit per (pairing, psi, t)."""
    if len(eps_list) < 4:
        raise ValueError(f"slope fits need at least 4 eps values, got {len(eps_list)}")
    times = tuple(times) if times is not None else sample_times(ansatz.traj)
    jobs = [
        (pairing, k, fn, t, eps)
        for pairing in pairings
        for k, fn in enumerate(bank)
        for t in times
        for eps in eps_list
    ]
    values = Parallel(n_jobs=threads, prefer="threads")(
        delayed(residual_pairing)(ansatz.with_eps(eps), operator, fn, eps, t, pairing, flux)
        for pairing, k, fn, t, eps in jobs
    )
    report = ResidualReport()
    for (pairing, k, fn, t, eps), value in zip(jobs, values):
        report.rows.append({"pairing": pairing, "testfn": k, "center": fn.center, "width": fn.width,
                            "t": t, "eps": eps, "value": value})

    for pairing in pairings:
        for k, fn in enumerate(bank):
            for t in times:
                series = [(r["eps"], r["value"]) for r in report.rows
                          if r["pairing"] == pairing and r["testfn"] == k and r["t"] == t]
                fit = fit_order([e for e, _ in series], [v for _, v in series])
                report.slopes.append({
                    "pairing": pairing, "testfn": k, "t": t, "slope": fit.slope, "fit_residual": fit.fit_residual,
                    "converged": fit.converged, "excluded_eps": fit.excluded_eps, "at_floor": fit.at_floor,
                })
    logger.info("residual sweep: {} pairings, worst slopes {}", len(report.rows),
                {p: round(report.aggregate_slope(p), 3) for p in pairings})
    return report
