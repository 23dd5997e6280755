"""Order-of-magnitude error budget for the phase gate and its optimum.

Each row is a dimensionless scaling with prefactor one:

=======================  ==================================
decay-1                  gamma / delta
localization-fast        (omega_ca / omega)^2
localization-adiabatic   (omega_ca / omega)^2 / (tau w)^4
unitary-2                (omega / omega_c)^6
dipole-dipole            (g omega / (delta omega_c))^4
r-decay-2                (omega / omega_c)^2 gamma_r tau
=======================  ==================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .params import PlatformParams

ROWS = ("decay-1", "localization-fast", "localization-adiabatic", "unitary-2",
        "dipole-dipole", "r-decay-2")
LOC_FAST, LOC_ADIA = ROWS[1], ROWS[2]

PLATFORM_ROWS = {
    "ion": ("decay-1", "localization", "unitary-2", "dipole-dipole"),
    "solid-state": ("decay-1", LOC_FAST, "unitary-2", "dipole-dipole"),
    "lattice-atom": ("decay-1", "localization", "unitary-2", "dipole-dipole", "r-decay-2"),
}
REGIMES = ("fast", "adiabatic", "auto")
GRID_DELTA = 200
GRID_OMEGA0 = 100


@dataclass(frozen=True)
class BudgetReport:
    rows: dict[str, float]
    active: tuple[str, ...]
    total: float
    node_term: float
    regime: str = "fast"

    def active_rows(self) -> dict[str, float]:
        return {k: self.rows[k] for k in self.active}


@dataclass(frozen=True)
class OptimizationResult:
    delta: float
    omega0: float
    omega: float
    pe: float
    grid_evaluations: int
    closed_form_delta: float
    closed_form_pe: float
    report: BudgetReport = field(repr=False)


def _needed(p: PlatformParams, rows, regime: str) -> None:
    if "r-decay-2" in rows and p.gamma_r is None:
        raise ValueError("lattice-atom budget needs gamma_r")
    loc = [r for r in rows if r in (LOC_FAST, LOC_ADIA, "localization")]
    if loc and p.omega_ca is None:
        raise ValueError("localization rows need a0 (or mass and trap frequency)")
    if (LOC_ADIA in rows or "localization" in rows) and regime != "fast" and p.omega_trap is None:
        raise ValueError("trap frequency omega_trap is required for the adiabatic/auto regime")
    if "dipole-dipole" in rows and p.d is None:
        raise ValueError("dipole-dipole row needs the separation d")


def _rows(p: PlatformParams, delta, omega, omega0) -> dict[str, np.ndarray]:
    """Row values on broadcast arrays; rows without inputs are nan."""
    delta = np.asarray(delta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    omega0 = np.asarray(omega0, dtype=float)
    shape = np.broadcast(delta, omega, omega0).shape
    nan = np.full(shape, np.nan)
    zero = np.zeros(shape)
    oc = p.omega_c_at(omega0)
    oca = p.omega_ca_at(omega0)
    out = {"decay-1": p.gamma / delta + zero}
    if oca is None:
        out[LOC_FAST] = out[LOC_ADIA] = nan
    else:
        out[LOC_FAST] = (oca / omega) ** 2 + zero
        if p.omega_trap is None:
            out[LOC_ADIA] = nan
        else:
            out[LOC_ADIA] = out[LOC_FAST] / (p.tau * p.omega_trap) ** 4
    out["unitary-2"] = (omega / oc) ** 6 + zero
    g = p.g
    out["dipole-dipole"] = nan if g is None else (g * omega / (delta * oc)) ** 4 + zero
    out["r-decay-2"] = nan if p.gamma_r is None else (omega / oc) ** 2 * p.gamma_r * p.tau + zero
    return out


def _select(p: PlatformParams, vals: dict, regime: str, rows=None):
    """Return (active names per element, total) resolving the localization choice."""
    names = PLATFORM_ROWS[p.platform] if rows is None else tuple(rows)
    total = 0.0
    chosen = []
    for name in names:
        if name == "localization":
            if regime == "fast":
                v, pick = vals[LOC_FAST], LOC_FAST
            elif regime == "adiabatic":
                v, pick = vals[LOC_ADIA], LOC_ADIA
            else:
                fast = p.tau * p.omega_trap <= 1
                v = vals[LOC_FAST] if fast else np.minimum(vals[LOC_FAST], vals[LOC_ADIA])
                pick = LOC_FAST if fast else None
            chosen.append(pick)
        else:
            v = vals[name]
            chosen.append(name)
        total = total + v
    return names, chosen, total


def budget_rows(p: PlatformParams, regime: str = "auto", rows=None) -> BudgetReport:
    """Evaluate every row at ``p.omega`` and ``p.delta``.

    ``rows`` overrides the platform's active set (names from :data:`ROWS`,
    or ``"localization"`` for the regime-selected localization row).
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}")
    if p.omega is None or p.delta is None:
        raise ValueError("budget_rows needs omega and delta set")
    if p.omega <= 0:
        raise ValueError("invalid input: omega must be positive (localization rows diverge)")
    if p.delta <= 0:
        raise ValueError("delta must be positive")
    names = PLATFORM_ROWS[p.platform] if rows is None else tuple(rows)
    _needed(p, names, regime)
    vals = {k: float(v) for k, v in _rows(p, p.delta, p.omega, p.omega0).items()}
    active = []
    for name in names:
        if name != "localization":
            active.append(name)
        elif regime == "fast" or (regime == "auto" and p.tau * p.omega_trap <= 1):
            active.append(LOC_FAST)
        elif regime == "adiabatic":
            active.append(LOC_ADIA)
        else:
            active.append(min((LOC_FAST, LOC_ADIA), key=lambda k: vals[k]))
    total = 0.0
    for name in active:
        total += vals[name]
    node = (p.node_residual / p.omega) ** 2
    return BudgetReport(vals, tuple(active), total, node, regime)


def _total(p: PlatformParams, delta, omega0, rows=None):
    omega = np.sqrt(np.asarray(delta, dtype=float) / p.tau)
    vals = _rows(p, delta, omega, omega0)
    return _select(p, vals, "auto", rows)[2]


def total_error(p: PlatformParams, delta: float, omega0: float, rows=None) -> float:
    """Sum of active rows with omega eliminated through omega^2 = delta / tau."""
    if delta <= 0 or omega0 <= 0:
        raise ValueError("delta and omega0 must be positive")
    names = PLATFORM_ROWS[p.platform] if rows is None else tuple(rows)
    _needed(p, names, "auto")
    return float(_total(p, delta, omega0, rows))


def closed_form(p: PlatformParams, omega_c: float) -> tuple[float, float]:
    """Analytic optimum of gamma/delta + (omega/omega_c)^6: (delta*, P_e*)."""
    d = (p.gamma * p.tau**3 * omega_c**6) ** 0.25
    pe = (p.gamma / (p.tau * omega_c**2)) ** 0.75
    return d, pe


def optimize(p: PlatformParams, rows=None, n_delta: int = GRID_DELTA,
             n_omega0: int = GRID_OMEGA0) -> OptimizationResult:
    """Minimize the total error over (delta, omega0) with omega0 <= p.omega0.

    Logarithmic grid search followed by alternating bounded one-dimensional
    refinement in log coordinates.
    """
    if p.gamma <= 0:
        raise ValueError("empty feasible set: the detuning grid needs gamma > 0")
    names = PLATFORM_ROWS[p.platform] if rows is None else tuple(rows)
    _needed(p, names, "auto")
    ld = np.linspace(math.log(10 * p.gamma), math.log(1e8 * p.gamma), n_delta)
    lo = np.linspace(math.log(p.omega0 / 1e3), math.log(p.omega0), n_omega0)
    tot = _total(p, np.exp(ld)[:, None], np.exp(lo)[None, :], rows)
    tot = np.where(np.isfinite(tot), tot, np.inf)
    if not np.isfinite(tot).any():
        raise ValueError("empty feasible set: no finite total error on the grid")
    i, j = np.unravel_index(np.argmin(tot), tot.shape)
    grid_best = float(tot[i, j])

    def f(x, y):
        return float(_total(p, math.exp(x), math.exp(y), rows))

    bd = (ld[max(i - 1, 0)], ld[min(i + 1, n_delta - 1)])
    bo = (lo[max(j - 1, 0)], lo[min(j + 1, n_omega0 - 1)])
    x, y = ld[i], lo[j]
    for _ in range(50):
        x_old, y_old = x, y
        x = minimize_scalar(lambda t: f(t, y), bounds=bd, method="bounded",
                            options={"xatol": 1e-5}).x
        if bo[1] > bo[0]:
            y = minimize_scalar(lambda t: f(x, t), bounds=bo, method="bounded",
                                options={"xatol": 1e-5}).x
        if abs(x - x_old) < 1e-3 and abs(y - y_old) < 1e-3:
            break
    if f(x, y) > grid_best:
        x, y = ld[i], lo[j]
    delta, omega0 = math.exp(x), min(math.exp(y), p.omega0)

    def g(o):
        return float(_total(p, delta, o, rows))

    if g(p.omega0) <= g(omega0):
        omega0 = p.omega0  # snap onto the cap when it is at least as good
    omega = math.sqrt(delta / p.tau)
    pe = g(omega0)
    cd, cpe = closed_form(p, p.omega_c_at(omega0))
    rep = budget_rows(p.with_(omega=omega, delta=delta, omega0=omega0), "auto", rows)
    return OptimizationResult(delta, omega0, omega, pe, n_delta * n_omega0, cd, cpe, rep)


def dominant_balance(report: BudgetReport) -> tuple[str, str]:
    """The two largest active rows, largest first."""
    act = sorted(report.active, key=lambda k: report.rows[k], reverse=True)
    if len(act) < 2:
        raise ValueError("need at least two active rows")
    return act[0], act[1]
