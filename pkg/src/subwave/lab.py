"""Sweeps, power-law fits, analytic-versus-numeric comparison and case studies.

Dynamics quantities run at "desk scale": time is measured in units of the
pulse duration (tau = 1 s) and every rate is given as a multiple of 1/tau.
The gate model depends only on the products delta*tau, omega*tau, ..., so
desk-scale runs reproduce any physical parameter set with the same products.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import budget
from .dynamics import (EvolutionProblem, GateSpec, calibrate, gate_error, motional_gate_error,
                       spectator_error, spectator_ladder_check)
from .fields import RAMP, PulseShape
from .params import AMU, TWO_PI, PlatformParams
from .schemes import (MotionalLadder, TwoAtomCoupling, build_tripod, build_tripod_motional,
                      build_two_atom)

# desk-scale defaults, rates in units of 1/tau
SPECTATOR_DELTA_TAU = 4e4
DECAY_GAMMA_TAU = 1.0
MOTION_DELTA_TAU = 1e3
DD_DELTA_TAU = 4e4
DD_RATIO = 30.0

# sweep points shared by the acceptance runs and comparisons
SPECTATOR_RATIOS = tuple(np.geomspace(5.0, 30.0, 8).tolist())
DECAY_DELTA_TAUS = tuple(np.geomspace(300.0, 3000.0, 6).tolist())
FAST_CA_RATIOS = tuple(np.geomspace(0.003, 0.03, 5).tolist())
ADIABATIC_OMEGA_TAUS = tuple(np.geomspace(5.0, 50.0, 8).tolist())
DD_G_OVER_DELTA = tuple(np.geomspace(1.0, 10.0, 6).tolist())


@dataclass(frozen=True)
class SweepSpec:
    quantity: str
    axis: str
    points: tuple[float, ...]
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = tuple(float(x) for x in self.points)
        if not pts:
            raise ValueError("a sweep needs at least one point")
        if self.quantity not in QUANTITIES:
            raise ValueError(f"unknown quantity {self.quantity!r}; known: {sorted(QUANTITIES)}")
        object.__setattr__(self, "points", pts)

    def fit_ready(self) -> bool:
        """At least five points spanning a decade."""
        p = np.asarray(self.points)
        return p.size >= 5 and p.max() / p.min() >= 10 * (1 - 1e-12)


@dataclass(frozen=True)
class SweepTable:
    axis: str
    quantity: str
    x: np.ndarray
    y: np.ndarray
    errors: tuple[str, ...]

    def ok(self) -> np.ndarray:
        return np.array([not e for e in self.errors])

    def success_fraction(self) -> float:
        return float(np.mean(self.ok()))

    def sorted(self) -> "SweepTable":
        o = np.argsort(self.x, kind="stable")
        return SweepTable(self.axis, self.quantity, self.x[o], self.y[o],
                          tuple(self.errors[i] for i in o))


@dataclass(frozen=True)
class FitResult:
    exponent: float
    prefactor: float
    r_squared: float
    residual_max: float
    n_points: int = 0


def fit_power_law(table=None, x=None, y=None) -> FitResult:
    """Least-squares line through (log x, log y); the slope is the exponent.

    Accepts a :class:`SweepTable` (failed points dropped) or explicit x, y.
    ``residual_max`` is the largest absolute residual in natural-log units.
    """
    if table is not None:
        ok = table.ok()
        x, y = table.x[ok], table.y[ok]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 2:
        raise ValueError("need at least two (x, y) pairs of equal length")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("power-law fit needs strictly positive finite data")
    lx, ly = np.log(x), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - (slope * lx + icpt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(res**2)) / ss_tot)
    return FitResult(float(slope), float(math.exp(icpt)), r2, float(np.max(np.abs(res))), x.size)


# ---------------------------------------------------------------- desk-scale models

def desk_params(delta_tau: float, gamma_tau: float = 0.0, **kw) -> PlatformParams:
    """Parameters in units where tau = 1 s (rates are multiples of 1/tau)."""
    return PlatformParams("ion", gamma=gamma_tau, tau=1.0, lambda_p=1.0, lambda_c=1.0,
                          omega0=1.0, delta=delta_tau, **kw)


def ramp(peak: float = 1.0, kind: str = RAMP) -> PulseShape:
    return PulseShape(kind, 1.0, peak)


@lru_cache(maxsize=64)
def calibrated_peak(delta_tau: float, phase: float = math.pi) -> float:
    """Peak probe Rabi frequency for the addressed atom at the node (desk scale)."""
    p = desk_params(delta_tau)
    return calibrate(EvolutionProblem(build_tripod(p, control=0.0), ramp()), GateSpec(phase))


@lru_cache(maxsize=256)
def q_spectator_error(ratio: float, delta_tau: float = SPECTATOR_DELTA_TAU, average: int = 4,
                      pulse_kind: str = RAMP) -> float:
    """Spectator error at control/probe ratio ``ratio`` (interference-averaged)."""
    pk = calibrated_peak(delta_tau)
    p = desk_params(delta_tau)
    m, _ = spectator_error(lambda oc: build_tripod(p, control=oc), ratio * pk,
                           ramp(pk, pulse_kind), delta_tau, int(average))
    return m


@lru_cache(maxsize=256)
def q_addressed_decay_error(delta_tau: float, gamma_tau: float = DECAY_GAMMA_TAU) -> float:
    """Addressed-atom error in loss-only mode at the calibrated peak."""
    pk = calibrated_peak(delta_tau)
    p = desk_params(delta_tau, gamma_tau)
    prob = EvolutionProblem(build_tripod(p, control=0.0), ramp(pk), "loss-only")
    return gate_error(prob, GateSpec(), "addressed").error


def _motional(delta_tau, omega_tau, ca, n_fock):
    p = desk_params(delta_tau)
    return build_tripod_motional(p, MotionalLadder(int(n_fock), omega_tau, ca), control=0.0)


@lru_cache(maxsize=256)
def q_localization_fast_error(ca_ratio: float, delta_tau: float = MOTION_DELTA_TAU,
                              omega_tau: float = 0.5, n_fock: int = 8) -> float:
    """Addressed-atom error with the node gradient coupling, no recalibration."""
    pk = calibrated_peak(delta_tau)
    prob = EvolutionProblem(_motional(delta_tau, omega_tau, ca_ratio * pk, n_fock), ramp(pk))
    return motional_gate_error(prob, GateSpec(), "fast").error


@lru_cache(maxsize=256)
def q_localization_adiabatic_error(omega_tau: float, ca_ratio: float = 0.03,
                                   delta_tau: float = MOTION_DELTA_TAU, n_fock: int = 8) -> float:
    """Addressed-atom error with the peak recalibrated on the motional problem."""
    pk = calibrated_peak(delta_tau)
    prob = EvolutionProblem(_motional(delta_tau, omega_tau, ca_ratio * pk, n_fock), ramp(pk))
    return motional_gate_error(prob, GateSpec(), "adiabatic").error


def two_atom_problem(g_over_delta: float, delta_tau: float = DD_DELTA_TAU,
                     ratio: float = DD_RATIO, mode: str = "lindblad") -> EvolutionProblem:
    pk = calibrated_peak(delta_tau)
    p = desk_params(delta_tau)
    cpl = TwoAtomCoupling.from_g(g_over_delta * delta_tau)
    sch = build_two_atom(p, cpl, controls=(0.0, ratio * pk))
    return EvolutionProblem(sch, ramp(pk), mode)


@lru_cache(maxsize=16)
def _dd_baseline(delta_tau, ratio, mode):
    return gate_error(two_atom_problem(0.0, delta_tau, ratio, mode)).error


@lru_cache(maxsize=256)
def q_dipole_dipole_error(g_over_delta: float, delta_tau: float = DD_DELTA_TAU,
                          ratio: float = DD_RATIO, mode: str = "lindblad",
                          excess: bool = True) -> float:
    """Two-atom gate error; with ``excess`` the g = 0 error is subtracted."""
    e = gate_error(two_atom_problem(g_over_delta, delta_tau, ratio, mode)).error
    if excess:
        e -= _dd_baseline(delta_tau, ratio, mode)
    return e


@lru_cache(maxsize=256)
def q_ladder_change(ca_fraction: float, ratio: float = 10.0,
                    delta_tau: float = SPECTATOR_DELTA_TAU, omega_tau: float = 0.5,
                    n_fock: int = 8, average: int = 4) -> float:
    """Relative spectator-error change caused by the motional ladder."""
    pk = calibrated_peak(delta_tau)
    p = desk_params(delta_tau)
    oc = ratio * pk
    prob = EvolutionProblem(build_tripod(p, control=0.0), ramp(pk))

    def lb(c, ca):
        return build_tripod_motional(p, MotionalLadder(int(n_fock), omega_tau, ca), control=c)

    return spectator_ladder_check(ca_fraction * oc, oc, prob, lb, int(average))


# ---------------------------------------------------------------- analytic quantities

def _preset_params(fixed) -> PlatformParams:
    name = fixed.get("preset", "ca40-ion")
    over = {k: v for k, v in fixed.items() if k in PlatformParams.__dataclass_fields__}
    return preset(name, **over).params


def q_budget_total(x: float, axis: str = "delta", **fixed) -> float:
    p = _preset_params(fixed)
    rows = fixed.get("rows")
    delta = fixed.get("delta", p.delta)
    omega0 = fixed.get("omega0", p.omega0)
    if axis == "delta":
        delta = x
    elif axis == "omega0":
        omega0 = x
    else:
        p = p.with_(**{axis: x})
    return budget.total_error(p, delta, omega0, rows)


def q_budget_row(x: float, row: str, axis: str, **fixed) -> float:
    """One budget row with ``axis`` varied and the rest taken from the preset."""
    p = _preset_params(fixed)
    p = p.with_(**{axis: x})
    return budget.budget_rows(p, fixed.get("regime", "auto")).rows[row]


def q_optimum_pe(x: float, axis: str = "d", **fixed) -> float:
    p = _preset_params(fixed)
    p = p.with_(**{axis: x})
    return budget.optimize(p, fixed.get("rows")).pe


QUANTITIES = {
    "spectator-error": (q_spectator_error, "ratio"),
    "addressed-decay-error": (q_addressed_decay_error, "delta_tau"),
    "localization-fast-error": (q_localization_fast_error, "ca_ratio"),
    "localization-adiabatic-error": (q_localization_adiabatic_error, "omega_tau"),
    "dipole-dipole-error": (q_dipole_dipole_error, "g_over_delta"),
    "ladder-change": (q_ladder_change, "ca_fraction"),
    "budget-total": (None, None),
    "budget-row": (None, None),
    "optimum-pe": (None, None),
}


def evaluate(quantity: str, axis: str, x: float, fixed: dict) -> float:
    """Single evaluation of a named quantity at axis value x."""
    fn, native = QUANTITIES[quantity]
    fixed = dict(fixed)
    if quantity == "budget-total":
        return q_budget_total(x, axis, **fixed)
    if quantity == "budget-row":
        return q_budget_row(x, fixed.pop("row"), axis, **fixed)
    if quantity == "optimum-pe":
        return q_optimum_pe(x, axis, **fixed)
    if axis == native:
        return float(fn(x, **fixed))
    # other sweepable keyword of the same model
    first = fixed.pop(native, None)
    if first is None:
        raise ValueError(f"{quantity} needs '{native}' in fixed when sweeping {axis!r}")
    return float(fn(first, **{axis: x}, **fixed))


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepTable:
    """Evaluate every point; failures are recorded per point and do not stop the sweep."""

    def one(x):
        try:
            return evaluate(spec.quantity, spec.axis, x, spec.fixed), ""
        except Exception as exc:  # per-point failure is data, not a crash
            return math.nan, f"{type(exc).__name__}: {exc}"

    if workers > 1 and len(spec.points) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            res = list(pool.map(one, spec.points))
    else:
        res = [one(x) for x in spec.points]
    return SweepTable(spec.axis, spec.quantity, np.array(spec.points),
                      np.array([r[0] for r in res]), tuple(r[1] for r in res))


# ---------------------------------------------------------------- case studies

@dataclass(frozen=True)
class CaseStudyPreset:
    name: str
    params: PlatformParams
    targets: dict = field(default_factory=dict)


def _ca40(**kw) -> CaseStudyPreset:
    p = PlatformParams(
        "ion", gamma=TWO_PI * 11e6, tau=1e-6, lambda_p=397e-9, lambda_c=866e-9,
        omega0=TWO_PI * 1e9, omega_trap=TWO_PI * 10e6, mass=40 * AMU, d=1e-6)
    return CaseStudyPreset("ca40-ion", p.with_(**kw), {
        "pe": 1e-4, "pe_range": [3e-5, 3e-4], "delta_over_2pi_hz": 200e9,
        "omega_over_2pi_hz": 200e6, "balance": ["decay-1", "unitary-2"]})


def _nv(**kw) -> CaseStudyPreset:
    p = PlatformParams(
        "solid-state", gamma=TWO_PI * 5e6, tau=1e-6, lambda_p=700e-9, lambda_c=700e-9,
        omega0=TWO_PI * 1e9, a0_given=0.5e-9, d=50e-9)
    return CaseStudyPreset("nv-solid", p.with_(**kw), {
        "pe_at_20nm": 5e-3, "pe_at_100nm": 5e-4, "d_range_m": [20e-9, 100e-9],
        "balance": ["localization-fast", "unitary-2"]})


def _rb87(**kw) -> CaseStudyPreset:
    p = PlatformParams(
        "lattice-atom", gamma=TWO_PI * 5.746e6 / 2, gamma_r=1 / (2 * 90e-9), tau=10e-9,
        lambda_p=795e-9, lambda_c=1476e-9, omega0=TWO_PI * 1e9, omega_trap=TWO_PI * 50e3,
        mass=87 * AMU, d=532e-9, vortex_charge=2)
    return CaseStudyPreset("rb87-lattice", p.with_(**kw), {
        "pe": 1e-2, "balance": ["localization-fast", "r-decay-2"]})


PRESETS = {"ca40-ion": _ca40, "nv-solid": _nv, "rb87-lattice": _rb87}


def preset(name: str, **overrides) -> CaseStudyPreset:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name](**overrides)


def case_study(name: str, **overrides) -> dict:
    """Optimize the budget of a preset and report the optimum next to its targets."""
    pre = preset(name, **overrides)
    res = budget.optimize(pre.params)
    bal = budget.dominant_balance(res.report)
    out = {
        "preset": name,
        "pe": res.pe,
        "delta_over_2pi_hz": res.delta / TWO_PI,
        "omega_over_2pi_hz": res.omega / TWO_PI,
        "omega0_over_2pi_hz": res.omega0 / TWO_PI,
        "omega_c_over_2pi_hz": pre.params.omega_c_at(res.omega0) / TWO_PI,
        "balance": list(bal),
        "rows": {k: res.report.rows[k] for k in budget.ROWS},
        "active": list(res.report.active),
        "closed_form_pe": res.closed_form_pe,
        "closed_form_delta_over_2pi_hz": res.closed_form_delta / TWO_PI,
        "targets": pre.targets,
    }
    if name == "nv-solid":
        lo, hi = pre.targets["d_range_m"]
        out["pe_at_20nm"] = budget.optimize(pre.params.with_(d=lo)).pe
        out["pe_at_100nm"] = budget.optimize(pre.params.with_(d=hi)).pe
    return out


def confirm_spectator(ratio: float, delta_tau: float = SPECTATOR_DELTA_TAU) -> dict:
    """Desk-scale dynamics check of the spectator row at a given control/probe ratio."""
    e = q_spectator_error(ratio, delta_tau)
    return {"omega_c_over_omega": ratio, "numeric": e, "analytic": ratio ** -6}


def check_case_study(report: dict) -> list[str]:
    """Embedded-target checks; returns the list of misses."""
    t = report["targets"]
    miss = []
    name = report["preset"]
    if name == "ca40-ion":
        lo, hi = t["pe_range"]
        if not lo <= report["pe"] <= hi:
            miss.append(f"P_e {report['pe']:.3e} outside [{lo:.0e}, {hi:.0e}]")
        r = report["delta_over_2pi_hz"] / t["delta_over_2pi_hz"]
        if not 1 / 3 <= r <= 3:
            miss.append(f"best delta off target by factor {r:.3g}")
    elif name == "nv-solid":
        for key in ("pe_at_20nm", "pe_at_100nm"):
            r = report[key] / t[key]
            if not 0.5 <= r <= 2:
                miss.append(f"{key} off target by factor {r:.3g}")
    elif name == "rb87-lattice":
        r = report["pe"] / t["pe"]
        if not 1 / 3 <= r <= 3:
            miss.append(f"P_e off target by factor {r:.3g}")
    if set(report["balance"]) != set(t["balance"]):
        miss.append(f"balance {report['balance']} differs from {t['balance']}")
    return miss


# ---------------------------------------------------------------- comparisons

def compare_analytic_numeric(pre: CaseStudyPreset, row: str, axis: str, points=None,
                             workers: int = 1):
    """Fit the analytic row and the matching desk-scale dynamics along one axis.

    Supported pairs: (unitary-2, omega_c), (decay-1, delta), (dipole-dipole, d)
    at fixed fields, (localization-fast, omega_ca). Returns (analytic fit,
    numeric fit, gap).
    """
    p = pre.params
    omega = p.omega if p.omega is not None else 2 * math.pi * 200e6
    delta = p.delta if p.delta is not None else omega**2 * p.tau
    base = p.with_(omega=omega, delta=delta)
    key = (row, axis)
    if key == ("unitary-2", "omega_c"):
        ratios = np.asarray(SPECTATOR_RATIOS if points is None else points)
        # keep omega_c = omega0 under the cap
        om = p.omega0 / ratios.max()
        xa = ratios * om
        ya = [budget.budget_rows(base.with_(omega=om, omega0=x), "fast").rows[row] for x in xa]
        xa = [base.omega_c_at(x) for x in xa]
        tab = run_sweep(SweepSpec("spectator-error", "ratio", tuple(ratios)), workers)
        fn = fit_power_law(x=tab.x, y=tab.y)
    elif key == ("decay-1", "delta"):
        dt = np.asarray(DECAY_DELTA_TAUS if points is None else points)
        xa = dt / p.tau
        ya = [budget.budget_rows(base.with_(delta=x), "fast").rows[row] for x in xa]
        tab = run_sweep(SweepSpec("addressed-decay-error", "delta_tau", tuple(dt)), workers)
        fn = fit_power_law(x=tab.x, y=tab.y)
    elif key == ("dipole-dipole", "d"):
        # desk run: g/delta = 10 (d_ref/d)^3 with d_ref the preset separation
        gs = np.asarray(DD_G_OVER_DELTA if points is None else points)
        rel = (gs.max() / gs) ** (1 / 3)
        xa = rel * p.d
        # fields held fixed: rescale omega0 where the control depends on d
        oc = base.omega_c
        ya = []
        for x in xa:
            q = base.with_(d=x)
            q = q.with_(omega0=q.omega0 * oc / q.omega_c)
            ya.append(budget.budget_rows(q, "fast").rows[row])
        tab = run_sweep(SweepSpec("dipole-dipole-error", "g_over_delta", tuple(gs)), workers)
        fn = fit_power_law(x=rel[tab.ok()], y=tab.y[tab.ok()])
    elif key == ("localization-fast", "omega_ca"):
        cr = np.asarray(FAST_CA_RATIOS if points is None else points)
        xa = cr * omega
        ya = [budget.budget_rows(base.with_(omega_ca_given=x), "fast").rows[row] for x in xa]
        tab = run_sweep(SweepSpec("localization-fast-error", "ca_ratio", tuple(cr)), workers)
        fn = fit_power_law(x=tab.x, y=tab.y)
    else:
        raise ValueError(f"no desk-scale comparison for row {row!r} along {axis!r}")
    fa = fit_power_law(x=xa, y=np.asarray(ya, dtype=float))
    return fa, fn, abs(fa.exponent - fn.exponent)
