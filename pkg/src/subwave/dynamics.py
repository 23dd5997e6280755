"""Time evolution, phase calibration and gate-error extraction."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from . import _dopri
from .fields import PulseShape, DriveConfig
from .qcore import TimeGrid, check_density_matrix, check_state, partial_trace, projector
from .schemes import LevelScheme, dark_bright_basis

MODES = ("unitary", "lindblad", "loss-only")
RTOL = 1e-9
ATOL = 1e-12
MAX_STEPS = 50_000_000
PHASE_TOL = 1e-6


class IntegrationError(RuntimeError):
    """Raised when adaptive stepping fails; ``time`` is where it stopped (s)."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class CalibrationError(RuntimeError):
    pass


class TruncationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GateSpec:
    target_phase: float = math.pi
    input_state: np.ndarray = field(
        default_factory=lambda: np.array([1, 1], dtype=np.complex128) / math.sqrt(2))

    def __post_init__(self):
        psi = np.asarray(self.input_state, dtype=np.complex128)
        if psi.shape != (2,):
            raise ValueError("input_state must be a qubit 2-vector")
        check_state(psi)
        object.__setattr__(self, "input_state", psi)


@dataclass(frozen=True)
class EvolutionProblem:
    """A scheme driven by one probe pulse over [0, pulse.duration].

    The control amplitude at each atom is part of ``scheme``; ``drive``
    optionally records the geometry it was derived from.
    """

    scheme: LevelScheme
    pulse: PulseShape
    mode: str = "unitary"
    grid: TimeGrid | None = None
    drive: DriveConfig | None = None
    atom_position: float = 0.0
    rtol: float = RTOL
    atol: float = ATOL

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.grid is None:
            object.__setattr__(self, "grid", TimeGrid(0.0, self.pulse.duration, 2))
        g = self.grid
        if not (math.isclose(g.t_start, 0.0, abs_tol=0.0) and math.isclose(g.t_end, self.pulse.duration)):
            raise ValueError("time grid must span exactly [0, tau] of the probe pulse")

    @property
    def tau(self) -> float:
        return self.pulse.duration

    def with_peak(self, peak: float) -> "EvolutionProblem":
        return replace(self, pulse=self.pulse.with_peak(peak))

    def with_(self, **kw) -> "EvolutionProblem":
        return replace(self, **kw)


@dataclass(frozen=True)
class GateErrorReport:
    error: float
    phase: float
    pop_bright: float
    pop_excited: float
    pop_r: float
    leaked_norm: float
    mode: str = "unitary"
    peak: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _generator(problem: EvolutionProblem) -> tuple[np.ndarray, np.ndarray, int]:
    sch = problem.scheme
    h0 = np.array(sch.h0, dtype=np.complex128)
    if problem.mode == "unitary":
        return h0, np.zeros((0, sch.dim, sch.dim), dtype=np.complex128), _dopri.SCHRODINGER
    h_eff = h0 - 0.5j * sch.loss_operator()
    if problem.mode == "loss-only":
        return h_eff, np.zeros((0, sch.dim, sch.dim), dtype=np.complex128), _dopri.SCHRODINGER
    jumps = np.array(sch.jumps, dtype=np.complex128).reshape(-1, sch.dim, sch.dim)
    return h_eff, jumps, _dopri.LINDBLAD


def _prepare(problem: EvolutionProblem, initial) -> np.ndarray:
    n = problem.scheme.dim
    x = np.asarray(initial, dtype=np.complex128)
    if problem.mode == "lindblad":
        if x.ndim == 1:
            x = projector(x)
        if x.shape != (n, n):
            raise ValueError(f"initial density matrix must be {n}x{n}")
        check_density_matrix(x)
        return x.reshape(-1).copy()
    if x.shape != (n,):
        raise ValueError(f"initial state must have dimension {n} in {problem.mode} mode")
    check_state(x)
    return x.copy()


def _run(problem: EvolutionProblem, initial, method: str = "dopri5"):
    """Integrate and return (times, states) on the problem grid."""
    y0 = _prepare(problem, initial)
    h_eff, jumps, kind = _generator(problem)
    knots, kvals = problem.pulse.knots()
    tau = problem.tau
    grid_s = problem.grid.times() / tau
    grid_s[-1] = 1.0
    stops = np.union1d(grid_s, knots)
    stops = stops[stops > 0]
    save = np.isin(stops, grid_s)
    n = problem.scheme.dim
    if method == "dopri5":
        out, status, s, _, _ = _dopri.integrate(
            y0, h_eff, np.array(problem.scheme.probe, dtype=np.complex128), knots,
            kvals.astype(np.float64), float(tau), kind, jumps, stops, save,
            problem.rtol, problem.atol, MAX_STEPS)
        if status != _dopri.OK:
            what = "step size underflow" if status == _dopri.STEP_UNDERFLOW else "step budget exhausted"
            raise IntegrationError(f"{what} at t = {s * tau:.6e} s", s * tau)
    elif method == "scipy":
        out = _run_scipy(y0, h_eff, problem.scheme.probe, knots, kvals, tau, kind, jumps,
                         grid_s, problem.rtol, problem.atol)
    else:
        raise ValueError(f"unknown method {method!r}")
    states = out if grid_s[0] > 0 else np.vstack([y0[None, :], out])
    if kind == _dopri.LINDBLAD:
        states = states.reshape(-1, n, n)
    return grid_s * tau, states


def _run_scipy(y0, h_eff, probe, knots, kvals, tau, kind, jumps, grid_s, rtol, atol):
    """Reference route through scipy's RK45, integrating knot to knot."""
    n = h_eff.shape[0]

    def rhs(s, y):
        a = np.interp(s, knots, kvals)
        A = -1j * tau * (h_eff + a * probe)
        if kind == _dopri.SCHRODINGER:
            return A @ y
        r = y.reshape(n, n)
        out = A @ r + r @ A.conj().T
        for L in jumps:
            out = out + tau * (L @ r @ L.conj().T)
        return out.reshape(-1)

    saved = []
    y = y0
    edges = np.union1d(knots, [0.0, 1.0])
    for a, b in zip(edges[:-1], edges[1:]):
        inside = grid_s[(grid_s > a) & (grid_s <= b)]
        t_eval = np.union1d(inside, [b])
        sol = solve_ivp(rhs, (a, b), y, method="RK45", rtol=rtol, atol=atol, t_eval=t_eval)
        if not sol.success:
            raise IntegrationError(sol.message, a * tau)
        keep = np.isin(t_eval, inside)
        saved.extend(sol.y.T[keep])
        y = sol.y[:, -1]
    return np.array(saved)


def evolve(problem: EvolutionProblem, initial, method: str = "dopri5") -> np.ndarray:
    """State at t = tau. Lindblad mode promotes a ket to a density matrix."""
    return _run(problem, initial, method)[1][-1]


def trajectory(problem: EvolutionProblem, initial, method: str = "dopri5"):
    """States on every point of ``problem.grid``; returns (times, states)."""
    return _run(problem, initial, method)


def _as_dm(state) -> np.ndarray:
    return projector(state) if state.ndim == 1 else state


def atom_state(scheme: LevelScheme, state, atom: int = 0) -> np.ndarray:
    """Reduced internal density matrix of one atom (unnormalized)."""
    return partial_trace(_as_dm(state), scheme.dims, atom)


def qubit_phase(scheme: LevelScheme, state, atom: int = 0) -> float:
    """arg(rho_10): phase of the |1> amplitude relative to |0>."""
    r = atom_state(scheme, state, atom)
    i0, i1 = (scheme.internal.index(q) for q in scheme.qubit)
    return float(np.angle(r[i1, i0]))


def _strip(problem: EvolutionProblem) -> EvolutionProblem:
    return replace(problem, mode="unitary", grid=None)


def stark_phase_estimate(problem: EvolutionProblem, peak: float) -> float:
    """Far-detuned phase peak^2 <f^2> tau / (4 delta) with f the unit envelope."""
    return peak**2 * problem.pulse.mean_square() * problem.tau / (4 * problem.scheme.delta)


def calibrate(problem: EvolutionProblem, spec: GateSpec = GateSpec(), atom: int = 0) -> float:
    """Peak probe Rabi frequency giving ``spec.target_phase`` on |1> of ``atom``.

    Decays are switched off. The measured phase is unwrapped against the
    far-detuned estimate, bracketed within [seed/10, 10 seed] and solved by
    Brent's bracketing method.
    """
    prob = _strip(problem)
    delta = prob.scheme.delta
    if not delta:
        raise CalibrationError("calibration needs a non-zero detuning")
    target = spec.target_phase * np.sign(delta)
    seed = math.sqrt(abs(target) * 4 * abs(delta) / (prob.tau * prob.pulse.mean_square()))
    psi0 = prob.scheme.embed([spec.input_state] * prob.scheme.atoms)

    def f(p):
        st = evolve(prob.with_peak(p), psi0)
        est = stark_phase_estimate(prob, p)
        meas = qubit_phase(prob.scheme, st, atom)
        return est + np.angle(np.exp(1j * (meas - est))) - target

    sgn = np.sign(target)
    lo = hi = seed
    f_lo = f_hi = f(seed)
    while sgn * f_lo > 0:
        lo /= 1.5
        if lo < seed / 10:
            raise CalibrationError("no bracket found within [seed/10, 10 seed]")
        f_lo = f(lo)
    while sgn * f_hi < 0:
        hi *= 1.5
        if hi > seed * 10:
            raise CalibrationError("no bracket found within [seed/10, 10 seed]")
        f_hi = f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if lo == hi:
        lo = hi / 1.5
    p = brentq(f, lo, hi, xtol=1e-14 * seed, rtol=1e-15, maxiter=200)
    if abs(f(p)) > PHASE_TOL:
        raise CalibrationError(f"phase residual {f(p):.3e} rad exceeds tolerance")
    return p


def _report(problem: EvolutionProblem, state, phases) -> GateErrorReport:
    sch = problem.scheme
    target = sch.embed([np.array([1, np.exp(1j * ph)]) / math.sqrt(2) for ph in phases])
    rho = _as_dm(state)
    norm = float(np.real(np.trace(rho)))
    fid = float(np.real(np.vdot(target, rho @ target)))
    if problem.mode == "loss-only":
        err = 1.0 - fid
    else:
        # trace-preserving modes: remove integrator norm drift
        err = 1.0 - fid / norm
    pe = sum(float(np.real(np.trace(sch.level_projector("e", a) @ rho))) for a in range(sch.atoms))
    pr = sum(float(np.real(np.trace(sch.level_projector("r", a) @ rho))) for a in range(sch.atoms))
    pb = 0.0
    oc = sch.controls[-1]
    a_sp = sch.atoms - 1
    if "r" in sch.internal and "1" in sch.internal and oc > 0:
        _, B, _, _ = dark_bright_basis(problem.pulse.knots()[1][-1], oc, sch.delta or 1.0)
        v = np.zeros(len(sch.internal), dtype=np.complex128)
        v[sch.internal.index("1")], v[sch.internal.index("r")] = B
        r1 = atom_state(sch, rho, a_sp)
        pb = float(np.real(np.vdot(v, r1 @ v)))
    return GateErrorReport(
        error=float(min(max(err, 0.0), 1.0)),
        phase=qubit_phase(sch, rho, 0),
        pop_bright=pb, pop_excited=pe, pop_r=pr,
        leaked_norm=1.0 - norm,
        mode=problem.mode,
        peak=problem.pulse.peak,
    )


def target_phases(scheme: LevelScheme, spec: GateSpec, role: str) -> list[float]:
    if role not in ("addressed", "spectator"):
        raise ValueError("role must be 'addressed' or 'spectator'")
    first = spec.target_phase if role == "addressed" else 0.0
    return [first] + [0.0] * (scheme.atoms - 1)


def gate_error(problem: EvolutionProblem, spec: GateSpec = GateSpec(), role: str = "addressed",
               method: str = "dopri5") -> GateErrorReport:
    """Overlap infidelity against (|0> + e^{i phi}|1>)/sqrt(2) per atom.

    For two-atom schemes ``role`` applies to atom 1; atom 2 is always a spectator.
    """
    sch = problem.scheme
    psi0 = sch.embed([spec.input_state] * sch.atoms)
    final = evolve(problem, psi0, method)
    return _report(problem, final, target_phases(sch, spec, role))


def motional_gate_error(problem: EvolutionProblem, spec: GateSpec = GateSpec(),
                        regime: str = "fast", role: str = "addressed",
                        check_truncation: bool = False, rebuild=None) -> GateErrorReport:
    """Gate error of a motional scheme; target carries the motional ground state.

    ``regime='adiabatic'`` recalibrates the peak on the motional problem
    itself, absorbing the motional Stark-shift change. With
    ``check_truncation`` the run is repeated with ``rebuild(n_fock + 4)``
    and a relative change above 1% raises :class:`TruncationError`.
    """
    if regime not in ("fast", "adiabatic"):
        raise ValueError("regime must be 'fast' or 'adiabatic'")
    if problem.scheme.n_fock < 2:
        raise ValueError("motional_gate_error needs a scheme with a motional mode")

    def one(prob):
        if regime == "adiabatic" and role == "addressed":
            prob = prob.with_peak(calibrate(prob, spec))
        return gate_error(prob, spec, role)

    rep = one(problem)
    if check_truncation:
        if rebuild is None:
            raise ValueError("check_truncation needs a rebuild(n_fock) callable")
        big = one(problem.with_(scheme=rebuild(problem.scheme.n_fock + 4)))
        if abs(big.error - rep.error) > 0.01 * max(big.error, 1e-300):
            raise TruncationError(
                f"gate error changes by more than 1% between n_fock = {problem.scheme.n_fock}"
                f" and {problem.scheme.n_fock + 4}")
    return rep


def interference_phase_slope(delta: float, omega_c: float, pulse: PulseShape) -> float:
    """d(alpha)/d(omega_c) where alpha is the bright-state phase over one ramp.

    alpha = integral over the rising ramp of (sqrt(delta^2 + Omega^2 + omega_c^2) - |delta|)/2.
    """
    tau = pulse.duration
    s, v = pulse.knots()
    s_peak = s[1]

    def integrand(x):
        om = np.interp(x, s, v)
        return omega_c / (2 * math.sqrt(delta**2 + om**2 + omega_c**2))

    return tau * quad(integrand, 0.0, s_peak, epsabs=0, epsrel=1e-10)[0]


def spectator_error(build, omega_c: float, pulse: PulseShape, delta: float,
                    average: int = 4, mode: str = "unitary",
                    spec: GateSpec = GateSpec()) -> tuple[float, list[float]]:
    """Spectator gate error averaged over one period of the kink interference.

    Non-adiabatic transfer out of the dark state happens at the slope
    discontinuities of the ramp; the amplitudes from successive kinks add
    with a relative phase alpha set by the bright-state shift, so a single
    run oscillates deeply with omega_c. ``average`` runs with omega_c
    offset so that alpha advances by 2 pi / average each are averaged.
    ``build(omega_c)`` must return the spectator scheme. ``average = 1``
    returns the single run.

    Returns (mean error, individual errors).
    """
    if average < 1:
        raise ValueError("average must be a positive integer")
    if average == 1:
        offsets = [0.0]
    else:
        step = 2 * math.pi / average / interference_phase_slope(delta, omega_c, pulse)
        offsets = [(j - (average - 1) / 2) * step for j in range(average)]
    errs = []
    for off in offsets:
        prob = EvolutionProblem(build(omega_c + off), pulse, mode)
        errs.append(gate_error(prob, spec, "spectator").error)
    return float(np.mean(errs)), errs


def spectator_ladder_check(omega_ca: float, omega_c: float, problem: EvolutionProblem,
                           ladder_build, average: int = 4,
                           spec: GateSpec = GateSpec()) -> float:
    """Relative change of the spectator error caused by the motional ladder.

    ``ladder_build(omega_c, omega_ca)`` returns the atom-2 motional scheme;
    ``problem`` supplies the calibrated pulse and mode.
    """
    if omega_ca == 0:
        return 0.0
    delta = problem.scheme.delta
    without, _ = spectator_error(lambda oc: ladder_build(oc, 0.0), omega_c, problem.pulse,
                                 delta, average, problem.mode, spec)
    with_, _ = spectator_error(lambda oc: ladder_build(oc, omega_ca), omega_c, problem.pulse,
                               delta, average, problem.mode, spec)
    return abs(with_ - without) / without
