"""Command-line front end: ``subwave {simulate,sweep,fit,case-study}``.

Configs are JSON objects whose rate keys carry their unit in the name:
``*_over_2pi_hz`` (cyclic frequency, multiplied by 2 pi internally) or
``*_rad_per_s``. Exit codes: 0 success, 2 config error, 3 numerical
failure, 4 target miss under ``--check``.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (CalibrationError, EvolutionProblem, GateSpec, IntegrationError, MODES,
                       calibrate, gate_error, trajectory)
from .fields import CONSTANT, RAMP, PulseShape
from .lab import (SweepSpec, QUANTITIES, PRESETS, case_study, check_case_study,
                  confirm_spectator, fit_power_law, run_sweep)
from .params import OMEGA0_MAX, TWO_PI, PlatformParams
from .qcore import TimeGrid
from .schemes import (MotionalLadder, TwoAtomCoupling, build_lambda, build_tripod,
                      build_tripod_motional, build_two_atom)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_MISS = 0, 2, 3, 4
SCHEMES = ("lambda", "tripod", "tripod-motional", "two-atom")
RATES = ("delta", "gamma", "gamma_r", "omega0", "omega_peak", "omega_trap", "omega_ca", "g")
PLAIN = {"scheme", "role", "tau_seconds", "pulse", "mode", "branching", "control_ratio",
         "target_phase_rad", "n_fock", "pol_factors", "save_points", "rtol", "atol"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunManifest:
    tool_version: str
    config_digest: str
    timestamp_utc: str
    rtol: float
    atol: float
    workers: int


def digest(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode()).hexdigest()


def manifest(cfg: dict, rtol: float, atol: float, workers: int) -> RunManifest:
    now = _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return RunManifest(__version__, digest(cfg), now, rtol, atol, workers)


def load_config(path: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return cfg


def _rate(cfg: dict, name: str, default=None, required=False):
    hz, rad = f"{name}_over_2pi_hz", f"{name}_rad_per_s"
    if hz in cfg and rad in cfg:
        raise ConfigError(f"field '{hz}': give either '{hz}' or '{rad}', not both")
    for key, scale in ((hz, TWO_PI), (rad, 1.0)):
        if key in cfg:
            v = cfg[key]
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ConfigError(f"field '{key}': expected a finite number, got {v!r}")
            return float(v) * scale
    if required:
        raise ConfigError(f"field '{hz}' (or '{rad}') is required")
    return default


def _num(cfg, key, default=None, required=False, positive=False):
    if key not in cfg:
        if required:
            raise ConfigError(f"field '{key}' is required")
        return default
    v = cfg[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ConfigError(f"field '{key}': expected a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"field '{key}': must be positive")
    return v


def _check_keys(cfg: dict):
    allowed = set(PLAIN)
    for r in RATES:
        allowed |= {f"{r}_over_2pi_hz", f"{r}_rad_per_s"}
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown field(s) {unknown}; rate keys need a unit suffix "
                          "'_over_2pi_hz' or '_rad_per_s'")


def build_simulation(cfg: dict, mode_override: str | None = None, rtol_override=None):
    """Translate a simulate config into (problem, spec, role)."""
    _check_keys(cfg)
    scheme = cfg.get("scheme")
    if scheme not in SCHEMES:
        raise ConfigError(f"field 'scheme': must be one of {list(SCHEMES)}, got {scheme!r}")
    role = cfg.get("role", "addressed")
    if role not in ("addressed", "spectator"):
        raise ConfigError("field 'role': must be 'addressed' or 'spectator'")
    mode = mode_override or cfg.get("mode", "unitary")
    if mode not in MODES:
        raise ConfigError(f"field 'mode': must be one of {list(MODES)}")
    pulse_kind = cfg.get("pulse", RAMP)
    if pulse_kind not in (RAMP, CONSTANT):
        raise ConfigError(f"field 'pulse': must be '{RAMP}' or '{CONSTANT}'")
    tau = _num(cfg, "tau_seconds", required=True, positive=True)
    delta = _rate(cfg, "delta", required=True)
    if delta == 0:
        raise ConfigError("field 'delta_over_2pi_hz': detuning must be non-zero")
    gamma = _rate(cfg, "gamma", 0.0)
    omega0 = _rate(cfg, "omega0", OMEGA0_MAX)
    if omega0 > OMEGA0_MAX * (1 + 1e-12):
        raise ConfigError(f"field 'omega0_over_2pi_hz': {omega0 / TWO_PI:.4g} Hz exceeds "
                          "the 1 GHz cap on the control Rabi frequency (omega0/2pi <= 1 GHz)")
    if gamma < 0:
        raise ConfigError("field 'gamma_over_2pi_hz': must be non-negative")
    try:
        p = PlatformParams("ion", gamma=gamma, tau=tau, lambda_p=1.0, lambda_c=1.0, omega0=omega0,
                           delta=delta, gamma_r=_rate(cfg, "gamma_r"),
                           branching=_num(cfg, "branching", 0.5))
    except ValueError as exc:
        raise ConfigError(f"platform parameters: {exc}") from None
    phase = _num(cfg, "target_phase_rad", math.pi)
    spec = GateSpec(phase)
    pulse = PulseShape(pulse_kind, tau, 1.0)
    # the peak is calibrated on the addressed atom at the node unless given
    peak = _rate(cfg, "omega_peak")
    rtol = rtol_override or _num(cfg, "rtol", 1e-9, positive=True)
    atol = _num(cfg, "atol", 1e-12, positive=True)
    if peak is None:
        if scheme == "lambda":
            raise ConfigError("field 'omega_peak_over_2pi_hz' is required for the lambda scheme")
        node = EvolutionProblem(build_tripod(p, control=0.0), pulse, rtol=rtol, atol=atol)
        peak = calibrate(node, spec)
    ratio = _num(cfg, "control_ratio", None, positive=True)
    oc_spec = ratio * peak if ratio is not None else omega0
    control = oc_spec if role == "spectator" else 0.0
    if scheme == "lambda":
        sch = build_lambda(p, control=oc_spec)
    elif scheme == "tripod":
        sch = build_tripod(p, control=control)
    elif scheme == "tripod-motional":
        try:
            ladder = MotionalLadder(int(_num(cfg, "n_fock", 8)),
                                    _rate(cfg, "omega_trap", required=True),
                                    _rate(cfg, "omega_ca", 0.0))
        except ValueError as exc:
            raise ConfigError(f"motional ladder: {exc}") from None
        sch = build_tripod_motional(p, ladder, control=control)
    else:
        pol = cfg.get("pol_factors", [1.0, 1.0])
        if not (isinstance(pol, list) and len(pol) == 2):
            raise ConfigError("field 'pol_factors': expected a list of two numbers")
        cpl = TwoAtomCoupling.from_g(_rate(cfg, "g", 0.0), tuple(pol))
        sch = build_two_atom(p, cpl, controls=(0.0, oc_spec))
    n_save = int(_num(cfg, "save_points", 201))
    if n_save < 2:
        raise ConfigError("field 'save_points': must be at least 2")
    prob = EvolutionProblem(sch, pulse.with_peak(peak), mode, TimeGrid(0.0, tau, n_save),
                            rtol=rtol, atol=atol)
    return prob, spec, role


def _write_json(path: Path, obj: dict):
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _fmt(v: float) -> str:
    return f"{v:.14e}"


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    path.write_text(buf.getvalue())


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    prob, spec, role = build_simulation(cfg, args.mode, args.tol_rel)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sch = prob.scheme
    psi0 = sch.embed([spec.input_state] * sch.atoms)
    times, states = trajectory(prob, psi0)
    report = gate_error(prob, spec, role)
    man = manifest(cfg, prob.rtol, prob.atol, args.workers)
    result = {
        "manifest": asdict(man),
        "report": report.to_dict(),
        "error": report.error,
        "peak_over_2pi_hz": prob.pulse.peak / TWO_PI,
        "labels": list(sch.labels),
        "config": cfg,
    }
    if args.format in ("json", "both"):
        _write_json(out / "result.json", result)
    if args.format in ("csv", "both"):
        pops = [np.real(np.diag(s)) if s.ndim == 2 else np.abs(s) ** 2 for s in states]
        rows = [[_fmt(t)] + [_fmt(v) for v in pp] for t, pp in zip(times, pops)]
        _write_csv(out / "populations.csv", ["t_seconds"] + list(sch.labels), rows)
    print(json.dumps({"error": report.error, "out": str(out)}))
    return EXIT_OK


def parse_points(raw):
    if isinstance(raw, list):
        return tuple(float(x) for x in raw)
    if isinstance(raw, dict):
        start, stop, num = raw.get("start"), raw.get("stop"), raw.get("num")
        if None in (start, stop, num):
            raise ConfigError("field 'points': range needs 'start', 'stop' and 'num'")
        spacing = raw.get("spacing", "log")
        if spacing == "log":
            return tuple(np.geomspace(start, stop, int(num)).tolist())
        if spacing == "linear":
            return tuple(np.linspace(start, stop, int(num)).tolist())
        raise ConfigError("field 'points.spacing': must be 'log' or 'linear'")
    raise ConfigError("field 'points': expected a list or a {start, stop, num} range")


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    for key in ("quantity", "axis", "points"):
        if key not in cfg:
            raise ConfigError(f"field '{key}' is required")
    if cfg["quantity"] not in QUANTITIES:
        raise ConfigError(f"field 'quantity': unknown {cfg['quantity']!r}; known {sorted(QUANTITIES)}")
    spec = SweepSpec(cfg["quantity"], cfg["axis"], parse_points(cfg["points"]), cfg.get("fixed", {}))
    table = run_sweep(spec, args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    man = asdict(manifest(cfg, args.tol_rel or 1e-9, 1e-12, args.workers))
    rows = [[_fmt(x), _fmt(y) if math.isfinite(y) else "nan", e]
            for x, y, e in zip(table.x, table.y, table.errors)]
    _write_csv(out / "sweep.csv", [spec.axis, spec.quantity, "errors"], rows)
    result = {"manifest": man, "config": cfg, "success_fraction": table.success_fraction()}
    ok = table.ok() & (table.y > 0)
    if ok.sum() >= 2:
        result["fit"] = asdict(fit_power_law(x=table.x[ok], y=table.y[ok]))
    _write_json(out / "fit.json", result)
    print(json.dumps(result.get("fit", {})))
    if table.success_fraction() < 0.8:
        return EXIT_NUMERIC
    if args.check and "expect" in cfg and "fit" in result:
        exp = cfg["expect"]
        f = result["fit"]
        miss = abs(f["exponent"] - exp["exponent"]) > exp.get("tol", 0.5) or \
            f["r_squared"] < exp.get("r2_min", 0.98)
        if miss:
            return EXIT_MISS
    return EXIT_OK


def read_table(path: str):
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 2:
        raise ConfigError(f"{path}: table needs a header and at least one data row")
    xs, ys = [], []
    for i, r in enumerate(rows[1:], start=2):
        if len(r) > 2 and r[2]:
            continue  # failed point
        try:
            xs.append(float(r[0]))
            ys.append(float(r[1]))
        except (ValueError, IndexError):
            raise ConfigError(f"{path}: line {i}: expected two numeric columns") from None
    return rows[0], np.array(xs), np.array(ys)


def cmd_fit(args) -> int:
    if args.table:
        src, cfg = args.table, {"table": args.table}
    else:
        if not args.config:
            raise ConfigError("fit needs --table PATH or --config with a 'table' field")
        cfg = load_config(args.config)
        if "table" not in cfg:
            raise ConfigError("field 'table' is required")
        src = cfg["table"]
    header, x, y = read_table(src)
    fit = fit_power_law(x=x, y=y)
    result = {"manifest": asdict(manifest(cfg, 0.0, 0.0, 1)), "columns": header[:2],
              "fit": asdict(fit)}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "fit.json", result)
    print(json.dumps(asdict(fit)))
    return EXIT_OK


def cmd_case_study(args) -> int:
    name = args.name
    cfg = {}
    if args.config:
        cfg = load_config(args.config)
        name = name or cfg.get("preset")
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = {"preset": name, **{k: v for k, v in cfg.items() if k != "preset"}}
    over = {}
    if "d_meters" in cfg:
        over["d"] = float(cfg["d_meters"])
    rep = case_study(name, **over)
    if args.dynamics:
        ratio = rep["omega_c_over_2pi_hz"] / rep["omega_over_2pi_hz"]
        rep["dynamics"] = confirm_spectator(ratio)
    rep["misses"] = check_case_study(rep)
    rep["manifest"] = asdict(manifest(cfg, 1e-9, 1e-12, args.workers))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / f"case_study_{name}.json", rep)
    print(json.dumps({k: rep[k] for k in ("preset", "pe", "balance", "misses")}))
    if args.check and rep["misses"]:
        return EXIT_MISS
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="subwave", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON config path ('-' for stdin)")
        p.add_argument("--out", default="./out")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        p.add_argument("--tol-rel", type=float, default=None)
        p.add_argument("--check", action="store_true", help="exit 4 when embedded targets are missed")

    p = sub.add_parser("simulate", help="one gate simulation")
    common(p)
    p.add_argument("--format", choices=("json", "csv", "both"), default="both")
    p.add_argument("--mode", choices=MODES, default=None)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("sweep", help="parameter sweep with power-law fit")
    common(p)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("fit", help="power-law fit of a two-column CSV table")
    common(p, config_required=False)
    p.add_argument("--table", default=None, help="CSV table path ('-' for stdin)")
    p.set_defaults(func=cmd_fit, out=None)
    p = sub.add_parser("case-study", help="budget optimum for a platform preset")
    common(p, config_required=False)
    p.add_argument("name", nargs="?", default=None)
    p.add_argument("--no-dynamics", dest="dynamics", action="store_false")
    p.set_defaults(func=cmd_case_study)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, CalibrationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
