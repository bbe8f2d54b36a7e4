"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 solver or simulation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import control, linear, steady
from .dynamics import TABLE_I, PhysicalParams
from .errors import SolverError, ValidationError
from .output import (
    plot_maneuver,
    plot_root_locus,
    plot_stability_map,
    write_csv,
)
from .simulate import IntegratorConfig, run_maneuver

COMMANDS = ("steady-state", "stability-map", "design-gains", "maneuver", "root-locus")
EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3

# option name -> default; None means required, angles may also be given as <name>_deg
OPTIONS = {
    "steady-state": {
        "model": "unicycle",
        "family": "turning_rolling",
        "theta": 0.0,
        "psi_dot": None,
        "phi_dot": None,
        "r": 0.0,
    },
    "stability-map": {
        "model": "wheel",
        "theta_min": math.radians(-60.0),
        "theta_max": math.radians(60.0),
        "theta_n": 41,
        "psi_dot_min": -10.0,
        "psi_dot_max": 10.0,
        "psi_dot_n": 41,
    },
    "design-gains": {"maneuver": "LaneChange", "speed": 1.0, "pole": -8.0},
    "maneuver": {
        "maneuver": "LaneChange",
        "speed": 1.0,
        "amplitude": None,
        "pole": -8.0,
        "gains": None,
        "h": 1e-3,
        "method": "RK4",
        "t_end": 10.0,
    },
    "root-locus": {"phi_dot_min": 0.0, "phi_dot_max": 8.0, "n": 161, "m0_values": [1.0, 5.0, 20.0]},
}
ANGLE_OPTIONS = {"theta", "theta_min", "theta_max", "amplitude"}
FAMILIES = ("turning_rolling", "straight_rolling", "non_tilted_turning", "tilted_spinning")


# ---------------------------------------------------------------------------
# configuration


def _number(name, value, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite")
    if integer:
        if int(value) != value:
            raise ValidationError(f"{name} must be an integer")
        return int(value)
    return float(value)


def _resolve_options(command, raw):
    schema = OPTIONS[command]
    if not isinstance(raw, dict):
        raise ValidationError("'options' must be an object")
    out = {}
    for key, value in raw.items():
        base = key[:-4] if key.endswith("_deg") else key
        if base not in schema or (key != base and base not in ANGLE_OPTIONS):
            raise ValidationError(f"unknown option {key!r} for {command}; allowed: {sorted(schema)}")
        if base in out:
            raise ValidationError(f"option {base!r} given twice (radians and degrees)")
        if key != base:
            value = math.radians(_number(key, value))
        out[base] = value
    for key, default in schema.items():
        out.setdefault(key, default)
    return out


def load_config(path, command) -> dict:
    """Validated config with defaults filled in and angles in radians."""
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    unknown = set(raw) - {"params", "command", "options"}
    if unknown:
        raise ValidationError(f"unknown top-level config keys {sorted(unknown)}; allowed: command, options, params")
    if raw.get("command", command) != command:
        raise ValidationError(f"config is for command {raw['command']!r}, not {command!r}")
    params_raw = raw.get("params", {})
    if not isinstance(params_raw, dict):
        raise ValidationError("'params' must be an object")
    bad = set(params_raw) - {"m", "m0", "R", "g"}
    if bad:
        raise ValidationError(f"unknown params {sorted(bad)}; allowed: R, g, m, m0")
    params = {k: _number(k, params_raw.get(k, getattr(TABLE_I, k))) for k in ("m", "m0", "R", "g")}
    PhysicalParams(**params)
    return {"command": command, "params": params, "options": _resolve_options(command, raw.get("options", {}))}


def _threads(flag):
    if flag is not None:
        if flag < 1:
            raise ValidationError("--grid-threads must be >= 1")
        return flag
    env = os.environ.get("UNIDYN_THREADS")
    if env is None or env == "":
        return 1
    try:
        n = int(env)
    except ValueError as exc:
        raise ValidationError(f"UNIDYN_THREADS must be an integer, got {env!r}") from exc
    if n < 1:
        raise ValidationError("UNIDYN_THREADS must be >= 1")
    return n


def _kind(name):
    try:
        return control.ManeuverKind(name)
    except ValueError as exc:
        raise ValidationError(f"maneuver must be 'LaneChange' or 'Turn', got {name!r}") from exc


def _spec(o):
    amplitude = None if o.get("amplitude") is None else _number("amplitude", o["amplitude"])
    return control.ManeuverSpec(
        _kind(o["maneuver"]), _number("speed", o["speed"]), amplitude,
        t_end=_number("t_end", o.get("t_end", 10.0)), pole=_number("pole", o["pole"]),
    )


# ---------------------------------------------------------------------------
# commands


def cmd_steady_state(cfg, args):
    p = PhysicalParams(**cfg["params"])
    o = cfg["options"]
    model, family = o["model"], o["family"]
    if model not in ("wheel", "unicycle"):
        raise ValidationError(f"model must be 'wheel' or 'unicycle', got {model!r}")
    if family not in FAMILIES:
        raise ValidationError(f"family must be one of {FAMILIES}, got {family!r}")
    theta = _number("theta", o["theta"])
    notes = []
    if family == "non_tilted_turning":
        if model != "unicycle":
            raise ValidationError("non-tilted turning exists only for the unicycle")
        states = steady.non_tilted_turning(_number("r", o["r"]), p)
    elif family == "tilted_spinning":
        if model != "unicycle":
            raise ValidationError("tilted spinning exists only for the unicycle")
        states = steady.tilted_spinning(theta, p)
    else:
        psi_dot = 0.0 if family == "straight_rolling" else o["psi_dot"]
        if psi_dot is None:
            raise ValidationError("options.psi_dot is required for turning rolling")
        psi_dot = _number("psi_dot", psi_dot)
        phi_dot = None if o["phi_dot"] is None else _number("phi_dot", o["phi_dot"])
        if psi_dot == 0.0:
            notes.append("straight rolling: pitch rate is arbitrary (reported value is the requested one, default 0)")
        if model == "wheel":
            states = (steady.wheel_steady_state(theta, psi_dot, p, phi_dot),)
        else:
            states = (steady.unicycle_steady_state(theta, psi_dot, p, phi_dot),)
    report = []
    for ss in states:
        if ss.model == "wheel":
            res = [steady.wheel_steady_residual(ss.theta_star, ss.psi_dot_star, ss.phi_dot_star, p)]
            region = None
        else:
            res = list(steady.unicycle_steady_residuals(ss.theta_star, ss.psi_dot_star, ss.phi_dot_star, ss.r_star, p))
            region = steady.region_from_position(ss.theta_star, ss.r_star, p).value
        report.append({
            "kind": ss.kind.value,
            "model": ss.model,
            "theta_star": ss.theta_star,
            "psi_dot_star": ss.psi_dot_star,
            "phi_dot_star": ss.phi_dot_star,
            "r_star": ss.r_star,
            "feasible": ss.feasible,
            "region": region,
            "residuals": [float(v) for v in res],
        })
    doc = {"config": cfg, "steady_states": report, "notes": notes}
    text = json.dumps(doc, indent=2, sort_keys=True, default=float)
    print(text)
    if args.out:
        (Path(args.out) / "steady_state.json").write_text(text + "\n", encoding="utf-8")


def cmd_stability_map(cfg, args):
    p = PhysicalParams(**cfg["params"])
    o = cfg["options"]
    grid = linear.GridSpec(
        _number("theta_min", o["theta_min"]), _number("theta_max", o["theta_max"]),
        _number("theta_n", o["theta_n"], integer=True),
        _number("psi_dot_min", o["psi_dot_min"]), _number("psi_dot_max", o["psi_dot_max"]),
        _number("psi_dot_n", o["psi_dot_n"], integer=True),
    )
    smap = linear.stability_map(grid, o["model"], p, threads=_threads(args.grid_threads))
    rows = zip(smap.theta, smap.psi_dot, smap.phi_dot, smap.r, smap.label, smap.max_real_root)
    out = Path(args.out or ".")
    header = ["theta_star", "psi_dot_star", "phi_dot_star", "r_star", "label", "max_real_root"]
    write_csv(out / "stability_map.csv", header, rows, cfg)
    if args.svg:
        plot_stability_map(smap, out / "stability_map.svg")
    counts = {k: int(np.sum(smap.label == k)) for k in sorted(set(smap.label))}
    print(json.dumps({"points": int(smap.label.size), "labels": counts}, sort_keys=True))


def _gain_report(d):
    spec = d.spec
    return {
        "maneuver": spec.kind.value,
        "speed": spec.speed,
        "phi_dot_star": d.reduced.phi_dot,
        "pole": spec.pole,
        "gains": [
            {"name": n, "value": float(v), "unit": u}
            for n, v, u in zip(d.gains.names, d.gains.values, d.gains.units)
        ],
        "controllability_rank": d.controllability_rank,
        "output_controllability_rank": d.output_rank,
        "closed_loop_eigenvalues": [[float(z.real), float(z.imag)] for z in d.closed_loop],
    }


def cmd_design_gains(cfg, args):
    p = PhysicalParams(**cfg["params"])
    d = control.design(_spec(cfg["options"]), p)
    doc = {"config": cfg, **_gain_report(d)}
    text = json.dumps(doc, indent=2, sort_keys=True)
    print(text)
    if args.out:
        (Path(args.out) / "design_gains.json").write_text(text + "\n", encoding="utf-8")


TRACE_COLUMNS = ["t", "omega1", "omega2", "omega3", "theta", "sigma", "r", "psi", "phi", "xG", "yG",
                 "u", "vP_norm", "energy", "work"]


def cmd_maneuver(cfg, args):
    p = PhysicalParams(**cfg["params"])
    o = cfg["options"]
    spec = _spec(o)
    if o["gains"] is None:
        gains = control.design(spec, p).gains
    else:
        if not isinstance(o["gains"], list):
            raise ValidationError("options.gains must be a list of numbers in output order")
        gains = control.GainVector.from_values([_number("gains", g) for g in o["gains"]])
    integ = IntegratorConfig(h=_number("h", o["h"]), method=o["method"], t_end=_number("t_end", o["t_end"]))
    trace, m = run_maneuver(spec, p, gains, integ)
    out = Path(args.out or ".")
    rows = (
        [trace.t[k], *trace.states[k], trace.u[k], trace.vP_norm[k], trace.energy[k], trace.work[k]]
        for k in range(trace.t.size)
    )
    write_csv(out / "maneuver.csv", TRACE_COLUMNS, rows, cfg)
    side = {"config": cfg, "gains": gains.as_dict(), "metrics": m.as_dict()}
    (out / "maneuver_metrics.json").write_text(json.dumps(side, indent=2, sort_keys=True, default=float) + "\n",
                                              encoding="utf-8")
    if args.svg:
        ref = None
        if spec.kind is control.ManeuverKind.LANE_CHANGE:
            xs = trace.t * spec.speed
            ref = (xs, np.array([control.reference(spec, t)[5] for t in trace.t]))
        plot_maneuver(trace, out / "maneuver.svg", ref)
    print(json.dumps(m.as_dict(), sort_keys=True, default=float))


def cmd_root_locus(cfg, args):
    p = PhysicalParams(**cfg["params"])
    o = cfg["options"]
    n = _number("n", o["n"], integer=True)
    if n < 1:
        raise ValidationError("root-locus sweep is empty (n < 1)")
    lo, hi = _number("phi_dot_min", o["phi_dot_min"]), _number("phi_dot_max", o["phi_dot_max"])
    if hi < lo:
        raise ValidationError("phi_dot_max must be >= phi_dot_min")
    m0s = o["m0_values"]
    if not isinstance(m0s, list) or not m0s:
        raise ValidationError("options.m0_values must be a non-empty list")
    m0s = [_number("m0_values", v) for v in m0s]
    locus = linear.root_locus_straight_rolling(np.linspace(lo, hi, n), p, m0s)
    out = Path(args.out or ".")
    rows = zip(locus.model, locus.phi_dot, locus.branch, locus.root.real, locus.root.imag)
    write_csv(out / "root_locus.csv", ["model", "phi_dot_star", "branch", "re", "im"], rows, cfg)
    if args.svg:
        plot_root_locus(locus, out / "root_locus.svg")
    crit = {"wheel": linear.wheel_straight_critical(p)}
    for m0 in m0s:
        crit[f"unicycle_m0={m0:g}"] = linear.unicycle_straight_critical(p.with_m0(m0))
    print(json.dumps({"critical_pitch_rate": crit}, sort_keys=True))


HANDLERS = {
    "steady-state": cmd_steady_state,
    "stability-map": cmd_stability_map,
    "design-gains": cmd_design_gains,
    "maneuver": cmd_maneuver,
    "root-locus": cmd_root_locus,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unidyn", description="Rolling wheel and point-mass unicycle toolkit.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON document with params/command/options")
    parser.add_argument("--out", help="output directory (default: current directory)")
    parser.add_argument("--svg", action="store_true", help="also write SVG plots")
    parser.add_argument("--seed", type=int, help="accepted for interface compatibility; nothing is random")
    parser.add_argument("--grid-threads", type=int, help="worker threads for grid evaluation (env UNIDYN_THREADS)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
        cfg = load_config(args.config, args.command)
        HANDLERS[args.command](cfg, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
