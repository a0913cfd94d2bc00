"""Command line front end.

Subcommands: simulate, sweep, zoom, sensitivity, linear-compare.  Settings are
resolved in three layers (built-in defaults, then a config file, then flags)
and the fully resolved values are echoed into the output as a re-runnable
command line, so any CSV can be regenerated byte for byte from its own header.
The echo deliberately omits --workers and --out: neither affects the data.

Exit codes: 0 success, 1 bad usage or configuration, 2 a run that failed for
physical or numerical reasons (particle coincidence, step budget, no
measurable oscillation).
"""

from __future__ import annotations

import argparse
import math
import sys
from enum import Enum
from typing import Optional

import numpy as np

from . import __version__
from .dynamics import (
    CMState,
    CoincidentParticles,
    ModelParams,
    equilibrium_separation,
    from_cm,
)
from .integrator import (
    IntegratorConfig,
    Scheme,
    StepBudgetExhausted,
    TimeLimit,
    integrate,
)
from .linearized import (
    InsufficientOscillations,
    dominant_frequency,
    in_well_equilibrium_separation,
    linearized_frequencies,
)
from .scattering import Scenario, run_scattering
from .sweep import SweepSpec, sensitivity, sweep, zoom

__all__ = ["main", "ConfigError"]


class ConfigError(Exception):
    """Raised for malformed config files, unknown keys, or bad settings."""


# ---------------------------------------------------------------------------
# settings
# ---------------------------------------------------------------------------

_DEFAULTS: dict = {
    "k": 1.0,
    "alpha": 1.0,
    "n": 2,
    "A": 2.0,
    "beta": 1.0,
    "v0": 0.1,
    "launch_offset": -10.0,
    "separation": None,
    "t_max": 5000.0,
    "exit_radius": 10.0,
    "dt": 1e-3,
    "scheme": "VelocityVerlet",
    "v_min": 0.05,
    "v_max": 0.30,
    "dv": 0.001,
    "workers": 1,
    "out": None,
}


def _conv_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: expected a number, got {raw!r}") from None


def _conv_int(key: str, raw: str) -> int:
    try:
        return int(raw, 10)
    except ValueError:
        raise ConfigError(f"config key {key!r}: expected an integer, got {raw!r}") from None


def _conv_separation(key: str, raw: str) -> Optional[float]:
    if raw.lower() in ("none", ""):
        return None
    return _conv_float(key, raw)


_CONFIG_CONVERTERS = {
    "k": _conv_float,
    "alpha": _conv_float,
    "n": _conv_int,
    "A": _conv_float,
    "beta": _conv_float,
    "v0": _conv_float,
    "launch_offset": _conv_float,
    "separation": _conv_separation,
    "t_max": _conv_float,
    "exit_radius": _conv_float,
    "dt": _conv_float,
    "scheme": lambda key, raw: raw,
    "v_min": _conv_float,
    "v_max": _conv_float,
    "dv": _conv_float,
    "workers": _conv_int,
    "out": lambda key, raw: raw,
}


def load_config(path: str) -> dict:
    """Parse a flat 'key = value' file.  Blank lines and #-comments are
    skipped; keys outside the published set are a hard error, not a warning,
    so a typo cannot silently fall back to a default."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    values: dict = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
        key, _, raw = text.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _CONFIG_CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _CONFIG_CONVERTERS[key](key, raw)
    return values


def _resolve(args: argparse.Namespace) -> dict:
    """defaults <- config file <- flags, later layers winning."""
    res = dict(_DEFAULTS)
    if getattr(args, "config", None):
        res.update(load_config(args.config))
    for key in _DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            res[key] = val
    center = getattr(args, "center", None)
    halfwidth = getattr(args, "halfwidth", None)
    if (center is None) != (halfwidth is None):
        raise ConfigError("--center and --halfwidth must be given together")
    if center is not None:
        if not (halfwidth > 0.0):
            raise ConfigError(f"--halfwidth must be positive, got {halfwidth!r}")
        res["v_min"] = center - halfwidth
        res["v_max"] = center + halfwidth
    if res["scheme"] not in ("VelocityVerlet", "RK4"):
        raise ConfigError(
            f"scheme must be VelocityVerlet or RK4, got {res['scheme']!r}"
        )
    return res


def _params(res: dict) -> ModelParams:
    return ModelParams(k=res["k"], alpha=res["alpha"], n=res["n"], A=res["A"], beta=res["beta"])


def _integrator_config(res: dict, max_steps: int) -> IntegratorConfig:
    return IntegratorConfig(scheme=Scheme(res["scheme"]), dt=res["dt"], max_steps=max_steps)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

_MODEL_KEYS = ["k", "alpha", "n", "A", "beta"]


def _fmt(value) -> str:
    """Shortest round-trip form: repr for floats, bare text otherwise."""
    if value is None:
        return "none"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _echo_command(command: str, settings: dict, keys: list) -> str:
    parts = ["kinktrap", command]
    for key in keys:
        value = settings[key]
        if value is None:
            continue
        flag = "--" + key.replace("_", "-")
        text = _fmt(value)
        # leading '-' values are glued with '=' so the echo always re-parses
        parts.append(f"{flag}={text}" if text.startswith("-") else f"{flag} {text}")
    return " ".join(parts)


def _emit_csv(
    out: Optional[str],
    command: str,
    settings: dict,
    echo_keys: list,
    meta: dict,
    header: list,
    rows,
) -> None:
    lines = [f"# kinktrap-version {__version__}"]
    lines.append(f"# command = {_echo_command(command, settings, echo_keys)}")
    for key in echo_keys:
        lines.append(f"# {key} = {_fmt(settings[key])}")
    for key, value in meta.items():
        lines.append(f"# {key} = {_fmt(value)}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(cell) for cell in row))
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

_SIM_KEYS = _MODEL_KEYS + [
    "v0", "launch_offset", "separation", "t_max", "exit_radius",
    "dt", "scheme", "record_every", "max_steps",
]


def _cmd_simulate(res: dict, args: argparse.Namespace) -> int:
    params = _params(res)
    sc = Scenario(
        params=params,
        v0=res["v0"],
        launch_offset=res["launch_offset"],
        separation=res["separation"],
        t_max=res["t_max"],
        exit_radius=res["exit_radius"],
    )
    cfg = _integrator_config(res, args.max_steps)
    rec = run_scattering(sc, cfg, record_every=args.record_every)
    traj = rec.trajectory
    dx = traj.x2 - traj.x1
    energy = (
        0.5 * (traj.v1 ** 2 + traj.v2 ** 2)
        + 0.5 * params.k * dx * dx
        + params.alpha / np.abs(dx) ** params.n
        - params.A * np.exp(-params.beta * traj.x1 ** 2)
        - params.A * np.exp(-params.beta * traj.x2 ** 2)
    )
    settings = {**res, "record_every": args.record_every, "max_steps": args.max_steps}
    meta = {
        "outcome": rec.outcome.value,
        "v_final": rec.v_final,
        "t_end": rec.t_end,
        "energy_drift": rec.energy_drift,
        "mean_cm_speed_tail": rec.mean_cm_speed_tail,
        "steps": rec.steps,
    }
    rows = zip(traj.t, traj.x1, traj.x2, traj.v1, traj.v2, traj.R, traj.r, energy)
    _emit_csv(res["out"], "simulate", settings, _SIM_KEYS, meta,
              ["t", "x1", "x2", "v1", "v2", "R", "r", "E"], rows)
    return 0


_SWEEP_KEYS = _MODEL_KEYS + [
    "v_min", "v_max", "dv", "launch_offset", "separation", "t_max",
    "exit_radius", "dt", "scheme", "max_steps",
]

_SWEEP_HEADER = ["v0", "outcome", "v_final", "t_end", "energy_drift", "steps"]


def _sweep_spec(res: dict, max_steps: int) -> SweepSpec:
    return SweepSpec(
        params=_params(res),
        v_min=res["v_min"],
        v_max=res["v_max"],
        dv=res["dv"],
        launch_offset=res["launch_offset"],
        separation=res["separation"],
        t_max=res["t_max"],
        exit_radius=res["exit_radius"],
        cfg=_integrator_config(res, max_steps),
    )


def _class_counts(records) -> dict:
    counts = {"transmitted": 0, "reflected": 0, "trapped": 0, "error": 0}
    for rec in records:
        counts[rec.outcome.value.lower()] += 1
    return counts


def _cmd_sweep(res: dict, args: argparse.Namespace) -> int:
    spec = _sweep_spec(res, args.max_steps)
    records = sweep(spec, workers=res["workers"])
    settings = {**res, "max_steps": args.max_steps}
    meta = {"points": len(records), **_class_counts(records)}
    rows = (
        (r.v0, r.outcome, r.v_final, r.t_end, r.energy_drift, r.steps)
        for r in records
    )
    _emit_csv(res["out"], "sweep", settings, _SWEEP_KEYS, meta, _SWEEP_HEADER, rows)
    return 0


_ZOOM_KEYS = _SWEEP_KEYS + ["factor", "depth"]


def _cmd_zoom(res: dict, args: argparse.Namespace) -> int:
    spec = _sweep_spec(res, args.max_steps)
    zoom_rows = zoom(spec, refinement_factor=args.factor, depth=args.depth,
                     workers=res["workers"])
    zoom_rows = sorted(zoom_rows, key=lambda zr: (zr.depth, zr.record.v0))
    settings = {**res, "max_steps": args.max_steps,
                "factor": args.factor, "depth": args.depth}
    meta = {"rows": len(zoom_rows), **_class_counts([zr.record for zr in zoom_rows])}
    rows = (
        (zr.depth, zr.record.v0, zr.record.outcome, zr.record.v_final,
         zr.record.t_end, zr.record.energy_drift, zr.record.steps)
        for zr in zoom_rows
    )
    _emit_csv(res["out"], "zoom", settings, _ZOOM_KEYS, meta,
              ["depth"] + _SWEEP_HEADER, rows)
    return 0


_SENS_KEYS = _MODEL_KEYS + [
    "v0", "launch_offset", "separation", "t_max", "dt", "scheme",
    "seed_delta", "sample_interval", "max_steps",
]


def _cmd_sensitivity(res: dict, args: argparse.Namespace) -> int:
    sc = Scenario(
        params=_params(res),
        v0=res["v0"],
        launch_offset=res["launch_offset"],
        separation=res["separation"],
        t_max=res["t_max"],
        exit_radius=res["exit_radius"],
    )
    cfg = _integrator_config(res, args.max_steps)
    report = sensitivity(sc, cfg, seed_delta=args.seed_delta,
                         sample_interval=args.sample_interval)
    settings = {**res, "seed_delta": args.seed_delta,
                "sample_interval": args.sample_interval, "max_steps": args.max_steps}
    meta = {
        "metric": report.metric,
        "scale": report.scale,
        "lambda": report.lambda_,
        "degenerate": report.degenerate,
        "window_start": None if report.window is None else report.window[0],
        "window_end": None if report.window is None else report.window[1],
        "t_first_unit": report.t_first_unit,
    }
    rows = zip(report.times, report.distances)
    _emit_csv(res["out"], "sensitivity", settings, _SENS_KEYS, meta, ["t", "d"], rows)
    return 0


_LINCMP_KEYS = _MODEL_KEYS + ["t_max", "dt", "scheme", "max_steps"]


def _measured_frequency(params, cm0, cfg, t_max, use_cm_coordinate):
    """Integrate from rest and time the mean crossings of R(t) or r(t)."""
    stride = max(1, int(round(0.01 / cfg.dt)))
    result = integrate(from_cm(cm0), params, cfg, TimeLimit(t_max), record_every=stride)
    traj = result.diagnostics.trajectory
    series = traj.R if use_cm_coordinate else traj.r
    return dominant_frequency(traj.t, series), traj


def _cmd_linear_compare(res: dict, args: argparse.Namespace) -> int:
    params = _params(res)
    if params.A <= 0.0:
        print("error: no attractive well (A <= 0); nothing to compare",
              file=sys.stderr)
        return 2
    cfg = _integrator_config(res, args.max_steps)
    t_max = res["t_max"]

    r0 = equilibrium_separation(params)
    try:
        s_in = in_well_equilibrium_separation(params)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    lp_full = linearized_frequencies(params, r_eq=r0)
    lp_half = linearized_frequencies(params, r_eq=0.5 * r0)

    amp = 0.05 / math.sqrt(params.beta)
    try:
        omega_cm, traj_cm = _measured_frequency(
            params, CMState(t=0.0, R=amp, V=0.0, r=0.5 * s_in, w=0.0),
            cfg, t_max, use_cm_coordinate=True)
        if float(np.max(np.abs(traj_cm.R))) > 5.0 * amp:
            print("error: the pair escaped the well during the probe run",
                  file=sys.stderr)
            return 2
        omega_rel, _ = _measured_frequency(
            params, CMState(t=0.0, R=0.0, V=0.0, r=0.5 * (s_in + 0.01), w=0.0),
            cfg, t_max, use_cm_coordinate=False)
    except InsufficientOscillations as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    table = [
        ("omega_cm", omega_cm, lp_full.omega_R, lp_half.omega_R),
        ("omega_relative", omega_rel, lp_full.omega_eps, lp_half.omega_eps),
        ("stretch_center", s_in, lp_full.r_eq + lp_full.delta,
         lp_half.r_eq + lp_half.delta),
    ]
    print(f"free equilibrium separation   {r0:.9g}")
    print(f"in-well equilibrium separation {s_in:.9g}")
    print(f"{'quantity':<16} {'measured':>12} {'r_eq=r0':>12} {'r_eq=r0/2':>12}")
    for name, measured, full, half in table:
        print(f"{name:<16} {measured:>12.6f} {full:>12.6f} {half:>12.6f}")

    if res["out"]:
        settings = {**res, "max_steps": args.max_steps}
        meta = {"r0": r0, "s_in": s_in,
                "delta_full": lp_full.delta, "delta_half": lp_half.delta}
        _emit_csv(res["out"], "linear-compare", settings, _LINCMP_KEYS, meta,
                  ["quantity", "measured", "r_eq_r0", "r_eq_half_r0"], table)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # usage problems exit 1; argparse's default of 2 is reserved for physics
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p):
    p.add_argument("--config", help="flat 'key = value' settings file")
    p.add_argument("--out", help="output CSV path (default: stdout)")


def _add_model(p):
    p.add_argument("--k", type=float, help="spring constant")
    p.add_argument("--alpha", type=float, help="repulsion strength")
    p.add_argument("--n", type=int, help="repulsion exponent")
    p.add_argument("--A", type=float, help="well depth")
    p.add_argument("--beta", type=float, help="inverse square well width")


def _add_integrator(p):
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--scheme", choices=["VelocityVerlet", "RK4"], help="integrator")
    p.add_argument("--max-steps", type=int, default=10_000_000,
                   help="hard step budget per trajectory")


def _add_launch(p, with_v0=True, with_exit=True):
    if with_v0:
        p.add_argument("--v0", type=float, help="launch speed toward the well")
    p.add_argument("--launch-offset", type=float,
                   help="initial centre of mass position (sign sets direction)")
    p.add_argument("--separation", type=float,
                   help="initial particle separation (default: free rest length)")
    p.add_argument("--t-max", type=float, help="time horizon")
    if with_exit:
        p.add_argument("--exit-radius", type=float,
                       help="|R| at which an outgoing pair has left the region")


def _add_grid(p):
    p.add_argument("--v-min", type=float, help="lowest launch speed")
    p.add_argument("--v-max", type=float, help="highest launch speed")
    p.add_argument("--dv", type=float, help="grid spacing")
    p.add_argument("--center", type=float,
                   help="with --halfwidth, sets v-min/v-max around this speed")
    p.add_argument("--halfwidth", type=float, help="half width for --center")
    p.add_argument("--workers", type=int, help="worker processes (data unchanged)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kinktrap",
                     description="bound pair scattering off a Gaussian well")
    parser.add_argument("--version", action="version",
                        version=f"kinktrap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one launch and dump the trajectory")
    _add_common(p); _add_model(p); _add_launch(p); _add_integrator(p)
    p.add_argument("--record-every", type=int, default=10,
                   help="record every Nth step")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="classify outcomes over a launch speed grid")
    _add_common(p); _add_model(p); _add_launch(p, with_v0=False); _add_grid(p)
    _add_integrator(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("zoom", help="sweep, then refine class boundaries")
    _add_common(p); _add_model(p); _add_launch(p, with_v0=False); _add_grid(p)
    _add_integrator(p)
    p.add_argument("--factor", type=int, default=5, help="grid refinement factor")
    p.add_argument("--depth", type=int, default=1, help="refinement levels")
    p.set_defaults(func=_cmd_zoom)

    p = sub.add_parser("sensitivity",
                       help="divergence of two launches differing by seed-delta")
    _add_common(p); _add_model(p); _add_launch(p, with_exit=False); _add_integrator(p)
    p.add_argument("--seed-delta", type=float, default=1e-9,
                   help="launch speed perturbation")
    p.add_argument("--sample-interval", type=float, default=1.0,
                   help="time between recorded distance samples")
    p.set_defaults(func=_cmd_sensitivity)

    p = sub.add_parser("linear-compare",
                       help="measured trapped-pair frequencies vs the small "
                            "oscillation closed forms")
    _add_common(p); _add_model(p); _add_integrator(p)
    p.add_argument("--t-max", type=float, help="probe run length")
    p.set_defaults(func=_cmd_linear_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        res = _resolve(args)
        return args.func(res, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (CoincidentParticles, StepBudgetExhausted) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
