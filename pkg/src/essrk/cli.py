"""Command-line front end: ``simulate``, ``converge``, ``diagnose``, ``compare``.

A run is described by a preset name or an inline field spec, read from a
flat ``key = value`` file (``--config``) and overridden by flags. Keys::

    preset   method   h   steps   stride   out   t0
    field    param.<name>   charge   mass   q0   p0   kappa
    h_list   T

``q0``/``p0`` take 3N comma-separated numbers; N > 1 particles share the
field, charge and mass.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import sys
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .composition import integrate, parse_method
from .diagnostics import (
    action_quadrature_residual,
    convergence_order,
    method_symplecticity,
    secular_trend,
    shadowing_residual,
)
from .experiments import PRESETS, ExperimentPreset, get_preset, run_comparison
from .fields import FieldError, ParametricField, ParticleProps, TokamakField, UniformField, ZeroField, field_consistency_check
from .maps import StepFailure
from .system import EnsembleSystem, HarmonicInteraction, PhaseState
from .tableau import RK4, tableau_for_order

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_UNKNOWN_PRESET = 3
EXIT_STEP_FAILURE = 4

FIELD_KINDS = {
    "zero": lambda p: ZeroField(),
    "uniform": lambda p: UniformField([p.pop("A1", 0.0), p.pop("A2", 0.0), p.pop("A3", 0.0)], p.pop("phi", 0.0)),
    "parametric": lambda p: ParametricField(**p),
    "tokamak": lambda p: TokamakField(**p),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    preset: str | None = None
    field: str | None = None
    params: dict = dc_field(default_factory=dict)
    charge: float = 1.0
    mass: float = 1.0
    q0: tuple | None = None
    p0: tuple | None = None
    t0: float = 0.0
    kappa: float | None = None
    method: str | None = None
    h: float | None = None
    steps: int | None = None
    stride: int = 1
    out: str | None = None
    h_list: tuple | None = None
    T: float = 10.0


def _floats(text):
    try:
        return tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


_CONVERTERS = {
    "preset": str, "field": str, "method": str, "out": str,
    "charge": float, "mass": float, "t0": float, "kappa": float, "h": float, "T": float,
    "steps": int, "stride": int,
    "q0": _floats, "p0": _floats, "h_list": _floats,
}


def read_config_file(path):
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_string("[run]\n" + fh.read())
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return dict(parser["run"])


def make_config(raw):
    """Build a :class:`RunConfig` from string-valued keys."""
    cfg = RunConfig()
    for key, value in raw.items():
        if value is None:
            continue
        if key.startswith("param."):
            try:
                cfg.params[key[6:]] = float(value)
            except ValueError:
                raise ConfigError(f"parameter {key} must be a number, got {value!r}") from None
            continue
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            setattr(cfg, key, _CONVERTERS[key](value))
        except ValueError:
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    if cfg.stride < 1:
        raise ConfigError("stride must be >= 1")
    if cfg.h is not None and cfg.h == 0:
        raise ConfigError("h must be nonzero")
    if cfg.steps is not None and cfg.steps < 0:
        raise ConfigError("steps must be >= 0")
    if cfg.method is not None:
        try:
            parse_method(cfg.method)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return cfg


def build_preset(cfg):
    """Resolve a config into an :class:`ExperimentPreset` plus a method name."""
    if cfg.preset is not None:
        preset = get_preset(cfg.preset)
    else:
        if cfg.field is None:
            raise ConfigError("either preset or field must be given")
        if cfg.field not in FIELD_KINDS:
            raise ConfigError(f"unknown field kind {cfg.field!r}; choose from {sorted(FIELD_KINDS)}")
        try:
            fld = FIELD_KINDS[cfg.field](dict(cfg.params))
        except TypeError as exc:
            raise ConfigError(f"bad parameters for field {cfg.field!r}: {exc}") from None
        q0 = cfg.q0 or (0.0, 2.1, 0.0)
        p0 = cfg.p0 or tuple(0.0 for _ in q0)
        if len(q0) % 3 or len(q0) != len(p0):
            raise ConfigError("q0 and p0 need the same number of entries, a multiple of 3")
        n = len(q0) // 3
        try:
            props = ParticleProps(cfg.charge, cfg.mass)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        interaction = HarmonicInteraction(cfg.kappa) if cfg.kappa is not None else None
        system = EnsembleSystem([props] * n, fld, interaction)
        preset = ExperimentPreset(
            name=f"inline-{cfg.field}",
            system=system,
            initial=PhaseState(np.reshape(q0, (n, 3)), np.reshape(p0, (n, 3)), cfg.t0),
            h=cfg.h if cfg.h is not None else 0.1,
            n_steps=cfg.steps if cfg.steps is not None else 100,
        )
    if cfg.h is not None:
        preset = replace(preset, h=cfg.h)
    if cfg.steps is not None:
        preset = replace(preset, n_steps=cfg.steps)
    method = cfg.method or preset.methods[0]
    return preset, method


# --- output -------------------------------------------------------------------------


def csv_header(n):
    if n == 1:
        return ["t", "q1", "q2", "q3", "p1", "p2", "p3", "E"]
    cols = ["t"]
    for j in range(1, n + 1):
        cols += [f"q{j}_{k}" for k in (1, 2, 3)] + [f"p{j}_{k}" for k in (1, 2, 3)]
    return cols + ["E"]


def write_trajectory_csv(traj, system, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(csv_header(traj.q.shape[1]))
    energies = traj.energies(system)
    for i in range(len(traj)):
        row = [traj.t[i]]
        for j in range(traj.q.shape[1]):
            row += list(traj.q[i, j]) + list(traj.p[i, j])
        row.append(energies[i])
        writer.writerow([repr(float(v)) for v in row])


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


# --- subcommands -----------------------------------------------------------------


def cmd_simulate(cfg):
    preset, method = build_preset(cfg)
    traj = integrate(preset.initial, method, preset.h, preset.n_steps, preset.system, stride=cfg.stride)
    out = _open_out(cfg.out)
    try:
        write_trajectory_csv(traj, preset.system, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_converge(cfg):
    preset, method = build_preset(cfg)
    h_list = cfg.h_list or (0.4, 0.2, 0.1, 0.05)
    result = convergence_order(method, preset.system, preset.initial, h_list, cfg.T)
    order = parse_method(method).order
    print(f"# {parse_method(method).name} on {preset.name}, T={cfg.T}")
    print(f"{'h':>12} {'error':>14}")
    for h, err in zip(result.h, result.errors):
        print(f"{h:12.6g} {err:14.6e}")
    ok = abs(result.slope - order) <= 0.5
    print(f"slope {result.slope:.4f} (declared order {order}) {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# one step of a symplectic method is exact up to FD noise (~1e-10)
SYMPLECTIC_TOL = 1e-8
QUADRATURE_LADDER = (1.6, 0.8, 0.4, 0.2, 0.1)
QUADRATURE_FLOOR = 1e-13


def quadrature_ratio_check(system, state, tableau):
    """Halving ratio of the action residual against ``2^(order+1)``, within 20%.

    Uses the finest pair on the step ladder whose smaller residual is still
    above the round-off floor.
    """
    res = [action_quadrature_residual(system, state, tableau, h) for h in QUADRATURE_LADDER]
    pairs = [(res[i], res[i + 1]) for i in range(len(res) - 1) if res[i + 1] >= QUADRATURE_FLOOR]
    if not pairs:
        return True, f"below round-off floor (max {max(res):.1e})"
    expected = 2.0 ** (tableau.order + 1)
    ratio = pairs[-1][0] / pairs[-1][1]
    return abs(ratio / expected - 1) <= 0.2, f"ratio {ratio:.2f} vs {expected:.0f}"


def _line(name, value, passed, informational=False):
    status = "PASS" if passed else ("FAIL (expected, informational)" if informational else "FAIL")
    print(f"{name:<28} {value:<40} {status}")


def cmd_diagnose(cfg):
    preset, method_spec = build_preset(cfg)
    method = parse_method(method_spec)
    system, state = preset.system, preset.initial
    rng = np.random.default_rng(0)
    failures = 0

    fields = {id(f): f for f in system.fields}.values()
    for fld in fields:
        samples = [(state.q[0] + rng.uniform(-0.1, 0.1, 3), state.t + rng.uniform(0, 1)) for _ in range(10)]
        rep = field_consistency_check(fld, samples)
        ok = rep.passed(1e-5)
        failures += not ok
        extra = "" if rep.curl_defect is None else f" curl={rep.curl_defect:.1e}"
        _line(f"field {type(fld).__name__}", f"jac={rep.jacobian_defect:.1e} grad={rep.grad_phi_defect:.1e} div={rep.divergence:.1e}{extra}", ok)

    probes = [state] + [
        PhaseState(state.q + rng.normal(0, 0.05, state.q.shape), state.p + rng.normal(0, 0.05, state.p.shape), state.t)
        for _ in range(2)
    ]
    defect = max(method_symplecticity(method, s, preset.h, system) for s in probes)
    ok = defect <= SYMPLECTIC_TOL
    if method.kind == "essrk":
        failures += not ok
    _line(f"symplecticity {method.name}", f"{defect:.3e} (tol {SYMPLECTIC_TOL:g})", ok, informational=method.kind == "rk4")

    res = shadowing_residual(system, state, t1=state.t + 1.0)
    ok = res <= 1e-4
    failures += not ok
    _line("shadowing residual", f"{res:.3e} (tol 1e-4)", ok)

    tableau = RK4 if method.kind == "rk4" else tableau_for_order(method.order)
    ok, value = quadrature_ratio_check(system, state, tableau)
    failures += not ok
    _line(f"action quadrature {tableau.name}", value, ok)
    return EXIT_OK if failures == 0 else EXIT_CHECK_FAILED


def cmd_compare(cfg):
    preset, _ = build_preset(cfg)
    methods = (cfg.method,) if cfg.method else preset.methods
    reports = run_comparison(preset, methods=methods)
    cols = ["method", "final_energy", "max_rel_energy_dev", "energy_trend", "amplitude_error",
            "phase_error", "final_state_error", "symplecticity_defect"]
    rows = []
    for name, rep in reports.items():
        e = rep.energy_series[:, 1]
        drift, _ = secular_trend(rep.energy_series)
        rows.append([
            name, e[-1], float(np.max(np.abs(e - e[0])) / abs(e[0])) if e[0] else np.nan, drift,
            np.nan if rep.amplitude_error_series is None else rep.amplitude_error_series[-1, 1],
            np.nan if rep.phase_error_series is None else rep.phase_error_series[-1, 1],
            np.nan if rep.final_state_error is None else rep.final_state_error,
            rep.symplecticity_defect,
        ])
    out = _open_out(cfg.out)
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "diagnose": cmd_diagnose,
    "compare": cmd_compare,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="essrk", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value run file")
        p.add_argument("--preset", help=f"one of {sorted(PRESETS)}")
        p.add_argument("--field", help=f"inline field kind, one of {sorted(FIELD_KINDS)}")
        p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE", help="field parameter")
        p.add_argument("--method", help="essrk<p> (p even) or rk4")
        p.add_argument("--h", help="step size")
        p.add_argument("--steps", help="number of steps")
        p.add_argument("--stride", help="record every STRIDE steps")
        p.add_argument("--out", help="output CSV path (default stdout)")
        p.add_argument("--q0")
        p.add_argument("--p0")
        p.add_argument("--t0")
        p.add_argument("--charge")
        p.add_argument("--mass")
        p.add_argument("--kappa", help="harmonic pair coupling")
        if name == "converge":
            p.add_argument("--h-list", dest="h_list", help="comma-separated step sizes")
            p.add_argument("--T", help="final time")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        raw = read_config_file(args.config) if args.config else {}
        for item in args.param:
            if "=" not in item:
                raise ConfigError(f"--param expects NAME=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            raw[f"param.{k.strip()}"] = v.strip()
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "param") and v is not None}
        raw.update(flags)
        cfg = make_config(raw)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_UNKNOWN_PRESET
    except (StepFailure, FieldError) as exc:
        print(f"step failure: {exc}", file=sys.stderr)
        return EXIT_STEP_FAILURE


if __name__ == "__main__":
    sys.exit(main())
