"""Command line interface.

Subcommands:
  run    --config cfg.json --out dir   one receding horizon run
  sweep  --config cfg.json --out dir   one run per horizon in the sweep list
  theory --config cfg.json             print the constants report as JSON

Exit codes: 0 ok, 1 config error, 2 solver failure.
RHCONTROL_THREADS controls how many sweep rows run concurrently (default 1).
"""

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import presets, report, theory
from .optim import SolverOptions
from .rhc import RhcConfig, build_problem, rhc_run


class ConfigError(Exception):
    pass


def _require(cfg: dict, key: str, typ=None):
    if key not in cfg:
        raise ConfigError(f"missing config key: {key!r}")
    val = cfg[key]
    if typ is not None and not isinstance(val, typ):
        raise ConfigError(f"config key {key!r} has wrong type: expected {typ}")
    return val


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")


def _actuator_layout(choice):
    if isinstance(choice, str):
        if choice not in presets.ACTUATOR_PRESETS:
            raise ConfigError(f"unknown actuator preset in key 'actuators': {choice!r}")
        layout = presets.ACTUATOR_PRESETS[choice]
    elif isinstance(choice, dict):
        layout = {"parents": _require(choice, "parents", list),
                  "subdivisions": _require(choice, "subdivisions", list)}
        layout["parents"] = [((p[0][0], p[0][1]), (p[1][0], p[1][1]))
                             for p in layout["parents"]]
        layout["subdivisions"] = [tuple(d) for d in layout["subdivisions"]]
    else:
        raise ConfigError("config key 'actuators' must be a preset name or a layout object")
    return layout


def build_rhc_config(cfg: dict, T_override=None) -> RhcConfig:
    preset_name = _require(cfg, "preset", str)
    if preset_name not in presets.COEFFICIENT_PRESETS:
        raise ConfigError(f"unknown coefficient preset in key 'preset': {preset_name!r}")
    a, b, y0, nu_default = presets.COEFFICIENT_PRESETS[preset_name]
    mesh = cfg.get("mesh", {})
    time = _require(cfg, "time", dict)
    cost = _require(cfg, "cost", dict)
    layout = _actuator_layout(_require(cfg, "actuators"))
    solver = SolverOptions(**cfg.get("solver", {}))
    try:
        return RhcConfig(
            T=float(T_override if T_override is not None else _require(time, "T")),
            delta=float(_require(time, "delta")),
            T_inf=float(_require(time, "T_inf")),
            dt=float(_require(time, "dt")),
            beta=float(_require(cost, "beta")),
            norm_kind=_require(cost, "norm", str),
            nx=int(mesh.get("nx", 33)),
            ny=int(mesh.get("ny", 33)),
            nu=float(cfg.get("nu", nu_default)),
            injection=cfg.get("injection", "nodal"),
            a=a, b=b, y0=y0,
            actuator_parents=layout["parents"],
            actuator_subdivisions=layout["subdivisions"],
            solver=solver,
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    rconfig = build_rhc_config(cfg)
    result = rhc_run(rconfig)
    report.write_run_artifacts(result, args.out, figures=not args.no_figures)
    if not result.completed:
        print(f"solver failure: {result.failure}", file=sys.stderr)
        return 2
    return 0


def _sweep_row(cfg, T, outdir, figures):
    rconfig = build_rhc_config(cfg, T_override=T)
    row = {"T": T}
    try:
        result = rhc_run(rconfig)
        summary = report.write_run_artifacts(
            result, os.path.join(outdir, f"T_{T:g}"), figures=figures)
        if not result.completed:
            row["error"] = result.failure
        row.update(summary["metrics"])
    except Exception as exc:
        row["error"] = str(exc)
    return row


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    sweep = _require(cfg, "sweep", list)
    if not sweep:
        raise ConfigError("config key 'sweep' must be a nonempty list of horizons")
    # validate every row before running anything
    for T in sweep:
        build_rhc_config(cfg, T_override=T)
    workers = int(os.environ.get("RHCONTROL_THREADS", "1"))
    figures = not args.no_figures
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(lambda T: _sweep_row(cfg, T, args.out, figures), sweep))
    else:
        rows = [_sweep_row(cfg, T, args.out, figures) for T in sweep]
    report.write_sweep_table(rows, args.out, figures=figures)
    if any(r.get("error") for r in rows):
        for r in rows:
            if r.get("error"):
                print(f"T={r['T']}: {r['error']}", file=sys.stderr)
        return 2
    return 0


def cmd_theory(args) -> int:
    cfg = load_config(args.config)
    rconfig = build_rhc_config(cfg)
    overrides = cfg.get("theory", {})
    ops, acts, _ = build_problem(rconfig)
    t_samples = np.linspace(0.0, rconfig.T_inf, 41)
    n_ab = theory.coefficient_bounds(rconfig.a, rconfig.b, t_samples, ops.mesh)
    known = {f.name for f in __import__("dataclasses").fields(theory.TheoryConstants)}
    bad = set(overrides) - known
    if bad:
        raise ConfigError(f"unknown theory constant(s): {sorted(bad)}")
    consts = theory.TheoryConstants(
        beta=rconfig.beta, nu=rconfig.nu, C_U=acts.C_U,
        n_actuators=acts.n_actuators, N_ab=n_ab)
    consts = replace(consts, **overrides)

    T, delta = rconfig.T, rconfig.delta
    out = {
        "N_ab": consts.N_ab,
        "C_U": consts.C_U,
        "n_actuators": consts.n_actuators,
        "c_hat_nu": consts.c_hat_nu,
        "i_HVprime": consts.i_HVprime,
        "alpha_ell": consts.alpha_ell,
        "gamma1_T": theory.gamma1(T, consts),
        "gamma1_delta": theory.gamma1(delta, consts),
        "gamma2": {
            f"{norm}_{tr}": theory.gamma2_eval(T, consts, norm, tr)
            for norm in ("l1", "l2") for tr in ("H", "V")
        },
    }
    gamma2_T = theory.gamma2_eval(T, consts, rconfig.norm_kind, "V")
    try:
        hf = theory.alpha_horizon(T, delta, gamma2_T, consts.alpha_ell)
        out.update(hf)
        eta, zeta = theory.zeta_rate(hf["alpha"], delta, out["gamma1_delta"], gamma2_T)
        out["eta"] = eta
        out["zeta"] = zeta
    except ValueError as exc:
        out["decay_certificate_error"] = str(exc)
    print(json.dumps(out, indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rhcontrol", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_out in (("run", cmd_run, True), ("sweep", cmd_sweep, True),
                                ("theory", cmd_theory, False)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        if needs_out:
            p.add_argument("--out", required=True)
            p.add_argument("--no-figures", action="store_true")
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
