"""Command-line interface.

Subcommands:
  run             propagate one configuration (or a sweep) and write artifacts
  variational     solver report: V_R, B, R, A_B, branch table (+ F(w) CSV)
  dynamics        alias of run restricted to a single trajectory
  rates           sweep + incoherent rate fit (transfer-rate curves)
  oracle-compare  discretized-bath exact propagation vs a master-equation theory
  presets         list bundled figure parameter sets

Exit codes: 0 ok, 2 config/schema violation, 3 numerical divergence
(partial outputs kept), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import driver, oracle
from .config import ConfigError, RunConfig, load_config, validate_config
from .correlations import dump_kernels_csv
from .dynamics import fit_rates
from .presets import PRESETS, preset_config
from .quadrature import QuadratureError
from .units import PS_UNITS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _atomic_write(path, writer):
    tmp = str(path) + ".tmp"
    writer(tmp)
    os.replace(tmp, path)


def _write_json(path, payload):
    def w(tmp):
        with open(tmp, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _atomic_write(path, w)


def _solution_summary(sol, units=PS_UNITS):
    out = {
        "V_R_cm1": units.from_internal(sol.v_r),
        "B": sol.b,
        "R_cm1": units.from_internal(sol.r),
        "A_B_cm1": units.from_internal(sol.a_b),
        "eta_cm1": units.from_internal(sol.eta),
        "theta_rad": sol.theta,
        "diverged": bool(sol.diverged),
        "kind": sol.kind,
        "branches": [
            {"V_R_cm1": units.from_internal(br.v_r), "B": br.b,
             "R_cm1": units.from_internal(br.r),
             "A_B_cm1": units.from_internal(br.a_b),
             "diverged": bool(br.diverged), "residual": br.residual}
            for br in sol.branches],
    }
    return out


def _run_point(cfg_dict, out_dir, tag, dump_kernels, fit):
    """One configuration -> artifacts; returns the summary payload.
    Module-level so sweep points can run in a process pool."""
    cfg = validate_config(cfg_dict)
    units = PS_UNITS
    result = driver.simulate(
        cfg.theory, units.to_internal(cfg.epsilon_cm1),
        units.to_internal(cfg.v_cm1), cfg.density(units), cfg.beta(units),
        t_max=units.time_to_internal(cfg.t_max_ps),
        dt=None if cfg.dt_ps is None else units.time_to_internal(cfg.dt_ps),
        initial_condition=cfg.initial_condition, spatial=cfg.spatial(units),
        spec=cfg.quad)
    traj = result.trajectory
    summary = {
        "config": cfg.as_dict(),
        "solution": _solution_summary(result.solution, units),
        "steady_state": traj.steady_state(),
        "trace_error": traj.trace_error(),
        "hermiticity_error": traj.hermiticity_error(),
        "unphysical": bool(traj.unphysical),
    }
    if fit:
        rf = fit_rates(traj)
        summary["fitted_rates"] = {
            "kappa_plus_per_ps": rf.kappa_plus, "kappa_minus_per_ps":
            rf.kappa_minus, "residual": rf.residual, "p_ss": rf.p_ss,
            "fit_window_ps": list(rf.window),
            "coherent_warning": bool(rf.coherent_warning)}
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        base = os.path.join(out_dir, tag)
        _atomic_write(base + "_trajectory.csv", traj.write_csv)
        if dump_kernels and result.kernels is not None:
            _atomic_write(base + "_kernels.csv",
                          lambda p: dump_kernels_csv(result.kernels, p))
        _write_json(base + "_summary.json", summary)
    return summary


def _sweep_configs(cfg: RunConfig):
    for value in cfg.sweep_values:
        point = json.loads(json.dumps(cfg.raw))
        point.pop("sweep", None)
        param = cfg.sweep_parameter
        if param == "lambda_cm1":
            point["bath"]["lambda_cm1"] = value
        elif param == "T_kelvin":
            point["bath"]["T_kelvin"] = value
        elif param == "epsilon_cm1":
            point["system"]["epsilon_cm1"] = value
        elif param == "V_cm1":
            point["system"]["V_cm1"] = value
        elif param == "d_over_v_ps":
            point.setdefault("correlated", {})["d_over_v_ps"] = value
        yield value, point


def _n_workers(args):
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("VPME_THREADS")
    return max(1, int(env)) if env else 1


def _load(args) -> RunConfig:
    if args.preset:
        data = preset_config(args.preset)
        if args.config:
            raise ConfigError("give either --config or --preset, not both")
        cfg = validate_config(data)
    elif args.config:
        cfg = load_config(args.config)
    else:
        raise ConfigError("a --config file or --preset name is required")
    if args.theory:
        data = dict(cfg.raw)
        data["theory"] = args.theory
        cfg = validate_config(data)
    return cfg


def _point_worker(item):
    value, point_cfg, out_dir, tag, dump_kernels, fit = item
    summary = _run_point(point_cfg, out_dir, tag, dump_kernels, fit)
    return value, summary


def cmd_run(args, fit=False):
    cfg = _load(args)
    t0 = time.monotonic()
    if cfg.sweep_parameter is None:
        summary = _run_point(cfg.raw if cfg.raw else cfg.as_dict(), args.out,
                             "run", args.dump_kernels, fit)
        print(json.dumps(summary, indent=2, sort_keys=True))
        code = EXIT_NUMERICAL if summary["unphysical"] else EXIT_OK
    else:
        items = [(value, point, args.out,
                  "%s_%g" % (cfg.sweep_parameter, value),
                  args.dump_kernels, fit)
                 for value, point in _sweep_configs(cfg)]
        workers = _n_workers(args)
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_point_worker, items))
        else:
            results = [_point_worker(item) for item in items]
        table = {"sweep_parameter": cfg.sweep_parameter,
                 "points": [{"value": v, **s} for v, s in results]}
        if args.out is not None:
            os.makedirs(args.out, exist_ok=True)
            _write_json(os.path.join(args.out, "sweep_summary.json"), table)
        print(json.dumps(table, indent=2, sort_keys=True))
        code = EXIT_NUMERICAL if any(s["unphysical"] for _, s in results) \
            else EXIT_OK
    print("elapsed: %.2f s" % (time.monotonic() - t0), file=sys.stderr)
    return code


def cmd_variational(args):
    cfg = _load(args)
    units = PS_UNITS
    sol = driver.make_solution(
        cfg.theory if cfg.theory != "forster" else "variational",
        units.to_internal(cfg.epsilon_cm1), units.to_internal(cfg.v_cm1),
        cfg.density(units), cfg.beta(units), spatial=cfg.spatial(units),
        spec=cfg.quad)
    payload = _solution_summary(sol, units)
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "variational_summary.json"),
                    payload)
        wgrid = np.linspace(0.0, 10.0 * cfg.density(units).omega_c, 2001)[1:]
        fvals = sol.f(wgrid)

        def w(tmp):
            np.savetxt(tmp, np.column_stack([units.from_internal(wgrid),
                                             fvals]),
                       delimiter=",", header="omega_cm1,F", comments="",
                       fmt="%.11e")
        _atomic_write(os.path.join(args.out, "displacement_fraction.csv"), w)
    return EXIT_OK


def cmd_rates(args):
    cfg = _load(args)
    units = PS_UNITS
    values = cfg.sweep_values if cfg.sweep_parameter else [cfg.lambda_cm1]
    t0 = time.monotonic()
    points = []
    for value, point in (_sweep_configs(cfg) if cfg.sweep_parameter
                         else [(cfg.lambda_cm1, cfg.raw)]):
        pc = validate_config(point)
        fit, result = driver.transfer_rate(
            pc.theory, units.to_internal(pc.epsilon_cm1),
            units.to_internal(pc.v_cm1), pc.density(units), pc.beta(units),
            spec=pc.quad, initial_condition=pc.initial_condition)
        points.append({
            "value": value,
            "kappa_plus_per_ps": fit.kappa_plus,
            "kappa_minus_per_ps": fit.kappa_minus,
            "p_ss": fit.p_ss, "residual": fit.residual,
            "coherent_warning": bool(fit.coherent_warning),
            "solution": _solution_summary(result.solution, units)})
    table = {"sweep_parameter": cfg.sweep_parameter or "lambda_cm1",
             "theory": cfg.theory, "points": points}
    print(json.dumps(table, indent=2, sort_keys=True))
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "rates_%s.json" % cfg.theory),
                    table)

        def w(tmp):
            data = np.array([[p["value"], p["kappa_plus_per_ps"],
                              p["kappa_minus_per_ps"]] for p in points])
            np.savetxt(tmp, data, delimiter=",",
                       header="%s,kappa_plus_per_ps,kappa_minus_per_ps"
                       % table["sweep_parameter"], comments="", fmt="%.11e")
        _atomic_write(os.path.join(args.out, "rates_%s.csv" % cfg.theory), w)
    print("elapsed: %.2f s" % (time.monotonic() - t0), file=sys.stderr)
    return EXIT_OK


def cmd_oracle_compare(args):
    cfg = _load(args)
    units = PS_UNITS
    if cfg.t_kelvin != 0.0:
        raise ConfigError("the exact oracle is defined at T = 0 only")
    density = cfg.density(units)
    eps = units.to_internal(cfg.epsilon_cm1)
    v = units.to_internal(cfg.v_cm1)
    t_max = units.time_to_internal(cfg.t_max_ps)
    beta = math.inf

    result = driver.simulate(cfg.theory, eps, v, density, beta, t_max=t_max,
                             initial_condition=cfg.initial_condition,
                             spec=cfg.quad)
    bath = oracle.discretize(density, args.modes)
    fractions = result.solution.f(bath.omegas)
    fock = oracle.FockConfig(n_max=args.n_max, displaced=True)
    dt_exact = t_max / max(int(t_max / (0.01 / density.omega_c)), 200)
    exact = oracle.exact_propagate(eps, v, bath, fock, t_max, dt_exact,
                                   f_fractions=fractions)
    me_pop = np.interp(exact.times, result.trajectory.times,
                       result.trajectory.rho11)
    sup = float(np.max(np.abs(me_pop - exact.rho11)))
    payload = {"theory": cfg.theory, "sup_norm_deviation": sup,
               "modes": args.modes, "n_max": args.n_max,
               "dimension": exact.metadata["dimension"],
               "leakage": exact.metadata["leakage"]}
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        _atomic_write(os.path.join(args.out, "exact_trajectory.csv"),
                      exact.write_csv)
        _atomic_write(os.path.join(args.out, "%s_trajectory.csv" % cfg.theory),
                      result.trajectory.write_csv)
        _write_json(os.path.join(args.out, "oracle_compare.json"), payload)
    return EXIT_OK


def cmd_presets(args):
    for name in sorted(PRESETS):
        cfg = PRESETS[name]
        bath = cfg["bath"]
        print("%-14s %-12s lambda=%g cm-1  omega_c=%g cm-1  T=%g K  %s"
              % (name, bath["type"], bath["lambda_cm1"], bath["omega_c_cm1"],
                 bath["T_kelvin"], cfg.get("theory", "variational")))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="vpme",
        description="Donor-acceptor energy transfer with the variational "
                    "polaron time-local master equation.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_config=True):
        if needs_config:
            sp.add_argument("--config", help="JSON configuration file")
            sp.add_argument("--preset", help="bundled parameter set name")
            sp.add_argument("--theory", help="override the config theory",
                            choices=("variational", "redfield", "polaron",
                                     "forster"))
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--dump-kernels", action="store_true",
                        help="also write the correlation-kernel tables")
        sp.add_argument("--threads", type=int, default=None,
                        help="sweep worker processes (default: "
                             "VPME_THREADS or 1)")

    for name in ("run", "dynamics"):
        sp = sub.add_parser(name, help="propagate and write artifacts")
        common(sp)
    sp = sub.add_parser("variational", help="solver report")
    common(sp)
    sp = sub.add_parser("rates", help="sweep + incoherent rate fit")
    common(sp)
    sp = sub.add_parser("oracle-compare",
                        help="exact discretized-bath reference vs a theory")
    common(sp)
    sp.add_argument("--modes", type=int, default=6,
                    help="bath modes per site (default 6)")
    sp.add_argument("--n-max", type=int, default=3,
                    help="total-quanta truncation (default 3)")
    sp = sub.add_parser("presets", help="list bundled parameter sets")
    common(sp, needs_config=False)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("run", "dynamics"):
            return cmd_run(args)
        if args.command == "variational":
            return cmd_variational(args)
        if args.command == "rates":
            return cmd_rates(args)
        if args.command == "oracle-compare":
            return cmd_oracle_compare(args)
        if args.command == "presets":
            return cmd_presets(args)
        raise AssertionError("unhandled command")
    except (ConfigError, KeyError) as err:
        print("config error: %s" % err, file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as err:
        print("numerical failure: %s" % err, file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as err:
        print("i/o failure: %s" % err, file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
