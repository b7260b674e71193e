"""Command-line front end.

Every command writes one self-describing record to stdout; diagnostics go
to stderr. Exit status is 0 on success, 2 on invalid input and 1 on an
internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import ensemble as ens
from .impulsive import born_sample, impulsive_measure
from .protective import perturbation_report, reconstruct_state, run_protective
from .spin import SystemConfig, UnitaryFamilyParams, measurement_unitary

SCHEMA_VERSION = "1"
CSV_HEADER = ("T", "theta_error", "infidelity", "flip_prob_T2")

UNITS = ("Units: hbar = 1; energies (b0, ea) in units of the protection field, "
         "times T in units of 1/b0 (the dimensionless product is b0*T).")


class UsageError(Exception):
    """Invalid parameter value; the message names the offending flag."""


# ---------------------------------------------------------------- encoding

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _num(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    return text if any(c in text for c in ".en") else text + ".0"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    obj = _plain(obj)
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, float):
        return _num(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        body = ",\n".join(inner + dumps(v, indent, _level + 1) for v in obj)
        return "[\n" + body + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(f"{inner}{json.dumps(k)}: {dumps(v, indent, _level + 1)}"
                          for k, v in obj.items())
        return "{\n" + body + "\n" + pad + "}"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow([_num(float(row[k])) for k in CSV_HEADER])
    return buf.getvalue()


# ---------------------------------------------------------------- helpers

def _check(cond: bool, flag: str, msg: str):
    if not cond:
        raise UsageError(f"--{flag}: {msg}")


def _config(args, T: float | None = None) -> SystemConfig:
    T = args.T if T is None else T
    _check(0.0 <= args.alpha_sq <= 1.0, "alpha-sq", f"must lie in [0, 1], got {args.alpha_sq}")
    _check(T > 0, "T", f"must be positive, got {T}")
    _check(args.b0 > 0, "b0", f"must be positive, got {args.b0}")
    _check(0.0 <= args.ramp_frac < 0.5, "ramp-frac", f"must lie in [0, 0.5), got {args.ramp_frac}")
    if args.steps is not None:
        _check(args.steps >= 0, "steps", "must be non-negative")
        _check(args.steps > 0 or args.profile == "constant", "steps",
               "0 (exact) requires --profile constant")
    return SystemConfig.from_populations(
        args.alpha_sq, args.rel_phase, T=T, profile=args.profile,
        ramp_fraction=args.ramp_frac, b0=args.b0, ea=args.ea, meas_axis=args.axis)


def _row(res) -> dict:
    return {
        "T": res.T,
        "theta_error": res.theta_error,
        "infidelity": 1.0 - res.system_fidelity,
        "flip_prob_T2": res.flip_probability * res.T ** 2,
    }


def _protective_outputs(res) -> dict:
    out = {
        "T": res.T,
        "system_fidelity": res.system_fidelity,
        "flip_probability": res.flip_probability,
        "apparatus_bloch": res.apparatus_bloch,
        "theta_extracted": res.theta_extracted,
        "expectation_estimate": res.expectation_estimate,
        "target_expectation": res.target_expectation,
    }
    out.update(_row(res))
    if res.final_joint is not None:
        out["final_joint"] = res.final_joint
    return out


# ---------------------------------------------------------------- commands

def cmd_protect(args):
    cfg = _config(args)
    _check(args.shots is None or args.shots >= 1, "shots", "must be >= 1")
    res = run_protective(cfg, steps=args.steps, shots=args.shots, seed=args.seed)
    return _protective_outputs(res), res.sampling, [_row(res)]


def cmd_sweep_t(args):
    _check(args.t_min > 0, "t-min", f"must be positive, got {args.t_min}")
    _check(args.t_max >= args.t_min, "t-max", "must be >= --t-min")
    _check(args.points >= 1, "points", "must be >= 1")
    _check(args.workers >= 1, "workers", "must be >= 1")
    space = np.geomspace if args.log else np.linspace
    ts = [float(t) for t in space(args.t_min, args.t_max, args.points)]
    cfgs = [_config(args, T=t) for t in ts]

    def one(cfg):
        return _row(run_protective(cfg, steps=args.steps))

    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        rows = list(pool.map(one, cfgs))
    rows.sort(key=lambda r: r["T"])
    return {"rows": rows}, None, rows


def cmd_reconstruct(args):
    cfg = _config(args)
    rec = reconstruct_state(cfg)
    out = {
        "bloch_estimate": rec.bloch_estimate,
        "bloch_true": rec.bloch_true,
        "distance": rec.distance,
        "final_fidelity": rec.final_fidelity,
        "stages": {a: {"expectation_estimate": r.expectation_estimate,
                       "target_expectation": r.target_expectation,
                       "system_fidelity": r.system_fidelity}
                   for a, r in rec.stages.items()},
    }
    return out, None, None


def cmd_impulsive(args):
    _check(0.0 <= args.alpha_sq <= 1.0, "alpha-sq", f"must lie in [0, 1], got {args.alpha_sq}")
    _check(args.shots >= 1, "shots", f"must be >= 1, got {args.shots}")
    beta = math.sqrt(1 - args.alpha_sq) * complex(math.cos(args.rel_phase), math.sin(args.rel_phase))
    psi = np.array([math.sqrt(args.alpha_sq), beta])
    res = impulsive_measure(psi, measurement_unitary(UnitaryFamilyParams()))
    counts = born_sample(res, args.shots, args.seed)
    out = {"outcome_probs": list(res.outcome_probs),
           "counts": {k: counts[k] for k in ("n_up", "n_down", "shots")},
           "post_state": res.post_state}
    return out, {k: counts[k] for k in ("algorithm", "numpy", "seed")}, None


def cmd_ensemble(args):
    try:
        ns = [int(v) for v in args.n_list.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--n-list: expected comma-separated integers, got {args.n_list!r}") from None
    _check(bool(ns) and min(ns) >= 1, "n-list", "values must be positive integers")
    if args.brute:
        _check(max(ns) <= ens.BRUTE_MAX_N, "n-list",
               f"--brute supports n <= {ens.BRUTE_MAX_N}, got {max(ns)}")
    cfg = _config(args)
    evolve = ens.ensemble_evolve_brute if args.brute else ens.ensemble_evolve_factorized
    results = []
    for n in sorted(ns):
        r = evolve(cfg, n)
        results.append({"n": r.n, "mean_spin": r.mean_spin, "variance_spin": r.variance_spin,
                        "relative_fluctuation": r.relative_fluctuation,
                        "pointer_angle": r.pointer_angle, "angle_uncertainty": r.angle_uncertainty})
    out = {"results": results}
    if len(ns) >= 4 and max(ns) >= 4 * min(ns):
        fit = ens.fluctuation_scaling(cfg, ns)
        out["fit"] = {"concentrated": fit.concentrated, "slope": fit.slope,
                      "intercept": fit.intercept, "residual": fit.residual}
    return out, None, None


def cmd_perturb(args):
    cfg = _config(args)
    rep = perturbation_report(cfg, args.a_i)
    out = {"a_i": rep.a_i, "T": rep.T, "exact_energies": rep.exact_energies,
           "order1_energies": rep.order1_energies, "order2_energies": rep.order2_energies,
           "state_correction_norm": rep.state_correction_norm,
           "matrix_elements": rep.matrix_elements}
    return out, None, None


COMMANDS = {
    "protect": cmd_protect,
    "sweep-t": cmd_sweep_t,
    "reconstruct": cmd_reconstruct,
    "impulsive": cmd_impulsive,
    "ensemble": cmd_ensemble,
    "perturb": cmd_perturb,
}

# flags that are not part of the reproducible configuration
_NOT_CONFIG = {"command", "out", "workers"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="protmeas", description=__doc__, epilog=UNITS,
                                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    state = argparse.ArgumentParser(add_help=False)
    state.add_argument("--alpha-sq", type=float, default=0.3,
                       help="|alpha|^2, population of |up> in the unknown state (default 0.3)")
    state.add_argument("--rel-phase", type=float, default=0.0,
                       help="phase of beta relative to alpha, radians (default 0)")

    scenario = argparse.ArgumentParser(add_help=False, parents=[state])
    scenario.add_argument("--b0", type=float, default=1.0, help="protection field strength B0 (energy)")
    scenario.add_argument("--ea", type=float, default=0.5, help="apparatus energy E^a (energy)")
    scenario.add_argument("--T", type=float, default=1000.0, help="measurement time (1/energy)")
    scenario.add_argument("--axis", choices=("x", "y", "z"), default="z",
                          help="measured projector P_{axis,+}")
    scenario.add_argument("--profile", choices=("constant", "cosine-ramp"), default="constant")
    scenario.add_argument("--ramp-frac", type=float, default=0.1,
                          help="edge width of the cosine ramp as a fraction of T")
    scenario.add_argument("--steps", type=int, default=None,
                          help="time steps for ramped profiles (default max(1000, 20*b0*T))")

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--out", choices=("json", "csv"), default="json")

    p = sub.add_parser("protect", parents=[scenario, out], epilog=UNITS, allow_abbrev=False,
                       help="one protective measurement run")
    p.add_argument("--shots", type=int, default=None, help="sample the pointer readout")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("sweep-t", parents=[scenario, out], epilog=UNITS, allow_abbrev=False,
                       help="protective runs over a range of T")
    p.add_argument("--t-min", type=float, required=True)
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--points", type=int, default=6)
    p.add_argument("--log", action="store_true", help="log-spaced T values")
    p.add_argument("--workers", type=int, default=1, help="concurrent runs")

    sub.add_parser("reconstruct", parents=[scenario], epilog=UNITS, allow_abbrev=False,
                   help="three-axis state reconstruction on one system")

    p = sub.add_parser("impulsive", parents=[state], epilog=UNITS, allow_abbrev=False,
                       help="conventional measurement with Born sampling")
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ensemble", parents=[scenario], epilog=UNITS, allow_abbrev=False,
                       help="N-detector classical pointer")
    p.add_argument("--n-list", required=True, help="comma-separated detector counts")
    p.add_argument("--brute", action="store_true", help="full joint propagation (n <= 10)")

    p = sub.add_parser("perturb", parents=[scenario], epilog=UNITS, allow_abbrev=False,
                       help="exact vs perturbative branch energies")
    p.add_argument("--a-i", type=int, choices=(0, 1), required=True)
    return parser


def config_echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}


def config_argv(command: str, config: dict) -> list[str]:
    """Rebuild command-line flags from a record's config echo."""
    argv = [command]
    for key, value in config.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        elif value is not None:
            argv += [flag, _num(value) if isinstance(value, float) else str(value)]
    return argv


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        outputs, generator, rows = COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"protmeas {args.command}: error: {exc}", file=stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"protmeas {args.command}: internal error: {exc!r}", file=stderr)
        return 1
    elapsed = time.perf_counter() - start
    if getattr(args, "out", "json") == "csv":
        stdout.write(_csv(rows))
        return 0
    record = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "config": config_echo(args),
        "outputs": outputs,
        "timing": {"wall_seconds": elapsed},
        "generator": generator,
    }
    stdout.write(dumps(record) + "\n")
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
