"""Command line interface: ``jumpchange {simulate,analyze,estimate,test,mc}``.

Settings come from an optional TOML file (``--config``) whose tables
``[kernel]``, ``[sampling]``, ``[analysis]`` and ``[mc]`` mirror the flags;
flags given on the command line win.  Exit codes: 0 success, 2 bad
configuration, 3 bad input data.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

from . import _rng
from .changepoint import adaptive_estimate
from .changetest import test_global, test_local
from .estimator import IncrementGrid, build_prefix, sup_d_n, sup_d_n_by_z
from .harness import (
    ConfigError,
    DataError,
    McConfig,
    ingest_csv,
    kernel_from_config,
    load_config,
    rows_to_csv,
    run_sweep,
    write_path_csv,
    zgrid_from_config,
)
from .simulate import ContinuousPart, PathConfig, simulate_path

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

DEFAULTS = {
    "seed": 0,
    "threads": None,
    "n": 10000,
    "delta_n": None,
    "k_n": 50.0,
    "subsample": 15,
    "trunc_eps": 1e-4,
    "continuous": False,
    "drift": 1.0,
    "vol": 1.0,
    "zgrid": "pure",
    "theta_pre": 0.1,
    "alpha": None,
    "r": 0.01,
    "B": 200,
    "multiplier": "rademacher",
    "reuse_multipliers": False,
    "z0": [1.0],
    "runs": 300,
    "procedures": ["global"],
    "sweep_axis": None,
    "sweep_values": [],
}

KERNEL_FLAGS = ("variant", "theta0", "amplitude", "smoothness", "target_d1")


def _settings(args) -> dict:
    """Defaults, then the config file, then explicit flags."""
    out = dict(DEFAULTS)
    kernel = {"variant": "sim"}
    if args.config:
        raw = load_config(args.config)
        for key, value in raw.items():
            if key == "kernel":
                if not isinstance(value, dict):
                    raise ConfigError("[kernel] must be a table")
                kernel.update(value)
            elif isinstance(value, dict):
                out.update(value)
            else:
                out[key] = value
    for key, value in vars(args).items():
        if value is None or key in ("command", "config", "func", "input", "out", "csv"):
            continue
        if key in KERNEL_FLAGS:
            kernel[key] = value
        else:
            out[key] = value
    out["kernel"] = kernel
    unknown = set(out) - set(DEFAULTS) - {"kernel", "global_test"}
    if unknown:
        raise ConfigError(f"unknown settings: {sorted(unknown)}")
    return out


def _delta(s) -> float:
    if s["delta_n"] is not None:
        return float(s["delta_n"])
    return float(s["k_n"]) / int(s["n"])


def _emit(text: str, dest) -> None:
    if dest in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(dest, "w", newline="") as fh:
            fh.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _load_grid(path) -> IncrementGrid:
    return IncrementGrid.from_path(ingest_csv(path))


def cmd_simulate(args, s):
    delta = _delta(s)
    zg = zgrid_from_config(s["zgrid"], delta)
    kernel = kernel_from_config(s["kernel"], zg)
    cont = ContinuousPart(float(s["drift"]), float(s["vol"])) if s["continuous"] else None
    cfg = PathConfig(
        n=int(s["n"]),
        delta_n=delta,
        kernel=kernel,
        subsample=int(s["subsample"]),
        continuous=cont,
        trunc_eps=float(s["trunc_eps"]),
        seed=_rng.resolve_seed(s["seed"]),
    )
    path = simulate_path(cfg)
    import io

    buf = io.StringIO()
    write_path_csv(path, buf)
    _emit(buf.getvalue(), args.out)


def cmd_analyze(args, s):
    grid = _load_grid(args.input)
    zg = zgrid_from_config(s["zgrid"], grid.delta_n)
    stats = build_prefix(grid, zg)
    by_z = sup_d_n_by_z(stats)
    curve = by_z.max(axis=1)
    root = math.sqrt(grid.k_n)
    report = {
        "n": grid.n,
        "delta_n": grid.delta_n,
        "k_n": grid.k_n,
        "zgrid": list(zg.values),
        "jump_counts": [int(c) for c in stats.totals],
        "U_n_at_1": [float(c) / grid.k_n for c in stats.totals],
        "sup_D_n_at_1": float(curve[-1]),
        "scaled_sup_D_n_at_1": root * float(curve[-1]),
        "scaled_W_n": {repr(z): root * float(by_z[-1, k]) for k, z in enumerate(zg.values)},
        "curve": {
            "theta": [j / grid.n for j in range(grid.n + 1)],
            "scaled_sup_D_n": [root * float(v) for v in curve],
        },
    }
    _emit(_dumps(report), args.out)


def cmd_estimate(args, s):
    grid = _load_grid(args.input)
    zg = zgrid_from_config(s["zgrid"], grid.delta_n)
    est = adaptive_estimate(
        grid,
        zg,
        theta_pre=float(s["theta_pre"]),
        alpha=0.1 if s["alpha"] is None else float(s["alpha"]),
        r=float(s["r"]),
        B=int(s["B"]),
        multiplier=s["multiplier"],
        seed=_rng.resolve_seed(s["seed"]),
        reuse_multipliers=bool(s["reuse_multipliers"]),
        threads=s["threads"],
    )
    _emit(_dumps(est.to_dict()), args.out)


def cmd_test(args, s):
    grid = _load_grid(args.input)
    alpha = 0.05 if s["alpha"] is None else float(s["alpha"])
    seed = _rng.resolve_seed(s["seed"])
    if args.z0 is not None:
        rep = test_local(grid, float(args.z0), alpha, int(s["B"]), s["multiplier"], seed, s["threads"])
    else:
        zg = zgrid_from_config(s["zgrid"], grid.delta_n)
        rep = test_global(grid, zg, alpha, int(s["B"]), s["multiplier"], seed, s["threads"])
    _emit(_dumps(rep.to_dict()), args.out)


def cmd_mc(args, s):
    delta = _delta(s)
    zg = zgrid_from_config(s["zgrid"], delta)
    kernel = kernel_from_config(s["kernel"], zg)
    procs = s["procedures"]
    if isinstance(procs, str):
        procs = [p.strip() for p in procs.split(",") if p.strip()]
    z0 = s["z0"]
    if not isinstance(z0, (list, tuple)):
        z0 = [z0]
    target = s["kernel"].get("target_d1")
    cfg = McConfig(
        kernel=kernel,
        n=int(s["n"]),
        delta_n=delta,
        continuous=bool(s["continuous"]),
        runs=int(s["runs"]),
        B=int(s["B"]),
        alpha=(0.05 if "estimate" not in procs else 0.1) if s["alpha"] is None else float(s["alpha"]),
        r=float(s["r"]),
        theta_pre=float(s["theta_pre"]),
        zgrid=zg,
        z0=tuple(float(z) for z in z0),
        procedures=tuple(procs),
        multiplier=str(s["multiplier"]),
        subsample=int(s["subsample"]),
        trunc_eps=float(s["trunc_eps"]),
        seed=_rng.resolve_seed(s["seed"]),
        target_d1=None if target is None else float(target),
    )
    axis = s["sweep_axis"]
    values = s["sweep_values"]
    if isinstance(values, str):
        values = [float(v) for v in values.split(",") if v.strip()]
    if axis is not None and not values:
        raise ConfigError("sweep_axis needs sweep_values")
    start = time.perf_counter()
    reports, rows = run_sweep(cfg, axis, values, s["threads"], kernel_spec=s["kernel"])
    elapsed = time.perf_counter() - start
    body = {"points": [r.to_dict() for r in reports], "sweep_axis": axis}
    _emit(_dumps(body), args.out)
    if args.csv:
        _emit(rows_to_csv(rows), args.csv)
    print(f"mc: {len(reports)} scenario point(s) in {elapsed:.1f} s", file=sys.stderr)


def _csv_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _zgrid_arg(text):
    if text in ("pure", "sqrt"):
        return text
    return _csv_floats(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML settings file; flags override it")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help=f"worker threads (default ${_rng.THREADS_ENV} or 1)")
    common.add_argument("--out", default="-", help="output file (default stdout)")
    common.add_argument("--zgrid", type=_zgrid_arg, help="'pure', 'sqrt' or comma-separated levels")

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--variant", choices=["sim", "abrupt", "constant", "stable"])
    sampling.add_argument("--theta0", type=float)
    sampling.add_argument("--amplitude", type=float)
    sampling.add_argument("--smoothness", type=float)
    sampling.add_argument("--target-d1", dest="target_d1", type=float,
                          help="calibrate the amplitude so that the true DD(1) equals this")
    sampling.add_argument("--n", type=int)
    sampling.add_argument("--delta-n", dest="delta_n", type=float)
    sampling.add_argument("--k-n", dest="k_n", type=float, help="sets delta_n = k_n / n")
    sampling.add_argument("--subsample", type=int)
    sampling.add_argument("--trunc-eps", dest="trunc_eps", type=float)
    sampling.add_argument("--continuous", action="store_const", const=True)
    sampling.add_argument("--drift", type=float)
    sampling.add_argument("--vol", type=float)

    boot = argparse.ArgumentParser(add_help=False)
    boot.add_argument("--alpha", type=float)
    boot.add_argument("--B", type=int)
    boot.add_argument("--multiplier", choices=["rademacher", "normal"])

    est = argparse.ArgumentParser(add_help=False)
    est.add_argument("--theta-pre", dest="theta_pre", type=float)
    est.add_argument("--r", type=float)
    est.add_argument("--reuse-multipliers", dest="reuse_multipliers", action="store_const", const=True)

    parser = argparse.ArgumentParser(prog="jumpchange", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common, sampling], help="simulate a path, write t,x CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", parents=[common], help="tail statistics of a t,x CSV")
    p.add_argument("input")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("estimate", parents=[common, boot, est], help="estimate the change point")
    p.add_argument("input")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("test", parents=[common, boot], help="bootstrap test for a change")
    p.add_argument("input")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--global", dest="global_test", action="store_const", const=True,
                     help="test over the whole z grid (default)")
    grp.add_argument("--z0", type=float, help="test at a single level")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("mc", parents=[common, sampling, boot, est], help="Monte Carlo study")
    p.add_argument("--runs", type=int)
    p.add_argument("--procedures", help="comma-separated subset of global,local,estimate")
    p.add_argument("--z0", type=_csv_floats, help="levels for the local test")
    p.add_argument("--sweep-axis", dest="sweep_axis",
                   choices=["k_n", "r", "theta0", "w", "z0", "theta_pre", "target_d1"])
    p.add_argument("--sweep-values", dest="sweep_values", type=_csv_floats)
    p.add_argument("--csv", help="plot-ready CSV output")
    p.set_defaults(func=cmd_mc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = _settings(args)
        args.func(args, settings)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
