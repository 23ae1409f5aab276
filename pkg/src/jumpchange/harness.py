"""Configuration, file IO and the Monte Carlo study runner."""

from __future__ import annotations

import csv
import functools
import io
import json
import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from . import _rng
from .bootstrap import get_multiplier
from .changepoint import adaptive_estimate
from .changetest import test_global, test_local
from .estimator import IncrementGrid
from .kernel import (
    AbruptKernel,
    ConstantKernel,
    PowerTail,
    SimKernel,
    StableKernel,
    TailKernel,
    ZGrid,
    sup_variation,
    true_change_point,
)
from .simulate import ContinuousPart, PathConfig, SamplePath, simulate_path

try:  # Python < 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "DataError",
    "load_config",
    "kernel_from_config",
    "calibrate_amplitude",
    "scenario_truth",
    "ingest_csv",
    "write_path_csv",
    "McConfig",
    "McReport",
    "run_mc",
    "run_sweep",
]

PROCEDURES = ("global", "local", "estimate")
SWEEP_AXES = ("k_n", "r", "theta0", "w", "z0", "theta_pre", "target_d1")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DataError(ValueError):
    """Malformed input data."""


# -- config -------------------------------------------------------------------


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None


def _power_tail(spec, name) -> PowerTail:
    if not isinstance(spec, dict):
        raise ConfigError(f"{name} must be a table with scale and index")
    try:
        return PowerTail(float(spec["scale"]), float(spec.get("index", 0.5)), bool(spec.get("two_sided", False)))
    except KeyError as exc:
        raise ConfigError(f"{name} lacks {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None


@functools.lru_cache(maxsize=128)
def calibrate_amplitude(
    theta0: float, smoothness: float, target: float, zgrid: ZGrid, resolution: int = 1000
) -> float:
    """Amplitude ``A`` of :class:`SimKernel` with ``sup_variation(1) = target``."""
    if target <= 0:
        return 0.0
    if not 0 <= theta0 < 1:
        raise ConfigError("a positive target needs theta0 < 1")

    def excess(a):
        k = SimKernel(theta0, a, smoothness)
        return sup_variation(k, 1.0, zgrid, resolution=resolution) - target

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2.0
        if hi > 1e9:
            raise ConfigError(f"target {target} out of reach for theta0={theta0}")
    return optimize.brentq(excess, 0.0, hi, xtol=1e-12, rtol=1e-12)


def kernel_from_config(spec: dict, zgrid: Optional[ZGrid] = None) -> TailKernel:
    """Build a kernel from a ``[kernel]`` table."""
    spec = dict(spec or {})
    variant = str(spec.pop("variant", "sim")).lower()
    try:
        if variant == "sim":
            theta0 = float(spec.get("theta0", 1.0))
            w = float(spec.get("smoothness", spec.get("w", 1.0)))
            if "target_d1" in spec:
                if zgrid is None:
                    raise ConfigError("target_d1 needs a z grid")
                amp = calibrate_amplitude(theta0, w, float(spec["target_d1"]), zgrid)
            else:
                amp = float(spec.get("amplitude", 0.0))
            return SimKernel(theta0, amp, w)
        if variant == "abrupt":
            return AbruptKernel(
                _power_tail(spec.get("nu1"), "nu1"),
                _power_tail(spec.get("nu2"), "nu2"),
                float(spec["theta0"]),
            )
        if variant == "constant":
            return ConstantKernel(_power_tail(spec.get("nu"), "nu"))
        if variant == "stable":
            a0 = float(spec.get("scale", 1.0))
            b0 = float(spec.get("index", 1.0))
            t0 = float(spec.get("theta0", 1.0))
            da = float(spec.get("scale_slope", 0.0))
            db = float(spec.get("index_slope", 0.0))

            def scale(y):
                return a0 + da * max(y - t0, 0.0)

            def index(y):
                return b0 + db * max(y - t0, 0.0)

            bps = (t0,) if 0 < t0 < 1 else ()
            return StableKernel(scale, index, bps)
    except KeyError as exc:
        raise ConfigError(f"kernel '{variant}' lacks {exc}") from None
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"kernel '{variant}': {exc}") from None
    raise ConfigError(f"unknown kernel variant {variant!r}")


def zgrid_from_config(spec, delta_n: float) -> ZGrid:
    if spec is None or spec == "pure":
        return ZGrid.pure_jump()
    if spec == "sqrt":
        return ZGrid.sqrt_delta(delta_n)
    if isinstance(spec, dict) and "sqrt_multiples" in spec:
        return ZGrid.sqrt_delta(delta_n, tuple(float(c) for c in spec["sqrt_multiples"]))
    try:
        return ZGrid([float(z) for z in spec])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad zgrid {spec!r}: {exc}") from None


def scenario_truth(kernel: TailKernel, zgrid: ZGrid) -> float:
    """The change point the estimator should find for ``kernel``."""
    if isinstance(kernel, SimKernel):
        return kernel.theta0 if kernel.amplitude > 0 else 1.0
    if isinstance(kernel, AbruptKernel):
        return kernel.theta0 if kernel.variation_bound(zgrid) > 0 else 1.0
    if isinstance(kernel, ConstantKernel):
        return 1.0
    return true_change_point(kernel, zgrid)


# -- CSV IO -------------------------------------------------------------------


def ingest_csv(path, rel_tol: float = 1e-9) -> SamplePath:
    """Read a ``t,x`` CSV with a uniform, strictly increasing time grid."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path} is empty")
    header = [c.strip().lower() for c in rows[0]]
    if header != ["t", "x"]:
        raise DataError(f"expected header 't,x', got {','.join(rows[0])!r}")
    t, x = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise DataError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            tv, xv = float(row[0]), float(row[1])
        except ValueError:
            raise DataError(f"line {lineno}: non-numeric value") from None
        if not (math.isfinite(tv) and math.isfinite(xv)):
            raise DataError(f"line {lineno}: NaN or infinite value")
        t.append(tv)
        x.append(xv)
    if len(t) < 2:
        raise DataError("need at least two observations")
    t = np.asarray(t)
    steps = np.diff(t)
    if np.any(steps <= 0):
        bad = int(np.argmax(steps <= 0)) + 2
        raise DataError(f"time stamps must be strictly increasing (row {bad})")
    n = t.size - 1
    delta = (t[-1] - t[0]) / n
    if np.any(np.abs(steps - delta) > rel_tol * delta + 1e-12 * abs(t[-1])):
        raise DataError("time grid is not equally spaced")
    return SamplePath(np.asarray(x), float(delta), {"source": str(path)})


def write_path_csv(path: SamplePath, fh) -> None:
    """Write ``t,x`` rows using shortest round-trip float formatting."""
    fh.write("t,x\n")
    for t, x in zip(path.times, path.values):
        fh.write(f"{float(t)!r},{float(x)!r}\n")


# -- Monte Carlo --------------------------------------------------------------


@dataclass(frozen=True)
class McConfig:
    """One scenario point of a simulation study."""

    kernel: TailKernel
    n: int = 10000
    delta_n: float = 1 / 50
    continuous: bool = False
    runs: int = 300
    B: int = 200
    alpha: float = 0.05
    r: float = 0.01
    theta_pre: float = 0.1
    zgrid: ZGrid = field(default_factory=ZGrid.pure_jump)
    z0: tuple = (1.0,)
    procedures: tuple = ("global",)
    multiplier: str = "rademacher"
    subsample: int = 15
    trunc_eps: float = 1e-4
    seed: int = 0
    target_d1: Optional[float] = None
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.runs) != self.runs or self.runs < 1:
            raise ConfigError("runs must be a positive integer")
        bad = [p for p in self.procedures if p not in PROCEDURES]
        if bad or not self.procedures:
            raise ConfigError(f"procedures must be a non-empty subset of {PROCEDURES}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if not 0 < self.r <= 1:
            raise ConfigError("r must lie in (0, 1]")
        if not 0 < self.theta_pre < 1:
            raise ConfigError("theta_pre must lie in (0, 1)")
        if int(self.B) != self.B or self.B < 1:
            raise ConfigError("B must be a positive integer")
        if int(self.n) != self.n or self.n < 1 or not self.delta_n > 0:
            raise ConfigError("need n >= 1 and delta_n > 0")
        get_multiplier(self.multiplier)

    @property
    def k_n(self) -> float:
        return self.n * self.delta_n

    def echo(self) -> dict:
        return {
            "kernel": self.kernel.describe(),
            "n": self.n,
            "delta_n": self.delta_n,
            "k_n": self.k_n,
            "continuous": self.continuous,
            "runs": self.runs,
            "B": self.B,
            "alpha": self.alpha,
            "r": self.r,
            "theta_pre": self.theta_pre,
            "zgrid": list(self.zgrid.values),
            "z0": list(self.z0),
            "procedures": list(self.procedures),
            "multiplier": self.multiplier,
            "subsample": self.subsample,
            "trunc_eps": self.trunc_eps,
            "seed": self.seed,
            "target_d1": self.target_d1,
            "labels": dict(self.labels),
        }


@dataclass
class McReport:
    config: dict
    checks: dict
    aggregates: dict
    records: list
    runtime: float = field(default=0.0, compare=False)

    def to_dict(self, include_runtime: bool = False) -> dict:
        out = {
            "config": self.config,
            "checks": self.checks,
            "aggregates": self.aggregates,
            "records": self.records,
        }
        if include_runtime:
            out["runtime_seconds"] = self.runtime
        return out

    def to_json(self, include_runtime: bool = False) -> str:
        return json.dumps(self.to_dict(include_runtime), indent=2, sort_keys=True)


def _binomial(flags):
    flags = np.asarray(flags, dtype=float)
    R = flags.size
    if R == 0:
        return {"rate": None, "se": None, "runs": 0}
    p = float(flags.mean())
    return {"rate": p, "se": math.sqrt(p * (1 - p) / R), "runs": R}


def _pre_checks(cfg: McConfig) -> dict:
    k = cfg.kernel
    d1 = sup_variation(k, 1.0, cfg.zgrid)
    checks = {"true_d1": d1, "true_change_point": scenario_truth(k, cfg.zgrid)}
    if isinstance(k, AbruptKernel):
        grid_d1 = sup_variation(k, 1.0, cfg.zgrid, method="grid")
        v = k.variation_bound(cfg.zgrid)
        checks["true_d1_grid"] = grid_d1
        if abs(grid_d1 - d1) > 2.0 * v / 1000 + 1e-12:
            raise ConfigError("closed-form and grid variation disagree for the abrupt kernel")
    if cfg.target_d1 is not None:
        checks["target_d1"] = cfg.target_d1
        if abs(d1 - cfg.target_d1) > 1e-6 * max(1.0, cfg.target_d1):
            raise ConfigError(f"calibrated kernel gives D(1) = {d1}, target {cfg.target_d1}")
        if isinstance(k, SimKernel):
            checks["amplitude"] = k.amplitude
    return checks


def _one_run(cfg: McConfig, truth: float, i: int) -> dict:
    run_seed = _rng.seed_sequence(cfg.seed, _rng.MC_RUN, i)
    rec = {"run": i}
    try:
        path_seed = int(run_seed.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
        pcfg = PathConfig(
            n=cfg.n,
            delta_n=cfg.delta_n,
            kernel=cfg.kernel,
            subsample=cfg.subsample,
            continuous=ContinuousPart() if cfg.continuous else None,
            trunc_eps=cfg.trunc_eps,
            seed=path_seed,
        )
        grid = IncrementGrid.from_path(simulate_path(pcfg))
        if "global" in cfg.procedures:
            rep = test_global(
                grid, cfg.zgrid, cfg.alpha, cfg.B, cfg.multiplier, _rng.seed_sequence(run_seed, 1), 1
            )
            rec["global"] = {"statistic": rep.statistic, "critical_value": rep.critical_value,
                             "reject": rep.reject, "p_value": rep.p_value}
        if "local" in cfg.procedures:
            rec["local"] = {}
            for k, z0 in enumerate(cfg.z0):
                rep = test_local(
                    grid, z0, cfg.alpha, cfg.B, cfg.multiplier, _rng.seed_sequence(run_seed, 2, k), 1
                )
                rec["local"][repr(float(z0))] = {"statistic": rep.statistic,
                                                 "critical_value": rep.critical_value,
                                                 "reject": rep.reject, "p_value": rep.p_value}
        if "estimate" in cfg.procedures:
            est = adaptive_estimate(
                grid, cfg.zgrid, cfg.theta_pre, cfg.alpha, cfg.r, cfg.B, cfg.multiplier,
                _rng.seed_sequence(run_seed, 3), threads=1,
            )
            rec["estimate"] = {"theta_hat": est.theta_hat, "theta_initial": est.theta_initial,
                               "lambda_initial": est.lambda_initial, "lambda_final": est.lambda_final,
                               "abs_error": abs(est.theta_hat - truth)}
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
    return rec


def _aggregate(cfg: McConfig, records) -> dict:
    ok = [r for r in records if "error" not in r]
    agg = {"runs_ok": len(ok), "runs_failed": len(records) - len(ok)}
    if "global" in cfg.procedures:
        agg["global"] = _binomial([r["global"]["reject"] for r in ok])
    if "local" in cfg.procedures:
        agg["local"] = {
            repr(float(z0)): _binomial([r["local"][repr(float(z0))]["reject"] for r in ok])
            for z0 in cfg.z0
        }
    if "estimate" in cfg.procedures:
        errs = np.array([r["estimate"]["abs_error"] for r in ok])
        agg["estimate"] = {
            "l1": float(errs.mean()) if errs.size else None,
            "se": float(errs.std(ddof=1) / math.sqrt(errs.size)) if errs.size > 1 else None,
            "mean_theta_hat": float(np.mean([r["estimate"]["theta_hat"] for r in ok])) if ok else None,
            "runs": int(errs.size),
        }
    return agg


def run_mc(cfg: McConfig, threads=None) -> McReport:
    """Simulate ``cfg.runs`` paths and apply the configured procedures.

    Run ``i`` draws everything from streams keyed by ``(seed, i)``, so the
    report is identical for any thread count.  Failing runs are recorded
    with their error and excluded from the aggregates.
    """
    start = time.perf_counter()
    checks = _pre_checks(cfg)
    truth = checks["true_change_point"]
    records = _rng.parallel_map(lambda i: _one_run(cfg, truth, i), range(cfg.runs), threads)
    return McReport(
        config=cfg.echo(),
        checks=checks,
        aggregates=_aggregate(cfg, records),
        records=records,
        runtime=time.perf_counter() - start,
    )


def _with_axis(cfg: McConfig, axis: str, value, kernel_spec: Optional[dict]) -> McConfig:
    labels = dict(cfg.labels, **{axis: value})
    if axis == "k_n":
        return replace(cfg, delta_n=float(value) / cfg.n, labels=labels)
    if axis == "r":
        return replace(cfg, r=float(value), labels=labels)
    if axis == "theta_pre":
        return replace(cfg, theta_pre=float(value), labels=labels)
    if axis == "z0":
        return replace(cfg, z0=(float(value),), labels=labels)
    if axis in ("theta0", "w", "target_d1"):
        spec = dict(kernel_spec or {"variant": "sim"})
        spec[{"theta0": "theta0", "w": "smoothness", "target_d1": "target_d1"}[axis]] = float(value)
        target = spec.get("target_d1", cfg.target_d1)
        return replace(cfg, kernel=kernel_from_config(spec, cfg.zgrid), labels=labels,
                       target_d1=None if target is None else float(target))
    raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


def run_sweep(cfg: McConfig, axis: Optional[str], values: Sequence, threads=None,
              kernel_spec: Optional[dict] = None):
    """Run one scenario per ``values`` along ``axis``; ``(reports, csv_rows)``."""
    points = [cfg] if axis is None else [_with_axis(cfg, axis, v, kernel_spec) for v in values]
    reports, rows = [], []
    for point in points:
        rep = run_mc(point, threads)
        reports.append(rep)
        rows.extend(_csv_rows(point, rep))
    return reports, rows


CSV_FIELDS = ["k_n", "r", "theta0", "w", "z0", "theta_pre", "target_d1", "procedure", "value", "se", "runs"]


def _csv_rows(cfg: McConfig, rep: McReport):
    k = cfg.kernel
    base = {
        "k_n": cfg.k_n,
        "r": cfg.r,
        "theta0": getattr(k, "theta0", ""),
        "w": getattr(k, "smoothness", ""),
        "z0": "",
        "theta_pre": cfg.theta_pre,
        "target_d1": "" if cfg.target_d1 is None else cfg.target_d1,
    }
    agg = rep.aggregates
    rows = []
    if "global" in agg:
        rows.append(dict(base, procedure="global", value=agg["global"]["rate"],
                         se=agg["global"]["se"], runs=agg["global"]["runs"]))
    for z0, a in agg.get("local", {}).items():
        rows.append(dict(base, z0=float(z0), procedure="local", value=a["rate"], se=a["se"], runs=a["runs"]))
    if "estimate" in agg:
        e = agg["estimate"]
        rows.append(dict(base, procedure="l1", value=e["l1"], se=e["se"], runs=e["runs"]))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in CSV_FIELDS})
    return buf.getvalue()
