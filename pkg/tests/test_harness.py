import json
import math

import numpy as np
import pytest

from jumpchange import (
    AbruptKernel,
    ConfigError,
    DataError,
    McConfig,
    PowerTail,
    SimKernel,
    ZGrid,
    calibrate_amplitude,
    ingest_csv,
    run_mc,
    run_sweep,
    sup_variation,
)
from jumpchange.harness import (
    kernel_from_config,
    load_config,
    rows_to_csv,
    scenario_truth,
    write_path_csv,
    zgrid_from_config,
)
from jumpchange.simulate import SamplePath


def write(tmp_path, text, name="p.csv"):
    f = tmp_path / name
    f.write_text(text)
    return f


# -- ingest_csv ---------------------------------------------------------------------


def test_ingest_three_rows(tmp_path):
    p = ingest_csv(write(tmp_path, "t,x\n0,0\n0.1,1.5\n0.2,1.5\n"))
    assert p.n == 2
    assert p.delta_n == pytest.approx(0.1)
    np.testing.assert_array_equal(p.increments(), [1.5, 0.0])


@pytest.mark.parametrize(
    "text, match",
    [
        ("", "empty"),
        ("t,x\n", "two observations"),
        ("t,x\n0,0\n0,1\n0.1,2\n", "increasing"),
        ("t,x\n0,0\n0.1,nan\n0.2,1\n", "NaN"),
        ("t,x\n0,0\n0.1,1\n0.25,1\n", "equally spaced"),
        ("time,value\n0,0\n1,1\n", "header"),
        ("t,x\n0,0\n0.1\n", "2 fields"),
        ("t,x\n0,0\n0.1,abc\n", "non-numeric"),
    ],
)
def test_ingest_errors(tmp_path, text, match):
    with pytest.raises(DataError, match=match):
        ingest_csv(write(tmp_path, text))


def test_ingest_missing_file(tmp_path):
    with pytest.raises(DataError):
        ingest_csv(tmp_path / "none.csv")


def test_ingest_tolerates_rounding(tmp_path):
    t = np.arange(101) / 450
    rows = "\n".join(f"{float(a)!r},{b}" for a, b in zip(t, range(101)))
    p = ingest_csv(write(tmp_path, "t,x\n" + rows + "\n"))
    assert p.n == 100 and p.delta_n == pytest.approx(1 / 450, rel=1e-12)


def test_write_then_ingest_roundtrip(tmp_path):
    vals = np.cumsum(np.random.default_rng(0).exponential(1.0, 51))
    vals[0] = 0.0
    path = SamplePath(vals, 0.02)
    with open(tmp_path / "w.csv", "w") as fh:
        write_path_csv(path, fh)
    back = ingest_csv(tmp_path / "w.csv")
    np.testing.assert_array_equal(back.values, vals)


# -- config ------------------------------------------------------------------------


def test_kernel_from_config_variants():
    assert kernel_from_config({"variant": "sim", "theta0": 0.4, "amplitude": 2.0}) == SimKernel(0.4, 2.0, 1.0)
    ab = kernel_from_config({"variant": "abrupt", "theta0": 0.5,
                             "nu1": {"scale": 1.0}, "nu2": {"scale": 2.0, "index": 0.7}})
    assert isinstance(ab, AbruptKernel)
    st_ = kernel_from_config({"variant": "stable", "theta0": 0.5, "index_slope": 1.0})
    assert st_.tail(0.75, 1.0) == pytest.approx(1.0)
    const = kernel_from_config({"variant": "constant", "nu": {"scale": 1.0, "two_sided": True}})
    assert const.tail(0.3, -1.0) == 1.0
    for bad in ({"variant": "nope"}, {"variant": "abrupt", "theta0": 0.5}, {"variant": "sim", "theta0": 2.0}):
        with pytest.raises(ConfigError):
            kernel_from_config(bad)


def test_load_config(tmp_path):
    f = write(tmp_path, 'seed = 3\n[kernel]\nvariant = "sim"\n', "c.toml")
    assert load_config(f) == {"seed": 3, "kernel": {"variant": "sim"}}
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "seed = = 3", "bad.toml"))
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


def test_zgrid_from_config():
    assert zgrid_from_config("pure", 0.01) == ZGrid.pure_jump()
    assert zgrid_from_config("sqrt", 0.01) == ZGrid.sqrt_delta(0.01)
    assert zgrid_from_config([0.5, 1.0], 0.01).values == (0.5, 1.0)
    with pytest.raises(ConfigError):
        zgrid_from_config(["a"], 0.01)


def test_calibration_hits_target():
    zg = ZGrid.pure_jump()
    for target, w in ((3.0, 1.0), (0.8, 2.0)):
        a = calibrate_amplitude(0.4, w, target, zg)
        assert sup_variation(SimKernel(0.4, a, w), 1.0, zg) == pytest.approx(target, rel=1e-9)
    assert calibrate_amplitude(0.4, 1.0, 0.0, zg) == 0.0


def test_scenario_truth():
    zg = ZGrid.pure_jump()
    assert scenario_truth(SimKernel(0.4, 3.0), zg) == 0.4
    assert scenario_truth(SimKernel(0.4, 0.0), zg) == 1.0
    assert scenario_truth(AbruptKernel(PowerTail(1.0, 0.5), PowerTail(2.0, 0.5), 0.3), zg) == 0.3


# -- run_mc ------------------------------------------------------------------------


def small_cfg(**kw):
    base = dict(kernel=SimKernel(), n=1000, delta_n=0.05, runs=3, B=30, seed=1,
                procedures=("global", "local", "estimate"))
    base.update(kw)
    return McConfig(**base)


def test_mc_config_validation():
    for bad in (dict(runs=0), dict(procedures=("nope",)), dict(alpha=1.5), dict(r=0.0), dict(B=0)):
        with pytest.raises(ConfigError):
            small_cfg(**bad)


def test_single_run_labeled():
    rep = run_mc(small_cfg(runs=1))
    assert len(rep.records) == 1 and rep.records[0]["run"] == 0
    assert rep.aggregates["runs_ok"] == 1


def test_report_structure_and_se():
    rep = run_mc(small_cfg(runs=6))
    g = rep.aggregates["global"]
    assert 0 <= g["rate"] <= 1
    assert g["se"] == pytest.approx(math.sqrt(g["rate"] * (1 - g["rate"]) / 6))
    assert rep.aggregates["estimate"]["l1"] >= 0
    assert rep.checks["true_d1"] == pytest.approx(0.0, abs=1e-12)
    d = json.loads(rep.to_json())
    assert "runtime_seconds" not in d
    assert "runtime_seconds" in rep.to_dict(include_runtime=True)


def test_mc_deterministic_across_threads():
    a = run_mc(small_cfg(runs=4), threads=1).to_json()
    b = run_mc(small_cfg(runs=4), threads=8).to_json()
    assert a == b


def test_run_errors_are_recorded(monkeypatch):
    from jumpchange import harness

    calls = {"n": 0}
    real = harness.simulate_path

    def flaky(cfg):
        calls["n"] += 1
        if calls["n"] == 2:
            raise ValueError("boom")
        return real(cfg)

    monkeypatch.setattr(harness, "simulate_path", flaky)
    rep = run_mc(small_cfg(runs=3, procedures=("global",)))
    assert rep.aggregates["runs_failed"] == 1 and rep.aggregates["runs_ok"] == 2
    assert "boom" in rep.records[1]["error"]


def test_pre_checks_reproduce_closed_forms():
    ab = AbruptKernel(PowerTail(1.0, 0.5), PowerTail(2.0, 0.5), 0.5)
    rep = run_mc(small_cfg(kernel=ab, runs=1, procedures=("global",)))
    v = float(np.max(np.abs(ab.nu1(ZGrid.pure_jump().as_array()) - ab.nu2(ZGrid.pure_jump().as_array()))))
    assert rep.checks["true_d1"] == pytest.approx(v * 0.25, rel=1e-12)
    with pytest.raises(ConfigError):
        run_mc(small_cfg(kernel=SimKernel(0.4, 1.0), target_d1=3.0))


def test_sweep_rows():
    cfg = small_cfg(runs=2, procedures=("global", "estimate"), kernel=SimKernel(0.4, 50.0))
    reports, rows = run_sweep(cfg, "k_n", [20.0, 40.0], kernel_spec={"variant": "sim", "theta0": 0.4, "amplitude": 50.0})
    assert [r.config["k_n"] for r in reports] == [20.0, 40.0]
    text = rows_to_csv(rows)
    lines = text.strip().splitlines()
    assert lines[0].startswith("k_n,r,theta0,w,z0")
    assert len(lines) == 1 + 4
    reports, rows = run_sweep(cfg, "w", [1.0, 2.0], kernel_spec={"variant": "sim", "theta0": 0.4, "target_d1": 2.0})
    assert [r.config["kernel"]["smoothness"] for r in reports] == [1.0, 2.0]
    assert all(r.checks["true_d1"] == pytest.approx(2.0) for r in reports)
    with pytest.raises(ConfigError):
        run_sweep(cfg, "bogus", [1.0])
