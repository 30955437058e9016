import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from strichartz_lab import __version__
from strichartz_lab.cli import main
from strichartz_lab.fitting import fit_slope
from strichartz_lab.sweep import (ConfigError, SweepConfig, SweepReport, emit_report,
                                  load_config, run_sweep)

SMALL_GRID = {"L": 32.0, "N": 64, "T": 8.0, "Nt": 64}
GAP0 = {"point": ["1", "0"], "inv_q": "1/2", "inv_qt_prime": "1"}
GAP_QUARTER = {"point": ["1", "0"], "inv_q": "1/4", "inv_qt_prime": "1"}


def small_scaling(**kw):
    d = dict(experiment="SCALING", n=1, configs=(GAP0, GAP_QUARTER), params=(1, 2, 4), grid=SMALL_GRID)
    d.update(kw)
    return SweepConfig(**d)


# -- slope fitting -------------------------------------------------------------

def test_fit_exact_power_law():
    pts = [(p, p ** -1.5) for p in (16, 32, 64, 128)]
    slope, err = fit_slope(pts)
    assert slope == pytest.approx(-1.5, abs=1e-12)
    assert err == pytest.approx(0, abs=1e-12)


def test_fit_constant():
    slope, _ = fit_slope([(1, 3.0), (2, 3.0), (4, 3.0)])
    assert slope == pytest.approx(0, abs=1e-14)


def test_fit_perturbed_matches_closed_form_ols():
    ps = [2.0 ** k for k in range(2, 8)]
    vs = [p ** -1 * (1 + 0.05 * (-1) ** i) for i, p in enumerate(ps)]
    slope, err = fit_slope(list(zip(ps, vs)))
    ref = np.polyfit(np.log2(ps), np.log2(vs), 1)[0]
    assert slope == pytest.approx(ref, abs=1e-12)
    assert abs(slope + 1) < 0.08
    assert err > 0


@pytest.mark.parametrize("pts", [[(1, 1), (2, 2)], [(1, 1), (2, 0), (4, 1)], [(1, 1), (2, -1), (4, 1)],
                                 [(2, 1), (2, 2), (2, 3)]])
def test_fit_rejects_bad_input(pts):
    with pytest.raises(ValueError):
        fit_slope(pts)


@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_fit_recovers_any_exponent(a, c):
    slope, _ = fit_slope([(p, c * p ** a) for p in (1, 2, 4, 8)])
    assert slope == pytest.approx(a, abs=1e-9)


# -- configuration -------------------------------------------------------------

def test_config_defaults_and_echo():
    cfg = SweepConfig("DUHAMEL_VERIFY")
    assert cfg.grid["N"] == 512 and cfg.tolerances["oracle"] == 1e-3
    echo = cfg.to_json()
    again = SweepConfig.from_json(echo)
    assert again.to_json() == echo


@pytest.mark.parametrize("bad", [
    {"experiment": "KNAPP", "configs": [GAP0], "params": [16, 32, 64], "colour": "red"},
    {"experiment": "NOPE"},
    {"experiment": "KNAPP", "configs": [GAP0], "params": [16, 32, 48]},
    {"experiment": "KNAPP", "configs": [GAP0], "params": [16, 32]},
    {"experiment": "KNAPP", "params": [16, 32, 64]},
    {"experiment": "SCALING", "configs": [GAP0], "params": [2, 4]},
    {"experiment": "TUBE", "configs": [GAP0], "grid": {"width": 3}},
    {"experiment": "DUHAMEL_VERIFY", "tolerances": {"oracel": 1}},
    {"experiment": "REGION_SCAN", "step": "2/7"},
    {"experiment": "DUHAMEL_VERIFY", "memory_mb": 1.0},
    {"experiment": "DUHAMEL_VERIFY", "jobs": 0},
    {"configs": [GAP0]},
])
def test_config_rejections(bad):
    with pytest.raises(ConfigError):
        SweepConfig.from_json(bad)


def test_load_config_errors(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(p)


# -- sweeps and reports ----------------------------------------------------------

@pytest.fixture(scope="module")
def scaling_report():
    return run_sweep(small_scaling())


def test_scaling_sweep_passes(scaling_report):
    assert scaling_report.passed
    names = {c["name"] for c in scaling_report.checks}
    assert "ratio[lam=2]" in names and "log2_ratio[lam=2]" in names


def test_verdicts_recomputable(scaling_report):
    from strichartz_lab.sweep import _judge
    for c in scaling_report.fits + scaling_report.checks:
        ok = _judge(c["value"], c["target"], c["tolerance"], c["direction"])
        assert ("PASS" if ok else "FAIL") == c["verdict"]


def test_report_json_round_trip(scaling_report, tmp_path):
    paths = emit_report(scaling_report, tmp_path, ["json", "csv"])
    assert {p.name for p in paths} == {"scaling.json", "scaling.csv", "scaling.timings.json"}
    back = SweepReport.from_json(json.loads((tmp_path / "scaling.json").read_text()))
    assert back == scaling_report
    assert back.dumps() == scaling_report.dumps()


def test_report_csv_rows(scaling_report, tmp_path):
    emit_report(scaling_report, tmp_path, ["csv"])
    rows = list(csv.DictReader(io.StringIO((tmp_path / "scaling.csv").read_text())))
    cfg = scaling_report.config
    assert len(rows) == len(cfg["params"]) * len(cfg["configs"])
    assert {"param", "quotient"} <= set(rows[0])


def test_report_is_rerunnable_from_echo(scaling_report):
    again = run_sweep(SweepConfig.from_json(scaling_report.config))
    assert again.dumps() == scaling_report.dumps()


def test_serial_and_concurrent_agree(scaling_report):
    assert run_sweep(small_scaling(jobs=3)).dumps() == scaling_report.dumps()


def test_seed_changes_inputs(scaling_report):
    other = run_sweep(small_scaling(seed=11))
    assert other.points != scaling_report.points


def test_emit_rejects_unknown_format(scaling_report, tmp_path):
    with pytest.raises(ValueError):
        emit_report(scaling_report, tmp_path, ["xml"])


def test_emit_surfaces_path_on_io_error(scaling_report, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        emit_report(scaling_report, blocker / "sub")


def test_per_parameter_failure_is_recorded():
    cfg = SweepConfig("TUBE", configs=(GAP_QUARTER,), params=(1.0, 0.5, 0.25))
    rep = run_sweep(cfg)
    assert len(rep.errors) == 1 and rep.errors[0]["param"] == 1.0
    assert len(rep.points) == 2
    assert not rep.passed
    assert any("mollified" in n for n in rep.notes)


def test_region_scan_report():
    rep = run_sweep(SweepConfig("REGION_SCAN", n=3, step="1/20"))
    assert rep.passed
    assert len(rep.points) == 21 * 21
    got = {c["name"]: c["value"] for c in rep.checks if c["name"].startswith("classify")}
    assert got == {"classify[B]": "OPEN_GAP", "classify[mid(P,P')]": "SUFFICIENT", "classify[R]": "EXCLUDED"}


# -- command line ------------------------------------------------------------------

def test_cli_version(capsys):
    assert main(["version"]) == 0
    assert capsys.readouterr().out.strip() == __version__


def test_cli_usage_errors(capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["check", "--x", "1/2"]) == 1
    assert main(["sweep"]) == 1
    assert main(["check", "--x", "half", "--y", "0", "--inv-q", "0", "--inv-qt-prime", "1"]) == 1


def test_cli_check(capsys):
    args = ["check", "--n", "3", "--x", "4/5", "--y", "3/10"]
    assert main(args + ["--inv-q", "1/20", "--inv-qt-prime", "2/5"]) == 2
    out = json.loads(capsys.readouterr().out)
    assert "scale" in out["necessary_violations"]
    # 1/q~' = 1/2 solves scaling with 1/q = 1/4 at this point
    assert main(args + ["--inv-q", "1/4", "--inv-qt-prime", "1/2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["necessary_violations"] == [] and out["verdict"] == "SUFFICIENT"


def test_cli_qrange(capsys):
    assert main(["qrange", "--n", "3", "--x", "2/3", "--y", "0"]) == 0
    assert json.loads(capsys.readouterr().out)["empty"] is True


def test_cli_region_writes_files(tmp_path):
    assert main(["region", "--n", "3", "--step", "1/10", "--out", str(tmp_path), "--format", "json,csv"]) == 0
    rep = json.loads((tmp_path / "region_scan.json").read_text())
    assert rep["verdict"] == "PASS"
    assert (tmp_path / "region_scan.csv").exists()


def test_cli_sweep_exit_codes(tmp_path):
    ok = tmp_path / "ok.json"
    ok.write_text(json.dumps(small_scaling().to_json()))
    assert main(["sweep", "--config", str(ok), "--out", str(tmp_path / "a")]) == 0
    failing = small_scaling(configs=(GAP0,)).to_json()
    failing["tolerances"] = {"scaling_ratio": -1.0}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(failing))
    assert main(["sweep", "--config", str(bad), "--out", str(tmp_path / "b")]) == 2
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps({"experiment": "SCALING", "extra": 1}))
    assert main(["sweep", "--config", str(broken)]) == 1


def test_cli_verify_rejects_other_experiments(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(small_scaling().to_json()))
    assert main(["verify", "--config", str(p)]) == 1


def test_cli_byte_identical_reruns(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(small_scaling().to_json()))
    for d in ("r1", "r2"):
        assert main(["sweep", "--config", str(p), "--out", str(tmp_path / d), "--jobs", "2"]) == 0
    assert (tmp_path / "r1" / "scaling.json").read_bytes() == (tmp_path / "r2" / "scaling.json").read_bytes()
