"""Experiment-runner CLI: config validation, artifacts, exit codes."""

import json

import pytest

from wavetank import cli
from wavetank import serialize as ser


def _write_cfg(tmp_path, payload, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


SMALL = {
    "grid": {"n": 128},
    "physics": {"n_z": 16},
    "frequency": {"lambdas": [64]},
    "evolution": {"t_end": 0.004, "dt": 0.001},
    "dispersive": {"n_times": 9, "t_end": 0.05, "n_trials": 2},
}


@pytest.fixture
def small_cfg(tmp_path):
    return _write_cfg(tmp_path, SMALL)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_default_config_is_self_consistent():
    cfg = cli.load_config(None)
    assert cfg["grid"]["n"] == 256
    assert cfg["frequency"]["lambdas"] == [64, 128, 256]


def test_unknown_key_rejected_with_name(tmp_path, capsys):
    path = _write_cfg(tmp_path, {"grid": {"npoints": 512}})
    rc = cli.main(["simulate", "--config", path,
                   "--out", str(tmp_path / "o")])
    assert rc == 3
    assert "grid.npoints" in capsys.readouterr().err


def test_unknown_section_rejected(tmp_path, capsys):
    path = _write_cfg(tmp_path, {"solver": {"tol": 1.0}})
    rc = cli.main(["simulate", "--config", path,
                   "--out", str(tmp_path / "o")])
    assert rc == 3
    assert "solver" in capsys.readouterr().err


def test_wrong_type_rejected(tmp_path):
    path = _write_cfg(tmp_path, {"grid": {"n": "lots"}})
    rc = cli.main(["simulate", "--config", path,
                   "--out", str(tmp_path / "o")])
    assert rc == 3


def test_bad_mu_rule_rejected(tmp_path):
    path = _write_cfg(tmp_path, {"frequency": {"mu_rule": "half"}})
    rc = cli.main(["simulate", "--config", path,
                   "--out", str(tmp_path / "o")])
    assert rc == 3


def test_non_dyadic_lambda_rejected(tmp_path):
    path = _write_cfg(tmp_path, {"frequency": {"lambdas": [48]}})
    rc = cli.main(["flow", "--config", path, "--out", str(tmp_path / "o")])
    assert rc == 3


def test_missing_config_file(tmp_path):
    rc = cli.main(["simulate", "--config", str(tmp_path / "absent.json"),
                   "--out", str(tmp_path / "o")])
    assert rc == 3


def test_lambda_override_parses_and_validates(tmp_path):
    rc = cli.main(["flow", "--lambda", "sixty-four",
                   "--out", str(tmp_path / "o")])
    assert rc == 3


def test_env_var_sets_artifact_root(monkeypatch, tmp_path):
    monkeypatch.setenv(cli.ENV_ARTIFACT_ROOT, str(tmp_path / "root"))
    assert cli.artifact_root() == tmp_path / "root"


# ---------------------------------------------------------------------------
# subcommand artifacts
# ---------------------------------------------------------------------------

def test_dtn_test_writes_artifact(small_cfg, tmp_path):
    out = tmp_path / "dtn"
    rc = cli.main(["dtn-test", "--config", small_cfg, "--out", str(out)])
    assert rc == 0
    assert (out / "manifest.json").exists()
    assert (out / "dtn_flat.csv").exists()
    header, rows = ser.read_scan_csv(out / "dtn_flat.csv")
    assert header == ["k", "symbol", "rel_error"]
    assert max(r[2] for r in rows) < 1e-8
    manifest = ser.read_json(out / "manifest.json")
    assert manifest["command"] == "dtn-test"
    assert manifest["config"]["grid"]["n"] == 128
    assert manifest["conventions"]["f_half_term"] == "omitted"


def test_dtn_test_dump_strip(small_cfg, tmp_path):
    out = tmp_path / "dtn"
    rc = cli.main(["dtn-test", "--config", small_cfg, "--out", str(out),
                   "--dump-strip"])
    assert rc == 0
    vals, length, name = ser.strip_from_binary(out / "strip.bin")
    assert name == "potential"
    assert vals.shape[1] == 128


def test_dtn_test_deterministic(small_cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["dtn-test", "--config", small_cfg, "--out", str(a)]) == 0
    assert cli.main(["dtn-test", "--config", small_cfg, "--out", str(b)]) == 0
    for name in ("dtn_flat.csv", "dtn_paralin.csv", "manifest.json",
                 "report.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_simulate_artifact_and_energy_table(small_cfg, tmp_path):
    out = tmp_path / "sim"
    rc = cli.main(["simulate", "--config", small_cfg, "--out", str(out)])
    assert rc == 0
    header, rows = ser.read_scan_csv(out / "energy.csv")
    assert header == ["t", "energy"]
    assert len(rows) == 5
    rep = ser.read_json(out / "report.json")
    assert all(c["pass"] for c in rep["checks"])
    assert "identity_residuals" in rep


def test_simulate_tolerance_failure_exit_2(small_cfg, tmp_path, capsys):
    cfg = dict(SMALL)
    cfg["tolerances"] = {"energy_drift": 1e-18}
    path = _write_cfg(tmp_path, cfg, "tight.json")
    out = tmp_path / "sim2"
    rc = cli.main(["simulate", "--config", path, "--out", str(out)])
    assert rc == 2
    assert "energy_drift" in capsys.readouterr().err
    # the artifact is still written, with the failing check recorded
    rep = ser.read_json(out / "report.json")
    assert not rep["checks"][0]["pass"]


def test_flow_artifact(small_cfg, tmp_path):
    out = tmp_path / "flow"
    rc = cli.main(["flow", "--config", small_cfg, "--out", str(out)])
    assert rc == 0
    header, rows = ser.read_scan_csv(out / "flow_gap.csv")
    assert header == ["lam", "G_V_inf", "d2x_V_inf", "s0"]
    assert rows[0][1] <= rows[0][2]      # transported residual is smaller


def test_parametrix_artifact_records_frame_constant(small_cfg, tmp_path):
    out = tmp_path / "par"
    rc = cli.main(["parametrix", "--config", small_cfg, "--out", str(out)])
    assert rc == 0
    manifest = ser.read_json(out / "manifest.json")
    assert "64" in manifest["frame_constants"]
    assert 10.0 < manifest["frame_constants"]["64"] < 100.0
    header, rows = ser.read_scan_csv(out / "parametrix_scan.csv")
    assert rows[0][2] < 1e-10           # roundtrip column


def test_strichartz_artifact(small_cfg, tmp_path):
    out = tmp_path / "str"
    rc = cli.main(["strichartz", "--config", small_cfg, "--out", str(out)])
    assert rc == 0
    header, rows = ser.read_scan_csv(out / "strichartz_scan.csv")
    assert header == ["lam", "dispersive_quotient", "transport_quotient"]
    assert rows[0][1] <= rows[0][2]      # dispersion only helps


def test_strichartz_frozen_flag_recorded(small_cfg, tmp_path):
    out = tmp_path / "strf"
    rc = cli.main(["strichartz", "--config", small_cfg, "--out", str(out),
                   "--frozen-coeffs"])
    assert rc == 0
    manifest = ser.read_json(out / "manifest.json")
    assert manifest["coefficients"] == "frozen"


def test_seed_override_changes_data(small_cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["dtn-test", "--config", small_cfg, "--out", str(a),
                     "--seed", "1"]) == 0
    assert cli.main(["dtn-test", "--config", small_cfg, "--out", str(b),
                     "--seed", "2"]) == 0
    assert (a / "dtn_flat.csv").read_bytes() != (b / "dtn_flat.csv").read_bytes()


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def test_report_consolidates_and_passes(small_cfg, tmp_path, capsys):
    sim, dtn = tmp_path / "sim", tmp_path / "dtn"
    assert cli.main(["simulate", "--config", small_cfg,
                     "--out", str(sim)]) == 0
    assert cli.main(["dtn-test", "--config", small_cfg,
                     "--out", str(dtn)]) == 0
    outfile = tmp_path / "summary.json"
    rc = cli.main(["report", str(sim), str(dtn), "--out", str(outfile)])
    assert rc == 0
    rep = ser.read_json(outfile)
    assert rep["pass"] is True
    assert set(rep["runs"]) == {"sim", "dtn"}
    assert rep["n_checks"] == 2


def test_report_flags_failures(small_cfg, tmp_path, capsys):
    sim = tmp_path / "sim"
    assert cli.main(["simulate", "--config", small_cfg,
                     "--out", str(sim)]) == 0
    rep = ser.read_json(sim / "report.json")
    rep["checks"][0]["pass"] = False
    ser.write_json(sim / "report.json", rep)
    rc = cli.main(["report", str(sim)])
    assert rc == 2
    assert "energy_drift" in capsys.readouterr().err


def test_report_missing_artifact_is_config_error(tmp_path, capsys):
    rc = cli.main(["report", str(tmp_path / "nowhere")])
    assert rc == 3
    assert "report" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# atomicity
# ---------------------------------------------------------------------------

def test_failed_run_leaves_no_partial_artifact(tmp_path):
    path = _write_cfg(tmp_path, {"grid": {"n": 48}})
    out = tmp_path / "out"
    rc = cli.main(["simulate", "--config", path, "--out", str(out)])
    assert rc == 3
    assert not out.exists()
    assert not list(tmp_path.glob("**/.staging-*"))


def test_rerun_replaces_artifact(small_cfg, tmp_path):
    out = tmp_path / "dtn"
    assert cli.main(["dtn-test", "--config", small_cfg, "--out", str(out)]) == 0
    first = (out / "report.json").read_bytes()
    assert cli.main(["dtn-test", "--config", small_cfg, "--out", str(out)]) == 0
    assert (out / "report.json").read_bytes() == first
