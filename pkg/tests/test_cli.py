import csv
import json
import math

import numpy as np
import pytest

from econokin.cli import main
from econokin.distributions import dumps, usa2001_mixture
from econokin.synthetic import fixture_path

SMALL = ["--agents", "200", "--trades", "20000", "--realizations", "3", "--seed", "7"]


def _csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def _manifest(out, command):
    return json.loads((out / f"manifest_{command}.json").read_text())


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """simulate, fit the shipped fixture, analyze and report into one directory."""
    run = tmp_path_factory.mktemp("run")
    assert main(["simulate", *SMALL, "--out", str(run)]) == 0
    assert main(["fit", str(fixture_path()), "--family", "mixture", "--out", str(run)]) == 0
    assert main(["analyze", "--model", str(run / "fit.json"), "--threshold", "4", "--out", str(run)]) == 0
    assert main(["report", str(run)]) == 0
    return run


# ---- simulate

def test_simulate_rerun_is_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", *SMALL, "--frac-t", "0.1", "--alpha", "1.25", "--out", str(a)]) == 0
    assert main(["simulate", *SMALL, "--frac-t", "0.1", "--alpha", "1.25", "--out", str(b)]) == 0
    for name in ("hist_total.csv", "hist_B.csv", "hist_T.csv", "lambda_profile.csv", "empirical_total.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma, mb = _manifest(a, "simulate"), _manifest(b, "simulate")
    assert [o["sha256"] for o in ma["outputs"]] == [o["sha256"] for o in mb["outputs"]]
    assert ma["config"] == mb["config"] and ma["config"]["seed"] == 7


def test_simulate_B_only(tmp_path):
    assert main(["simulate", *SMALL, "--frac-t", "0", "--out", str(tmp_path)]) == 0
    assert _csv(tmp_path / "hist_T.csv") == []
    assert sum(int(r["count"]) for r in _csv(tmp_path / "hist_B.csv")) > 0


def test_simulate_summary_reports_drift(tmp_path):
    assert main(["simulate", *SMALL, "--out", str(tmp_path)]) == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["conservation_drift"] < 1e-9


def test_simulate_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_agents": 150, "n_trades": 5000, "n_realizations": 2, "seed": 1}))
    assert main(["simulate", "--config", str(cfg), "--agents", "120", "--out", str(tmp_path)]) == 0
    conf = _manifest(tmp_path, "simulate")["config"]
    assert conf["n_agents"] == 120 and conf["n_trades"] == 5000 and conf["seed"] == 1
    cfg.write_text(json.dumps({"agents_typo": 3}))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x")]) != 0


def test_simulate_invalid_config_exits_nonzero(tmp_path, capsys):
    assert main(["simulate", "--frac-t", "1.5", "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


# ---- ingest and fit

def test_ingest_fixture(tmp_path):
    assert main(["ingest", str(fixture_path()), "--out", str(tmp_path)]) == 0
    rows = _csv(tmp_path / "empirical.csv")
    assert float(rows[0]["ccdf"]) == 1.0
    meta = json.loads((tmp_path / "empirical.json").read_text())
    assert meta["source_metadata"]["synthetic"] is True


def test_malformed_csv_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("floor,ceiling,count\n0,10,abc\n")
    assert main(["fit", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "count" in capsys.readouterr().err
    assert main(["ingest", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o")]) == 1


def test_fit_fixture_recovers_weight(pipeline):
    fitted = json.loads((pipeline / "fit.json").read_text())
    assert fitted["parameters"]["w_B"] == pytest.approx(0.90, abs=0.02)
    assert fitted["initialization"]["n_starts"] == 8 and len(fitted["starts"]) == 8
    assert (pipeline / "residuals.csv").stat().st_size > 0


def test_fit_gamma_vs_mixture_on_tailed_data(tmp_path):
    for fam in ("gamma", "mixture"):
        assert main(["fit", str(fixture_path()), "--family", fam, "--out", str(tmp_path / fam)]) == 0
    g = json.loads((tmp_path / "gamma" / "fit.json").read_text())
    m = json.loads((tmp_path / "mixture" / "fit.json").read_text())
    assert g["residual_norm"] > m["residual_norm"]


def test_fit_nonconverged_exit_code(tmp_path):
    args = ["fit", str(fixture_path()), "--family", "tsallis", "--max-iterations", "1", "--n-starts", "1"]
    assert main([*args, "--out", str(tmp_path / "a")]) == 3
    assert (tmp_path / "a" / "fit.json").exists()
    assert main([*args, "--allow-nonconverged", "--out", str(tmp_path / "b")]) == 0


def test_fit_fixed_and_bounds_flags(tmp_path):
    assert main(["fit", str(fixture_path()), "--family", "mixture", "--fixed", "n=0.88",
                 "--bounds", "w_B=0.5:0.95", "--out", str(tmp_path)]) == 0
    fitted = json.loads((tmp_path / "fit.json").read_text())
    assert fitted["parameters"]["n"] == 0.88
    assert 0.5 <= fitted["parameters"]["w_B"] <= 0.95
    assert main(["fit", str(fixture_path()), "--fixed", "n", "--out", str(tmp_path / "x")]) == 1


# ---- analyze

def test_analyze_four_strata(tmp_path):
    model = tmp_path / "reference_model.json"
    model.write_text(dumps(usa2001_mixture()))
    assert main(["analyze", "--model", str(model), "--threshold", "4", "--out", str(tmp_path)]) == 0
    rows = _csv(tmp_path / "stratification.csv")
    assert len(rows) == 4
    a = json.loads((tmp_path / "analysis.json").read_text())
    assert a["stratification"]["population_ratio_BNP_TNP"] == pytest.approx(12, abs=1.5)
    assert 0 < a["gini"] < 1 and a["decile_ratio"] > 1


def test_analyze_rescale_invariance(tmp_path):
    model = tmp_path / "reference_model.json"
    model.write_text(dumps(usa2001_mixture()))
    assert main(["analyze", "--model", str(model), "--out", str(tmp_path / "a")]) == 0
    assert main(["analyze", "--model", str(model), "--rescale", "1000", "--out", str(tmp_path / "b")]) == 0
    a = json.loads((tmp_path / "a" / "analysis.json").read_text())
    b = json.loads((tmp_path / "b" / "analysis.json").read_text())
    assert b["gini"] == pytest.approx(a["gini"], rel=1e-12)
    assert b["decile_ratio"] == pytest.approx(a["decile_ratio"], rel=1e-12)


def test_analyze_equal_beta_groups(tmp_path):
    groups = tmp_path / "groups.json"
    groups.write_text(json.dumps([{"c": 0.5, "n": 0.0, "q": 1.0, "beta": 2.0},
                                  {"c": 0.5, "n": 1.3, "q": 1.1, "beta": 2.0}]))
    assert main(["analyze", "--groups", str(groups), "--out", str(tmp_path)]) == 0
    a = json.loads((tmp_path / "analysis.json").read_text())
    assert a["flow"]["delta"] == [0.0, 0.0]
    assert all(float(r["delta"]) == 0.0 for r in _csv(tmp_path / "flow.csv"))


# ---- report

def test_report_three_figures(pipeline):
    for name in ("fig1_ccdf", "fig2_pdf", "fig3_lambda"):
        for ext in (".csv", ".svg"):
            assert (pipeline / (name + ext)).stat().st_size > 0
    assert len(_csv(pipeline / "fig3_lambda.csv")) > 0


def test_report_fig1_model_ccdf_starts_at_one(pipeline):
    rows = _csv(pipeline / "fig1_ccdf.csv")
    assert float(rows[0]["x"]) == 0.0
    assert float(rows[0]["model_ccdf"]) == pytest.approx(1.0, abs=1e-9)


def test_report_fig2_fit_overlaps_generating_curve(pipeline):
    rows = _csv(pipeline / "fig2_pdf.csv")
    x = np.array([float(r["x"]) for r in rows])
    fit_pdf = np.array([float(r["model_pdf"]) for r in rows])
    gen = np.array([float(r["generating_pdf"]) for r in rows])
    sel = (x >= 0.05) & (x <= 50)
    assert sel.sum() > 20
    assert np.max(np.abs(np.log(fit_pdf[sel]) - np.log(gen[sel]))) < 0.05


def test_manifests_list_every_output(pipeline):
    for cmd in ("simulate", "fit", "analyze", "report"):
        m = _manifest(pipeline, cmd)
        assert m["version"] and m["duration_s"] >= 0 and m["outputs"]
        for o in m["outputs"]:
            assert o["bytes"] > 0 and len(o["sha256"]) == 64
    listed = {o["path"].rsplit("/", 1)[-1] for o in _manifest(pipeline, "report")["outputs"]}
    assert {"fig1_ccdf.csv", "fig2_pdf.csv", "fig3_lambda.csv", "fig1_ccdf.svg"} <= listed


def test_report_missing_inputs(tmp_path, capsys):
    assert main(["report", str(tmp_path)]) == 1
    assert "nothing to report" in capsys.readouterr().err
    assert main(["report", str(tmp_path / "absent")]) == 1
    assert not (tmp_path / "absent").exists()


def test_report_simulate_only(tmp_path):
    assert main(["simulate", *SMALL, "--out", str(tmp_path)]) == 0
    assert main(["report", str(tmp_path)]) == 0
    rows = _csv(tmp_path / "fig1_ccdf.csv")
    assert "empirical_B" in rows[0] and "model_ccdf" not in rows[0]
    assert math.isfinite(float(rows[1]["empirical_ccdf"]))
