import json
import os
import subprocess
from pathlib import Path

import pytest

BIN = os.environ.get("PHOTOSTAT_BIN", "photostat")
if os.sep in BIN:
    BIN = str(Path(BIN).resolve())
CONFIGS = Path(os.environ.get("PHOTOSTAT_CONFIGS", Path(__file__).resolve().parents[2] / "configs")).resolve()


def run(*args, cwd=None, env=None):
    full_env = dict(os.environ)
    full_env.pop("PHOTOSTAT_OUT_DIR", None)
    if env:
        full_env.update(env)
    return subprocess.run([BIN, *map(str, args)], cwd=cwd, env=full_env, capture_output=True, text=True)


def comment_lines(path):
    return [ln for ln in Path(path).read_text().splitlines() if ln.startswith("#")]


@pytest.fixture(scope="module")
def la_hist(tmp_path_factory):
    d = tmp_path_factory.mktemp("la")
    cfg = CONFIGS / "hom_la.cfg"
    assert run("--out-dir", d, "simulate", "--config", cfg, "--periods", 600000, "--name", "la").returncode == 0
    r = run("--out-dir", d, "correlate", "--in", d / "la.pst", "--config", cfg, "--out", "la_hist.csv")
    assert r.returncode == 0, r.stderr
    return d / "la_hist.csv"


def test_version():
    r = run("--version")
    assert r.returncode == 0
    assert r.stdout.strip()


def test_zero_periods_is_invalid(tmp_path):
    r = run("--out-dir", tmp_path, "simulate", "--config", CONFIGS / "qd1_hbt.cfg", "--periods", 0)
    assert r.returncode == 2
    assert "period" in r.stderr


def test_bad_config_reports_file_and_line(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("emitter:\n  gamma_fast: 0.62\n  gamma_fst: 0.5\n")
    r = run("--out-dir", tmp_path, "simulate", "--config", cfg)
    assert r.returncode == 2
    assert "bad.cfg:3" in r.stderr
    assert "gamma_fst" in r.stderr


def test_out_of_range_value_is_rejected(tmp_path):
    cfg = tmp_path / "neg.cfg"
    cfg.write_text("chain:\n  eta_setup: 1.5\n")
    r = run("--out-dir", tmp_path, "simulate", "--config", cfg)
    assert r.returncode == 2
    assert "neg.cfg" in r.stderr


def test_missing_input_is_io_error(tmp_path):
    r = run("--out-dir", tmp_path, "simulate", "--config", tmp_path / "nope.cfg")
    assert r.returncode == 4
    r = run("--out-dir", tmp_path, "correlate", "--in", tmp_path / "nope.pst", "--out", "h.csv")
    assert r.returncode == 4


def test_g2_on_empty_histogram_fails(tmp_path):
    h = tmp_path / "empty.csv"
    h.write_text("# bin_width_ps=100\nbin_center_ps,counts\n")
    r = run("g2", "--hist", h, "--rep-period", 12.5)
    assert r.returncode != 0
    assert r.stderr


def test_unknown_subcommand_is_usage_error():
    assert run("frobnicate").returncode == 2


def test_same_seed_gives_identical_streams(tmp_path):
    cfg = CONFIGS / "qd1_hbt.cfg"
    for name in ("a", "b"):
        r = run("--out-dir", tmp_path, "simulate", "--config", cfg, "--periods", 20000, "--seed", 5, "--name", name)
        assert r.returncode == 0, r.stderr
    assert (tmp_path / "a.pst").read_bytes() == (tmp_path / "b.pst").read_bytes()
    r = run("--out-dir", tmp_path, "simulate", "--config", cfg, "--periods", 20000, "--seed", 6, "--name", "c")
    assert r.returncode == 0
    assert (tmp_path / "a.pst").read_bytes() != (tmp_path / "c.pst").read_bytes()


def test_thread_count_does_not_change_stream(tmp_path):
    cfg = CONFIGS / "qd1_hbt.cfg"
    for name, threads in (("t1", 1), ("t4", 4)):
        r = run("--out-dir", tmp_path, "--threads", threads, "simulate", "--config", cfg, "--periods", 20000, "--name", name)
        assert r.returncode == 0, r.stderr
    assert (tmp_path / "t1.pst").read_bytes() == (tmp_path / "t4.pst").read_bytes()


def test_relative_efficiency():
    r = run("efficiency", "--method", "relative", "--csat-qd", 2.93e5, "--csat-bulk", 5.22e3, "--eta-bulk", 0.0079)
    assert r.returncode == 0, r.stderr
    assert "44.3%" in r.stdout


def test_efficiency_report_json(tmp_path):
    r = run("--out-dir", tmp_path, "efficiency", "--method", "alpha", "--i-slow", 0.092, "--i-fast", 1.0,
            "--out", "alpha.json")
    assert r.returncode == 0, r.stderr
    assert "1.092" in r.stdout
    report = json.loads((tmp_path / "alpha.json").read_text())
    assert report["provenance"]["tool"] == "photostat"


def test_efficiency_missing_input_is_usage_error():
    r = run("efficiency", "--method", "alpha", "--i-slow", 0.092)
    assert r.returncode == 2
    assert "--i-fast" in r.stderr


def test_fit_hom_recovers_coherence_time(la_hist, tmp_path):
    r = run("--out-dir", tmp_path, "fit-hom", "--hist", la_hist, "--config", CONFIGS / "hom_la.cfg",
            "--out", "fit.json", "--curves", "curves.csv")
    assert r.returncode == 0, r.stderr
    report = json.loads((tmp_path / "fit.json").read_text())
    derived = {d["name"]: d for d in report["derived"]}
    t2s = derived["t2_star"]
    # Simulated with T2* = 1 / gamma_dp = 0.77 ns.
    assert abs(t2s["value"] - 0.77) < 3 * t2s["error"] + 1e-9
    assert report["provenance"]["tool"] == "photostat"
    header = comment_lines(tmp_path / "curves.csv")
    assert any(ln.startswith("# command=") for ln in header)
    cols = [ln for ln in (tmp_path / "curves.csv").read_text().splitlines() if not ln.startswith("#")][0]
    assert cols.split(",")[:3] == ["bin_center_ns", "counts", "model"]


def test_fit_hom_needs_fixed_inputs(la_hist):
    r = run("fit-hom", "--hist", la_hist, "--gamma", 0.62)
    assert r.returncode == 2


def test_histogram_has_provenance_header(la_hist):
    header = comment_lines(la_hist)
    keys = {ln[2:].split("=", 1)[0] for ln in header}
    assert {"bin_width_ps", "t_min_ps", "tool", "version", "command"} <= keys


def test_g2_and_scan_on_simulated_hbt(tmp_path):
    cfg = CONFIGS / "qd1_hbt.cfg"
    assert run("--out-dir", tmp_path, "simulate", "--config", cfg, "--periods", 200000, "--name", "q").returncode == 0
    assert run("--out-dir", tmp_path, "correlate", "--in", tmp_path / "q.pst", "--config", cfg,
               "--out", "q_hist.csv").returncode == 0
    r = run("--out-dir", tmp_path, "g2", "--hist", tmp_path / "q_hist.csv", "--rep-period", 13.16, "--out", "g2.json")
    assert r.returncode == 0, r.stderr
    g2 = json.loads((tmp_path / "g2.json").read_text())
    assert 0.0 <= g2["g2"] < 0.15
    assert g2["error"] > 0
    r = run("scan", "--hist", tmp_path / "q_hist.csv", "--rep-period", 13.16, "--max-delay-ns", 130)
    assert r.returncode == 0, r.stderr


def test_out_dir_env_var_is_honoured(tmp_path):
    target = tmp_path / "env_out"
    target.mkdir()
    work = tmp_path / "work"
    work.mkdir()
    r = run("simulate", "--config", CONFIGS / "qd1_hbt.cfg", "--periods", 5000, "--name", "e", cwd=work,
            env={"PHOTOSTAT_OUT_DIR": str(target)})
    assert r.returncode == 0, r.stderr
    assert (target / "e.pst").exists()
    assert (target / "e.provenance.json").exists()
    assert not (work / "e.pst").exists()


def test_out_dir_flag_beats_env_var(tmp_path):
    flag = tmp_path / "flag"
    env_dir = tmp_path / "env"
    env_dir.mkdir()
    r = run("--out-dir", flag, "simulate", "--config", CONFIGS / "qd1_hbt.cfg", "--periods", 5000, "--name", "f",
            env={"PHOTOSTAT_OUT_DIR": str(env_dir)})
    assert r.returncode == 0, r.stderr
    assert (flag / "f.pst").exists()
    assert not (env_dir / "f.pst").exists()


def test_relative_out_lands_in_out_dir(tmp_path):
    work = tmp_path / "work"
    work.mkdir()
    r = run("--out-dir", tmp_path / "o", "efficiency", "--method", "alpha", "--i-slow", 0.1, "--i-fast", 1.0,
            "--out", "sub/a.json", cwd=work)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "o" / "sub" / "a.json").exists()
    assert not any(work.iterdir())


def data_rows(path):
    import csv

    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_fit_sat_writes_points_and_dense_model(tmp_path):
    pts = tmp_path / "sat.csv"
    rows = [(0.1, 2.4e4), (0.25, 5.6e4), (0.5, 1.0e5), (0.8, 1.5e5), (1.2, 1.9e5), (1.8, 2.4e5), (2.5, 2.6e5),
            (3.5, 2.8e5), (5.0, 2.9e5)]
    pts.write_text("power,counts,error\n" + "".join(f"{p},{c},{0.02 * c}\n" for p, c in rows))
    r = run("--out-dir", tmp_path, "fit-sat", "--in", pts, "--out", "s.json", "--curve", "s.csv")
    assert r.returncode == 0, r.stderr
    report = json.loads((tmp_path / "s.json").read_text())
    assert {p["name"] for p in report["parameters"]} == {"c_sat", "p_sat"}
    points = data_rows(tmp_path / "s.csv")
    assert list(points[0]) == ["power", "counts", "error", "model"]
    assert len(points) == len(rows)
    dense = data_rows(tmp_path / "s_model.csv")
    assert list(dense[0]) == ["power", "model"]
    assert float(dense[0]["model"]) == 0.0


def test_fit_sat_rejects_missing_column(tmp_path):
    pts = tmp_path / "bad.csv"
    pts.write_text("power,counts\n0.1,1\n")
    r = run("--out-dir", tmp_path, "fit-sat", "--in", pts)
    assert r.returncode != 0
    assert "error" in r.stderr


def test_detuning_sweep_columns(tmp_path):
    r = run("--out-dir", tmp_path, "detuning", "--config", CONFIGS / "cavity.cfg", "--out", "d.csv")
    assert r.returncode == 0, r.stderr
    rows = data_rows(tmp_path / "d.csv")
    assert list(rows[0]) == ["detuning_nm", "beta", "eta_x", "purcell", "gamma_cav"]
    beta = [float(x["beta"]) for x in rows]
    centre = min(range(len(rows)), key=lambda i: abs(float(rows[i]["detuning_nm"])))
    assert beta[centre] == max(beta)
    assert all(0.0 <= b <= 1.0 for b in beta)


def test_stream_is_named_after_config_by_default(tmp_path):
    r = run("--out-dir", tmp_path, "simulate", "--config", CONFIGS / "qd1_hbt.cfg", "--periods", 1000)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "qd1_hbt.pst").exists()
    assert (tmp_path / "qd1_hbt.provenance.json").exists()
