import csv
import io
import subprocess
import sys

import pytest

from quadsparse import cli
from quadsparse.experiments import aggregate
from quadsparse.io import load_instance
from quadsparse.sensing import generate_instance


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


SMALL = ("--n", "30", "--k", "3", "--m", "600", "--mu0", "0.8")


# exit codes

def test_missing_required_flag_prints_usage(capsys, tmp_path):
    code, out, err = run(capsys, "gen", "--n", "10", "--k", "2", "--m", "5", "--mu0", "0.9")
    assert code == cli.EXIT_USAGE
    assert "usage:" in err and "--out" in err


def test_unknown_flag_is_usage(capsys):
    code, _, err = run(capsys, "run", "tgd", "--bogus", "1")
    assert code == cli.EXIT_USAGE and "usage:" in err


def test_invalid_parameter(capsys):
    # mu0 below 1/sqrt(k) is outside the domain
    code, _, err = run(capsys, "run", "init", "--n", "20", "--k", "4", "--m", "50", "--mu0", "0.1",
                       "--seed", "1")
    assert code == cli.EXIT_INVALID and "error" in err


def test_bad_instance_file(capsys, tmp_path):
    bad = tmp_path / "bad.qsr"
    bad.write_bytes(b"not an instance file at all" * 4)
    code, _, err = run(capsys, "run", "tgd", "--instance", str(bad))
    assert code == cli.EXIT_IO
    code, _, _ = run(capsys, "run", "tgd", "--instance", str(tmp_path / "missing.qsr"))
    assert code == cli.EXIT_IO


def test_budget_exceeded(capsys, tmp_path):
    code, _, err = run(capsys, "ogp", "--n", "40", "--k", "6", "--m", "10", "--budget", "100",
                       "--seed", "0", "--out-dir", str(tmp_path))
    assert code == cli.EXIT_BUDGET and "budget" in err


def test_exit_code_table_is_exhaustive():
    codes = {v for k, v in vars(cli).items() if k.startswith("EXIT_") and isinstance(v, int)}
    assert codes == set(cli.EXIT_CODES)


def test_bad_config(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("nonsense line\n")
    code, _, _ = run(capsys, "validate", "--config", str(cfg))
    assert code == cli.EXIT_USAGE
    cfg.write_text("flavour = 3\n")
    code, _, _ = run(capsys, "validate", "--config", str(cfg))
    assert code == cli.EXIT_USAGE


# gen

def test_gen_round_trip(capsys, tmp_path):
    path = tmp_path / "i.qsr"
    code, out, _ = run(capsys, "gen", "--n", "100", "--k", "5", "--m", "3000", "--mu0", "0.8",
                       "--seed", "7", "--out", str(path))
    assert code == 0
    row = rows(out)[0]
    assert row["schema"] == "gen/1" and int(row["bytes"]) == path.stat().st_size
    inst = load_instance(path)
    ref = generate_instance(100, 5, 3000, 0.8, seed=7)
    assert inst.b.tobytes() == ref.b.tobytes()


def test_gen_streamed_small(capsys, tmp_path):
    path = tmp_path / "s.qsr"
    code, _, _ = run(capsys, "gen", "--n", "100", "--k", "5", "--m", "3000", "--mu0", "0.8",
                     "--seed", "7", "--mode", "streamed", "--out", str(path))
    assert code == 0 and path.stat().st_size < 1024


def test_omitted_seed_is_printed(capsys, tmp_path):
    code, out, err = run(capsys, "run", "init", *SMALL)
    assert code == 0
    seed = int(err.strip().split("seed: ")[1])
    again = run(capsys, "run", "init", *SMALL, "--seed", str(seed))[1]
    assert again == out


# run

def test_run_rows_and_determinism(capsys, tmp_path):
    args = ("run", "spf", *SMALL, "--seed", "3", "--seeds", "3")
    code, out, _ = run(capsys, *args)
    assert code == 0
    recs = rows(out)
    assert [int(r["seed"]) for r in recs] == [3, 4, 5]
    assert all(r["schema"] == "run/1" and r["wall_time"] == "" for r in recs)
    assert run(capsys, *args)[1] == out


def test_run_trace_file(capsys, tmp_path):
    trace = tmp_path / "t.csv"
    code, out, _ = run(capsys, "run", "tgd", "--eta", "0.04", *SMALL, "--seed", "2",
                       "--T-max", "40", "--trace", str(trace))
    assert code == 0
    tr = rows(trace.read_text())
    rec = rows(out)[0]
    assert tr[0]["schema"] == "trace/1" and int(tr[0]["iter"]) == 0
    assert float(tr[0]["error"]) == pytest.approx(float(rec["init_error"]))
    assert float(tr[-1]["error"]) == pytest.approx(float(rec["final_error"]))
    assert len(tr) == int(rec["iterations"]) + 1


def test_spf_and_tgd_share_metric(capsys, tmp_path):
    path = tmp_path / "i.qsr"
    run(capsys, "gen", *SMALL, "--seed", "5", "--out", str(path))
    inst = load_instance(path)
    outs = {}
    for algo in ("init", "spf", "tgd"):
        outs[algo] = rows(run(capsys, "run", algo, "--instance", str(path), "--T-max", "30")[1])[0]
    assert outs["spf"]["init_error"] == outs["tgd"]["init_error"] == outs["init"]["final_error"]
    from quadsparse.init_quadratic import initialize
    from quadsparse.linalg import sign_resolved_error
    x = initialize(inst).x_init
    assert float(outs["init"]["final_error"]) == pytest.approx(sign_resolved_error(x, inst.x0),
                                                               rel=1e-15)
    assert sign_resolved_error(-x, inst.x0) == sign_resolved_error(x, inst.x0)


def test_run_timing_fills_wall_time(capsys):
    out = run(capsys, "run", "init", *SMALL, "--seed", "1", "--timing")[1]
    assert float(rows(out)[0]["wall_time"]) > 0


def test_algorithm_error_is_stop_reason(capsys):
    # a huge threshold empties the support; that is a result, not a crash
    code, out, _ = run(capsys, "run", "tgd", *SMALL, "--seed", "1", "--C-thr", "1e6")
    assert code == 0
    assert rows(out)[0]["stop_reason"] == "degenerate_support"
    code, _, _ = run(capsys, "run", "tgd", *SMALL, "--seed", "1", "--eta", "5")
    assert code == cli.EXIT_INVALID


def test_pr_init_needs_pr_instance(capsys, tmp_path):
    path = tmp_path / "i.qsr"
    run(capsys, "gen", *SMALL, "--seed", "5", "--out", str(path))
    code, _, _ = run(capsys, "run", "pr-init", "--instance", str(path))
    assert code == cli.EXIT_INVALID


# sweep

def test_sweep_row_count(capsys):
    code, out, _ = run(capsys, "sweep", "--algorithm", "init", "--n", "20,30", "--k", "2",
                       "--m", "100,200,300", "--mu0", "0.8,0.9", "--seeds", "2", "--seed", "0")
    assert code == 0
    recs = rows(out)
    assert len(recs) == 2 * 1 * 3 * 2 * 1
    assert all(r["seeds"] == "2" and r["schema"] == "sweep/1" for r in recs)


def test_single_point_sweep_matches_run(capsys, tmp_path):
    flags = ("--n", "30", "--k", "3", "--m", "600", "--mu0", "0.8", "--seed", "11")
    out = run(capsys, "sweep", "--algorithm", "spf", *flags, "--seeds", "4",
              "--success-threshold", "1e-3", "--rows", str(tmp_path / "r.csv"))[1]
    point = rows(out)[0]
    recs = rows(run(capsys, "run", "spf", *flags, "--seeds", "4")[1])
    rate, med = aggregate([dict(final_error=float(r["final_error"])) for r in recs], 1e-3)
    assert float(point["success_rate"]) == rate
    assert float(point["median_error"]) == med
    assert rows((tmp_path / "r.csv").read_text()) == recs


def test_sweep_success_monotone_in_m(capsys):
    out = run(capsys, "sweep", "--algorithm", "init", "--n", "100", "--k", "5",
              "--m", "500,1000,2000,4000", "--mu0", "0.8", "--seeds", "20", "--seed", "0",
              "--mode", "streamed", "--success-threshold", "0.3", "--workers", "4")[1]
    rates = [float(r["success_rate"]) for r in rows(out)]
    assert rates == sorted(rates) and rates[-1] >= 0.9


def test_workers_do_not_change_bytes(capsys, tmp_path):
    args = ("sweep", "--algorithm", "spf", "--n", "30", "--k", "3", "--m", "300,600",
            "--mu0", "0.8", "--seeds", "3", "--seed", "4", "--rows")
    one = run(capsys, *args, str(tmp_path / "a.csv"), "--workers", "1")[1]
    four = run(capsys, *args, str(tmp_path / "b.csv"), "--workers", "4")[1]
    assert one == four
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_workers_env(capsys, monkeypatch):
    args = ("run", "init", *SMALL, "--seed", "0", "--seeds", "3")
    base = run(capsys, *args)[1]
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    assert run(capsys, *args)[1] == base
    monkeypatch.setenv(cli.WORKERS_ENV, "x")
    assert run(capsys, *args)[0] == cli.EXIT_USAGE


# config

def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\nn = 30\nk=3\nm = 600\nmu0 = 0.8\nseed = 9\nT-max = 7\n")
    from_cfg = rows(run(capsys, "run", "tgd", "--config", str(cfg))[1])[0]
    assert from_cfg["n"] == "30" and from_cfg["seed"] == "9"
    assert int(from_cfg["iterations"]) <= 7
    flagged = rows(run(capsys, "run", "tgd", "--config", str(cfg), "--seed", "10",
                       "--T-max", "3")[1])[0]
    assert flagged["seed"] == "10" and int(flagged["iterations"]) <= 3
    # defaults apply when neither names the key
    assert from_cfg["sigma"] == "0.0" and from_cfg["noise"] == "gaussian"


# ogp and validate

def test_ogp_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "ogp", "--n", "12", "--k", "3", "--kprime", "3", "--m", "10",
                       "--trials", "5", "--seed", "1", "--out-dir", str(tmp_path))
    assert code == 0
    summ = rows(out)[0]
    assert summ["schema"] == "ogp-summary/1" and summ["trials"] == "5"
    assert 0 <= float(summ["pass_fraction"]) <= 1
    curve = rows((tmp_path / "ogp_curve.csv").read_text())
    prof = rows((tmp_path / "ogp_profile.csv").read_text())
    assert len(curve) == 4 and len(prof) == 5 * 4
    assert all(len(p["argmin_support_csv"].split(",")) == 3 for p in prof)


def test_validate_chi2(capsys):
    code, out, _ = run(capsys, "validate", "--suite", "chi2", "--t", "2", "--trials", "100000",
                       "--seed", "0")
    assert code == 0
    assert all(r["pass"] == "true" for r in rows(out))


def test_validate_failure_exit(capsys, monkeypatch):
    import quadsparse.validation as v
    monkeypatch.setattr(v, "run_suites", lambda *a, **kw: [("x", "y", 1.0, 0.0, False)])
    assert run(capsys, "validate", "--seed", "0")[0] == cli.EXIT_FAILED


def test_plot_dir(capsys, tmp_path):
    pd = tmp_path / "plots"
    run(capsys, "run", "tgd", *SMALL, "--seed", "1", "--T-max", "20", "--plot-dir", str(pd))
    run(capsys, "sweep", "--algorithm", "init", "--n", "30", "--k", "3", "--m", "200,400",
        "--mu0", "0.8", "--seeds", "2", "--seed", "0", "--plot-dir", str(pd))
    run(capsys, "ogp", "--n", "10", "--k", "2", "--m", "8", "--trials", "2", "--seed", "0",
        "--out-dir", str(tmp_path), "--plot-dir", str(pd))
    for name in ("run_errors.png", "sweep_success.png", "ogp_curve.png"):
        assert (pd / name).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "quadsparse", "--version"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and res.stdout.strip()
