"""End-to-end tests of the command-line harness, run in process."""

import filecmp
import json
import math

import pytest

from gasg21.cli import main


def synth_low_rank(tmp_path, seed=5, n=30, m=40, d=3, observe=0.8,
                   outliers=0.0, tag=""):
    data = tmp_path / f"data{tag}.txt"
    truth = tmp_path / f"truth{tag}.csv"
    labels = tmp_path / f"tlabels{tag}.txt"
    rc = main([
        "synth", "--mode", "low-rank", "--n", str(n), "--m", str(m),
        "--d", str(d), "--observe", str(observe), "--outliers", str(outliers),
        "--seed", str(seed), "--data", str(data), "--truth", str(truth),
        "--truth-labels", str(labels),
    ])
    assert rc == 0
    return data, truth, labels


def test_synth_deterministic_bytes(tmp_path):
    d1, t1, l1 = synth_low_rank(tmp_path, tag="a")
    d2, t2, l2 = synth_low_rank(tmp_path, tag="b")
    assert filecmp.cmp(d1, d2, shallow=False)
    assert filecmp.cmp(t1, t2, shallow=False)
    assert filecmp.cmp(l1, l2, shallow=False)


def test_synth_file_shapes(tmp_path):
    data, truth, labels = synth_low_rank(
        tmp_path, seed=0, n=200, m=200, d=5, observe=0.7, outliers=0.5
    )
    lines = data.read_text().splitlines()
    assert len(lines) == 200 * 140  # ceil(0.7 * 200) entries per column
    lab = labels.read_text().split()
    assert len(lab) == 200
    assert sum(1 for v in lab if v == "-1") == 100
    rows = truth.read_text().splitlines()
    assert len(rows) == 200
    assert len(rows[0].split(",")) == 5


def test_synth_requires_data_path(tmp_path, capsys):
    rc = main(["synth", "--n", "10", "--m", "10", "--d", "2"])
    assert rc == 1
    assert "--data" in capsys.readouterr().err


def test_recover_eval_round_trip(tmp_path, capsys):
    data, truth, _ = synth_low_rank(tmp_path)
    basis = tmp_path / "recovered.csv"
    trace = tmp_path / "trace.csv"
    rc = main([
        "recover", "--data", str(data), "--rank", "3", "--seed", "1",
        "--iters", "400", "--truth", str(truth),
        "--basis-out", str(basis), "--trace-out", str(trace),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    printed = float(out.split("angle")[1].split()[0])

    rc = main([
        "eval", "--basis-out", str(basis), "--truth", str(truth), "--json",
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert abs(report["angle"] - printed) <= 1e-9
    assert report["angle"] < 0.5


def test_eval_relative_residual_key(tmp_path, capsys):
    data, truth, _ = synth_low_rank(tmp_path, observe=1.0)
    basis = tmp_path / "b.csv"
    rc = main([
        "recover", "--data", str(data), "--rank", "3", "--iters", "300",
        "--basis-out", str(basis),
    ])
    assert rc == 0
    capsys.readouterr()
    rc = main([
        "eval", "--basis-out", str(basis), "--truth", str(truth),
        "--data", str(data), "--json",
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {"angle", "relative_residual"}
    assert math.isfinite(report["relative_residual"])


def test_recover_zero_iterations_header_only_trace(tmp_path, capsys):
    data, _, _ = synth_low_rank(tmp_path)
    trace = tmp_path / "trace.csv"
    rc = main([
        "recover", "--data", str(data), "--rank", "3", "--iters", "0",
        "--trace-out", str(trace),
    ])
    assert rc == 0
    assert "iterations 0" in capsys.readouterr().out
    assert trace.read_text() == "iter,col,eta,mu,level,residual,angle,skipped\n"


def test_usage_errors_exit_one(tmp_path, capsys):
    assert main(["explode"]) == 1
    assert main(["recover", "--no-such-flag"]) == 1
    assert main(["recover"]) == 1  # missing --data/--rank
    assert main(["cluster", "--data", "x", "--rank", "2"]) == 1  # missing --k
    assert main(["synth", "--n", "10", "--d", "2"]) == 1  # low-rank needs --m
    assert main(["eval"]) == 1  # nothing to score
    capsys.readouterr()


def test_missing_file_exits_two(tmp_path, capsys):
    rc = main(["recover", "--data", str(tmp_path / "absent.txt"), "--rank", "2"])
    assert rc == 2
    assert "data error" in capsys.readouterr().err


def test_malformed_file_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1 2.0\n0 1\n")
    rc = main(["recover", "--data", str(bad), "--rank", "2"])
    assert rc == 2
    assert "data error" in capsys.readouterr().err


def test_thin_columns_exit_three(tmp_path, capsys):
    data = tmp_path / "thin.txt"
    data.write_text("0 0 1.0\n1 1 1.0\n")
    rc = main(["recover", "--data", str(data), "--rank", "2"])
    assert rc == 3
    assert "numerical failure" in capsys.readouterr().err


def test_cluster_k1_matches_recover_bytes(tmp_path, capsys):
    data, _, _ = synth_low_rank(tmp_path)
    rb, rt = tmp_path / "rb.csv", tmp_path / "rt.csv"
    cb, ct = tmp_path / "cb.csv", tmp_path / "ct.csv"
    labels = tmp_path / "cl.txt"
    rc = main([
        "recover", "--data", str(data), "--rank", "3", "--seed", "9",
        "--iters", "150", "--basis-out", str(rb), "--trace-out", str(rt),
    ])
    assert rc == 0
    rc = main([
        "cluster", "--k", "1", "--data", str(data), "--rank", "3",
        "--seed", "9", "--iters", "150", "--basis-out", str(cb),
        "--trace-out", str(ct), "--labels-out", str(labels),
    ])
    assert rc == 0
    capsys.readouterr()
    assert filecmp.cmp(rb, cb, shallow=False)
    assert filecmp.cmp(rt, ct, shallow=False)
    lab = labels.read_text().split()
    assert lab == ["0"] * 40  # every column is wide enough to be assigned


def test_repeats_naming_and_content(tmp_path, capsys):
    data, _, _ = synth_low_rank(tmp_path)
    basis = tmp_path / "b.csv"
    rc = main([
        "recover", "--data", str(data), "--rank", "3", "--seed", "4",
        "--iters", "100", "--repeats", "2", "--basis-out", str(basis),
    ])
    assert rc == 0
    r0, r1 = tmp_path / "b.r0.csv", tmp_path / "b.r1.csv"
    assert r0.exists() and r1.exists()
    assert not basis.exists()
    assert not filecmp.cmp(r0, r1, shallow=False)

    single = tmp_path / "single.csv"
    rc = main([
        "recover", "--data", str(data), "--rank", "3", "--seed", "4",
        "--iters", "100", "--basis-out", str(single),
    ])
    assert rc == 0
    capsys.readouterr()
    assert filecmp.cmp(r0, single, shallow=False)


def test_cluster_eval_json_keys(tmp_path, capsys):
    data = tmp_path / "u.txt"
    truth = tmp_path / "ut.csv"
    tl = tmp_path / "utl.txt"
    rc = main([
        "synth", "--mode", "union", "--k", "2", "--d", "2", "--n", "20",
        "--per", "30", "--observe", "1.0", "--seed", "0",
        "--data", str(data), "--truth", str(truth), "--truth-labels", str(tl),
    ])
    assert rc == 0
    assert (tmp_path / "ut_00.csv").exists()
    assert (tmp_path / "ut_01.csv").exists()

    cb = tmp_path / "cb.csv"
    labels = tmp_path / "labels.txt"
    rc = main([
        "cluster", "--k", "2", "--data", str(data), "--rank", "2",
        "--seed", "0", "--max-iter", "600",
        "--basis-out", str(cb), "--labels-out", str(labels),
        "--truth", str(truth), "--truth-labels", str(tl),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "segmentation error" in out

    rc = main([
        "eval", "--k", "2", "--basis-out", str(cb), "--truth", str(truth),
        "--labels-out", str(labels), "--truth-labels", str(tl), "--json",
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {
        "angle_worst",
        "angle_median",
        "angle_mean",
        "segmentation_error_pct",
    }
    assert 0.0 <= report["segmentation_error_pct"] <= 100.0
    assert report["angle_worst"] >= report["angle_median"] >= 0.0
