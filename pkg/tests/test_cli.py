import csv
import json

import numpy as np
import pytest

from rescurve.cli import main, run_analyze, run_batch, run_correlate, run_synth
from rescurve.errors import NoOverlap
from rescurve.pipeline import AnalysisOptions

TWO = {
    "horizon": 60,
    "trend": {"kind": "linear", "intercept": 50.0, "slope": 0.1},
    "noise_sd": 0.0,
    "seed": 1,
    "disruptions": [
        {"alpha": 15, "theta": 1.0, "vartheta": 2.0, "duration": 8, "start_index": 30},
        {"alpha": 10, "theta": 1.5, "vartheta": 1.0, "duration": 10, "start_index": 42},
    ],
}


def scenario(tmp_path, name="s", **over):
    spec = tmp_path / f"{name}.json"
    spec.write_text(json.dumps({**TWO, **over}))
    out = tmp_path / name
    run_synth(spec, out)
    return out


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def test_synth_is_byte_identical(tmp_path):
    a = scenario(tmp_path, "a", noise_sd=0.02)
    b = scenario(tmp_path, "b", noise_sd=0.02)
    for f in ("observed.csv", "expected.csv", "truth.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    assert len(json.loads((a / "truth.json").read_text())["disruptions"]) == 2


def test_analyze_writes_outputs(tmp_path):
    s = scenario(tmp_path)
    out = tmp_path / "out"
    code = main(["analyze", str(s / "observed.csv"), "--expected", str(s / "expected.csv"),
                 "--window", "1", "--out", str(out), "--plot"])
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    truth = json.loads((s / "truth.json").read_text())
    assert len(rep["disruptions"]) == 2
    assert rep["indices"]["r"] == pytest.approx(truth["true_indices"]["r"], abs=1e-3)
    assert rep["indices"]["rho"] == pytest.approx(truth["true_indices"]["rho"], abs=1e-3)
    assert rep["settings"]["window"] == 1 and rep["inputs"]["observed"].startswith("sha256:")
    assert (out / "disruptions.csv").read_text().count("\n") == 3
    svg = (out / "plot.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg


def test_flat_series_report(tmp_path):
    months = [f"{2017 + i // 12}-{i % 12 + 1:02d}" for i in range(48)]
    obs = write_csv(tmp_path / "flat.csv", ["month", "value"], [[m, 12.0] for m in months])
    res = run_analyze(obs, tmp_path / "o", cutoff="2019-06")
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["indices"]["r"] == 1.0 and rep["windows"] == []
    assert rep["flags"]["no_disruptions"] and res.report.label == "flat"


def test_exit_codes(tmp_path, capsys):
    s = scenario(tmp_path)
    obs = str(s / "observed.csv")
    assert main(["analyze", str(tmp_path / "missing.csv"), "--cutoff", "2019-01",
                 "--out", str(tmp_path / "x")]) == 8
    bad = tmp_path / "bad.csv"
    bad.write_text("month,value\n2017-01,1\n2017-03,2\n")
    assert main(["analyze", str(bad), "--cutoff", "2017-02", "--out", str(tmp_path / "x")]) == 3
    assert main(["analyze", obs, "--cutoff", "2031-01", "--out", str(tmp_path / "x")]) == 3
    assert main(["analyze", obs, "--cutoff", "nonsense", "--out", str(tmp_path / "x")]) == 3
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps({**TWO, "disruptions": TWO["disruptions"] * 2}))
    assert main(["synth", str(spec), "--out", str(tmp_path / "y")]) == 7
    with pytest.raises(SystemExit) as exc:
        main(["analyze", obs])
    assert exc.value.code == 64
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "64  bad command-line usage" in capsys.readouterr().out


def _manifest(tmp_path, rows):
    return write_csv(tmp_path / "manifest.csv", ["label", "observed_path", "expected_path", "group"], rows)


def test_batch_isolates_unreadable_rows(tmp_path):
    s = scenario(tmp_path)
    man = _manifest(tmp_path, [
        ["ok1", "s/observed.csv", "s/expected.csv", "g"],
        ["gone", "s/nope.csv", "", "g"],
        ["ok2", "s/observed.csv", "s/expected.csv", "g"],
    ])
    code = main(["batch", str(man), "--out", str(tmp_path / "b"), "--window", "1", "--plot"])
    assert code == 9
    summary = json.loads((tmp_path / "b" / "groups.json").read_text())
    assert [f["label"] for f in summary["failed"]] == ["gone"]
    assert summary["failed"][0]["error"] == "IoFailure"
    rows = list(csv.DictReader(open(tmp_path / "b" / "indices.csv")))
    assert [r["status"] for r in rows] == ["ok", "failed", "ok"]
    assert (tmp_path / "b" / "ok1" / "report.json").exists()
    assert (tmp_path / "b" / "rankings.svg").exists()


def test_batch_identical_inputs_zero_width(tmp_path):
    scenario(tmp_path)
    man = _manifest(tmp_path, [[f"u{i}", "s/observed.csv", "s/expected.csv", "g"] for i in range(3)])
    _, outcomes, summary = run_batch(man, tmp_path / "b", options=AnalysisOptions(window=1))
    (g,) = summary["groups"]
    r = outcomes[0]["r"]
    assert g["r"]["mean"] == r and g["r"]["ci_low"] == r and g["r"]["ci_high"] == r
    assert g["r"]["count"] == 3


def test_batch_group_means_and_parallel(tmp_path):
    rng = np.random.default_rng(5)
    rows = []
    for i in range(20):
        d = [{"alpha": float(rng.uniform(5, 20)), "theta": float(rng.uniform(0.7, 3)),
              "vartheta": float(rng.uniform(0.7, 3)), "duration": int(rng.integers(6, 12)),
              "start_index": 20},
             {"alpha": float(rng.uniform(5, 20)), "theta": float(rng.uniform(0.7, 3)),
              "vartheta": float(rng.uniform(0.7, 3)), "duration": int(rng.integers(6, 12)),
              "start_index": 34}]
        scenario(tmp_path, f"st{i}", disruptions=d, horizon=54)
        rows.append([f"st{i}", f"st{i}/observed.csv", f"st{i}/expected.csv", "ab"[i % 2]])
    man = _manifest(tmp_path, rows)
    opts = AnalysisOptions(window=1)
    _, outcomes, summary = run_batch(man, tmp_path / "b", options=opts)
    for g in summary["groups"]:
        members = [o["r"] for row, o in zip(rows, outcomes) if row[3] == g["group"]]
        assert g["r"]["mean"] == pytest.approx(np.mean(members), abs=1e-9)
        assert g["r"]["count"] == 10
    _, par, _ = run_batch(man, tmp_path / "p", options=opts, jobs=2)
    assert [o["r"] for o in par] == [o["r"] for o in outcomes]
    assert (tmp_path / "b" / "indices.csv").read_bytes() == (tmp_path / "p" / "indices.csv").read_bytes()


def test_correlate_self_and_planted(tmp_path):
    rng = np.random.default_rng(8)
    x = rng.uniform(0, 1, 40)
    y = x + rng.normal(0, 0.1, 40)
    units = [f"u{i}" for i in range(40)]
    left = write_csv(tmp_path / "idx.csv", ["unit", "r"], [[u, v] for u, v in zip(units, y)])
    right = write_csv(tmp_path / "cov.csv", ["unit", "same", "density"],
                      [[u, a, b] for u, a, b in zip(units, y, x)] + [["extra", 1, 2]])
    out = run_correlate(left, right)
    assert out["table"]["r"]["same"]["coefficient"] == pytest.approx(1.0, abs=1e-12)
    planted = out["table"]["r"]["density"]
    assert planted["coefficient"] > 0.9 and planted["p"] < 0.001
    assert out["joined_units"] == 40 and out["dropped"] == {"left_only": 0, "right_only": 1}
    target = tmp_path / "corr.json"
    assert main(["correlate", str(left), str(right), "--out", str(target)]) == 0
    assert json.loads(target.read_text())["joined_units"] == 40


def test_correlate_single_file_and_no_overlap(tmp_path):
    single = write_csv(tmp_path / "one.csv", ["unit", "index_value", "covariate_value"],
                       [["a", 1, 2], ["b", 2, 4.5], ["c", 3, 6], ["d", 4, 7.5]])
    out = run_correlate(single)
    assert out["table"]["index_value"]["covariate_value"]["coefficient"] > 0.99
    left = write_csv(tmp_path / "l.csv", ["unit", "r"], [["a", 1], ["b", 2], ["c", 3]])
    right = write_csv(tmp_path / "r.csv", ["unit", "x"], [["d", 1], ["e", 2], ["f", 3]])
    with pytest.raises(NoOverlap):
        run_correlate(left, right)
    assert main(["correlate", str(left), str(right), "--out", str(tmp_path / "c.json")]) == 6


def test_compare_writes_table(tmp_path):
    s = scenario(tmp_path, noise_sd=0.01)
    out = tmp_path / "cmp"
    assert main(["compare", str(s / "observed.csv"), "--cutoff", "2019-07", "--out", str(out)]) == 0
    table = json.loads((out / "sensitivity.json").read_text())
    assert [r["baseline"] for r in table["rows"]] == ["logistic", "ets"]
    assert (out / "sensitivity.csv").read_text().startswith("baseline,rho,r,n_disruptions")
