import csv
import json

import numpy as np
import pytest

from conftest import gaussian_classes
from rolin import bench
from rolin.bench import ExperimentSpec, numeric_content, read_report, run_experiment, summarize
from rolin.cli import main
from rolin.data import trimmed_mean
from rolin.model_io import load_model

FAST = dict(instance_count=1, fold_count=3)


def write_csv(path, data, label="y"):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(data.feature_names) + ["colour", label])
        for i, (x, yv) in enumerate(zip(data.features, data.labels)):
            w.writerow([repr(float(v)) for v in x] + [["red", "blue"][i % 2], "pos" if yv > 0 else "neg"])
    return path


@pytest.fixture
def csv_path(tmp_path):
    return write_csv(tmp_path / "d.csv", gaussian_classes(40, 4, seed=11))


def test_train_and_predict(tmp_path, csv_path):
    model_path = tmp_path / "m.model"
    rc = main(["train", "--data", str(csv_path), "--label", "y", "--loss", "logistic",
               "--method", "rolin", "--seed", "1", "--out", str(model_path)])
    assert rc == 0 and model_path.exists()
    model = load_model(model_path)
    assert model.feature_names == ("x0", "x1", "x2", "x3", "colour=blue", "colour=red")
    assert model.extra["positive_label"] == "pos"

    out = tmp_path / "s.csv"
    assert main(["predict", "--model", str(model_path), "--data", str(csv_path), "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 40
    assert {r["label"] for r in rows} <= {"1", "-1"}
    assert all((float(r["score"]) > 0) == (r["label"] == "1") for r in rows)


@pytest.mark.parametrize("method", ["l1", "l2", "top_pcs"])
def test_train_baselines(tmp_path, csv_path, method):
    out = tmp_path / f"{method}.model"
    assert main(["train", "--data", str(csv_path), "--label", "y", "--method", method, "--out", str(out)]) == 0
    assert load_model(out).method == method


@pytest.mark.parametrize(
    "argv",
    [
        ["train", "--data", "missing.csv", "--label", "y", "--out", "m"],
        ["train", "--label", "y", "--out", "m"],
        ["benchmark", "--methods", "rolin,svm", "--out", "r"],
        ["frobnicate"],
    ],
)
def test_errors_give_one_line(argv, capsys):
    assert main(argv) != 0
    err = capsys.readouterr().err.strip()
    assert err.startswith("rolin: error:") and "\n" not in err


def test_benchmark_size_too_large(tmp_path, csv_path, capsys):
    rc = main(["benchmark", "--data", str(csv_path), "--label", "y", "--sizes", "40", "--reps", "1",
               "--out", str(tmp_path / "r.json")])
    assert rc == 1
    assert "smaller than the dataset size" in capsys.readouterr().err


def test_benchmark_replay_is_identical(tmp_path, csv_path, monkeypatch):
    monkeypatch.setenv("ROLIN_THREADS", "1")
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps(FAST))
    out = tmp_path / "r.json"
    argv = ["benchmark", "--config", str(config), "--data", str(csv_path), "--label", "y",
            "--loss", "squared_hinge", "--methods", "rolin,l1", "--sizes", "10,15", "--reps", "3",
            "--seed", "7", "--out", str(out)]
    assert main(argv) == 0
    a = read_report(out)
    assert main(argv) == 0
    b = read_report(out)
    assert numeric_content(a) == numeric_content(b)
    assert a["spec"]["instance_count"] == 1 and a["spec"]["fold_count"] == 3
    assert [c["method"] for c in a["cells"]] == ["rolin", "rolin", "l1", "l1"]


def test_report_command(tmp_path, csv_path, monkeypatch):
    monkeypatch.setenv("ROLIN_THREADS", "1")
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps(dict(FAST, methods=["top_pcs"], train_sizes=[12], repetitions=2,
                                      data_path=str(csv_path), label_column="y", output=str(tmp_path / "r.json"))))
    assert main(["benchmark", "--config", str(config)]) == 0
    assert main(["report", str(tmp_path / "r.json"), "--out", str(tmp_path / "t.csv")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "t.csv")))
    assert [(r["method"], r["n"], r["metric"]) for r in rows] == [("top_pcs", "12", "logistic"), ("top_pcs", "12", "zero_one")]
    assert all(float(r["min"]) <= float(r["trimmed_mean"]) <= float(r["max"]) for r in rows)


def test_config_rejects_unknown_fields(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"reps": 3}))
    assert main(["benchmark", "--config", str(config), "--out", "r.json"]) == 1
    assert "unknown experiment fields" in capsys.readouterr().err


@pytest.fixture(scope="module")
def report():
    data = gaussian_classes(40, 6, seed=12)
    spec = ExperimentSpec(methods=("top_pcs", "rolin", "l2"), train_sizes=(10,), repetitions=3, base_seed=4, **FAST)
    return run_experiment(spec, data, workers=1)


def test_methods_share_splits(report):
    digests = [c["split_digests"] for c in report["cells"]]
    assert digests[0] == digests[1] == digests[2]
    assert len(set(digests[0])) == 3


def test_report_self_consistent(report):
    for cell in report["cells"]:
        for key in ("target", "zero_one"):
            ev = cell[key]
            assert trimmed_mean(ev["per_repetition_losses"], ev["trim_count"]) == ev["trimmed_mean"]
    rows = summarize(report)
    assert len(rows) == 6
    json.dumps(report)  # serializable as is


def test_metadata_holds_the_only_volatile_fields(report):
    assert {"timestamp", "host", "wall_time_seconds"} <= set(report["metadata"])
    assert "wall_time" not in numeric_content(report)


def test_single_repetition_clamps_trim():
    data = gaussian_classes(30, 4, seed=1)
    spec = ExperimentSpec(methods=("l2",), train_sizes=(10,), repetitions=1, **FAST)
    cell = run_experiment(spec, data, workers=1)["cells"][0]
    assert cell["target"]["trim_count"] == 0
    assert cell["target"]["trimmed_mean"] == cell["target"]["per_repetition_losses"][0]


def test_failed_cells_are_recorded(monkeypatch):
    real = bench.fit_method

    def flaky(method, train, loss, cv, solver_cfg=None):
        if method == "l1":
            raise ValueError("boom")
        return real(method, train, loss, cv)

    monkeypatch.setattr(bench, "fit_method", flaky)
    data = gaussian_classes(30, 4, seed=1)
    spec = ExperimentSpec(methods=("l1", "l2"), train_sizes=(10,), repetitions=2, **FAST)
    cells = run_experiment(spec, data, workers=1)["cells"]
    assert cells[0]["status"] == "failed"
    assert [f["reason"] for f in cells[0]["failures"]] == ["ValueError: boom"] * 2
    assert cells[1]["status"] == "ok" and not cells[1]["failures"]


def test_parallel_matches_serial():
    data = gaussian_classes(30, 4, seed=3)
    spec = ExperimentSpec(methods=("l2", "top_pcs"), train_sizes=(10,), repetitions=2, **FAST)
    a = run_experiment(spec, data, workers=1)
    b = run_experiment(spec, data, workers=2)
    assert numeric_content(a) == numeric_content(b)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(repetitions=0)
    with pytest.raises(ValueError):
        ExperimentSpec(methods=("svm",))
    with pytest.raises(ValueError):
        ExperimentSpec(loss="zero_one")
    spec = ExperimentSpec(train_sizes=(15, 30), cv_objective="zero_one")
    assert ExperimentSpec.from_dict(spec.to_dict()) == spec


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("ROLIN_THREADS", "3")
    assert bench.worker_count() == 3
    monkeypatch.setenv("ROLIN_THREADS", "x")
    with pytest.raises(ValueError):
        bench.worker_count()
