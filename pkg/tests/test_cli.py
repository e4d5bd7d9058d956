import csv
import json

import numpy as np
import pytest

from polyfactor.cli import main
from polyfactor.data import load_svmlight
from polyfactor.models import load_model
from polyfactor.synth import make_multiclass, make_ratings, write_movielens, write_svmlight


@pytest.fixture(scope="module")
def svm_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "multi.svm"
    ds = make_multiclass(120, 6, 3, n_basis=4, seed=0)
    write_svmlight(ds, path)
    return path


@pytest.fixture(scope="module")
def ml_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "u.data"
    users, items, ratings = make_ratings(25, 30, 300, seed=1)
    write_movielens(users, items, ratings, path)
    return path


def run(*argv):
    return main([str(a) for a in argv])


class TestTrain:
    def test_train_writes_model_and_manifest(self, svm_file, tmp_path, capsys):
        out = tmp_path / "model.json"
        code = run("train", "--data", svm_file, "--out", out,
                   "--k-max", 4, "--lambda", "0.01")
        assert code == 0
        assert "final objective" in capsys.readouterr().out
        model = load_model(out)
        assert 0 < model.k <= 4
        manifest = json.loads((tmp_path / "model.json.manifest.json").read_text())
        assert manifest["data"]["sha256"]
        assert manifest["config"]["k_max"] == 4

    def test_missing_data_flag_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run("train", "--out", tmp_path / "m.json")
        assert exc.value.code == 2

    def test_mcrank_loss_conflict(self, ml_file, tmp_path):
        code = run("train", "--data", ml_file, "--format", "movielens",
                   "--mcrank", "--model", "fm", "--loss", "logistic",
                   "--out", tmp_path / "m.json")
        assert code == 2

    def test_mcrank_needs_fm(self, ml_file, tmp_path):
        code = run("train", "--data", ml_file, "--format", "movielens",
                   "--mcrank", "--model", "pn", "--out", tmp_path / "m.json")
        assert code == 2

    def test_binary_logistic_without_mcrank_rejected(self, svm_file, tmp_path):
        code = run("train", "--data", svm_file, "--loss", "binary-logistic",
                   "--out", tmp_path / "m.json")
        assert code == 2

    def test_mcrank_model_has_rating_outputs(self, ml_file, tmp_path):
        out = tmp_path / "mc.json"
        code = run("train", "--data", ml_file, "--format", "movielens",
                   "--mcrank", "--model", "fm", "--penalty", "l1linf",
                   "--k-max", 3, "--lambda", "0.05", "--out", out)
        assert code == 0
        model = load_model(out)
        assert model.m == 5 and model.kind == "fm"

    def test_trace_deterministic_bytes(self, svm_file, tmp_path):
        args = ("train", "--data", svm_file, "--k-max", 3, "--lambda", "0.01",
                "--seed", 7, "--deterministic-trace")
        t1, t2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(*args, "--out", tmp_path / "m1.json", "--trace", t1) == 0
        assert run(*args, "--out", tmp_path / "m2.json", "--trace", t2) == 0
        assert t1.read_bytes() == t2.read_bytes()

    def test_trace_math_columns_deterministic_with_timing(self, svm_file, tmp_path):
        args = ("train", "--data", svm_file, "--k-max", 3, "--lambda", "0.01",
                "--seed", 7)
        t1, t2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run(*args, "--out", tmp_path / "m1.json", "--trace", t1)
        run(*args, "--out", tmp_path / "m2.json", "--trace", t2)
        rows1 = list(csv.reader(t1.open()))
        rows2 = list(csv.reader(t2.open()))
        assert [r[:4] for r in rows1] == [r[:4] for r in rows2]
        assert rows1[0] == ["t", "objective", "score", "k", "seconds"]


@pytest.fixture(scope="module")
def trained(svm_file, tmp_path_factory):
    out = tmp_path_factory.mktemp("model") / "model.json"
    assert run("train", "--data", svm_file, "--out", out,
               "--k-max", 5, "--lambda", "0.005", "--refit", "full",
               "--penalty", "l1l2") == 0
    return out


class TestPredictEval:
    def test_eval_beats_majority_class(self, trained, svm_file, capsys):
        assert run("eval", "--model", trained, "--data", svm_file) == 0
        report = json.loads(capsys.readouterr().out)
        ds = load_svmlight(svm_file, augment_bias=True)
        majority = max(np.bincount(ds.y)[1:]) / ds.n
        assert report["accuracy"] >= majority

    def test_predict_streams_one_line_per_row(self, trained, tmp_path, capsys):
        rows = tmp_path / "three.svm"
        write_svmlight(make_multiclass(3, 6, 3, seed=5), rows)
        assert run("predict", "--model", trained, "--data", rows) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 3

    def test_dimension_mismatch_is_runtime_error(self, trained, tmp_path, capsys):
        bad = tmp_path / "wide.svm"
        write_svmlight(make_multiclass(4, 12, 3, seed=6), bad)
        code = run("eval", "--model", trained, "--data", bad)
        assert code == 1
        assert "d=" in capsys.readouterr().err

    def test_single_output_regression_baseline(self, ml_file, tmp_path, capsys):
        # the squared-loss FM baseline used in the recommender comparison
        out = tmp_path / "reg.json"
        code = run("train", "--data", ml_file, "--format", "movielens",
                   "--model", "fm", "--loss", "squared", "--penalty", "l1linf",
                   "--k-max", 3, "--lambda", "0.05", "--out", out)
        assert code == 0
        model = load_model(out)
        assert model.m == 1 and model.loss == "squared"
        capsys.readouterr()
        assert run("eval", "--model", out, "--data", ml_file,
                   "--format", "movielens") == 0
        report = json.loads(capsys.readouterr().out)
        assert {"rmse", "ndcg@1", "ndcg@5"} <= set(report)

    def test_mcrank_eval_reports_ranking_metrics(self, ml_file, tmp_path, capsys):
        out = tmp_path / "mc.json"
        run("train", "--data", ml_file, "--format", "movielens", "--mcrank",
            "--model", "fm", "--penalty", "l1linf", "--k-max", 3,
            "--lambda", "0.05", "--out", out)
        capsys.readouterr()
        assert run("eval", "--model", out, "--data", ml_file,
                   "--format", "movielens") == 0
        report = json.loads(capsys.readouterr().out)
        assert {"rmse", "ndcg@1", "ndcg@5", "k", "lambda", "penalty",
                "model_kind"} <= set(report)


class TestPath:
    def test_single_point_grid(self, svm_file, tmp_path, capsys):
        out = tmp_path / "best.json"
        report_path = tmp_path / "report.json"
        code = run("path", "--data", svm_file, "--lambdas", "0.01",
                   "--k-max", 4, "--out", out, "--report", report_path)
        assert code == 0
        best = json.loads(capsys.readouterr().out)
        assert best["lambda"] == 0.01
        report = json.loads(report_path.read_text())
        assert len(report["per_lambda"]) == 1
        assert load_model(out).k == best["k"]

    def test_two_point_grid_selects_best_validation(self, svm_file, tmp_path, capsys):
        out = tmp_path / "best.json"
        code = run("path", "--data", svm_file, "--lambdas", "1000000,0.01",
                   "--k-max", 4, "--out", out)
        assert code == 0
        assert json.loads(capsys.readouterr().out)["lambda"] == 0.01

    def test_auto_grid_has_ten_points(self, svm_file, tmp_path, capsys):
        out = tmp_path / "best.json"
        report_path = tmp_path / "report.json"
        code = run("path", "--data", svm_file, "--k-max", 2, "--out", out,
                   "--report", report_path)
        assert code == 0
        report = json.loads(report_path.read_text())
        lams = [entry["lambda"] for entry in report["per_lambda"]]
        assert len(lams) == 10
        assert lams == sorted(lams, reverse=True)
        assert lams[0] / lams[-1] == pytest.approx(1000.0, rel=1e-6)


class TestOracleCompare:
    def test_writes_method_rows(self, tmp_path):
        out = tmp_path / "nu.csv"
        code = run("oracle-compare", "--instances", 12, "--n", 24, "--d", 8,
                   "--m-max", 4, "--out", out, "--seed", 3)
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert {r["method"] for r in rows} == {
            "exact", "l1-init+refine", "l1-init", "random-init",
            "random-init+refine", "best-data"}
        medians = {}
        for method in ("l1-init+refine", "l1-init", "random-init",
                       "random-init+refine", "best-data"):
            nus = [float(r["nu_hat"]) for r in rows if r["method"] == method]
            assert all(nu <= 1.0 + 1e-9 for nu in nus)
            medians[method] = float(np.median(nus))
        best = max(medians, key=medians.get)
        assert medians["l1-init+refine"] >= medians[best] - 1e-9

    def test_m_over_limit_refused(self, tmp_path, capsys):
        code = run("oracle-compare", "--m-max", 13, "--out", tmp_path / "x.csv")
        assert code == 2
        assert "exponential" in capsys.readouterr().err
