import json

import numpy as np
import pytest

from rampreject.cli import main
from rampreject.data import load_csv
from rampreject.model import load as load_model


@pytest.fixture
def separable_csv(tmp_path):
    path = tmp_path / "train.csv"
    path.write_text("x1,x2,label\n-2.0,0.0,-1\n-1.0,0.0,-1\n1.0,0.0,1\n2.0,0.0,1\n")
    return str(path)


class TestGenData:
    @pytest.mark.parametrize("generator,rows", [("synth1", 300), ("synth2", 200), ("diagonal-band", 400)])
    def test_row_counts(self, tmp_path, generator, rows):
        out = tmp_path / "data.csv"
        assert main(["gen-data", generator, "--seed", "7", "--out", str(out)]) == 0
        assert load_csv(str(out)).n == rows

    def test_synth2_writes_oracle_sidecar(self, tmp_path):
        out = tmp_path / "data.csv"
        main(["gen-data", "synth2", "--seed", "7", "--out", str(out)])
        doc = json.loads((tmp_path / "data.csv.oracle.json").read_text())
        assert doc["seed"] == 7
        assert len(doc["means1"]) == 10

    def test_reruns_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["gen-data", "synth1", "--seed", "3", "--out", str(a)])
        main(["gen-data", "synth1", "--seed", "3", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_seed_recorded_in_artifact(self, tmp_path):
        out = tmp_path / "data.csv"
        main(["gen-data", "synth1", "--seed", "9", "--out", str(out)])
        assert "seed=9" in out.read_text().splitlines()[0]

    def test_unwritable_path(self, tmp_path):
        code = main(["gen-data", "synth1", "--seed", "1", "--out", str(tmp_path / "no" / "x.csv")])
        assert code == 2


class TestTrain:
    def test_success(self, tmp_path, separable_csv, capsys):
        model_out = tmp_path / "model.json"
        code = main([
            "train", separable_csv, "--reg-c", "1", "--cost-d", "0.2",
            "--out", str(model_out),
        ])
        assert code == 0
        printed = capsys.readouterr().out
        assert "rho=" in printed and "risk=" in printed
        model = load_model(str(model_out))
        assert model.rho >= 0

    def test_flag_validation_exit_2(self, tmp_path, separable_csv):
        code = main([
            "train", separable_csv, "--reg-c", "1", "--cost-d", "0.2",
            "--mu", "1.5", "--out", str(tmp_path / "m.json"),
        ])
        assert code == 2

    def test_single_class_exit_4(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text("1.0,1\n2.0,1\n3.0,1\n")
        code = main([
            "train", str(path), "--reg-c", "1", "--cost-d", "0.2",
            "--out", str(tmp_path / "m.json"),
        ])
        assert code == 4

    def test_rbf_requires_gamma(self, tmp_path, separable_csv):
        code = main([
            "train", separable_csv, "--reg-c", "1", "--cost-d", "0.2",
            "--kernel", "rbf", "--out", str(tmp_path / "m.json"),
        ])
        assert code == 2

    def test_nonconverged_exit_3_still_writes_model(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(40, 2))
        y = np.where(rng.random(40) < 0.5, 1, -1)
        y[:2] = [1, -1]
        rows = [f"{float(a)!r},{float(b)!r},{label}" for (a, b), label in zip(X, y)]
        data = tmp_path / "noisy.csv"
        data.write_text("\n".join(rows) + "\n")
        out = tmp_path / "m.json"
        code = main([
            "train", str(data), "--reg-c", "4", "--cost-d", "0.2",
            "--dc-max-iter", "1", "--dc-tol", "1e-12", "--out", str(out),
        ])
        assert code == 3
        assert load_model(str(out)).diagnostics["converged"] is False


class TestPredict:
    @pytest.fixture
    def model_path(self, tmp_path, separable_csv):
        out = tmp_path / "model.json"
        main(["train", separable_csv, "--reg-c", "2", "--cost-d", "0.2", "--out", str(out)])
        return str(out)

    def test_predictions(self, tmp_path, model_path):
        feats = tmp_path / "features.csv"
        feats.write_text("-2.0,0.0\n0.0,0.0\n2.0,0.0\n")
        out = tmp_path / "preds.csv"
        assert main(["predict", model_path, str(feats), "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "f,prediction"
        f_vals = [float(line.split(",")[0]) for line in lines[1:]]
        preds = [int(line.split(",")[1]) for line in lines[1:]]
        assert preds[0] == -1 and preds[2] == 1
        assert f_vals[0] < 0 < f_vals[2]

    def test_label_column_dropped(self, tmp_path, model_path, separable_csv):
        out = tmp_path / "preds.csv"
        code = main(["predict", model_path, separable_csv, "--label-col", "-1", "--out", str(out)])
        assert code == 0
        assert len(out.read_text().strip().splitlines()) == 5

    def test_band_thresholds(self, tmp_path):
        # identity score model: f(x) = x, reject band 0.3
        from rampreject.data import Standardization
        from rampreject.kernels import KernelSpec
        from rampreject.model import Model, save

        m = Model(
            kernel=KernelSpec("linear"),
            support_x=np.array([[1.0]]),
            coeffs=np.array([1.0]),
            b=0.0,
            rho=0.3,
            standardization=Standardization(mean=np.zeros(1), scale=np.ones(1)),
            hyper={"C": 1.0, "d": 0.2, "mu": 1.0},
        )
        model_file = tmp_path / "identity.json"
        save(m, str(model_file))
        feats = tmp_path / "f.csv"
        feats.write_text("0.5\n0.2\n-0.5\n")
        out = tmp_path / "p.csv"
        assert main(["predict", str(model_file), str(feats), "--out", str(out)]) == 0
        preds = [int(line.split(",")[1]) for line in out.read_text().strip().splitlines()[1:]]
        assert preds == [1, 0, -1]

    def test_empty_input(self, tmp_path, model_path):
        feats = tmp_path / "empty.csv"
        feats.write_text("")
        out = tmp_path / "preds.csv"
        assert main(["predict", model_path, str(feats), "--out", str(out)]) == 0
        assert out.read_text().strip() == "f,prediction"

    def test_dimension_mismatch_exit_5(self, tmp_path, model_path):
        feats = tmp_path / "features.csv"
        feats.write_text("1.0,2.0,3.0\n")
        assert main(["predict", model_path, str(feats), "--out", str(tmp_path / "p.csv")]) == 5

    def test_corrupt_model_exit_6(self, tmp_path, model_path):
        corrupted = tmp_path / "bad.json"
        text = open(model_path).read()
        corrupted.write_text(text.replace('"b":', '"bb":', 1))
        feats = tmp_path / "features.csv"
        feats.write_text("1.0,2.0\n")
        assert main(["predict", str(corrupted), str(feats), "--out", str(tmp_path / "p.csv")]) == 6


class TestCV:
    def test_report_csv(self, tmp_path, separable_csv, capsys):
        out = tmp_path / "report.csv"
        code = main([
            "cv", separable_csv, "--reg-c", "2", "--cost-d", "0.2",
            "--folds", "2", "--reps", "3", "--seed", "11", "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[1].startswith("d,C,gamma,risk_mean")
        assert len(lines) == 2 + 3 + 1
        assert "seed=11" in capsys.readouterr().out

    def test_report_json(self, tmp_path, separable_csv):
        out = tmp_path / "report.json"
        main([
            "cv", separable_csv, "--reg-c", "2", "--cost-d", "0.2",
            "--folds", "2", "--reps", "2", "--seed", "1", "--out", str(out),
        ])
        doc = json.loads(out.read_text())
        assert doc["k"] == 2 and len(doc["repetitions"]) == 2


class TestGrid:
    def test_grid_table(self, tmp_path, separable_csv, capsys):
        out = tmp_path / "grid.csv"
        code = main([
            "grid", separable_csv, "--cost-d", "0.2", "--kernel", "linear",
            "--c-grid", "1,2", "--folds", "2", "--reps", "1", "--seed", "0",
            "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 2 + 2  # comment, header, one row per cell
        assert "best:" in capsys.readouterr().out


class TestBench:
    def test_unknown_suite_exit_2(self, tmp_path):
        assert main(["bench", "nope", "--out-dir", str(tmp_path)]) == 2

    def test_diagonal_suite(self, tmp_path, capsys):
        code = main(["bench", "diagonal-fig3", "--seed", "5", "--out-dir", str(tmp_path / "out")])
        assert code == 0
        assert (tmp_path / "out" / "diagonal_model.json").exists()
        points = (tmp_path / "out" / "diagonal_points.csv").read_text().strip().splitlines()
        assert len(points) == 2 + 400
        assert "rho=" in capsys.readouterr().out

    def test_synth1_suite_small(self, tmp_path):
        out_dir = tmp_path / "bench"
        code = main([
            "bench", "synth1-table3", "--seed", "2", "--folds", "2", "--reps", "1",
            "--out-dir", str(out_dir),
        ])
        assert code == 0
        summary = (out_dir / "synth1-table3_summary.csv").read_text().strip().splitlines()
        assert len(summary) == 2 + 10  # one row per d value
        per_d = sorted(out_dir.glob("synth1-table3_d*.csv"))
        assert len(per_d) == 10
