import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from pathcap.cli import main
from pathcap.io_formats import (
    FormatError,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
    write_counts_csv,
)
from pathcap.network import Activation, Dataset, Network
from pathcap.sampling import build_sampler, sample_paths


@pytest.fixture
def model_dir(tmp_path, net_a):
    return save_model(net_a, tmp_path / "neta")


@pytest.fixture
def data_csv(tmp_path, s_a):
    return save_dataset(Dataset(s_a.X, np.array([1, 1, 1])), tmp_path / "sa.csv")


@pytest.fixture
def labeled_model(tmp_path):
    """A 2-output net so margin commands are exercisable."""
    net = Network((np.array([[1.0, -2.0], [-3.0, 4.0]]), np.eye(2)))
    return save_model(net, tmp_path / "neta2")


class TestModelFormat:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        net = Network(
            (rng.standard_normal((3, 2)), rng.standard_normal((4, 3)), rng.standard_normal((2, 4))),
            Activation("leaky-relu", 0.25),
        )
        path = save_model(net, tmp_path / "m")
        loaded = load_model(path)
        for a, b in zip(net.layers, loaded.layers):
            np.testing.assert_array_equal(a, b)
        assert loaded.activation == net.activation

    def test_truncated_blob(self, model_dir):
        blob = model_dir / "layer_01.bin"
        blob.write_bytes(blob.read_bytes()[:-8])
        with pytest.raises(FormatError, match="bytes"):
            load_model(model_dir)

    def test_unsupported_activation(self, model_dir):
        manifest = json.loads((model_dir / "manifest.json").read_text())
        manifest["activation"] = {"kind": "sigmoid"}
        (model_dir / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(FormatError, match="not positive homogeneous"):
            load_model(model_dir)

    def test_bias_rejected(self, model_dir):
        manifest = json.loads((model_dir / "manifest.json").read_text())
        manifest["bias_files"] = ["bias_01.bin"]
        (model_dir / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(FormatError, match="bias"):
            load_model(model_dir)

    def test_unknown_version(self, model_dir):
        manifest = json.loads((model_dir / "manifest.json").read_text())
        manifest["format_version"] = 99
        (model_dir / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(FormatError, match="version"):
            load_model(model_dir)


class TestDatasetFormat:
    def test_round_trip(self, tmp_path):
        ds = Dataset(np.array([[1.25, -3.5], [0.1, 2.0]]), np.array([2, 1]))
        path = save_dataset(ds, tmp_path / "d.csv")
        loaded = load_dataset(path)
        np.testing.assert_array_equal(loaded.X, ds.X)
        np.testing.assert_array_equal(loaded.y, ds.y)

    def test_unlabeled(self, tmp_path, s_a):
        path = save_dataset(s_a, tmp_path / "u.csv")
        assert load_dataset(path).y is None

    def test_ragged_row(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("f0,f1\n1.0,2.0\n3.0\n")
        with pytest.raises(FormatError, match="ragged"):
            load_dataset(p)

    def test_zero_label(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("f0,label\n1.0,0\n")
        with pytest.raises(FormatError, match="1-based"):
            load_dataset(p)

    def test_value_precision_round_trip(self, tmp_path):
        X = np.array([[0.1234567890123456, -1e-15]])
        path = save_dataset(Dataset(X), tmp_path / "p.csv")
        np.testing.assert_array_equal(load_dataset(path).X, X)


class TestCountsCsv:
    def test_schema(self, tmp_path, net_a, s_a):
        cs = build_sampler(net_a, s_a, 1)
        counts = sample_paths(cs, 200, seed=1)
        path = write_counts_csv(counts, tmp_path / "counts.csv")
        with path.open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["layer", "source", "source_sign", "target", "target_sign", "count"]
        assert sum(int(r[-1]) for r in rows[1:]) == 200 * 2


class TestCli:
    def run(self, *argv) -> int:
        return main(list(argv))

    def test_inspect(self, model_dir, capsys):
        assert self.run("inspect", "--model", str(model_dir)) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["payload"]["dims"] == [2, 2, 1]
        assert report["payload"]["n_paths"] == 4

    def test_measures_reference(self, model_dir, data_csv, capsys):
        assert self.run("measures", "--model", str(model_dir), "--data", str(data_csv), "--q", "1") == 0
        payload = json.loads(capsys.readouterr().out)["payload"]
        assert payload["V"]["value"] == pytest.approx(10.0)
        assert payload["zeta_doubled"] == pytest.approx(1.19219, abs=1e-5)

    def test_sample_deterministic_and_outputs(self, tmp_path, model_dir, data_csv, capsys):
        counts1 = tmp_path / "c1.csv"
        out_model = tmp_path / "recon"
        code = self.run(
            "sample", "--model", str(model_dir), "--data", str(data_csv),
            "--M", "500", "--seed", "9", "--counts-csv", str(counts1),
            "--out-model", str(out_model),
        )
        assert code == 0
        payload1 = json.loads(capsys.readouterr().out)["payload"]
        assert payload1["nnz"] <= payload1["nnz_bound"]
        recon = load_model(out_model)
        assert recon.depth == 2
        counts2 = tmp_path / "c2.csv"
        assert self.run(
            "sample", "--model", str(model_dir), "--data", str(data_csv),
            "--M", "500", "--seed", "9", "--counts-csv", str(counts2),
        ) == 0
        assert counts1.read_text() == counts2.read_text()

    def test_reconstruct_eval(self, labeled_model, data_csv, capsys):
        code = self.run(
            "reconstruct-eval", "--model", str(labeled_model), "--data", str(data_csv),
            "--M", "2000", "--seed", "3",
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)["payload"]
        assert payload["mse"] >= 0.0
        assert "accuracy" in payload

    def test_sweep_csv(self, labeled_model, data_csv, capsys):
        code = self.run(
            "sweep", "--model", str(labeled_model), "--data", str(data_csv),
            "--Ms", "100,1000,10000", "--rounds", "5", "--seed", "11", "--format", "csv",
        )
        assert code == 0
        rows = list(csv.reader(capsys.readouterr().out.strip().splitlines()))
        assert rows[0] == ["M", "mean_acc", "min_acc", "max_acc", "mse"]
        accs = [float(r[1]) for r in rows[1:]]
        assert accs == sorted(accs)

    def test_margins_csv(self, labeled_model, data_csv, capsys):
        code = self.run(
            "margins", "--model", str(labeled_model), "--data", str(data_csv), "--format", "csv"
        )
        assert code == 0
        rows = list(csv.reader(capsys.readouterr().out.strip().splitlines()))
        assert rows[0] == ["bin_lo", "bin_hi", "count"]
        assert sum(int(r[2]) for r in rows[1:]) == 3

    def test_bound(self, labeled_model, data_csv, capsys):
        code = self.run(
            "bound", "--model", str(labeled_model), "--data", str(data_csv),
            "--gamma", "1.0", "--delta", "0.05", "--mode", "apriori",
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)["payload"]
        assert payload["value"] > 0 and isinstance(payload["vacuous"], bool)

    def test_eval_outputs(self, model_dir, data_csv, capsys):
        assert self.run("eval", "--model", str(model_dir), "--data", str(data_csv), "--format", "csv") == 0
        rows = capsys.readouterr().out.strip().splitlines()
        assert rows[0] == "y0"
        assert [float(r) for r in rows[1:]] == [1.0, 2.0, 7.0]

    def test_verify_fast_suites_deterministic(self, capsys):
        assert self.run("verify", "--suite", "cardinality", "--seed", "7") == 0
        first = json.loads(capsys.readouterr().out)["payload"]
        assert self.run("verify", "--suite", "cardinality", "--seed", "7") == 0
        second = json.loads(capsys.readouterr().out)["payload"]
        assert first == second

    def test_exit_code_format_error(self, tmp_path, capsys):
        missing = tmp_path / "nope"
        assert self.run("inspect", "--model", str(missing)) == 3
        capsys.readouterr()

    def test_exit_code_numeric_failure(self, tmp_path, data_csv, capsys):
        zero = Network((np.zeros((2, 2)), np.zeros((1, 2))))
        path = save_model(zero, tmp_path / "zero")
        code = self.run(
            "sample", "--model", str(path), "--data", str(data_csv), "--M", "10", "--seed", "1"
        )
        assert code == 4
        capsys.readouterr()

    def test_exit_code_usage(self):
        with pytest.raises(SystemExit) as err:
            main(["sample", "--model", "x"])  # missing required --M/--seed
        assert err.value.code == 2

    def test_console_entry_point(self, model_dir):
        proc = subprocess.run(
            [sys.executable, "-m", "pathcap", "inspect", "--model", str(model_dir)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["payload"]["dims"] == [2, 2, 1]

    def test_report_payload_excludes_timings(self, model_dir, data_csv, capsys):
        self.run("measures", "--model", str(model_dir), "--data", str(data_csv))
        report1 = json.loads(capsys.readouterr().out)
        self.run("measures", "--model", str(model_dir), "--data", str(data_csv))
        report2 = json.loads(capsys.readouterr().out)
        assert report1["payload"] == report2["payload"]
        assert report1["inputs"] == report2["inputs"]
