"""CLI subcommands, exit codes, config files, and report outputs."""

import json

from egnn.cli import main

from conftest import write_tu_files


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestInspect:
    def test_published_architecture(self, capsys):
        code, out, _ = run(
            capsys, "inspect",
            "--arch", "2F-7EF-4F-6EF-P32-3F-4EF-P8-EFC280", "--f", "7", "--l", "5",
        )
        assert code == 0
        assert "EFC280" in out
        assert "total parameters:" in out
        assert "edge-aware FC input width: 280" in out

    def test_width_mismatch_is_validation_error(self, capsys):
        code, _, err = run(capsys, "inspect", "--arch", "2F-3EF-P4-EFC99")
        assert code == 2
        assert "99" in err and "56" in err

    def test_bad_token_is_validation_error(self, capsys):
        code, _, err = run(capsys, "inspect", "--arch", "4F-WAT")
        assert code == 2
        assert "WAT" in err


class TestUsageErrors:
    def test_unknown_flag(self, capsys):
        code, _, _ = run(capsys, "inspect", "--arch", "4F-P2", "--bogus")
        assert code == 1

    def test_unknown_subcommand(self, capsys):
        code, _, _ = run(capsys, "frobnicate")
        assert code == 1

    def test_missing_required(self, capsys):
        code, _, _ = run(capsys, "inspect")
        assert code == 1

    def test_help_exits_zero(self, capsys):
        assert run(capsys, "--help")[0] == 0


class TestData:
    def test_stats(self, capsys, tmp_path):
        d = write_tu_files(
            tmp_path / "toy", "toy",
            ["1, 2", "2, 1", "3, 4", "4, 3", "4, 5", "5, 4"],
            [1, 1, 2, 2, 2], [1, -1],
            node_labels=[0, 1, 0, 1, 1],
        )
        code, out, _ = run(capsys, "data", "--dataset-dir", str(d))
        assert code == 0
        assert "graphs: 2" in out
        assert "classes: 2" in out
        assert "vertex features (F): 2 (one-hot labels)" in out
        assert "min 2" in out and "max 3" in out

    def test_missing_directory(self, capsys, tmp_path):
        code, _, err = run(capsys, "data", "--dataset-dir", str(tmp_path / "nope"))
        assert code == 2
        assert "nope" in err


class TestGradcheckCommand:
    def test_reduced_run(self, capsys):
        code, out, _ = run(
            capsys, "gradcheck", "--seed", "1", "--configs", "2",
            "--layers", "vertex_filter", "dense", "loss",
        )
        assert code == 0
        assert "vertex_filter" in out and "all gradient checks passed" in out

    def test_failure_exits_three(self, capsys, monkeypatch):
        from egnn.gradcheck import LayerCheck
        import egnn.cli as cli_module

        monkeypatch.setattr(
            cli_module, "run_suite",
            lambda **kw: [LayerCheck("dense", 0.5, 1e-4, 2)],
        )
        code, _, err = run(capsys, "gradcheck", "--configs", "2")
        assert code == 3
        assert "dense" in err


class TestTrain:
    def test_synthetic_run_writes_reports(self, capsys, tmp_path):
        out_prefix = tmp_path / "run"
        code, out, _ = run(
            capsys, "train", "--dataset", "synthetic", "--arch", "2F-P4-FC16",
            "--epochs", "2", "--folds", "2", "--seed", "3",
            "--out", str(out_prefix),
        )
        assert code == 0
        doc = json.loads((tmp_path / "run.json").read_text())
        assert doc["config"]["arch"] == "2F-P4-FC16"
        assert len(doc["per_fold_accuracy"]) == 2
        assert (tmp_path / "run.csv").exists()
        assert "mean accuracy" in out

    def test_byte_identical_reports(self, capsys, tmp_path):
        args = ["train", "--dataset", "synthetic", "--arch", "2F-P4-FC16",
                "--epochs", "2", "--folds", "2", "--seed", "3"]
        run(capsys, *args, "--out", str(tmp_path / "a"))
        run(capsys, *args, "--out", str(tmp_path / "b"))
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_missing_dataset_dir(self, capsys, tmp_path, monkeypatch):
        monkeypatch.delenv("EGNN_DATA_DIR", raising=False)
        missing = tmp_path / "absent"
        code, _, err = run(
            capsys, "train", "--dataset", "NCI1", "--dataset-dir", str(missing)
        )
        assert code == 2
        assert str(missing) in err

    def test_dataset_dir_env_fallback(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("EGNN_DATA_DIR", str(tmp_path / "ghost"))
        code, _, err = run(capsys, "train", "--dataset", "NCI1")
        assert code == 2
        assert "ghost" in err

    def test_config_file_with_flag_override(self, capsys, tmp_path):
        cfg = tmp_path / "train.cfg"
        cfg.write_text(
            "# desk-scale smoke\n"
            "arch = 2F-P4-FC16\n"
            "dataset = synthetic\n"
            "epochs = 2\n"
            "folds = 2\n"
            "lr = 0.01\n"
        )
        code, out, _ = run(
            capsys, "train", "--config", str(cfg), "--epochs", "3",
            "--out", str(tmp_path / "c"),
        )
        assert code == 0
        doc = json.loads((tmp_path / "c.json").read_text())
        assert doc["config"]["epochs"] == 3  # flag beats file
        assert doc["config"]["learning_rate"] == 0.01

    def test_unknown_config_key(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("warp_drive = on\n")
        code, _, err = run(capsys, "train", "--config", str(cfg))
        assert code == 2
        assert "warp_drive" in err

    def test_tu_training_end_to_end(self, capsys, tmp_path):
        # four tiny graphs, two classes, trainable for a couple of epochs
        a_lines, indicator, labels = [], [], []
        node = 1
        for g in range(4):
            a_lines += [f"{node}, {node + 1}", f"{node + 1}, {node}"]
            indicator += [g + 1, g + 1]
            labels.append(g % 2)
            node += 2
        d = write_tu_files(tmp_path / "four", "four", a_lines, indicator, labels)
        code, out, _ = run(
            capsys, "train", "--dataset", "four", "--dataset-dir", str(d),
            "--arch", "1F-P2-FC4", "--epochs", "2", "--folds", "2",
            "--out", str(tmp_path / "tu"),
        )
        assert code == 0
        assert (tmp_path / "tu.json").exists()
