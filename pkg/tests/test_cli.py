"""End-to-end CLI behaviour: exit codes, config handling, determinism.

Commands run in-process through main(argv) so coverage and speed stay
reasonable; training settings are tiny but the artifact layout matches
real runs.
"""

import csv
import json
from pathlib import Path

import pytest

from gaitnet.cli import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    RunConfig,
    effective_config,
    main,
    read_config,
)

FAST = [
    "--frames", "40",
    "--epochs", "3",
    "--batch-size", "8",
    "--k-folds", "3",
]


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    """A small generated dataset shared by the CLI tests."""
    out = tmp_path_factory.mktemp("cli") / "data"
    code = main(["synth", "--out", str(out), "--counts", "6,6,6,6", "--seed", "5"])
    assert code == EXIT_OK
    return out


def tree_bytes(root: Path, skip=("timing.json",)) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name not in skip
    }


class TestSynth:
    def test_writes_samples_and_manifest(self, synth_dir):
        manifest = json.loads((synth_dir / "manifest.json").read_text())
        assert len(manifest) == 24
        assert all({"file", "id", "label"} <= set(entry) for entry in manifest)
        assert (synth_dir / "config.ini").exists()

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["synth", "--out", str(a), "--counts", "3,3,3,3", "--seed", "2"]) == EXIT_OK
        assert main(["synth", "--out", str(b), "--counts", "3,3,3,3", "--seed", "2"]) == EXIT_OK
        ta, tb = tree_bytes(a), tree_bytes(b)
        assert ta.keys() == tb.keys()
        assert all(ta[k] == tb[k] for k in ta)

    def test_bad_counts(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path / "x"), "--counts", "1,2,3"]) == EXIT_CONFIG
        assert main(["synth", "--out", str(tmp_path / "y"), "--counts", "0,0,0,0"]) == EXIT_CONFIG


class TestCv:
    def test_run_layout(self, synth_dir, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["cv", "--data", str(synth_dir), "--out", str(out), *FAST])
        assert code == EXIT_OK
        names = {p.name for p in out.iterdir()}
        assert {"metrics.json", "config.ini", "model.json", "folds.json", "timing.json"} <= names
        assert {f"fold{i}.ckpt" for i in range(3)} <= names
        doc = json.loads((out / "metrics.json").read_text())
        assert doc["variant"] == "2s-cnn"
        assert doc["param_count"] == 934
        assert len(doc["folds"]) == 3
        assert "Method" in capsys.readouterr().out

    def test_rerun_byte_identical(self, synth_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        argv = ["cv", "--data", str(synth_dir), *FAST, "--variant", "3djp-cnn"]
        assert main([*argv, "--out", str(a)]) == EXIT_OK
        assert main([*argv, "--out", str(b)]) == EXIT_OK
        ta, tb = tree_bytes(a), tree_bytes(b)
        assert ta.keys() == tb.keys()
        for k in ta:
            assert ta[k] == tb[k], k

    def test_run_reproducible_from_echo(self, synth_dir, tmp_path):
        a = tmp_path / "a"
        assert main(["cv", "--data", str(synth_dir), "--out", str(a), *FAST]) == EXIT_OK
        b = tmp_path / "b"
        assert main(["cv", "--config", str(a / "config.ini"), "--out", str(b)]) == EXIT_OK
        assert (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()

    def test_jobs_matches_sequential(self, synth_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        argv = ["cv", "--data", str(synth_dir), *FAST]
        assert main([*argv, "--out", str(a)]) == EXIT_OK
        assert main([*argv, "--out", str(b), "--jobs", "2"]) == EXIT_OK
        assert (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()

    def test_missing_data_dir(self, tmp_path):
        code = main(["cv", "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "o")])
        assert code == EXIT_IO

    def test_flag_overrides_config(self, synth_dir, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(f"[data]\npath = {synth_dir}\nframes = 40\n[train]\nepochs = 3\nbatch_size = 8\nk_folds = 3\n")
        out = tmp_path / "run"
        assert main(["cv", "--config", str(cfg), "--out", str(out), "--seed", "9"]) == EXIT_OK
        assert json.loads((out / "metrics.json").read_text())["seed"] == 9
        echoed = read_config(out / "config.ini")
        assert echoed.seed == 9
        assert echoed.epochs == 3


class TestAblate:
    def test_table_and_param_ordering(self, synth_dir, tmp_path, capsys):
        out = tmp_path / "ab"
        code = main(["ablate", "--data", str(synth_dir), "--out", str(out), *FAST])
        assert code == EXIT_OK
        with open(out / "ablation.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["method", "params", "test_ms", "accuracy"]
        methods = [r[0] for r in rows[1:]]
        assert methods == ["No-CNN", "No-MaxP", "SinCNN", "Full"]
        params = {r[0]: int(r[1]) for r in rows[1:]}
        assert params["Full"] == 934
        assert params["No-CNN"] == 574
        assert params["SinCNN"] == 734
        assert max(params["No-CNN"], params["SinCNN"]) < min(params["Full"], params["No-MaxP"])
        stdout = capsys.readouterr().out
        for m in methods:
            assert m in stdout

    def test_rerun_identical_accuracy(self, synth_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        argv = ["ablate", "--data", str(synth_dir), *FAST]
        assert main([*argv, "--out", str(a)]) == EXIT_OK
        assert main([*argv, "--out", str(b)]) == EXIT_OK

        def acc_col(path):
            with open(path / "ablation.csv", newline="") as fh:
                return [(r[0], r[1], r[3]) for r in list(csv.reader(fh))[1:]]

        assert acc_col(a) == acc_col(b)

    def test_requires_two_stream(self, synth_dir, tmp_path):
        # ablate has no --variant flag; a non-2s variant can only arrive
        # via config, and must be rejected.
        cfg = tmp_path / "c.ini"
        cfg.write_text("[model]\nvariant = fcnet\n")
        code = main([
            "ablate", "--config", str(cfg), "--data", str(synth_dir),
            "--out", str(tmp_path / "x"), *FAST,
        ])
        assert code == EXIT_CONFIG


class TestAttention:
    def test_outputs_and_rerun(self, synth_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        argv = ["attention", "--data", str(synth_dir), *FAST, "--top-k", "12"]
        assert main([*argv, "--out", str(a)]) == EXIT_OK
        names = {p.name for p in a.iterdir()}
        assert {"joint_importance.csv", "pair_importance.csv", "top12_pairs.csv"} <= names
        with open(a / "top12_pairs.csv", newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        assert len(rows) == 12
        vals = [float(r[4]) for r in rows]
        assert vals == sorted(vals, reverse=True)
        with open(a / "joint_importance.csv", newline="") as fh:
            jrows = list(csv.reader(fh))[1:]
        assert all(0.0 <= float(r[3]) <= 1.0 for r in jrows)
        assert main([*argv, "--out", str(b)]) == EXIT_OK
        ta, tb = tree_bytes(a), tree_bytes(b)
        assert all(ta[k] == tb[k] for k in ta)


class TestConfigHandling:
    def test_unknown_key_rejected(self, synth_dir, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[train]\nepoch = 5\n")  # typo for "epochs"
        code = main(["cv", "--config", str(cfg), "--data", str(synth_dir), "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG

    def test_unknown_section_rejected(self, synth_dir, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[optimizer]\nlr = 0.1\n")
        code = main(["cv", "--config", str(cfg), "--data", str(synth_dir), "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG

    def test_unknown_variant_rejected(self, synth_dir, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["cv", "--data", str(synth_dir), "--out", str(tmp_path / "o"), "--variant", "resnet"])
        assert exc.value.code == 2  # argparse choice failure

    def test_bad_numeric_value(self, synth_dir, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[train]\nepochs = soon\n")
        code = main(["cv", "--config", str(cfg), "--data", str(synth_dir), "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG

    def test_jobs_must_be_positive(self, synth_dir, tmp_path):
        code = main(["cv", "--data", str(synth_dir), "--out", str(tmp_path / "o"), "--jobs", "0"])
        assert code == EXIT_CONFIG

    def test_defaults_then_ini_then_flags(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[train]\nepochs = 11\nlr = 0.01\n")

        class Args:
            config = str(cfg)
            epochs = None
            lr = 0.5
            # everything else untouched
            data = None
            out = None
            frames = None
            variant = None
            head_variant = None
            stream_channels = None
            head_channels = None
            pool_h = None
            pool_w = None
            attention = None
            fc_hidden = None
            batch_size = None
            k_folds = None
            seed = None
            jobs = None
            lam = None
            target_per_class = None
            augment_seed = None

        cfg_out = effective_config(Args())
        assert cfg_out.epochs == 11  # INI beats default
        assert cfg_out.lr == 0.5  # flag beats INI
        assert cfg_out.batch_size == RunConfig().batch_size  # default survives
