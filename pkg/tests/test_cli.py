import csv
import json

import pytest

from workload_snn.cli import build_parser, main, resolve


@pytest.fixture(scope="module")
def extracted(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--seed", "1", "--out", str(root / "raw"), "--participants", "1", "--tasks", "2"]) == 0
    assert main(["extract", "--seed", "1", "--input", str(root / "raw"), "--out", str(root / "feat")]) == 0
    return root


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def quick_config(path, **train):
    doc = {"train": {"snn_grid": {"eta": [0.01], "epochs": [2]}, "k": 2, **train}}
    path.write_text(json.dumps(doc))
    return str(path)


class TestSynthExtract:
    def test_file_count(self, extracted):
        files = sorted(p.name for p in (extracted / "raw" / "P01").iterdir())
        assert len([f for f in files if f.endswith(".csv")]) == 7 and "manifest.json" in files

    def test_window_count(self, extracted):
        rows = read_csv(extracted / "feat" / "features.csv")
        assert len(rows) == 92
        prov = json.loads((extracted / "feat" / "provenance.json").read_text())
        assert prov["participants"]["P01"]["windows_per_task"] == {"T1": 46, "T2": 46}

    def test_eeg_only_columns(self, extracted, tmp_path):
        assert main(["extract", "--seed", "1", "--feature-set", "asy_ratios", "--input", str(extracted / "raw"),
                     "--out", str(tmp_path)]) == 0
        header = read_csv(tmp_path / "features.csv")[0].keys()
        assert not [h for h in header if h.startswith(("HRV_", "EDA_", "TEMP_"))]
        assert all(h.startswith("EEG_") for h in list(header)[4:])
        assert "EEG_Asy_AF7_AF8_alpha" in header and "EEG_Ratio_TP10_theta_alpha" in header

    def test_constant_eda_removed(self, tmp_path):
        assert main(["synth", "--seed", "3", "--out", str(tmp_path / "raw"), "--tasks", "2", "--task-s", "120",
                     "--constant-eda"]) == 0
        assert main(["extract", "--seed", "3", "--input", str(tmp_path / "raw"), "--out", str(tmp_path / "f")]) == 0
        prov = json.loads((tmp_path / "f" / "provenance.json").read_text())
        assert {"EDA_SCR_Peaks_N", "EDA_SCR_Amplitude_Mean"} <= set(prov["removed_columns"])

    def test_synth_deterministic(self, tmp_path):
        for d in ("a", "b"):
            main(["synth", "--seed", "9", "--out", str(tmp_path / d), "--tasks", "2", "--task-s", "30"])
        for p in sorted((tmp_path / "a").rglob("*.*")):
            assert p.read_bytes() == (tmp_path / "b" / p.relative_to(tmp_path / "a")).read_bytes()

    def test_extract_deterministic(self, extracted, tmp_path):
        main(["extract", "--seed", "1", "--input", str(extracted / "raw"), "--out", str(tmp_path)])
        assert (tmp_path / "features.csv").read_bytes() == (extracted / "feat" / "features.csv").read_bytes()


class TestTrainEvaluate:
    def test_lr_on_separable_synth(self, tmp_path):
        main(["synth", "--seed", "2", "--out", str(tmp_path / "raw"), "--participants", "2", "--tasks", "8",
              "--task-s", "120", "--theta-effect", "3", "--hrv-effect", "0.7", "--scr-effect", "4"])
        main(["extract", "--seed", "2", "--input", str(tmp_path / "raw"), "--out", str(tmp_path / "f")])
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"train": {"split": "task"}}))
        assert main(["train", "--seed", "2", "--config", str(cfg), "--model", "lr",
                     "--input", str(tmp_path / "f" / "features.csv"), "--out", str(tmp_path / "t")]) == 0
        for pid in ("P01", "P02"):
            report = json.loads((tmp_path / "t" / "lr" / pid / "report.json").read_text())
            assert report["test_metrics"]["accuracy"] >= 0.9

    def test_reports_identical_and_evaluate(self, extracted, tmp_path):
        cfg = quick_config(tmp_path / "c.json")
        feats = str(extracted / "feat" / "features.csv")
        for d in ("a", "b"):
            assert main(["train", "--seed", "4", "--config", cfg, "--model", "bio_snn", "--input", feats,
                         "--out", str(tmp_path / d)]) == 0
        for name in ("report.json", "checkpoint.json"):
            a = (tmp_path / "a" / "bio_snn" / "P01" / name).read_bytes()
            assert a == (tmp_path / "b" / "bio_snn" / "P01" / name).read_bytes()
        assert main(["evaluate", "--seed", "4", "--input", str(tmp_path / "a"), "--out", str(tmp_path / "e")]) == 0
        rows = read_csv(tmp_path / "e" / "summary.csv")
        assert [r["model"] for r in rows] == ["bio_snn"]
        assert 0 <= float(rows[0]["mean_accuracy"]) <= 1

    def test_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 1, "out": "x", "model": "lr"}))
        args = build_parser().parse_args(["train", "--config", str(cfg), "--model", "bio_snn", "--seed", "7"])
        settings = resolve(args)
        assert settings["model"] == "bio_snn" and settings["seed"] == 7 and settings["out"] == "x"


class TestCompare:
    def test_table4(self, tmp_path):
        assert main(["compare", "--seed", "0", "--table4", "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "comparison_pairwise.csv")
        assert any(r["model1"] == "Literature LR" and r["model2"] == "Our LR" for r in rows)
        assert json.loads((tmp_path / "comparison.json").read_text())["branch"] == "nonparametric"

    def test_single_model(self, tmp_path):
        (tmp_path / "m.csv").write_text("model,mean_accuracy,std\na,0.8,0.05\n")
        code = main(["compare", "--seed", "0", "--input", str(tmp_path / "m.csv"), "--out", str(tmp_path / "o")])
        assert code != 0
        assert not (tmp_path / "o").exists()

    def test_identical_summaries(self, tmp_path):
        (tmp_path / "m.csv").write_text("model,mean_accuracy,std\na,0.9,0.1\nb,0.9,0.1\n")
        assert main(["compare", "--seed", "0", "--input", str(tmp_path / "m.csv"), "--out", str(tmp_path / "o")]) == 0
        doc = json.loads((tmp_path / "o" / "comparison.json").read_text())
        assert doc["pairwise"][0]["p_corrected"] == pytest.approx(1.0)

    def test_deterministic(self, tmp_path):
        for d in ("a", "b"):
            main(["compare", "--seed", "5", "--table4", "--out", str(tmp_path / d)])
        for name in ("comparison.json", "comparison_pairwise.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestErrors:
    def test_seed_required(self, tmp_path, capsys):
        assert main(["synth", "--out", str(tmp_path / "o")]) == 2
        assert "seed" in capsys.readouterr().err
        assert not (tmp_path / "o").exists()

    def test_missing_input(self, tmp_path):
        assert main(["extract", "--seed", "1", "--input", str(tmp_path / "nope"), "--out", str(tmp_path / "o")]) == 3
        assert not (tmp_path / "o").exists()

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 1, "colour": "red"}))
        assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_bad_json(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{")
        assert main(["synth", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "o")]) == 2

    def test_invalid_synth_spec(self, tmp_path):
        assert main(["synth", "--seed", "1", "--tasks", "0", "--out", str(tmp_path / "o")]) == 2
        assert not (tmp_path / "o").exists()

    def test_bad_train_settings_leave_out_untouched(self, extracted, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"train": {"split": "random"}}))
        code = main(["train", "--seed", "1", "--config", str(cfg), "--input",
                     str(extracted / "feat" / "features.csv"), "--out", str(tmp_path / "o")])
        assert code == 2 and not (tmp_path / "o").exists()

    def test_train_on_malformed_csv(self, tmp_path):
        (tmp_path / "f.csv").write_text("label,x\n1,abc\n")
        assert main(["train", "--seed", "1", "--input", str(tmp_path / "f.csv"), "--out", str(tmp_path / "o")]) == 3

    def test_single_class_participant(self, tmp_path):
        (tmp_path / "f.csv").write_text("participant,task,window,label,x\n" +
                                        "".join(f"P01,T1,{i},1,{i}\n" for i in range(20)))
        code = main(["train", "--seed", "1", "--model", "lr", "--input", str(tmp_path / "f.csv"),
                     "--out", str(tmp_path / "o")])
        assert code == 3
