import csv
from importlib import resources

import numpy as np
import pytest

from workload_snn.compare import (
    DIFFERENCE_CONVENTION,
    PAIRWISE_COLUMNS,
    compare_models,
    read_model_table,
    write_model_table,
    write_report,
)
from workload_snn.errors import ParseError, SchemaError, ShapeError
from workload_snn.io import read_json
from workload_snn.stats import ModelAccuracySummary

TABLE4 = resources.files("workload_snn").joinpath("data/table4.csv")
PUBLISHED = {
    "Literature LR": (0.710, 0.020),
    "Our LR": (0.778, 0.015),
    "MLP": (0.934, 0.017),
    "SVM Linear": (0.790, 0.018),
    "SVM Polynomial": (0.940, 0.016),
    "SVM RBF": (0.960, 0.015),
    "Hybrid SNN": (0.885, 0.034),
    "Bio-inspired SNN (EEG)": (0.735, 0.079),
    "Bio-inspired SNN": (0.843, 0.109),
}


@pytest.fixture(scope="module")
def table4_report():
    return compare_models(read_model_table(TABLE4), seed=0)


class TestPublishedSummaries:
    def test_bundled_rows(self):
        rows = read_model_table(TABLE4)
        assert {k: (v.mean, v.std) for k, v in rows.items()} == PUBLISHED

    def test_sample_means(self, table4_report):
        for name, (mean, _) in PUBLISHED.items():
            s = table4_report.samples[name]
            assert s.size == 1000
            assert abs(s.mean() - mean) <= 0.005, name

    def test_nonparametric_branch(self, table4_report):
        assert table4_report.branch == "nonparametric"
        assert table4_report.omnibus["test"] == "Kruskal-Wallis"
        assert not table4_report.normality["Bio-inspired SNN"]["normal"]

    def test_all_pairs_present(self, table4_report):
        assert len(table4_report.pairwise) == 36
        for row in table4_report.pairwise:
            assert 0.0 <= row["p_corrected"] <= 1.0
            assert row["magnitude"] in {"negligible", "small", "medium", "large"}

    def test_published_difference_signs(self, table4_report):
        assert table4_report.pair("Hybrid SNN", "Bio-inspired SNN")["difference"] > 0
        assert table4_report.pair("SVM RBF", "Hybrid SNN")["difference"] == pytest.approx(0.075, abs=0.005)
        assert table4_report.pair("Literature LR", "Bio-inspired SNN")["difference"] < 0

    def test_clear_gap_is_large(self, table4_report):
        row = table4_report.pair("Literature LR", "MLP")
        assert row["abs_delta"] > 0.474 and row["magnitude"] == "large"


def test_identical_summaries():
    # close to the upper bound, so the truncated samples fail normality and Conover runs
    s = ModelAccuracySummary("a", 0.9, 0.1)
    r = compare_models({"a": s, "b": ModelAccuracySummary("b", 0.9, 0.1), "c": s}, seed=3, n=200)
    assert r.branch == "nonparametric"
    for row in r.pairwise:
        assert row["p_corrected"] == pytest.approx(1.0)
        assert row["delta"] == 0.0
        assert row["magnitude"] == "negligible"


def test_skewed_sample_forces_nonparametric(rng):
    r = compare_models({"n": rng.normal(0.8, 0.02, 300), "skew": 0.9 - rng.exponential(0.05, 300)})
    assert r.branch == "nonparametric"
    assert "skew" in r.reason


def test_normal_samples_take_parametric_branch(rng):
    r = compare_models({"a": rng.normal(0.7, 0.02, 200), "b": rng.normal(0.75, 0.02, 200)})
    assert r.branch == "parametric"
    assert r.omnibus["test"] == "one-way ANOVA"
    assert r.pairwise[0]["p_corrected"] is None


def test_one_model():
    with pytest.raises(ShapeError):
        compare_models({"a": ModelAccuracySummary("a", 0.5, 0.1)})


class TestFiles:
    def test_summary_round_trip(self, tmp_path):
        rows = [ModelAccuracySummary("a", 0.71, 0.02), ModelAccuracySummary("b b", 0.5, 0.0)]
        write_model_table(tmp_path / "m.csv", rows)
        back = read_model_table(tmp_path / "m.csv")
        assert [(v.model, v.mean, v.std) for v in back.values()] == [("a", 0.71, 0.02), ("b b", 0.5, 0.0)]

    def test_raw_vectors(self, tmp_path):
        (tmp_path / "r.csv").write_text("model,fold,accuracy\na,0,0.7\na,1,0.8\nb,0,0.6\n")
        back = read_model_table(tmp_path / "r.csv")
        assert np.array_equal(back["a"], [0.7, 0.8]) and np.array_equal(back["b"], [0.6])

    def test_bad_header(self, tmp_path):
        (tmp_path / "x.csv").write_text("name,acc\na,0.5\n")
        with pytest.raises(SchemaError):
            read_model_table(tmp_path / "x.csv")

    def test_bad_number_reports_position(self, tmp_path):
        (tmp_path / "x.csv").write_text("model,mean_accuracy,std\na,0.5,0.1\nb,high,0.1\n")
        with pytest.raises(ParseError) as info:
            read_model_table(tmp_path / "x.csv")
        assert info.value.row == 3 and info.value.column == "mean_accuracy"

    def test_duplicate_model(self, tmp_path):
        (tmp_path / "x.csv").write_text("model,mean_accuracy,std\na,0.5,0.1\na,0.6,0.1\n")
        with pytest.raises(ParseError):
            read_model_table(tmp_path / "x.csv")

    def test_report_files(self, tmp_path, table4_report):
        json_path, csv_path = write_report(tmp_path, table4_report)
        doc = read_json(json_path)
        assert doc["difference_convention"] == DIFFERENCE_CONVENTION
        assert len(doc["samples"]["MLP"]) == 1000
        with csv_path.open() as fh:
            rows = list(csv.DictReader(fh))
        assert tuple(rows[0]) == PAIRWISE_COLUMNS
        assert (rows[0]["model1"], rows[0]["model2"]) == ("Literature LR", "Our LR")
