import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from workload_snn.errors import InvalidSpecError, RangeError, ShapeError, UnsupportedSizeError
from workload_snn.stats import (
    ModelAccuracySummary,
    bonferroni,
    bootstrap_accuracies,
    chi2_sf,
    cliff_magnitude,
    cliffs_delta,
    conover_posthoc,
    f_sf,
    kruskal_wallis,
    one_way_anova,
    shapiro_wilk,
    t_sf,
    truncated_params,
)

ORACLE = json.loads((Path(__file__).parent / "fixtures" / "stats_oracle.json").read_text())
TAILS = {"chi2": chi2_sf, "t": t_sf, "f": f_sf}


def enumerate_delta(a, b):
    wins = sum(1 for x in a for y in b if x > y)
    losses = sum(1 for x in a for y in b if x < y)
    return Fraction(wins - losses, len(a) * len(b))


class TestOracleFixtures:
    @pytest.mark.parametrize("case", ORACLE["tails"], ids=lambda c: f"{c['dist']}-{c['x']}-{c['df']}")
    def test_tails(self, case):
        assert abs(TAILS[case["dist"]](case["x"], *case["df"]) - case["sf"]) < 1e-6

    @pytest.mark.parametrize("case", ORACLE["shapiro"], ids=lambda c: f"n{len(c['x'])}")
    def test_shapiro(self, case):
        w, p = shapiro_wilk(case["x"])
        assert abs(p - case["p"]) < 1e-3
        assert abs(w - case["W"]) < 1e-6

    @pytest.mark.parametrize("case", ORACLE["kruskal"], ids=lambda c: f"k{len(c['groups'])}")
    def test_kruskal(self, case):
        h, p = kruskal_wallis(case["groups"])
        assert abs(h - case["H"]) < 1e-9
        assert abs(p - case["p"]) < 1e-6

    @pytest.mark.parametrize("case", ORACLE["conover"], ids=lambda c: f"k{len(c['groups'])}")
    def test_conover(self, case):
        assert np.max(np.abs(conover_posthoc(case["groups"]) - np.array(case["p"]))) < 1e-6

    @pytest.mark.parametrize("case", ORACLE["anova"], ids=lambda c: f"k{len(c['groups'])}")
    def test_anova(self, case):
        f, p = one_way_anova(case["groups"])
        assert abs(f - case["F"]) < 1e-9 * max(1.0, case["F"])
        assert abs(p - case["p"]) < 1e-6


class TestTails:
    def test_bad_df(self):
        for fn, args in ((chi2_sf, (1.0, 0)), (t_sf, (1.0, -1)), (f_sf, (1.0, 0, 3))):
            with pytest.raises(InvalidSpecError):
                fn(*args)

    @given(st.floats(-50, 50), st.floats(0.5, 500))
    def test_t_symmetry(self, x, df):
        assert t_sf(x, df) + t_sf(-x, df) == pytest.approx(1.0, abs=1e-12)

    @given(st.floats(0, 200), st.floats(0.5, 100))
    def test_chi2_range(self, x, df):
        assert 0.0 <= chi2_sf(x, df) <= 1.0


class TestShapiro:
    def test_normal_quantiles(self):
        from statistics import NormalDist

        x = [NormalDist().inv_cdf((i + 0.5) / 100) for i in range(100)]
        assert shapiro_wilk(x)[0] > 0.99

    def test_bimodal(self):
        assert shapiro_wilk([0.0] * 50 + [1.0] * 50)[1] < 0.001

    def test_size_limits(self):
        with pytest.raises(UnsupportedSizeError):
            shapiro_wilk([1.0, 2.0])
        with pytest.raises(UnsupportedSizeError):
            shapiro_wilk(np.arange(5001.0))

    def test_constant_sample(self):
        assert shapiro_wilk([0.5] * 10) == (1.0, 0.0)


class TestKruskal:
    def test_identical_groups(self):
        h, p = kruskal_wallis([[1, 2, 3], [1, 2, 3]])
        assert abs(h) < 1e-12 and p == pytest.approx(1.0)

    def test_hand_value(self):
        h, p = kruskal_wallis([[1, 2, 3], [10, 11, 12], [20, 21, 22]])
        assert h == pytest.approx(7.2)
        assert p == pytest.approx(np.exp(-3.6), abs=1e-12)
        assert round(p, 3) == 0.027

    def test_all_identical(self):
        assert kruskal_wallis([[2, 2], [2, 2, 2]]) == (0.0, 1.0)

    def test_one_group(self):
        with pytest.raises(ShapeError):
            kruskal_wallis([[1, 2, 3]])

    @given(st.lists(st.lists(st.integers(-20, 20), min_size=1, max_size=8), min_size=2, max_size=4))
    def test_monotone_invariance(self, groups):
        if len({v for g in groups for v in g}) < 2:
            return
        a = kruskal_wallis(groups)
        b = kruskal_wallis([[np.exp(v / 5) * 3 + 1 for v in g] for g in groups])
        assert a[0] == pytest.approx(b[0], rel=1e-9, abs=1e-12)


class TestConover:
    def test_identical_pair(self):
        p = conover_posthoc([[1, 2, 3, 4], [1, 2, 3, 4], [10, 11, 12, 13]])
        assert p[0, 1] == pytest.approx(1.0)
        assert np.allclose(np.diag(p), 1.0)
        assert np.array_equal(p, p.T)

    def test_bonferroni(self):
        assert bonferroni(0.01, 3) == pytest.approx(0.03)
        assert bonferroni(0.6, 3) == 1.0

    @given(st.lists(st.lists(st.floats(0, 1), min_size=2, max_size=8), min_size=2, max_size=4))
    def test_corrected_at_least_raw(self, groups):
        raw = conover_posthoc(groups, "none")
        cor = conover_posthoc(groups)
        assert np.all(cor >= raw - 1e-15)
        assert np.all((cor >= 0) & (cor <= 1))

    def test_unknown_correction(self):
        with pytest.raises(InvalidSpecError):
            conover_posthoc([[1, 2], [3, 4]], "holm")


class TestAnova:
    def test_identical_means(self):
        f, p = one_way_anova([[1, 2, 3], [1, 2, 3]])
        assert f == pytest.approx(0.0) and p == pytest.approx(1.0)

    def test_separated(self):
        _, p = one_way_anova([[0, 1e-9, 2e-9], [1, 1 + 1e-9, 1 + 2e-9]])
        assert p < 1e-6

    def test_degenerate(self):
        assert one_way_anova([[1, 1], [1, 1]]) == (0.0, 1.0)
        assert one_way_anova([[1, 1], [2, 2]]) == (float("inf"), 0.0)

    def test_group_too_small(self):
        with pytest.raises(ShapeError):
            one_way_anova([[1], [2, 3]])


class TestCliff:
    def test_enumeration_on_random_pairs(self):
        rng = np.random.default_rng(99)
        for _ in range(100):
            a = rng.integers(0, 6, size=rng.integers(1, 9)).tolist()
            b = rng.integers(0, 6, size=rng.integers(1, 9)).tolist()
            assert cliffs_delta(a, b)[0] == float(enumerate_delta(a, b))

    def test_identical(self):
        assert cliffs_delta([1, 2, 3], [1, 2, 3]) == (0.0, "negligible")

    def test_separated(self):
        assert cliffs_delta([5, 6], [1, 2]) == (1.0, "large")

    def test_hand_value(self):
        assert cliffs_delta([1, 2], [1, 3]) == (-0.25, "small")

    def test_empty(self):
        with pytest.raises(ShapeError):
            cliffs_delta([], [1])

    @pytest.mark.parametrize("delta,label", [
        (0.0, "negligible"), (0.147, "negligible"), (0.1471, "small"), (0.3299, "small"),
        (0.330, "medium"), (0.474, "medium"), (0.4741, "large"), (-0.5, "large"), (1.0, "large"),
    ])
    def test_cuts(self, delta, label):
        assert cliff_magnitude(delta) == label

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=15),
           st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=15))
    def test_antisymmetric_and_bounded(self, a, b):
        d_ab, d_ba = cliffs_delta(a, b)[0], cliffs_delta(b, a)[0]
        assert d_ab == -d_ba and abs(d_ab) <= 1

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=15),
           st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=15))
    def test_shift_forces_one(self, a, b):
        c = max(b) - min(a) + 1.0
        assert cliffs_delta(np.asarray(a) + c, b)[0] == 1.0


class TestBootstrap:
    def test_zero_std(self):
        assert np.all(bootstrap_accuracies(ModelAccuracySummary("m", 0.7, 0.0), 50) == 0.7)

    def test_hybrid_row(self):
        s = bootstrap_accuracies(ModelAccuracySummary("Hybrid SNN", 0.885, 0.034), 1000, seed=0)
        assert abs(s.mean() - 0.885) <= 0.005

    def test_bounded(self):
        s = bootstrap_accuracies(ModelAccuracySummary("m", 0.99, 0.05), 1000, seed=1)
        assert s.max() <= 1.0 and s.min() >= 0.0

    def test_deterministic(self):
        m = ModelAccuracySummary("m", 0.8, 0.1)
        assert np.array_equal(bootstrap_accuracies(m, 100, 3), bootstrap_accuracies(m, 100, 3))
        assert not np.array_equal(bootstrap_accuracies(m, 100, 3), bootstrap_accuracies(m, 100, 4))

    def test_literal_truncation_biased_near_bound(self):
        m = ModelAccuracySummary("m", 0.843, 0.109)
        assert bootstrap_accuracies(m, 1000, 0, match_moments=False).mean() < 0.835
        assert abs(bootstrap_accuracies(m, 1000, 0).mean() - 0.843) < 0.002

    def test_truncated_params_identity_far_from_bounds(self):
        assert truncated_params(0.5, 0.02) == (0.5, 0.02)

    def test_summary_validation(self):
        with pytest.raises(RangeError):
            ModelAccuracySummary("m", 1.2, 0.1)
        with pytest.raises(RangeError):
            ModelAccuracySummary("m", 0.5, -0.1)

    def test_bad_n(self):
        with pytest.raises(InvalidSpecError):
            bootstrap_accuracies(ModelAccuracySummary("m", 0.5, 0.1), 0)
