import numpy as np
import pytest
from hypothesis import given, strategies as st

from seqgdpp import oracles
from seqgdpp.metrics import (DEFAULT_GRID, NO_FILTER, FilterKind, TemporalFilter,
                             aggregate_oracle, curve_area, evaluate_summary,
                             filtered_similarity, identity_f1, iou_similarity, match_f1,
                             match_weights, similarity_matrix, write_curve_csv, _prf)
from seqgdpp.sequence import Shot


def shot(i, t, tags):
    return Shot(f"s{i}", float(t), np.zeros(1), tuple(tags))


tag_sets = st.frozensets(st.sampled_from("abcdefg"), max_size=5)


class TestIoU:
    def test_reference_example(self):
        a = {"Street", "Tree", "Sun"}
        b = {"Lady", "Car", "Street", "Tree"}
        assert iou_similarity(a, b) == pytest.approx(0.4)

    def test_identical(self):
        assert iou_similarity({"x", "y"}, {"y", "x"}) == 1.0

    def test_disjoint(self):
        assert iou_similarity({"x"}, {"y"}) == 0.0

    def test_empty_tags_score_zero(self):
        assert iou_similarity(set(), set()) == 0.0
        assert iou_similarity(set(), {"x"}) == 0.0

    @given(tag_sets, tag_sets)
    def test_symmetric_and_bounded(self, a, b):
        v = iou_similarity(a, b)
        assert v == iou_similarity(b, a) and 0.0 <= v <= 1.0


class TestFilters:
    def test_pi_outside_window(self):
        assert filtered_similarity(0.4, 70, TemporalFilter("pi", 60)) == 0.0

    def test_pi_boundary_inclusive(self):
        assert filtered_similarity(0.4, 60, TemporalFilter("pi", 60)) == 0.4

    def test_gaussian_at_one_sigma(self):
        got = filtered_similarity(0.4, 10, TemporalFilter(FilterKind.GAUSSIAN, 10))
        assert got == pytest.approx(0.4 * np.exp(-0.5))
        assert got == pytest.approx(0.2426, abs=1e-4)

    def test_none_is_identity(self):
        assert filtered_similarity(0.4, 1e9, NO_FILTER) == 0.4

    @pytest.mark.parametrize("kind", ["pi", "gaussian"])
    def test_requires_positive_parameter(self, kind):
        with pytest.raises(ValueError):
            TemporalFilter(kind, 0)

    @given(sim=st.floats(0, 1), dt=st.floats(0, 600), w1=st.floats(0.1, 300),
           extra=st.floats(0, 300))
    def test_pi_monotone_in_window(self, sim, dt, w1, extra):
        a = filtered_similarity(sim, dt, TemporalFilter("pi", w1))
        b = filtered_similarity(sim, dt, TemporalFilter("pi", w1 + extra))
        assert a <= b

    @pytest.mark.parametrize("kind", ["pi", "gaussian"])
    def test_infinite_parameter_limit(self, kind, rng):
        sys_ = [shot(i, 5 * i, rng.choice(list("abcdef"), 3, replace=False)) for i in range(6)]
        usr = [shot(10 + i, 7 * i + 3, rng.choice(list("abcdef"), 2, replace=False))
               for i in range(5)]
        ref = match_f1(sys_, usr).f1
        assert abs(match_f1(sys_, usr, TemporalFilter(kind, 1e9)).f1 - ref) < 1e-6


class TestMatching:
    def test_identical_summaries(self):
        s = [shot(0, 0, "ab"), shot(1, 10, "cd")]
        r = match_f1(s, s, TemporalFilter("pi", 5))
        assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)

    def test_two_edge_example(self):
        W = np.array([[0.4], [0.9]])
        total, pairs = match_weights(W)
        assert total == pytest.approx(0.9) and pairs == [(1, 0, 0.9)]
        # P = 0.9/2, R = 0.9/1
        s = [shot(0, 0, "abcde"), shot(1, 0, "fghij")]
        u = [shot(2, 0, "fghijk")]
        r = match_f1(s, u)
        w = 5 / 6
        assert (r.precision, r.recall) == pytest.approx((w / 2, w))
        assert r.f1 == pytest.approx(2 * (w / 2) * w / (w / 2 + w))

    def test_example_prf(self):
        # weights 0.4 and 0.9 against one user shot: W=0.9, P=0.45, R=0.9, F1=0.6
        r = _prf(0.9, 2, 1)
        assert (r.precision, r.recall, r.f1) == pytest.approx((0.45, 0.9, 0.6))

    def test_all_outside_window(self):
        s = [shot(0, 0, "a")]
        u = [shot(1, 100, "a")]
        assert match_f1(s, u, TemporalFilter("pi", 5)).f1 == 0.0

    def test_both_empty_is_degenerate(self):
        r = match_f1([], [])
        assert r.f1 == 1.0 and r.degenerate

    def test_one_side_empty(self):
        assert match_f1([], [shot(0, 0, "a")]).f1 == 0.0

    @given(r=st.integers(0, 8), c=st.integers(0, 8), seed=st.integers(0, 2**32 - 1))
    def test_matches_enumeration(self, r, c, seed):
        W = np.random.default_rng(seed).random((r, c))
        W[W < 0.3] = 0.0
        total, pairs = match_weights(W)
        assert total == pytest.approx(oracles.max_matching_weight(W), abs=1e-12)
        assert len({i for i, _, _ in pairs}) == len(pairs) == len({j for _, j, _ in pairs})

    @given(st.lists(tag_sets, min_size=1, max_size=5), st.lists(tag_sets, min_size=1, max_size=5))
    def test_symmetry(self, a, b):
        sa = [shot(i, 3 * i, t) for i, t in enumerate(a)]
        sb = [shot(10 + i, 4 * i, t) for i, t in enumerate(b)]
        ab, ba = match_f1(sa, sb), match_f1(sb, sa)
        assert ab.precision == pytest.approx(ba.recall)
        assert ab.f1 == pytest.approx(ba.f1)
        assert 0.0 <= ab.f1 <= 1.0

    def test_matrix_uses_midpoint_gap(self):
        W = similarity_matrix([shot(0, 2.5, "a")], [shot(1, 12.5, "a")], TemporalFilter("pi", 10))
        assert W[0, 0] == 1.0


class TestEvaluateSummary:
    def test_perfect_summary(self):
        u = [shot(0, 2.5, "ab"), shot(1, 30, "cd")]
        c = evaluate_summary(u, [u], DEFAULT_GRID, "pi")
        np.testing.assert_array_equal(c.f1_values, 1.0)
        assert c.auc == pytest.approx(1.0) and c.area == pytest.approx(60.0)

    def test_empty_system(self):
        c = evaluate_summary([], [[shot(0, 0, "a")]], DEFAULT_GRID, "gaussian")
        np.testing.assert_array_equal(c.f1_values, 0.0)
        assert c.auc == 0.0

    def test_grid_rows(self):
        c = evaluate_summary([shot(0, 0, "a")], [[shot(0, 0, "a")]], DEFAULT_GRID, "pi")
        assert c.f1_values.shape == (12,) and c.per_user.shape == (1, 12)

    def test_toy_instance_by_hand(self):
        # system shot at 0 s, user shots at 3 s (same tags) and 40 s (half overlap)
        s = [shot(0, 0, "ab")]
        u = [[shot(1, 3, "ab"), shot(2, 40, "ac")]]
        c = evaluate_summary(s, u, (5.0, 60.0), "pi")
        # window 5: only the 3 s shot matches, W = 1 -> P = 1, R = 1/2
        assert c.f1_values[0] == pytest.approx(2 / 3)
        assert c.f1_values[1] == pytest.approx(2 / 3)
        g = evaluate_summary(s, u, (5.0, 60.0), "gaussian")
        w5 = max(np.exp(-9 / 50), np.exp(-1600 / 50) / 3)
        assert g.f1_values[0] == pytest.approx(2 * w5 * (w5 / 2) / (w5 + w5 / 2))

    def test_unfiltered_point(self):
        s = [shot(0, 0, "ab")]
        u = [shot(1, 500, "ab")]
        c = evaluate_summary(s, [u], DEFAULT_GRID, "pi")
        assert c.f1_unfiltered == match_f1(s, u, NO_FILTER).f1 == 1.0

    def test_averages_users(self):
        s = [shot(0, 0, "a")]
        c = evaluate_summary(s, [[shot(1, 0, "a")], [shot(2, 0, "z")]], (5.0,), "pi")
        assert c.f1_values[0] == pytest.approx(0.5)

    @pytest.mark.parametrize("grid", [(), (0.0, 5.0), (10.0, 5.0)])
    def test_bad_grid(self, grid):
        with pytest.raises(ValueError):
            evaluate_summary([], [[]], grid, "pi")

    def test_needs_users(self):
        with pytest.raises(ValueError):
            evaluate_summary([], [], DEFAULT_GRID, "pi")

    def test_curve_area_anchor(self):
        area, span = curve_area([5.0, 60.0], [1.0, 1.0], 0.0)
        assert span == 60.0 and area == pytest.approx(2.5 + 55.0)


class TestOracle:
    def test_single_user(self):
        u = [shot(0, 0, "a"), shot(1, 5, "b")]
        assert [s.id for s in aggregate_oracle([u])] == ["s0", "s1"]

    def test_identical_users(self):
        u = [shot(0, 0, "a"), shot(3, 15, "c")]
        assert [s.id for s in aggregate_oracle([u, u, u], "identity")] == ["s0", "s3"]

    def test_shared_shot_first(self):
        s1, s2, s3 = shot(1, 5, "a"), shot(2, 10, "b"), shot(3, 15, "c")
        users = [[s1, s2], [s2, s3], [s2]]
        ids = [[x.id for x in u] for u in users]
        # enumerated gains: s2 alone scores 7/9, the best pair only 13/18
        first = {c: np.mean([oracles.set_f1([c], u) for u in ids]) for c in ("s1", "s2", "s3")}
        assert max(first, key=first.get) == "s2" and first["s2"] == pytest.approx(7 / 9)
        pair = max(np.mean([oracles.set_f1(["s2", c], u) for u in ids]) for c in ("s1", "s3"))
        assert pair == pytest.approx(13 / 18)
        assert [s.id for s in aggregate_oracle(users, "identity")] == ["s2"]

    def test_lowest_id_breaks_ties(self):
        # same tags: either shot alone scores 1, both together only 2/3
        s3, s5 = shot(3, 5, "a"), shot(5, 0, "a")
        assert [s.id for s in aggregate_oracle([[s5], [s3]])] == ["s3"]
        assert [s.id for s in aggregate_oracle([[s3], [s5]])] == ["s3"]

    def test_unknown_metric(self):
        with pytest.raises(ValueError):
            aggregate_oracle([[shot(0, 0, "a")]], "cosine")


class TestCurveCsv:
    def test_header_and_rows(self, tmp_path):
        path = tmp_path / "c.csv"
        write_curve_csv(path, [5.0, 10.0], [0.5, 0.75], [[0.5, 0.5], [0.5, 1.0]])
        lines = path.read_text().splitlines()
        assert lines[0] == "param_s,f1_mean,f1_user1,f1_user2"
        assert lines[1] == "5.0,0.5,0.5,0.5" and len(lines) == 3


def test_identity_f1():
    assert identity_f1([1, 2], [2, 3]) == 0.5
    assert identity_f1([], []) == 1.0
    assert identity_f1([1], []) == 0.0
