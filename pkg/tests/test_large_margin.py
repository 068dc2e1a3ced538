import warnings

import numpy as np
import pytest

from seqgdpp.data import generate_synthetic
from seqgdpp.errors import OracleUnreachableWarning
from seqgdpp.large_margin import (MARGIN, hinge_margin, lm_loss, lm_train, margin_term,
                                  mean_lm_loss, sequence_cost)
from seqgdpp.seqmodel import greedy_infer
from seqgdpp.sequence import Shot
from seqgdpp.training import TrainConfig, train_mle
from seqgdpp.verify import random_params, random_sequence


class TestHinge:
    def test_same_subset_costs_margin(self):
        L = np.diag([2.0, 0.5, 1.0])
        assert margin_term(L, [0, 2], [0, 2]) == MARGIN == 1.0

    @pytest.mark.parametrize("lo, lh, expected", [(-1.0, -2.0, 0.0), (-2.0, -1.0, 2.0),
                                                  (0.0, -0.5, 0.5)])
    def test_values(self, lo, lh, expected):
        assert hinge_margin(lo, lh) == pytest.approx(expected)

    def test_log_det_gap(self):
        # det{0} = e, det{1} = 1: gap of exactly one margin
        L = np.diag([np.e, 1.0])
        assert margin_term(L, [0], [1]) == pytest.approx(0.0, abs=1e-12)
        assert margin_term(L, [1], [0]) == pytest.approx(2.0)

    def test_prefix_enters_both_sides(self):
        L = np.array([[2.0, 0.9, 0.0], [0.9, 1.0, 0.0], [0.0, 0.0, 1.5]])
        got = margin_term(L, [1], [2], x_prev=[0])
        expected = 1.0 - np.log(2.0 - 0.81) + np.log(3.0)
        assert got == pytest.approx(max(0.0, expected))

    def test_unreachable_oracle(self):
        L = np.diag([1.0, 0.0])
        with pytest.warns(OracleUnreachableWarning):
            assert margin_term(L, [1], [0]) == np.inf


class TestSequenceCost:
    def test_half_overlap(self):
        assert sequence_cost([1, 2], [2, 3]) == pytest.approx(0.5)

    def test_identical(self):
        assert sequence_cost([4, 1], [1, 4]) == 0.0

    def test_disjoint(self):
        assert sequence_cost([1], [2]) == 1.0

    def test_both_empty(self):
        assert sequence_cost([], []) == 0.0

    def test_shots_by_id(self):
        a = [Shot("a", 2.5, np.zeros(1), ()), Shot("b", 7.5, np.zeros(1), ())]
        assert sequence_cost(a, ["a"]) == pytest.approx(1.0 - 2 / 3)

    def test_matching_counts_same_tag_shots(self):
        a = [Shot("a", 2.5, np.zeros(1), ("event0",))]
        b = [Shot("b", 7.5, np.zeros(1), ("event0",))]
        assert sequence_cost(a, b, "matching") == 0.0
        assert sequence_cost(a, b, "identity") == 1.0

    def test_unknown_metric(self):
        with pytest.raises(ValueError):
            sequence_cost([1], [1], "bogus")


def instance(seed, kind):
    rng = np.random.default_rng(seed)
    seq = random_sequence(rng, T=3, n=5)
    params = random_params(rng, kind, seq.feature_dim)
    oracle = tuple(tuple(sorted(rng.choice(5, size=int(rng.integers(0, 4)), replace=False)
                                .tolist())) for _ in range(seq.T))
    return params, seq, oracle


class TestLoss:
    @pytest.mark.parametrize("seed", range(6))
    @pytest.mark.parametrize("kind", ["seqgdpp", "seqdpp"])
    def test_nonnegative(self, seed, kind):
        params, seq, oracle = instance(seed, kind)
        loss, grad, steps = lm_loss(params, seq, oracle)
        assert loss >= 0.0 and np.all(np.isfinite(grad))
        assert len(steps) == seq.T
        assert loss == pytest.approx(sum(s.contribution for s in steps))

    @pytest.mark.parametrize("kind", ["seqgdpp", "seqdpp"])
    def test_zero_when_oracle_is_decoded(self, kind):
        params, seq, _ = instance(3, kind)
        decoded, _ = greedy_infer(params, seq, params.M0)
        loss, grad, steps = lm_loss(params, seq, decoded, params.M0)
        assert loss == 0.0
        assert all(s.inferred_x == s.oracle_x for s in steps)
        np.testing.assert_array_equal(grad, 0.0)

    def test_teacher_forcing(self):
        # the inferred subset at step t is decoded after the oracle prefix, so
        # changing an earlier decoded step must not change later ones
        params, seq, oracle = instance(1, "seqdpp")
        _, _, steps = lm_loss(params, seq, oracle)
        alt = (tuple(x for x in range(5) if x not in oracle[0])[:1],) + oracle[1:]
        _, _, steps_alt = lm_loss(params, seq, alt)
        assert steps[2].inferred_x == steps_alt[2].inferred_x

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("kind", ["seqgdpp", "seqdpp"])
    def test_subgradient_matches_differences(self, seed, kind):
        params, seq, oracle = instance(seed, kind)
        loss, grad, steps = lm_loss(params, seq, oracle)
        if loss == 0.0:
            pytest.skip("no active hinge")
        theta, eps = params.unconstrained(), 1e-6
        for i in range(theta.size):
            e = np.zeros_like(theta)
            e[i] = eps
            lp, _, sp = lm_loss(params.with_unconstrained(theta + e), seq, oracle)
            lm, _, sm = lm_loss(params.with_unconstrained(theta - e), seq, oracle)
            same = [s.inferred_x for s in sp] == [s.inferred_x for s in sm] \
                == [s.inferred_x for s in steps]
            active = [s.margin > 0 for s in sp] == [s.margin > 0 for s in sm]
            if same and active:
                assert (lp - lm) / (2 * eps) == pytest.approx(grad[i], rel=1e-5, abs=1e-6)


@pytest.fixture(scope="module")
def tiny():
    ds = generate_synthetic(n_videos=4, T=3, segment_size=5, n_events=6, feature_dim=4, seed=3)
    return ds.videos[:2], ds.videos[2:]


class TestTraining:
    def test_zero_epochs_is_mle(self, tiny):
        train, val = tiny
        cfg = TrainConfig.from_defaults(steps=5, lm_epochs=0, alphas=[1.0])
        a = lm_train("seqdpp", train, val, cfg)
        b = train_mle("seqdpp", train, val, cfg)
        np.testing.assert_array_equal(a.unconstrained(), b.unconstrained())

    def test_never_worse_than_start(self, tiny):
        from seqgdpp.training import validation_f1
        train, val = tiny
        cfg = TrainConfig.from_defaults(steps=5, lm_epochs=3, alphas=[1.0])
        start = train_mle("seqgdpp", train, val, cfg)
        out = lm_train("seqgdpp", train, val, cfg, init=start)
        assert out.training == "lm"
        assert validation_f1(out, val, cfg.validation_metric) >= \
            validation_f1(start, val, cfg.validation_metric)

    def test_logs_epochs(self, tiny):
        train, val = tiny
        cfg = TrainConfig.from_defaults(steps=2, lm_epochs=2, alphas=[1.0])
        records = []
        lm_train("seqdpp", train, val, cfg, log=records.append)
        lm = [r for r in records if r["stage"].startswith("lm:")]
        assert [r["epoch"] for r in lm] == [1, 1, 2, 2]

    def test_mean_loss_is_per_segment(self, tiny):
        train, _ = tiny
        p = train_mle("seqdpp", train, (), TrainConfig.from_defaults(steps=0))
        loss, g = mean_lm_loss(p, train)
        assert loss >= 0 and g.shape == p.unconstrained().shape
