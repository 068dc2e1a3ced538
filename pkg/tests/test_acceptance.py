"""Acceptance criteria 1-10 at their stated tolerances.

Each test records a ``criterion N: PASS|FAIL ...`` line before asserting; the
lines are printed as they happen and again in the pytest terminal summary.
"""
import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from seqgdpp import oracles, verify
from seqgdpp.data import generate_synthetic
from seqgdpp.experiment import run_benchmark
from seqgdpp.large_margin import lm_loss
from seqgdpp.metrics import (FilterKind, TemporalFilter, iou_similarity, match_f1,
                             match_weights)
from seqgdpp.seqmodel import SeqParams, greedy_infer, log_likelihood
from seqgdpp.sequence import Shot


def record(n, ok, detail, status=None):
    line = f"criterion {n}: {status or ('PASS' if ok else 'FAIL')} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def test_c1_dpp_normalization():
    res, secs = timed(verify.check_normalization, np.random.default_rng(1), 100, range(2, 13))
    ok = res.passed and secs < 30
    record(1, ok, f"max |sum P - 1| = {res.max_deviation:.2e} (< 1e-8), {secs:.1f}s (< 30s)")
    assert ok


def test_c2_conditional_kernel():
    res = verify.check_conditionals(np.random.default_rng(2), 100)
    record(2, res.passed, f"max deviation {res.max_deviation:.2e} (< 1e-8)")
    assert res.passed


def test_c3_gdpp_reductions():
    res = verify.check_gdpp_reductions(np.random.default_rng(3), 100, range(2, 13))
    ok = all(r.passed for r in res)
    record(3, ok, ", ".join(f"{r.name} {r.max_deviation:.1e} (< {r.tolerance:g})" for r in res))
    assert ok


def test_c4_gdpp_normalizer():
    res = verify.check_gdpp_normalizer(np.random.default_rng(4), 100, range(2, 13))
    record(4, res.passed, f"max relative error {res.max_deviation:.2e} (< 1e-8), N <= 12")
    assert res.passed


def test_c5_sampler():
    res, secs = timed(verify.check_sampler, np.random.default_rng(5), 50_000, 6)
    ok = all(r.passed for r in res) and secs < 60
    record(5, ok, f"subset TV {res[0].max_deviation:.4f} (< 0.02), size TV "
                  f"{res[1].max_deviation:.4f} (< 0.01), {secs:.1f}s (< 60s)")
    assert ok


def test_c6_step_normalization():
    res = verify.check_step_normalization(np.random.default_rng(6), 60, max_n=12)
    record(6, res.passed, f"max |sum - 1| = {res.max_deviation:.2e} over |V_t| <= 12")
    assert res.passed


H = 1e-5


def central_differences(f, theta):
    g = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = H
        g[i] = (f(theta + e) - f(theta - e)) / (2 * H)
    return g


def rel_error(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-8))


def toy_instance(rng):
    seq = verify.random_sequence(rng, T=3, n=5)
    params = verify.random_params(rng, "seqgdpp", seq.feature_dim)
    oracle = tuple(tuple(sorted(rng.choice(5, size=int(rng.integers(0, 4)), replace=False)
                                .tolist())) for _ in range(seq.T))
    return params, seq, oracle


def ll_gradient_errors(rng, n):
    errs = []
    for _ in range(n):
        params, seq, oracle = toy_instance(rng)
        _, g = log_likelihood(params, seq, oracle, grad=True)
        fd = central_differences(
            lambda th: log_likelihood(params.with_unconstrained(th), seq, oracle),
            params.unconstrained())
        errs.append(rel_error(g, fd))
    return errs


def lm_gradient_errors(rng, n):
    errs = []
    while len(errs) < n:
        params, seq, oracle = toy_instance(rng)
        theta = params.unconstrained()
        loss, g, steps = lm_loss(params, seq, oracle)
        if loss == 0.0:
            continue
        # keep instances where the decoded subsets and active hinges are
        # stable inside the difference stencil
        key = [(s.inferred_x, s.margin > 0) for s in steps]
        stable = True
        for i in range(theta.size):
            for sgn in (1, -1):
                e = np.zeros_like(theta)
                e[i] = sgn * H
                _, _, st = lm_loss(params.with_unconstrained(theta + e), seq, oracle)
                stable &= [(s.inferred_x, s.margin > 0) for s in st] == key
        if not stable:
            continue
        fd = central_differences(
            lambda th: lm_loss(params.with_unconstrained(th), seq, oracle)[0], theta)
        errs.append(rel_error(g, fd))
    return errs


def test_c7_gradient_checks():
    rng = np.random.default_rng(7)
    ll, lm = ll_gradient_errors(rng, 20), lm_gradient_errors(rng, 20)
    ok = max(ll) < 1e-4 and max(lm) < 1e-4
    record(7, ok, f"max relative error: log-likelihood {max(ll):.2e}, "
                  f"margin loss {max(lm):.2e} (< 1e-4, 20 instances each)")
    assert ok


def inferred_lengths(alpha, M0_of, seed):
    rng = np.random.default_rng(seed)
    ds = generate_synthetic(n_videos=30, noise=0.1, seed=seed)
    out = []
    for v in ds.videos:
        M0 = M0_of(v.seq.T, rng)
        p = SeqParams.init("seqgdpp", v.seq.feature_dim, alpha=alpha, M0=M0)
        # random bandwidth mixture, zero feature weights so mu follows the budget
        theta = p.unconstrained()
        theta[:p.D] = rng.normal(size=p.D)
        sel, _ = greedy_infer(p.with_unconstrained(theta), v.seq, M0)
        out.append((sum(len(x) for x in sel), M0))
    return np.array(out)


def test_c8_length_control():
    exact = inferred_lengths(1e6, lambda T, r: T * int(r.integers(1, 4)), 8)
    soft = inferred_lengths(10.0, lambda T, r: int(r.integers(T, 3 * T + 1)), 9)
    n_exact = int(np.sum(exact[:, 0] == exact[:, 1]))
    ratio = float(np.mean(soft[:, 0]) / np.mean(soft[:, 1]))
    ok = n_exact == len(exact) and abs(ratio - 1) <= 0.10
    record(8, ok, f"alpha=1e6 exact length on {n_exact}/{len(exact)} sequences; "
                  f"alpha=10 mean length / M0 = {ratio:.3f} (within 10%)")
    assert ok


def test_c9_metric_fidelity():
    iou = iou_similarity({"Street", "Tree", "Sun"}, {"Lady", "Car", "Street", "Tree"})
    rng = np.random.default_rng(9)
    tags = list("abcdef")
    filt_dev = match_dev = 0.0
    for _ in range(200):
        mk = lambda k: [Shot(i, float(rng.uniform(0, 600)), np.zeros(1),  # noqa: E731
                             tuple(rng.choice(tags, size=int(rng.integers(1, 4)),
                                              replace=False)))
                        for i in range(k)]
        a, b = mk(int(rng.integers(1, 9))), mk(int(rng.integers(1, 9)))
        base = match_f1(a, b).f1
        for kind in (FilterKind.PI, FilterKind.GAUSSIAN):
            filt_dev = max(filt_dev, abs(match_f1(a, b, TemporalFilter(kind, 1e12)).f1 - base))
        W = rng.random((len(a), len(b)))
        match_dev = max(match_dev, abs(match_weights(W)[0] - oracles.max_matching_weight(W)))
    ok = iou == pytest.approx(0.4, abs=1e-12) and filt_dev < 1e-6 and match_dev < 1e-10
    record(9, ok, f"IoU example {iou:.4f} (0.4); filter limit deviation {filt_dev:.1e} "
                  f"(< 1e-6); matching vs enumeration {match_dev:.1e} on <= 8x8")
    assert ok


def test_c10_synthetic_end_to_end():
    t0 = time.perf_counter()
    res = run_benchmark(generate_synthetic(), "seqgdpp")
    f1 = res.validation_f1
    wins, lines = 0, []
    for seed in range(5):
        ds = generate_synthetic(seed=seed)
        a_mle = run_benchmark(ds, "seqdpp").auc_pi
        a_lm = run_benchmark(ds, "lm-seqdpp").auc_pi
        wins += a_lm >= a_mle
        lines.append(f"{a_lm:.4f}>={a_mle:.4f}" if a_lm >= a_mle else f"{a_lm:.4f}<{a_mle:.4f}")
    secs = time.perf_counter() - t0
    directional = wins >= 4
    ok = f1 >= 0.9
    status = None if not ok or directional else "PASS (directional WARN)"
    record(10, ok, f"SeqGDPP validation F1 {f1:.3f} (>= 0.9); LM-SeqDPP AUC >= SeqDPP in "
                   f"{wins}/5 seeds [{', '.join(lines)}]; {secs:.0f}s", status)
    if not directional:
        warnings.warn(f"LM-SeqDPP beat SeqDPP on AUC in only {wins}/5 seeds")
    assert ok
