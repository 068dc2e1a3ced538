"""Randomized comparisons of the fast code paths against enumeration.

Each check draws random instances, measures the largest deviation from the
brute-force oracle, and compares it with a tolerance. ``run_checks`` bundles
them into the report written by ``seqgdpp bruteforce``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from . import oracles
from .gdpp import GDPP
from .kernel import condition_kernel, log_det, log_prob_ensemble
from .seqmodel import SeqParams, step_scores, step_table
from .sequence import SegmentedSequence, Shot

FAULTS = ("prior-normalization", "conditional-kernel")


@dataclass
class CheckResult:
    name: str
    max_deviation: float
    tolerance: float
    instances: int

    @property
    def passed(self) -> bool:
        return bool(self.max_deviation <= self.tolerance)

    def to_json(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def random_psd(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Wishart-style PSD matrix; full rank unless ``rank`` is given."""
    G = rng.normal(size=(n, rank if rank is not None else n + 2))
    return G @ G.T / G.shape[1]


def check_normalization(rng, instances=100, sizes=range(2, 13)) -> CheckResult:
    """Sum of ``P_L(y)`` over all subsets equals 1."""
    sizes = list(sizes)
    dev = 0.0
    for i in range(instances):
        n = sizes[i % len(sizes)]
        L = random_psd(n, rng)
        total = sum(np.exp(log_prob_ensemble(L, y)) for y in oracles.subsets(n))
        dev = max(dev, abs(total - 1.0))
    return CheckResult("dpp-normalization", dev, 1e-8, instances)


def check_conditionals(rng, instances=100, max_prev=4, max_v=6,
                       fault: str | None = None) -> CheckResult:
    """Conditional kernel probabilities against conditioning by enumeration."""
    dev = 0.0
    for _ in range(instances):
        n_prev = int(rng.integers(0, max_prev + 1))
        n_v = int(rng.integers(1, max_v + 1))
        L = random_psd(n_prev + n_v, rng)
        prev = list(range(n_prev))
        v = list(range(n_prev, n_prev + n_v))
        omega = condition_kernel(L, prev, v)
        if fault == "conditional-kernel":
            omega = omega + np.eye(n_v)
        norm = log_det(omega + np.eye(n_v))
        exact = oracles.conditional_probs(L, prev, v)
        for x, p in exact.items():
            got = np.exp(log_det(omega[np.ix_(x, x)]) - norm) if x else np.exp(-norm)
            dev = max(dev, abs(got - p))
    return CheckResult("conditional-kernel", dev, 1e-8, instances)


def check_gdpp_reductions(rng, instances=20, sizes=range(2, 9)) -> list[CheckResult]:
    """Uniform prior gives the DPP, a Dirac prior the k-DPP, prior scale is irrelevant."""
    sizes = list(sizes)
    d_uni = d_dirac = d_scale = 0.0
    for i in range(instances):
        n = sizes[i % len(sizes)]
        L = random_psd(n, rng)
        uni = GDPP(L, np.ones(n + 1))
        for y, p in oracles.dpp_probs(L).items():
            d_uni = max(d_uni, abs(np.exp(uni.log_prob(y)) - p))
        k = int(rng.integers(0, n + 1))
        dirac = GDPP(L, np.eye(n + 1)[k])
        for y, p in oracles.kdpp_probs(L, k).items():
            d_dirac = max(d_dirac, abs(np.exp(dirac.log_prob(y)) - p))
        pi = rng.random(n + 1)
        a, b = GDPP(L, pi), GDPP(L, pi * float(rng.uniform(0.1, 10.0)))
        for y in oracles.subsets(n):
            d_scale = max(d_scale, abs(np.exp(a.log_prob(y)) - np.exp(b.log_prob(y))))
    return [CheckResult("gdpp-uniform-prior", d_uni, 1e-10, instances),
            CheckResult("gdpp-dirac-prior", d_dirac, 1e-10, instances),
            CheckResult("gdpp-prior-scale", d_scale, 1e-12, instances)]


def check_gdpp_normalizer(rng, instances=20, sizes=range(2, 13),
                          fault: str | None = None) -> CheckResult:
    """``sum_k pi_k e_k`` against ``sum_y pi_|y| det(L_y)``, relative error."""
    sizes = list(sizes)
    dev = 0.0
    for i in range(instances):
        n = sizes[i % len(sizes)]
        L = random_psd(n, rng)
        pi = rng.random(n + 1)
        model = GDPP(L, pi)
        z = float(np.sum(model.esp)) if fault == "prior-normalization" else model.normalizer
        exact = oracles.gdpp_normalizer(L, pi)
        dev = max(dev, abs(z - exact) / abs(exact))
    return CheckResult("gdpp-normalizer", dev, 1e-8, instances)


def sampler_tv(model: GDPP, samples: int, rng_seed=None) -> tuple[float, float]:
    """Total-variation distance of sampled subsets and sampled sizes from exact."""
    draws = [tuple(sorted(y)) for y in model.sample_many(samples, rng_seed)]
    counts = Counter(draws)
    exact = oracles.gdpp_probs(model.L, model.prior)
    tv = 0.5 * sum(abs(counts.get(y, 0) / samples - p) for y, p in exact.items())
    size_counts = np.bincount([len(y) for y in draws], minlength=model.N + 1) / samples
    tv_size = 0.5 * float(np.abs(size_counts - model.mixture_weights).sum())
    return float(tv), tv_size


def check_sampler(rng, samples=50_000, n=6) -> list[CheckResult]:
    model = GDPP(random_psd(n, rng), rng.random(n + 1))
    tv, tv_size = sampler_tv(model, samples, rng)
    return [CheckResult("sampler-subset-tv", tv, 0.02, samples),
            CheckResult("sampler-size-tv", tv_size, 0.01, samples)]


def random_sequence(rng, T=2, n=6, d=3) -> SegmentedSequence:
    shots = [Shot(f"s{i:03d}", 5.0 * i, rng.normal(size=d), ()) for i in range(T * n)]
    return SegmentedSequence.from_shots(shots, n)


def random_params(rng, kind: str, d: int, D: int = 4) -> SeqParams:
    p = SeqParams.init(kind, d, D, alpha=float(rng.choice([0.01, 1.0, 10.0])),
                       M0=float(rng.integers(1, 6)))
    theta = rng.normal(size=p.unconstrained().size)
    return p.with_unconstrained(theta)


def check_step_normalization(rng, instances=20, max_n=12) -> CheckResult:
    """Per-segment conditionals of both model kinds sum to 1."""
    dev = 0.0
    for i in range(instances):
        n = int(rng.integers(1, max_n + 1))
        seq = random_sequence(rng, T=2, n=n)
        params = random_params(rng, ("seqgdpp", "seqdpp")[i % 2], seq.feature_dim)
        prev = tuple(sorted(rng.choice(n, size=int(rng.integers(0, n)), replace=False).tolist()))
        table = step_table(seq, 1, prev, params)
        scores = step_scores(params, table, 1, seq.T, len(prev), params.M0)
        dev = max(dev, abs(float(np.exp(scores).sum()) - 1.0))
    return CheckResult("sequential-step-normalization", dev, 1e-8, instances)


def run_checks(seed: int = 0, samples: int | None = None,
               fault: str | None = None) -> list[CheckResult]:
    """Default toy suite; ``samples`` adds the sampler checks."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {', '.join(FAULTS)}")
    rng = np.random.default_rng(seed)
    out = [check_normalization(rng, instances=22, sizes=range(2, 10)),
           check_conditionals(rng, instances=20, fault=fault),
           *check_gdpp_reductions(rng, instances=14),
           check_gdpp_normalizer(rng, instances=11, fault=fault),
           check_step_normalization(rng, instances=10, max_n=8)]
    if samples:
        out += check_sampler(rng, samples)
    return out


def report(results: list[CheckResult], seed: int) -> dict:
    return {"seed": seed, "passed": all(r.passed for r in results),
            "checks": [r.to_json() for r in results]}

