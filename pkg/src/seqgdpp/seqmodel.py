"""Sequential DPP models over segmented videos.

Both models condition segment ``t`` on the shots picked from segment
``t - 1`` through conditioned RBF base kernels ``Omega^(i)``, one per
bandwidth ``1.2**k * sigma0``.

* ``seqdpp``: a single conditional DPP with kernel
  ``exp(log_scale) * sum_i beta_i Omega^(i)``.
* ``seqgdpp``: a mixture over sizes, ``p_k * sum_i beta_i P_k(x; Omega^(i))``,
  where ``p_k`` is a discretized Gaussian around a mean that spreads the
  remaining length budget ``M0`` over the remaining segments and is shifted
  by ``w . phi(segment)``.

Time steps ``t`` are 0-based throughout.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import DegenerateFeaturesError, SegmentTooLargeError
from .kernel import condition_kernel, elementary_symmetric
from .sequence import SegmentedSequence, Selection

KINDS = ("seqdpp", "seqgdpp")
DEFAULT_EXPONENTS = tuple(range(-4, 6))
BANDWIDTH_RATIO = 1.2
# Diagonal jitter on every base kernel; keeps duplicated shots from making
# L + I_V singular and k-DPP normalizers vanish.
DEFAULT_NUGGET = 1e-6
MAX_SEGMENT = 12
TIE_TOL = 1e-9


def ladder(D: int) -> tuple[int, ...]:
    """``D`` consecutive bandwidth exponents centred on zero (10 -> -4..5)."""
    start = -((D - 1) // 2)
    return tuple(range(start, start + D))


@dataclass
class SeqParams:
    kind: str
    beta: np.ndarray
    w: np.ndarray
    alpha: float = 1.0
    M0: int | None = None
    bandwidth_exponents: tuple = DEFAULT_EXPONENTS
    log_scale: float = 0.0
    nugget: float = DEFAULT_NUGGET
    training: str = "mle"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        self.beta = np.asarray(self.beta, dtype=np.float64).ravel()
        self.w = np.asarray(self.w, dtype=np.float64).ravel()
        self.bandwidth_exponents = tuple(float(e) for e in self.bandwidth_exponents)
        if self.beta.size != len(self.bandwidth_exponents):
            raise ValueError("one beta weight per bandwidth is required")
        if np.any(self.beta < 0) or abs(self.beta.sum() - 1) > 1e-10:
            raise ValueError("beta must lie on the simplex")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @classmethod
    def init(cls, kind: str, feature_dim: int, D: int = 10, **kw) -> "SeqParams":
        return cls(kind, np.full(D, 1.0 / D), np.zeros(feature_dim),
                   bandwidth_exponents=kw.pop("bandwidth_exponents", ladder(D)), **kw)

    @property
    def feature_dim(self) -> int:
        return self.w.size

    @property
    def D(self) -> int:
        return self.beta.size

    def unconstrained(self) -> np.ndarray:
        """Vector optimized by the trainers: beta logits, then w or log_scale."""
        logits = np.log(np.maximum(self.beta, 1e-300))
        logits -= logits.mean()
        tail = self.w if self.kind == "seqgdpp" else [self.log_scale]
        return np.concatenate([logits, tail])

    def with_unconstrained(self, theta: np.ndarray) -> "SeqParams":
        theta = np.asarray(theta, dtype=np.float64)
        logits = theta[:self.D]
        beta = np.exp(logits - _lse(logits))
        beta /= beta.sum()
        if self.kind == "seqgdpp":
            return replace(self, beta=beta, w=theta[self.D:].copy())
        return replace(self, beta=beta, log_scale=float(theta[self.D]))

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "beta": self.beta.tolist(),
            "w": self.w.tolist(),
            "alpha": self.alpha,
            "M0": self.M0,
            "bandwidth_exponents": list(self.bandwidth_exponents),
            "feature_dim": self.feature_dim,
            "log_scale": self.log_scale,
            "nugget": self.nugget,
            "training": self.training,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SeqParams":
        w = obj.get("w") or [0.0] * int(obj["feature_dim"])
        if len(w) != int(obj["feature_dim"]):
            raise ValueError("len(w) does not match feature_dim")
        return cls(obj["kind"], obj["beta"], w, alpha=obj["alpha"], M0=obj.get("M0"),
                   bandwidth_exponents=obj["bandwidth_exponents"],
                   log_scale=obj.get("log_scale", 0.0),
                   nugget=obj.get("nugget", DEFAULT_NUGGET),
                   training=obj.get("training", "mle"))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SeqParams":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


# --- base kernels -----------------------------------------------------------

def rbf_kernel(X: np.ndarray, sigma: float) -> np.ndarray:
    sq = (X ** 2).sum(1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2 * X @ X.T, 0.0)
    np.fill_diagonal(d2, 0.0)
    return np.exp(-d2 / (2 * sigma ** 2))


def build_base_kernels(seq: SegmentedSequence, x_prev: Sequence[int], t: int,
                       D: int | None = None, exponents: Sequence[float] | None = None,
                       nugget: float = DEFAULT_NUGGET) -> np.ndarray:
    """Conditioned RBF kernels ``Omega^(i)`` over segment ``t``, shape (D, n, n).

    Each ``L^(i)`` is built over ``x_prev`` (positions in segment ``t - 1``)
    followed by the shots of segment ``t`` and conditioned on ``x_prev``.
    """
    if exponents is None:
        exponents = ladder(10 if D is None else D)
    elif D is not None and D != len(exponents):
        raise ValueError("D disagrees with the number of exponents")
    if not 0 <= t < seq.T:
        raise IndexError(f"segment {t} out of range")
    x_prev = tuple(x_prev)
    if t == 0 and x_prev:
        raise ValueError("first segment has no predecessor")
    sigma0 = seq.median_distance()
    if not sigma0 > 0:
        raise DegenerateFeaturesError(
            "median pairwise shot distance is zero; cannot set RBF bandwidth")
    rows = (seq.global_index(t - 1, x_prev) if x_prev else []) + \
        list(range(seq.offsets[t], seq.offsets[t + 1]))
    X = seq.features[rows]
    p = len(x_prev)
    out = []
    for e in exponents:
        L = rbf_kernel(X, BANDWIDTH_RATIO ** e * sigma0)
        L[np.diag_indices_from(L)] += nugget
        out.append(condition_kernel(L, range(p), range(p, len(rows)), segment=t))
    return np.stack(out)


def segment_feature(features: np.ndarray) -> np.ndarray:
    """Per-dimension population standard deviation of the shot features."""
    return np.asarray(features, dtype=np.float64).std(axis=0)


# --- size distribution ------------------------------------------------------

def _mu_raw(params: SeqParams, t: int, T: int, selected_so_far: int,
            phi: np.ndarray, M0: float) -> float:
    return (M0 - selected_so_far) / (T - t) + float(params.w @ phi)


def mu_t(params: SeqParams, t: int, T: int, selected_so_far: int,
         segment_features: np.ndarray, M0: float | None = None) -> float:
    """Expected number of picks from segment ``t`` (0-based), clipped to [0, n]."""
    M0 = params.M0 if M0 is None else M0
    if M0 is None:
        raise ValueError("an expected summary length M0 is required")
    n = len(segment_features)
    raw = _mu_raw(params, t, T, selected_so_far, segment_feature(segment_features), M0)
    return float(np.clip(raw, 0, n))


def _lse(a, axis=None):
    # scipy.special.logsumexp carries per-call overhead that dominates on
    # the tiny arrays used here
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return out.item() if axis is None else np.squeeze(out, axis=axis)


def log_size_distribution(alpha: float, mu: float, n: int) -> np.ndarray:
    k = np.arange(n + 1)
    a = -alpha * (k - mu) ** 2
    return a - _lse(a)


def size_distribution(alpha: float, mu: float, n: int) -> np.ndarray:
    """``p_k`` proportional to ``exp(-alpha (k - mu)^2)`` over k = 0..n."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return np.exp(log_size_distribution(alpha, mu, n))


# --- per-step tables --------------------------------------------------------

_SUBSETS: dict[int, tuple] = {}


def _subsets(n: int):
    """Subsets of range(n) by size then lexicographically, with index arrays."""
    if n not in _SUBSETS:
        by_size = [np.array(list(combinations(range(n), k)), dtype=np.intp).reshape(-1, k)
                   if k else np.zeros((1, 0), dtype=np.intp) for k in range(n + 1)]
        flat = [tuple(r) for b in by_size for r in b.tolist()]
        sizes = np.concatenate([np.full(len(b), k) for k, b in enumerate(by_size)])
        _SUBSETS[n] = (flat, {s: i for i, s in enumerate(flat)}, sizes, by_size)
    return _SUBSETS[n]


def batched_logdet(M: np.ndarray, by_size) -> np.ndarray:
    """log det of every principal submatrix listed in ``by_size``.

    ``M`` has shape (..., n, n); the result has shape (..., n_subsets).
    """
    lead = M.shape[:-2]
    out = []
    for k, idx in enumerate(by_size):
        if k == 0:
            out.append(np.zeros(lead + (1,)))
            continue
        sub = M[..., idx[:, :, None], idx[:, None, :]]
        sign, ld = np.linalg.slogdet(sub)
        out.append(np.where(sign > 0, ld, -np.inf))
    return np.concatenate(out, axis=-1)


@dataclass
class StepTable:
    """Model-independent quantities for one segment given its conditioning set."""
    omegas: np.ndarray          # (D, n, n)
    phi: np.ndarray             # (d,)
    subsets: list
    index: dict
    sizes: np.ndarray           # (S,)
    logdet: np.ndarray          # (D, S)
    log_esp: np.ndarray         # (D, n + 1)
    by_size: list = field(repr=False)

    @property
    def n(self) -> int:
        return self.omegas.shape[1]


def step_table(seq: SegmentedSequence, t: int, x_prev: Sequence[int],
               params: SeqParams) -> StepTable:
    n = len(seq.segments[t])
    if n > MAX_SEGMENT:
        raise SegmentTooLargeError(
            f"segment {t} has {n} shots (cap {MAX_SEGMENT}); re-segment the video")
    key = ("step", t, tuple(x_prev), params.bandwidth_exponents, params.nugget)
    cache = seq._cache
    if key not in cache:
        omegas = build_base_kernels(seq, x_prev, t, exponents=params.bandwidth_exponents,
                                    nugget=params.nugget)
        flat, index, sizes, by_size = _subsets(n)
        with np.errstate(divide="ignore"):
            log_esp = np.stack([
                np.log(np.maximum(elementary_symmetric(
                    np.clip(np.linalg.eigvalsh(O), 0, None)), 0.0))
                for O in omegas])
        cache[key] = StepTable(omegas, segment_feature(seq.segment_features(t)),
                               flat, index, sizes, batched_logdet(omegas, by_size),
                               log_esp, by_size)
    return cache[key]


# --- step scores and gradients ----------------------------------------------

def _resolve_M0(params, M0, fallback=None):
    if M0 is not None:
        return M0
    if params.M0 is not None:
        return params.M0
    if fallback is not None:
        return fallback
    raise ValueError("an expected summary length M0 is required for seqgdpp")


def _size_terms(params, table, t, T, selected_so_far, M0):
    raw = _mu_raw(params, t, T, selected_so_far, table.phi, M0)
    mu = float(np.clip(raw, 0, table.n))
    return mu, raw, log_size_distribution(params.alpha, mu, table.n)


def step_scores(params: SeqParams, table: StepTable, t: int, T: int,
                selected_so_far: int = 0, M0: float | None = None) -> np.ndarray:
    """log P(X_t = x | x_prev) for every subset in ``table.subsets``."""
    if params.kind == "seqgdpp":
        _, _, log_p = _size_terms(params, table, t, T, selected_so_far, M0)
        with np.errstate(divide="ignore"):
            comp = np.log(params.beta)[:, None] + table.logdet - table.log_esp[:, table.sizes]
        return log_p[table.sizes] + _lse(comp, axis=0)
    S = np.exp(params.log_scale) * np.tensordot(params.beta, table.omegas, axes=1)
    norm = np.linalg.slogdet(S + np.eye(table.n))[1]
    return batched_logdet(S, table.by_size) - norm


def step_log_prob_grad(params: SeqParams, table: StepTable, x: tuple, t: int, T: int,
                       selected_so_far: int = 0, M0: float | None = None):
    """(log P(X_t = x | x_prev), gradient w.r.t. ``params.unconstrained()``)."""
    x = tuple(x)
    j = table.index[x]
    k = len(x)
    beta = params.beta
    if params.kind == "seqgdpp":
        mu, raw, log_p = _size_terms(params, table, t, T, selected_so_far, M0)
        with np.errstate(divide="ignore"):
            c = np.log(beta) + table.logdet[:, j] - table.log_esp[:, k]
        mix = _lse(c)
        value = log_p[k] + mix
        resp = np.exp(c - mix)
        g_logits = resp - beta
        expected_k = np.exp(log_p) @ np.arange(table.n + 1)
        dmu = 2 * params.alpha * (k - expected_k)
        inside = 0 < raw < table.n
        g_w = dmu * table.phi if inside else np.zeros_like(params.w)
        return float(value), np.concatenate([g_logits, g_w])
    s = np.exp(params.log_scale)
    S = np.tensordot(beta, table.omegas, axes=1)
    B = s * S + np.eye(table.n)
    Binv = np.linalg.inv(B)
    value = -np.linalg.slogdet(B)[1]
    g_beta = -s * np.einsum("ab,iab->i", Binv, table.omegas)
    g_rho = -np.sum(Binv * (s * S))
    if k:
        idx = list(x)
        Sx = S[np.ix_(idx, idx)]
        sign, ld = np.linalg.slogdet(Sx)
        if sign <= 0:
            return -np.inf, np.zeros(params.D + 1)
        value += k * params.log_scale + ld
        Sx_inv = np.linalg.inv(Sx)
        g_beta += np.einsum("ab,iab->i", Sx_inv, table.omegas[:, idx][:, :, idx])
        g_rho += k
    g_logits = beta * (g_beta - beta @ g_beta)
    return float(value), np.concatenate([g_logits, [g_rho]])


def argmax_subset(scores: np.ndarray) -> int:
    """First subset (size-major, lexicographic) within ``TIE_TOL`` of the max."""
    best = np.max(scores)
    return int(np.flatnonzero(scores >= best - TIE_TOL)[0])


# --- public model API -------------------------------------------------------

def seqgdpp_conditional_log_prob(params: SeqParams, seq: SegmentedSequence, t: int,
                                 x_prev: Sequence[int], x_t: Sequence[int],
                                 selected_so_far: int = 0, M0: float | None = None) -> float:
    """log P(X_t = x_t | x_prev) under either model kind."""
    table = step_table(seq, t, x_prev, params)
    if params.kind == "seqgdpp":
        M0 = _resolve_M0(params, M0)
    scores = step_scores(params, table, t, seq.T, selected_so_far, M0)
    return float(scores[table.index[tuple(sorted(x_t))]])


def log_likelihood(params: SeqParams, seq: SegmentedSequence, oracle: Selection,
                   M0: float | None = None, grad: bool = False):
    """Teacher-forced log-likelihood of ``oracle``; with ``grad`` also its gradient.

    For ``seqgdpp`` the length budget defaults to ``params.M0`` and then to
    the oracle's own length.
    """
    seq.check_selection(oracle)
    M0 = _resolve_M0(params, M0, fallback=sum(len(x) for x in oracle))
    total, g = 0.0, np.zeros_like(params.unconstrained())
    selected = 0
    for t in range(seq.T):
        prev = oracle[t - 1] if t else ()
        table = step_table(seq, t, prev, params)
        if grad:
            v, gt = step_log_prob_grad(params, table, oracle[t], t, seq.T, selected, M0)
            g += gt
        else:
            v = step_scores(params, table, t, seq.T, selected, M0)[table.index[oracle[t]]]
        total += v
        selected += len(oracle[t])
    return (float(total), g) if grad else float(total)


def seqgdpp_log_likelihood(params, seq, oracle, M0=None) -> float:
    if params.kind != "seqgdpp":
        raise ValueError("params are not a seqgdpp model")
    return log_likelihood(params, seq, oracle, M0)


def seqdpp_log_likelihood(params, seq, oracle) -> float:
    if params.kind != "seqdpp":
        raise ValueError("params are not a seqdpp model")
    return log_likelihood(params, seq, oracle)


def greedy_infer(params: SeqParams, seq: SegmentedSequence, M0: float | None = None):
    """Online argmax decoding, each step conditioned on the previous pick.

    Returns ``(selection, per_step_log_prob)``.
    """
    if params.kind == "seqgdpp":
        M0 = _resolve_M0(params, M0)
    picks, logps = [], []
    selected = 0
    for t in range(seq.T):
        table = step_table(seq, t, picks[-1] if picks else (), params)
        scores = step_scores(params, table, t, seq.T, selected, M0)
        j = argmax_subset(scores)
        picks.append(table.subsets[j])
        logps.append(float(scores[j]))
        selected += len(table.subsets[j])
    return tuple(picks), logps


def sample_sequence(params: SeqParams, seq: SegmentedSequence, M0: float | None = None,
                    rng_seed=None):
    """Ancestral sample: each segment drawn exactly from its conditional.

    Returns ``(selection, per_step_log_prob)`` like :func:`greedy_infer`.
    """
    rng = np.random.default_rng(rng_seed)
    if params.kind == "seqgdpp":
        M0 = _resolve_M0(params, M0)
    picks, logps = [], []
    selected = 0
    for t in range(seq.T):
        table = step_table(seq, t, picks[-1] if picks else (), params)
        scores = step_scores(params, table, t, seq.T, selected, M0)
        p = np.exp(scores - _lse(scores))
        j = int(rng.choice(p.size, p=p / p.sum()))
        picks.append(table.subsets[j])
        logps.append(float(scores[j]))
        selected += len(table.subsets[j])
    return tuple(picks), logps
