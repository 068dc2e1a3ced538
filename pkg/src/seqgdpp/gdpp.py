"""Generalized DPP: an L-ensemble reweighted by a prior over subset sizes.

``P(Y = y) = pi_|y| det(L_y) / Z`` with ``Z = sum_k pi_k e_k(lambda)``. A
uniform prior recovers the vanilla DPP, a Dirac prior the k-DPP. The model
is also a mixture of k-DPPs with weights ``p_k = pi_k e_k / Z``, which gives
exact two-phase sampling.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DegenerateModelError
from .kernel import as_subset, check_psd, eig_psd, esp_table, log_det, sample_kdpp_eig

TINY_WEIGHT = 1e-300


def check_prior(prior, n: int) -> np.ndarray:
    pi = np.array(prior, dtype=np.float64).ravel()
    if pi.size != n + 1:
        raise ValueError(f"size prior needs {n + 1} weights, got {pi.size}")
    if not np.all(np.isfinite(pi)) or np.any(pi < 0):
        raise ValueError("size prior weights must be finite and nonnegative")
    if not pi.sum() > 0:
        raise ValueError("size prior weights are all zero")
    return pi


def bounded_cardinality_prior(N: int, k1: int, k2: int) -> np.ndarray:
    """Indicator prior on sizes ``k1..k2`` (inclusive)."""
    if not 0 <= k1 <= k2 <= N:
        raise ValueError(f"need 0 <= k1 <= k2 <= N, got k1={k1}, k2={k2}, N={N}")
    pi = np.zeros(N + 1)
    pi[k1:k2 + 1] = 1.0
    return pi


class GDPP:
    """Immutable GDPP with cached spectrum, normalizer and mixture weights.

    Parameters
    ----------
    L : array_like
        PSD L-ensemble kernel (N x N).
    prior : array_like
        Nonnegative size weights for k = 0..N, unnormalized is fine.
    """

    def __init__(self, L, prior):
        self.L = check_psd(L)
        self.N = self.L.shape[0]
        self.prior = check_prior(prior, self.N)
        self.eigenvalues, self.eigenvectors = eig_psd(self.L)
        self._esp_table = esp_table(self.eigenvalues, self.N)
        self.esp = self._esp_table[self.N].copy()
        self.normalizer = float(self.prior @ self.esp)
        if not self.normalizer > 0:
            raise DegenerateModelError(
                "prior has no mass on sizes reachable by the kernel (Z_G = 0)")
        p = self.prior * self.esp / self.normalizer
        p[p < TINY_WEIGHT] = 0.0
        self.mixture_weights = p / p.sum()
        for a in (self.L, self.prior, self.eigenvalues, self.eigenvectors,
                  self._esp_table, self.esp, self.mixture_weights):
            a.setflags(write=False)

    def log_prob(self, y: Sequence[int]) -> float:
        idx = as_subset(y, self.N)
        pi = self.prior[idx.size]
        if pi == 0:
            return -np.inf
        return float(np.log(pi) + log_det(self.L[np.ix_(idx, idx)])
                     - np.log(self.normalizer))

    def sample(self, rng_seed=None) -> list[int]:
        rng = np.random.default_rng(rng_seed)
        return self._sample(rng)

    def sample_many(self, n: int, rng_seed=None) -> list[list[int]]:
        rng = np.random.default_rng(rng_seed)
        return [self._sample(rng) for _ in range(n)]

    def _sample(self, rng: np.random.Generator) -> list[int]:
        k = int(rng.choice(self.N + 1, p=self.mixture_weights))
        return sample_kdpp_eig(self.eigenvalues, self.eigenvectors, k, rng,
                               self._esp_table)


def gdpp_normalizer(L, prior) -> float:
    return GDPP(L, prior).normalizer


def gdpp_log_prob(model: GDPP, y: Sequence[int]) -> float:
    return model.log_prob(y)


def mixture_weights(model: GDPP) -> np.ndarray:
    return model.mixture_weights


def sample_gdpp(model: GDPP, rng_seed=None) -> list[int]:
    return model.sample(rng_seed)
