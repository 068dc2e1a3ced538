"""Enumeration oracles for desk-scale verification.

Everything here works from raw determinants over explicitly enumerated
subsets and shares no code with the spectral / log-domain paths it checks.
Cost is exponential; keep ground sets at 12 items or fewer.
"""
from itertools import combinations, permutations

import numpy as np


def subsets(n):
    for k in range(n + 1):
        yield from combinations(range(n), k)


def det_sub(L, y):
    y = list(y)
    if not y:
        return 1.0
    return float(np.linalg.det(np.asarray(L)[np.ix_(y, y)]))


def dpp_probs(L):
    """{subset: det(L_y) / sum_z det(L_z)} by enumeration."""
    w = {y: det_sub(L, y) for y in subsets(len(L))}
    z = sum(w.values())
    return {y: v / z for y, v in w.items()}


def inclusion_probs(L, y):
    """P(y subset of Y) summed over supersets."""
    y = set(y)
    return sum(p for z, p in dpp_probs(L).items() if y <= set(z))


def esp(lam, up_to=None):
    lam = list(lam)
    up_to = len(lam) if up_to is None else up_to
    return [sum(float(np.prod([lam[i] for i in c])) for c in combinations(range(len(lam)), k))
            for k in range(up_to + 1)]


def conditional_probs(L, prev, v):
    """P(Y = x + prev | prev subset of Y) for every x subset of v.

    Keys are tuples of positions within ``v``.
    """
    prev, v = list(prev), list(v)
    w = {}
    for x in subsets(len(v)):
        w[x] = det_sub(L, sorted(prev + [v[i] for i in x]))
    z = sum(w.values())
    return {x: val / z for x, val in w.items()}


def gdpp_probs(L, prior):
    w = {y: prior[len(y)] * det_sub(L, y) for y in subsets(len(L))}
    z = sum(w.values())
    return {y: val / z for y, val in w.items()}


def gdpp_normalizer(L, prior):
    return sum(prior[len(y)] * det_sub(L, y) for y in subsets(len(L)))


def kdpp_probs(L, k):
    w = {y: det_sub(L, y) for y in combinations(range(len(L)), k)}
    z = sum(w.values())
    return {y: val / z for y, val in w.items()}


def max_matching_weight(W):
    """Best total weight over all partial injections rows -> columns."""
    W = np.asarray(W, dtype=float)
    r, c = W.shape
    if r > c:
        W, r, c = W.T, c, r
    best = 0.0
    # A full injection of the smaller side dominates any partial one since
    # weights are nonnegative (dropping an edge never helps).
    for cols in permutations(range(c), r):
        best = max(best, sum(W[i, j] for i, j in enumerate(cols)))
    return best


def set_f1(a, b):
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    hit = len(a & b)
    if hit == 0:
        return 0.0
    p, r = hit / len(a), hit / len(b)
    return 2 * p * r / (p + r)
