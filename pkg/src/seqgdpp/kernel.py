"""Dense L-ensemble kernel algebra.

Subset probabilities, normalizers, elementary symmetric polynomials,
conditional kernels and exact spectral samplers for DPPs and k-DPPs.
Kernels are plain ``numpy`` arrays; :class:`PSDKernel` only adds item ids
for serialization.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg

from .errors import (
    CardinalityError,
    ConditioningError,
    InvalidKernelError,
    UnsatisfiableSizeError,
)

SYMMETRY_TOL = 1e-8
EIGEN_CLAMP = 1e-8


@dataclass(frozen=True, eq=False)
class PSDKernel:
    """Symmetric PSD matrix with an identifier per row."""

    entries: np.ndarray
    item_ids: tuple = field(default=())

    def __post_init__(self):
        entries = check_psd(self.entries)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        ids = tuple(self.item_ids) or tuple(range(entries.shape[0]))
        if len(ids) != entries.shape[0]:
            raise InvalidKernelError(
                f"{len(ids)} item ids for a kernel of dim {entries.shape[0]}")
        object.__setattr__(self, "item_ids", ids)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def to_json(self) -> dict:
        return {"item_ids": list(self.item_ids),
                "entries": self.entries.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "PSDKernel":
        if "entries" not in obj:
            raise InvalidKernelError("kernel JSON is missing 'entries'")
        return cls(np.asarray(obj["entries"], dtype=np.float64),
                   tuple(obj.get("item_ids", ())))


def _as_square(L) -> np.ndarray:
    A = np.array(L, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidKernelError(f"kernel must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidKernelError("kernel has non-finite entries")
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    if np.abs(A - A.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise InvalidKernelError("kernel is not symmetric")
    return (A + A.T) / 2


def eig_psd(L) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a PSD kernel, eigenvalues in descending order.

    Eigenvalues in ``[-1e-8 * lambda_max, 0)`` are clamped to zero; anything
    more negative raises :class:`InvalidKernelError`.
    """
    A = _as_square(L)
    if A.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0))
    vals, vecs = np.linalg.eigh(A)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    tol = EIGEN_CLAMP * max(vals[0], 0.0) + 1e-14
    if vals[-1] < -tol:
        raise InvalidKernelError(
            f"kernel is not PSD: smallest eigenvalue {vals[-1]:.3e}")
    vals = np.where(vals < 0, 0.0, vals)
    return vals, np.ascontiguousarray(vecs)


def check_psd(L) -> np.ndarray:
    """Return a symmetrized float copy of ``L`` after validating it is PSD."""
    A = _as_square(L)
    eig_psd(A)
    return A


def as_subset(y: Iterable[int], n: int) -> np.ndarray:
    """Validate a subset of ``range(n)`` and return it as a sorted int array."""
    idx = np.asarray(sorted(int(i) for i in y), dtype=np.intp)
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise IndexError(f"subset {idx.tolist()} out of range for dim {n}")
    if np.any(np.diff(idx) == 0):
        raise ValueError(f"subset {idx.tolist()} has duplicates")
    return idx


def log_det(A: np.ndarray) -> float:
    """Log-determinant of a PSD matrix; ``-inf`` when singular.

    Cholesky first; LU (``slogdet``) when the matrix is only semi-definite.
    """
    if A.shape[0] == 0:
        return 0.0
    try:
        c = np.linalg.cholesky(A)
        d = np.diag(c)
        if np.all(d > 0):
            return float(2.0 * np.log(d).sum())
    except np.linalg.LinAlgError:
        pass
    sign, value = np.linalg.slogdet(A)
    return float(value) if sign > 0 else -np.inf


def log_prob_ensemble(L, y: Sequence[int]) -> float:
    """log P(Y = y) under the L-ensemble DPP, ``log det(L_y) - log det(L + I)``.

    Singular submatrices give ``-inf``.
    """
    A = check_psd(L)
    idx = as_subset(y, A.shape[0])
    num = log_det(A[np.ix_(idx, idx)])
    return num - log_det(A + np.eye(A.shape[0]))


def marginal_kernel(L) -> np.ndarray:
    """Marginal kernel ``K = L (L + I)^-1`` of an L-ensemble."""
    vals, vecs = eig_psd(L)
    K = (vecs * (vals / (1.0 + vals))) @ vecs.T
    return (K + K.T) / 2


def elementary_symmetric(lam: Sequence[float], up_to: int | None = None) -> np.ndarray:
    """``[e_0, ..., e_up_to]`` of the values in ``lam``.

    Uses the O(N * up_to) recursion e_k(n) = e_k(n-1) + lam_n e_{k-1}(n-1).
    """
    lam = np.asarray(lam, dtype=np.float64).ravel()
    if up_to is None:
        up_to = lam.size
    if up_to < 0 or up_to > lam.size:
        raise CardinalityError(f"up_to={up_to} outside [0, {lam.size}]")
    e = np.zeros(up_to + 1)
    e[0] = 1.0
    for x in lam:
        e[1:] = e[1:] + x * e[:-1]
    return e


def esp_table(lam: Sequence[float], up_to: int) -> np.ndarray:
    """Table ``E[n, k] = e_k(lam[:n])`` for n = 0..N, k = 0..up_to."""
    lam = np.asarray(lam, dtype=np.float64)
    E = np.zeros((lam.size + 1, up_to + 1))
    E[0, 0] = 1.0
    for n, x in enumerate(lam, start=1):
        E[n] = E[n - 1]
        E[n, 1:] += x * E[n - 1, :-1]
    return E


def condition_kernel(L_t, x_prev: Sequence[int], v_t: Sequence[int],
                     segment=None) -> np.ndarray:
    """Kernel over ``v_t`` of the DPP conditioned on ``x_prev`` being selected.

    ``Omega = ([(L_t + I_V)^-1]_V)^-1 - I`` where ``I_V`` is the identity with
    zeros on the ``x_prev`` diagonal. ``segment`` is only used in the error
    message.
    """
    A = check_psd(L_t)
    n = A.shape[0]
    prev = as_subset(x_prev, n)
    v = as_subset(v_t, n)
    if prev.size + v.size != n or np.intersect1d(prev, v).size:
        raise ValueError("x_prev and v_t must disjointly cover the kernel")
    if prev.size == 0:
        return A[np.ix_(v, v)].copy()
    M = A.copy()
    M[v, v] += 1.0
    where = f" at segment {segment}" if segment is not None else ""
    try:
        cf = linalg.cho_factor(M, lower=True)
    except linalg.LinAlgError:
        raise ConditioningError(f"L + I_V is singular{where}") from None
    d = np.abs(np.diag(cf[0]))
    if d.min() <= 1e-12 * d.max():
        raise ConditioningError(f"L + I_V is singular{where}")
    inv_vv = linalg.cho_solve(cf, np.eye(n))[np.ix_(v, v)]
    inv_vv = (inv_vv + inv_vv.T) / 2
    omega = linalg.inv(inv_vv) - np.eye(v.size)
    return (omega + omega.T) / 2


def _project_and_pick(vecs: np.ndarray, rng: np.random.Generator) -> list[int]:
    V = vecs.copy()
    picked = []
    while V.shape[1] > 0:
        p = np.maximum((V ** 2).sum(axis=1), 0.0)
        p[picked] = 0.0
        i = int(rng.choice(V.shape[0], p=p / p.sum()))
        picked.append(i)
        j = int(np.argmax(np.abs(V[i])))
        vj = V[:, j]
        V = np.delete(V, j, axis=1)
        V = V - np.outer(vj, V[i] / vj[i])
        if V.shape[1]:
            V, _ = np.linalg.qr(V)
    return sorted(picked)


def sample_dpp(L, rng_seed=None) -> list[int]:
    """Exact spectral sample from the L-ensemble DPP."""
    rng = np.random.default_rng(rng_seed)
    vals, vecs = eig_psd(L)
    keep = rng.random(vals.size) < vals / (1.0 + vals)
    return _project_and_pick(vecs[:, keep], rng)


def _select_eigvecs(vals: np.ndarray, k: int, E: np.ndarray,
                    rng: np.random.Generator) -> list[int]:
    chosen = []
    left = k
    for n in range(vals.size, 0, -1):
        if left == 0:
            break
        if n == left:
            marg = 1.0
        else:
            marg = vals[n - 1] * E[n - 1, left - 1] / E[n, left]
        if rng.random() < marg:
            chosen.append(n - 1)
            left -= 1
    return chosen


def sample_kdpp_eig(vals: np.ndarray, vecs: np.ndarray, k: int,
                    rng: np.random.Generator, E: np.ndarray | None = None) -> list[int]:
    """k-DPP sample from a precomputed eigendecomposition."""
    N = vals.size
    if k < 0 or k > N:
        raise CardinalityError(f"k={k} outside [0, {N}]")
    if E is None:
        E = esp_table(vals, k)
    if not E[N, k] > 0:
        raise UnsatisfiableSizeError(f"e_{k}(lambda) = 0; no subset of size {k}")
    return _project_and_pick(vecs[:, _select_eigvecs(vals, k, E, rng)], rng)


def sample_kdpp(L, k: int, rng_seed=None) -> list[int]:
    """Exact sample of size exactly ``k`` from the k-DPP with kernel ``L``."""
    rng = np.random.default_rng(rng_seed)
    vals, vecs = eig_psd(L)
    return sample_kdpp_eig(vals, vecs, k, rng)


def all_subsets(n: int) -> list[tuple[int, ...]]:
    """Every subset of ``range(n)``, by size and then lexicographically."""
    return [c for k in range(n + 1) for c in combinations(range(n), k)]
