"""Temporally filtered bipartite-matching F1 for comparing summaries.

Two shots are compared by the IoU of their concept tags. That similarity is
attenuated by their time gap (hard window or Gaussian). The summaries are
then matched by maximum-weight bipartite matching, and precision and recall
are the matched weight divided by each summary's length.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import linear_sum_assignment

from .sequence import Shot

HORIZON_S = 60.0
DEFAULT_GRID = tuple(float(s) for s in range(5, 65, 5))


class FilterKind(str, enum.Enum):
    PI = "pi"
    GAUSSIAN = "gaussian"
    NONE = "none"


@dataclass(frozen=True)
class TemporalFilter:
    kind: FilterKind = FilterKind.NONE
    param: float | None = None

    def __post_init__(self):
        kind = FilterKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is not FilterKind.NONE and not (self.param is not None and self.param > 0):
            raise ValueError(f"{kind.value} filter needs a positive parameter")


NO_FILTER = TemporalFilter()


def iou_similarity(tags_a, tags_b) -> float:
    """|A & B| / |A | B|; two empty tag sets score 0."""
    a, b = set(tags_a), set(tags_b)
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def _attenuate(sim, dt, kind: FilterKind, param):
    if kind is FilterKind.NONE:
        return sim
    if kind is FilterKind.PI:
        return np.where(dt <= param, sim, 0.0)
    if param == 0:
        return np.where(dt == 0, sim, 0.0)
    return sim * np.exp(-dt ** 2 / (2.0 * param ** 2))


def filtered_similarity(sim: float, dt: float, filt: TemporalFilter) -> float:
    return float(_attenuate(np.float64(sim), np.float64(abs(dt)), filt.kind, filt.param))


def similarity_matrix(system: Sequence[Shot], user: Sequence[Shot],
                      filt: TemporalFilter = NO_FILTER) -> np.ndarray:
    return _weights(system, user, filt.kind, filt.param)


def _weights(system, user, kind, param):
    sim = np.array([[iou_similarity(s.tags, u.tags) for u in user] for s in system],
                   dtype=np.float64).reshape(len(system), len(user))
    dt = np.abs(np.subtract.outer([s.time_s for s in system],
                                  [u.time_s for u in user])).reshape(sim.shape)
    return _attenuate(sim, dt, kind, param)


@dataclass
class MatchResult:
    precision: float
    recall: float
    f1: float
    matching: list = field(default_factory=list)   # (system_pos, user_pos, weight)
    degenerate: bool = False


def match_weights(W: np.ndarray) -> tuple[float, list]:
    """Maximum-weight bipartite matching on a nonnegative weight matrix."""
    if W.size == 0:
        return 0.0, []
    rows, cols = linear_sum_assignment(W, maximize=True)
    pairs = [(int(i), int(j), float(W[i, j])) for i, j in zip(rows, cols) if W[i, j] > 0]
    return float(sum(p[2] for p in pairs)), pairs


def _prf(total, n_sys, n_user, pairs=()):
    if n_sys == 0 and n_user == 0:
        return MatchResult(1.0, 1.0, 1.0, [], degenerate=True)
    p = total / n_sys if n_sys else 0.0
    r = total / n_user if n_user else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return MatchResult(p, r, f1, list(pairs))


def match_f1(system: Sequence[Shot], user: Sequence[Shot],
             filt: TemporalFilter = NO_FILTER) -> MatchResult:
    """Precision, recall and F1 of ``system`` against one ``user`` summary."""
    total, pairs = match_weights(similarity_matrix(system, user, filt))
    return _prf(total, len(system), len(user), pairs)


def _f1_raw(system, user, kind, param):
    total, _ = match_weights(_weights(system, user, kind, param))
    return _prf(total, len(system), len(user)).f1


@dataclass
class EvalCurve:
    kind: FilterKind
    grid: np.ndarray
    f1_values: np.ndarray        # mean over users, per grid point
    per_user: np.ndarray         # (n_users, n_grid)
    auc: float                   # area / integrated span
    area: float
    f1_unfiltered: float


def curve_area(grid, values, f1_at_zero, horizon=HORIZON_S):
    """Trapezoidal area from 0 to ``horizon`` and the span it covers."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = grid <= horizon
    x = np.concatenate([[0.0], grid[keep]]) if grid[0] > 0 else grid[keep]
    y = np.concatenate([[f1_at_zero], values[keep]]) if grid[0] > 0 else values[keep]
    if x.size < 2:
        return 0.0, 0.0
    return float(trapezoid(y, x)), float(x[-1] - x[0])


def evaluate_summary(system: Sequence[Shot], users: Sequence[Sequence[Shot]],
                     grid: Sequence[float] = DEFAULT_GRID,
                     kind: FilterKind | str = FilterKind.PI,
                     horizon: float = HORIZON_S) -> EvalCurve:
    """User-averaged F1 across a sweep of filter parameters, plus its AUC.

    The curve is anchored at parameter 0 with the zero-width limit of the
    filter (only simultaneous shots match) and integrated up to ``horizon``.
    """
    kind = FilterKind(kind)
    if kind is FilterKind.NONE:
        raise ValueError("sweep needs a PI or GAUSSIAN filter")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty filter grid")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be positive and strictly increasing")
    if not users:
        raise ValueError("at least one user summary is required")
    per_user = np.array([[_f1_raw(system, u, kind, g) for g in grid] for u in users])
    mean = per_user.mean(axis=0)
    at_zero = float(np.mean([_f1_raw(system, u, FilterKind.PI, 0.0) for u in users]))
    unfiltered = float(np.mean([_f1_raw(system, u, FilterKind.NONE, None) for u in users]))
    area, span = curve_area(grid, mean, at_zero, horizon)
    return EvalCurve(kind, grid, mean, per_user, area / span if span else 0.0,
                     area, unfiltered)


def identity_f1(a, b) -> float:
    """F1 between two collections of shot ids; 1 when both are empty."""
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    hit = len(a & b)
    return 2.0 * hit / (len(a) + len(b))


def _id_key(shot):
    return (type(shot.id).__name__, shot.id)


def aggregate_oracle(users: Sequence[Sequence[Shot]], metric: str = "iou",
                     f1: Callable | None = None) -> list[Shot]:
    """Greedy oracle: add the shot that most raises the mean F1 against users.

    Candidates are the union of the user summaries. Stops when no single
    addition improves the mean. Ties go to the lowest shot id. ``metric`` is
    ``"iou"`` (unfiltered matching F1) or ``"identity"`` (shot-id F1).
    """
    if not users:
        raise ValueError("at least one user summary is required")
    if f1 is None:
        if metric == "iou":
            f1 = lambda sys, u: _f1_raw(sys, u, FilterKind.NONE, None)  # noqa: E731
        elif metric == "identity":
            f1 = lambda sys, u: identity_f1([s.id for s in sys], [s.id for s in u])  # noqa: E731
        else:
            raise ValueError(f"unknown metric {metric!r}")
    pool = {}
    for u in users:
        for s in u:
            pool.setdefault(s.id, s)
    candidates = sorted(pool.values(), key=_id_key)
    chosen: list[Shot] = []
    score = float(np.mean([f1(chosen, u) for u in users]))
    while True:
        best, best_gain = None, score
        for c in candidates:
            if any(c.id == s.id for s in chosen):
                continue
            trial = float(np.mean([f1(chosen + [c], u) for u in users]))
            if trial > best_gain + 1e-12:
                best, best_gain = c, trial
        if best is None:
            break
        chosen.append(best)
        score = best_gain
    return sorted(chosen, key=lambda s: (s.time_s, _id_key(s)))


def write_curve_csv(path, grid, f1_mean, per_user) -> None:
    """CSV with header ``param_s,f1_mean,f1_user1..k``."""
    per_user = np.atleast_2d(per_user)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["param_s", "f1_mean"] + [f"f1_user{i + 1}" for i in range(len(per_user))])
        for j, g in enumerate(grid):
            w.writerow([repr(float(g)), repr(float(f1_mean[j]))]
                       + [repr(float(u[j])) for u in per_user])
