"""Large-margin training of sequential DPPs against exposure bias.

At every segment the model decodes ``x_hat`` greedily while conditioned on
the oracle prefix. The oracle subset must beat ``x_hat`` by a log-probability
margin of 1. Each hinge is weighted by ``1 - F1`` of the prefix summary
(oracle prefix plus ``x_hat``) against the oracle prefix, so metric-equivalent
mistakes cost nothing.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .data import Video
from .errors import OracleUnreachableWarning, TrainingDivergedError
from .kernel import as_subset, check_psd, log_det
from .metrics import NO_FILTER, identity_f1, match_f1
from .seqmodel import SeqParams, argmax_subset, step_log_prob_grad, step_scores, step_table
from .sequence import SegmentedSequence, Selection
from .training import TrainConfig, oracle_length, train_mle, validation_f1

MARGIN = 1.0


@dataclass(frozen=True)
class MarginStep:
    t: int
    oracle_x: tuple
    inferred_x: tuple
    margin: float
    cost: float

    @property
    def contribution(self) -> float:
        return self.cost * self.margin if self.cost > 0 else 0.0


def hinge_margin(log_oracle: float, log_inferred: float) -> float:
    """``[1 - log_oracle + log_inferred]_+``; ``+inf`` if the oracle is impossible."""
    if log_oracle == -np.inf:
        warnings.warn("oracle subset has zero probability", OracleUnreachableWarning,
                      stacklevel=2)
        return np.inf
    return max(0.0, MARGIN - log_oracle + log_inferred)


def margin_term(L_t, x_oracle: Sequence[int], x_hat: Sequence[int],
                x_prev: Sequence[int] = ()) -> float:
    """Hinge on ``log det L_{x* + x_prev}`` versus ``log det L_{x_hat + x_prev}``.

    All index sets refer to rows of ``L_t``.
    """
    A = check_psd(L_t)
    n = A.shape[0]
    prev = set(as_subset(x_prev, n).tolist())
    o = as_subset(sorted(prev | set(x_oracle)), n)
    h = as_subset(sorted(prev | set(x_hat)), n)
    return hinge_margin(log_det(A[np.ix_(o, o)]), log_det(A[np.ix_(h, h)]))


def sequence_cost(candidate, oracle_prefix, metric: str = "identity") -> float:
    """``1 - F1`` of a candidate prefix summary against the oracle prefix.

    ``identity`` compares shot ids (Shots are reduced to their ids); ``matching``
    takes Shots and uses the unfiltered IoU matching F1. Two empty prefixes
    cost 0.
    """
    candidate, oracle_prefix = list(candidate), list(oracle_prefix)
    if not candidate and not oracle_prefix:
        return 0.0
    if metric == "identity":
        ids = lambda xs: [getattr(x, "id", x) for x in xs]  # noqa: E731
        return 1.0 - identity_f1(ids(candidate), ids(oracle_prefix))
    if metric == "matching":
        return 1.0 - match_f1(candidate, oracle_prefix, NO_FILTER).f1
    raise ValueError(f"unknown metric {metric!r}")


def lm_loss(params: SeqParams, seq: SegmentedSequence, oracle: Selection,
            M0: float | None = None, delta: str = "identity"):
    """Margin loss summed over segments, its subgradient, and per-step detail.

    Returns ``(loss, grad, steps)`` with ``grad`` taken w.r.t.
    ``params.unconstrained()``. Steps whose oracle subset is impossible are
    reported with an infinite margin and left out of loss and gradient.
    """
    seq.check_selection(oracle)
    if M0 is None:
        M0 = params.M0 if params.M0 is not None else sum(len(x) for x in oracle)
    loss, grad = 0.0, np.zeros_like(params.unconstrained())
    steps = []
    selected = 0
    prefix: list = []
    for t in range(seq.T):
        prev = oracle[t - 1] if t else ()
        table = step_table(seq, t, prev, params)
        scores = step_scores(params, table, t, seq.T, selected, M0)
        j = argmax_subset(scores)
        x_hat, x_star = table.subsets[j], oracle[t]
        m = hinge_margin(float(scores[table.index[x_star]]), float(scores[j]))
        hat_items = _items(seq, t, x_hat, delta)
        star_items = _items(seq, t, x_star, delta)
        cost = sequence_cost(prefix + hat_items, prefix + star_items, delta)
        steps.append(MarginStep(t, x_star, x_hat, m, cost))
        if np.isfinite(m) and m > 0 and cost > 0:
            _, g_star = step_log_prob_grad(params, table, x_star, t, seq.T, selected, M0)
            _, g_hat = step_log_prob_grad(params, table, x_hat, t, seq.T, selected, M0)
            loss += cost * m
            grad += cost * (g_hat - g_star)
        prefix += star_items
        selected += len(x_star)
    return loss, grad, steps


def _items(seq, t, x, delta):
    shots = [seq.shots[g] for g in seq.global_index(t, x)]
    return shots if delta == "matching" else [s.id for s in shots]


def mean_lm_loss(params: SeqParams, videos: Sequence[Video], delta: str = "identity"):
    total, g, steps = 0.0, np.zeros_like(params.unconstrained()), 0
    for v in videos:
        loss, gv, _ = lm_loss(params, v.seq, v.oracle_selection(), oracle_length(v), delta)
        total += loss
        g += gv
        steps += v.seq.T
    return total / steps, g / steps


def lm_train(kind: str, train: Sequence[Video], val: Sequence[Video] = (),
             config: TrainConfig | None = None, init: SeqParams | None = None,
             log: Callable[[dict], None] | None = None) -> SeqParams:
    """MLE pre-training followed by subgradient descent on the margin loss.

    Returns the iterate (MLE start included) with the best validation F1.
    """
    cfg = config or TrainConfig.from_defaults()
    start = init if init is not None else train_mle(kind, train, val, cfg, log=log)
    if cfg.lm_epochs == 0:
        return start
    score = lambda p: validation_f1(p, val or train, cfg.validation_metric)  # noqa: E731
    best_f1, best = score(start), start
    theta = start.unconstrained()
    for epoch in range(1, cfg.lm_epochs + 1):
        p = start.with_unconstrained(theta)
        loss, g = mean_lm_loss(p, train, cfg.delta)
        if not np.isfinite(loss) or not np.all(np.isfinite(g)):
            raise TrainingDivergedError(f"lm:{kind}: non-finite loss {loss} at epoch {epoch}")
        theta = theta - cfg.lm_lr * g
        p = start.with_unconstrained(theta)
        f1 = score(p)
        if log:
            log({"epoch": epoch, "split": "train", "loss": loss, "f1": None, "stage": f"lm:{kind}"})
            log({"epoch": epoch, "split": "validation", "loss": None, "f1": f1,
                 "stage": f"lm:{kind}"})
        if f1 > best_f1 + 1e-12:
            best_f1, best = f1, p
    return replace(best, training="lm")
