"""Leave-one-out benchmark runs: fit, summarize the test video, evaluate."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .data import Dataset, SplitPlan, Video, make_splits, uniform_baseline
from .large_margin import lm_train
from .metrics import (DEFAULT_GRID, NO_FILTER, FilterKind, evaluate_summary, identity_f1,
                      match_f1)
from .seqmodel import SeqParams, greedy_infer
from .sequence import Selection
from .training import TrainConfig, oracle_length, train_mle, validation_f1

MODELS = ("seqdpp", "lm-seqdpp", "seqgdpp", "lm-seqgdpp", "uniform")


def check_model(model: str) -> str:
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    return model


def fit(model: str, train: Sequence[Video], val: Sequence[Video] = (),
        config: TrainConfig | None = None,
        log: Callable[[dict], None] | None = None) -> SeqParams | None:
    """Train ``model`` on ``train``; ``uniform`` has nothing to fit."""
    check_model(model)
    if model == "uniform":
        return None
    if model.startswith("lm-"):
        return lm_train(model[3:], train, val, config, log=log)
    return train_mle(model, train, val, config, log=log)


@dataclass
class VideoSummary:
    video_id: str
    selection: Selection
    selected_shot_ids: list
    per_step_log_prob: list | None

    def to_json(self) -> dict:
        return {"video_id": self.video_id, "selected_shot_ids": list(self.selected_shot_ids),
                "per_step_log_prob": self.per_step_log_prob}


def summarize(params: SeqParams | None, video: Video, length: int | None = None) -> VideoSummary:
    """Summary of ``video``; ``params=None`` means the uniform baseline.

    ``length`` defaults to the oracle length and is the seqgdpp budget M0.
    """
    if length is None:
        length = oracle_length(video)
    if params is None:
        sel = uniform_baseline(video.seq, max(1, min(int(length), len(video.seq))))
        steps = None
    else:
        sel, lp = greedy_infer(params, video.seq, length)
        steps = [float(x) for x in lp]
    return VideoSummary(video.video_id, sel, video.seq.selection_ids(sel), steps)


@dataclass
class FoldResult:
    fold: int
    model: str
    params: SeqParams | None
    validation_f1: float
    summaries: list = field(default_factory=list)
    curves: dict = field(default_factory=dict)   # kind -> list of EvalCurve, one per test video


def evaluate_video(summary: VideoSummary, video: Video, grid=DEFAULT_GRID) -> dict:
    system = video.seq.selection_shots(summary.selection)
    users = video.user_shots()
    return {k: evaluate_summary(system, users, grid, k)
            for k in (FilterKind.PI, FilterKind.GAUSSIAN)}


def run_fold(dataset: Dataset, plan: SplitPlan, model: str,
             config: TrainConfig | None = None, grid=DEFAULT_GRID,
             log: Callable[[dict], None] | None = None) -> FoldResult:
    cfg = config or TrainConfig.from_defaults()
    train = [dataset.by_id(v) for v in plan.train]
    val = [dataset.by_id(v) for v in plan.validation]
    params = fit(model, train, val, cfg, log)
    if params is None:
        val_f1 = float(np.mean([_uniform_f1(v, cfg.validation_metric) for v in val]))
    else:
        val_f1 = validation_f1(params, val, cfg.validation_metric)
    result = FoldResult(plan.fold, model, params, val_f1)
    curves = {FilterKind.PI: [], FilterKind.GAUSSIAN: []}
    for vid in plan.test:
        video = dataset.by_id(vid)
        s = summarize(params, video)
        result.summaries.append(s)
        for k, c in evaluate_video(s, video, grid).items():
            curves[k].append(c)
    result.curves = curves
    return result


def _uniform_f1(video: Video, metric: str) -> float:
    s = summarize(None, video)
    if metric == "identity":
        return float(np.mean([identity_f1(s.selected_shot_ids, video.seq.selection_ids(u))
                              for u in video.user_summaries]))
    shots = video.seq.selection_shots(s.selection)
    return float(np.mean([match_f1(shots, u, NO_FILTER).f1 for u in video.user_shots()]))


@dataclass
class BenchmarkResult:
    model: str
    folds: list
    grid: np.ndarray
    f1_pi: np.ndarray
    f1_gauss: np.ndarray
    per_user_pi: np.ndarray
    per_user_gauss: np.ndarray
    auc_pi: float
    auc_gauss: float
    f1_unfiltered: float
    area_pi: float = float("nan")       # unnormalized, in F1 * seconds
    area_gauss: float = float("nan")

    @property
    def validation_f1(self) -> float:
        return float(np.mean([f.validation_f1 for f in self.folds]))

    def auc_json(self) -> dict:
        return {"auc_pi": self.auc_pi, "auc_gauss": self.auc_gauss,
                "f1_unfiltered": self.f1_unfiltered,
                "area_pi": self.area_pi, "area_gauss": self.area_gauss}


def aggregate(model: str, folds: Sequence[FoldResult], grid=DEFAULT_GRID) -> BenchmarkResult:
    """Average curves and AUCs over the test videos of all folds."""
    pi = [c for f in folds for c in f.curves[FilterKind.PI]]
    ga = [c for f in folds for c in f.curves[FilterKind.GAUSSIAN]]
    mean = lambda cs, attr: np.mean([getattr(c, attr) for c in cs], axis=0)  # noqa: E731
    return BenchmarkResult(model, list(folds), np.asarray(grid, dtype=float),
                           mean(pi, "f1_values"), mean(ga, "f1_values"),
                           mean(pi, "per_user"), mean(ga, "per_user"),
                           float(mean(pi, "auc")), float(mean(ga, "auc")),
                           float(mean(pi, "f1_unfiltered")),
                           float(mean(pi, "area")), float(mean(ga, "area")))


def num_workers(default: int = 1) -> int:
    """Fold parallelism, capped by ``GDPP_NUM_WORKERS``."""
    raw = os.environ.get("GDPP_NUM_WORKERS")
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"GDPP_NUM_WORKERS must be an integer, got {raw!r}") from None
    return max(1, n)


def _fold_job(args):
    dataset, plan, model, config, grid = args
    records: list = []
    return run_fold(dataset, plan, model, config, grid, records.append), records


def run_benchmark(dataset: Dataset, model: str, config: TrainConfig | None = None,
                  grid=DEFAULT_GRID, folds: Sequence[int] | None = None,
                  workers: int | None = None,
                  log: Callable[[dict], None] | None = None) -> BenchmarkResult:
    """Leave-one-out benchmark of ``model``.

    Folds may run in worker processes; results and log records are merged in
    fold order, so the output does not depend on the worker count.
    """
    check_model(model)
    cfg = config or TrainConfig.from_defaults()
    plans = make_splits(dataset)
    if folds is not None:
        plans = [plans[i] for i in folds]
    workers = num_workers() if workers is None else workers
    jobs = [(dataset, p, model, cfg, tuple(grid)) for p in plans]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(min(workers, len(jobs))) as ex:
            done = list(ex.map(_fold_job, jobs))
    else:
        done = [_fold_job(j) for j in jobs]
    results = []
    for plan, (res, records) in zip(plans, done):
        if log:
            for r in records:
                log({**r, "fold": plan.fold})
        results.append(res)
    return aggregate(model, results, grid)
