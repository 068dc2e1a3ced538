"""Maximum-likelihood training of sequential DPP models."""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from .data import Video
from .errors import TrainingDivergedError
from .metrics import NO_FILTER, identity_f1, match_f1
from .seqmodel import SeqParams, greedy_infer, log_likelihood


@dataclass
class TrainConfig:
    D: int = 10
    nugget: float = 1e-6
    steps: int = 200
    lr: float = 0.5
    patience: int = 10
    alphas: tuple = (0.01, 0.1, 1.0, 10.0)
    lm_epochs: int = 20
    lm_lr: float = 0.1
    validation_metric: str = "matching"
    delta: str = "identity"

    @classmethod
    def from_defaults(cls, path=None, **overrides) -> "TrainConfig":
        """Read ``defaults.json`` (or ``path``) and apply keyword overrides."""
        if path is None:
            text = resources.files("seqgdpp").joinpath("defaults.json").read_text()
        else:
            with open(path) as fh:
                text = fh.read()
        raw = json.loads(text)
        flat = {**raw.get("model", {}), **raw.get("mle", {}),
                **{f"lm_{k}": v for k, v in raw.get("lm", {}).items()},
                **{k: v for k, v in raw.items() if not isinstance(v, dict)}}
        names = {f.name for f in fields(cls)}
        kw = {k: v for k, v in flat.items() if k in names}
        kw.update({k: v for k, v in overrides.items() if v is not None})
        if "alphas" in kw:
            kw["alphas"] = tuple(float(a) for a in kw["alphas"])
        return cls(**kw)


def oracle_length(video: Video) -> int:
    return sum(len(x) for x in video.oracle_selection())


def summary_f1(params: SeqParams, video: Video, metric: str = "identity",
               M0: float | None = None) -> float:
    """User-averaged F1 of the greedy summary of ``video``.

    ``metric`` is ``"identity"`` (shot-id F1) or ``"matching"`` (unfiltered
    IoU matching F1). The length budget defaults to the oracle length.
    """
    if M0 is None:
        M0 = oracle_length(video)
    sel, _ = greedy_infer(params, video.seq, M0)
    if metric == "identity":
        ids = video.seq.selection_ids(sel)
        return float(np.mean([identity_f1(ids, video.seq.selection_ids(u))
                              for u in video.user_summaries]))
    if metric == "matching":
        shots = video.seq.selection_shots(sel)
        return float(np.mean([match_f1(shots, u, NO_FILTER).f1 for u in video.user_shots()]))
    raise ValueError(f"unknown metric {metric!r}")


def validation_f1(params: SeqParams, videos: Sequence[Video], metric: str = "identity") -> float:
    return float(np.mean([summary_f1(params, v, metric) for v in videos]))


def mean_log_likelihood(params: SeqParams, videos: Sequence[Video], grad: bool = False):
    """Per-segment average of the teacher-forced log-likelihood over ``videos``."""
    total, g, steps = 0.0, np.zeros_like(params.unconstrained()), 0
    for v in videos:
        oracle = v.oracle_selection()
        out = log_likelihood(params, v.seq, oracle, M0=oracle_length(v), grad=grad)
        if grad:
            total += out[0]
            g += out[1]
        else:
            total += out
        steps += v.seq.T
    return (total / steps, g / steps) if grad else total / steps


def _ascend(template: SeqParams, train, val, cfg: TrainConfig, log, tag: str) -> SeqParams:
    """Gradient ascent with a fixed step that is halved whenever it would
    lower the objective; early stopping on the validation likelihood."""
    theta = template.unconstrained()
    f, g = mean_log_likelihood(template, train, grad=True)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise TrainingDivergedError(f"{tag}: non-finite log-likelihood {f} at step 0")
    val_f = (lambda p: mean_log_likelihood(p, val)) if val else (lambda p: None)
    best_val = val_f(template)
    best_val = f if best_val is None else best_val
    best_theta, bad = theta, 0
    for step in range(1, cfg.steps + 1):
        lr = cfg.lr
        while True:
            cand = theta + lr * g
            p = template.with_unconstrained(cand)
            fc, gc = mean_log_likelihood(p, train, grad=True)
            if np.isfinite(fc) and fc >= f:
                break
            lr *= 0.5
            if lr < 1e-10:
                break
        if lr < 1e-10:
            break
        if not np.all(np.isfinite(gc)):
            raise TrainingDivergedError(f"{tag}: non-finite gradient at step {step}")
        theta, f, g = cand, fc, gc
        v = val_f(p)
        v = f if v is None else v
        if log:
            log({"epoch": step, "split": "train", "loss": -f, "f1": None, "stage": tag})
            if val:
                log({"epoch": step, "split": "validation", "loss": -v, "f1": None, "stage": tag})
        if v > best_val + 1e-12:
            best_val, best_theta, bad = v, theta, 0
        else:
            bad += 1
            if bad >= cfg.patience:
                break
    return template.with_unconstrained(best_theta)


def train_mle(kind: str, train: Sequence[Video], val: Sequence[Video] = (),
              config: TrainConfig | None = None, init: SeqParams | None = None,
              log: Callable[[dict], None] | None = None) -> SeqParams:
    """Fit beta and w (seqgdpp) or beta and the kernel scale (seqdpp).

    For ``seqgdpp`` each alpha in ``config.alphas`` is fitted and the one with
    the best validation F1 kept. With ``init`` the alpha grid is skipped.
    """
    cfg = config or TrainConfig.from_defaults()
    if not train:
        raise ValueError("empty training set")
    d = train[0].seq.feature_dim
    M0 = int(round(np.mean([oracle_length(v) for v in train])))
    if init is not None:
        if init.kind != kind:
            raise ValueError(f"init is a {init.kind} model, asked for {kind}")
        if cfg.steps == 0:
            return init
        return _ascend(init, train, val, cfg, log, f"mle:{kind}")
    if cfg.steps == 0:
        return SeqParams.init(kind, d, cfg.D, alpha=cfg.alphas[0], M0=M0, nugget=cfg.nugget)
    alphas = cfg.alphas if kind == "seqgdpp" else cfg.alphas[:1]
    scored = []
    for a in alphas:
        start = SeqParams.init(kind, d, cfg.D, alpha=a, M0=M0, nugget=cfg.nugget)
        fitted = _ascend(start, train, val, cfg, log, f"mle:{kind}:alpha={a:g}")
        f1 = validation_f1(fitted, val or train, cfg.validation_metric) \
            if len(alphas) > 1 else None
        if log and f1 is not None:
            log({"epoch": cfg.steps, "split": "validation", "loss": None, "f1": f1,
                 "stage": f"mle:{kind}:alpha={a:g}"})
        scored.append((f1, fitted))
    if len(scored) == 1:
        return scored[0][1]
    best = max(range(len(scored)), key=lambda i: (scored[i][0], -i))
    return scored[best][1]
