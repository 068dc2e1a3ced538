"""Command-line entry point: ``python -m seqgdpp <command>``.

Exit codes: 0 success, 1 verification or training failure, 2 usage or input
error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .data import SyntheticConfig, generate_synthetic, load_dataset, make_splits, save_dataset
from .errors import DatasetError, IntegrityError, SeqGDPPError, TrainingDivergedError
from .experiment import (MODELS, FoldResult, VideoSummary, aggregate, evaluate_video, fit,
                         run_benchmark, summarize)
from .metrics import DEFAULT_GRID, write_curve_csv
from .seqmodel import SeqParams, sample_sequence
from .training import TrainConfig, oracle_length
from .verify import FAULTS, report, run_checks

DEFAULT_SEED = 0


class UsageError(Exception):
    pass


def parse_grid(text: str | None) -> tuple:
    """``"5:60:5"`` (inclusive range) or ``"5,10,30"``."""
    if text is None:
        return DEFAULT_GRID
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            grid = np.arange(start, stop + step / 2, step)
        else:
            grid = np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError:
        raise UsageError(f"bad --grid {text!r}; use start:stop:step or a comma list") from None
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise UsageError("--grid must be positive and strictly increasing")
    return tuple(float(g) for g in grid)


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _out_dir(args) -> Path:
    if args.out is None:
        raise UsageError("--out is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dataset(args):
    if args.data is None:
        raise UsageError("--data is required")
    return load_dataset(args.data)


def _config(args) -> TrainConfig:
    kw = {}
    if args.alpha is not None:
        if not args.alpha > 0:
            raise UsageError("--alpha must be positive")
        kw["alphas"] = [args.alpha]
    if args.epochs is not None:
        if args.epochs < 0:
            raise UsageError("--epochs must be nonnegative")
        kw["steps"] = kw["lm_epochs"] = args.epochs
    return TrainConfig.from_defaults(args.config, **kw)


def _folds(args, n_videos: int) -> list[int]:
    if args.all_folds:
        return list(range(n_videos))
    fold = 0 if args.fold is None else args.fold
    if not 0 <= fold < n_videos:
        raise UsageError(f"--fold must be in [0, {n_videos - 1}]")
    return [fold]


def _write_checkpoint(path: Path, model: str, params: SeqParams | None):
    if params is None:
        path.write_text(_dump({"kind": model}))
    else:
        params.save(path)


def _read_checkpoint(path) -> SeqParams | None:
    if path is None:
        raise UsageError("--checkpoint is required for trained models")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"checkpoint not found: {p}")
    obj = json.loads(p.read_text())
    return None if obj.get("kind") == "uniform" else SeqParams.from_json(obj)


# --- commands ---------------------------------------------------------------

def cmd_synth(args) -> int:
    overrides = {k: v for k, v in (("n_videos", args.n_videos), ("n_events", args.events),
                                   ("noise", args.noise)) if v is not None}
    ds = generate_synthetic(SyntheticConfig(seed=args.seed, **overrides))
    save_dataset(ds, _out_dir(args), sidecar=args.sidecar)
    return 0


def cmd_train(args) -> int:
    ds = _dataset(args)
    cfg = _config(args)
    out = _out_dir(args)
    plans = make_splits(ds)
    folds = _folds(args, len(plans))
    for i in folds:
        plan = plans[i]
        target = out / f"fold_{i:02d}" if args.all_folds else out
        target.mkdir(parents=True, exist_ok=True)
        with open(target / "train_log.jsonl", "w") as log_fh:
            def log(rec, _fh=log_fh, _fold=i):
                _fh.write(json.dumps({**rec, "fold": _fold}, sort_keys=True) + "\n")
            params = fit(args.model, [ds.by_id(v) for v in plan.train],
                         [ds.by_id(v) for v in plan.validation], cfg, log)
        _write_checkpoint(target / "model.json", args.model, params)
    return 0


def cmd_infer(args) -> int:
    ds = _dataset(args)
    params = None if args.model == "uniform" else _read_checkpoint(args.checkpoint)
    if params is not None and params.kind != args.model.removeprefix("lm-"):
        raise UsageError(f"checkpoint holds a {params.kind} model, --model is {args.model}")
    out = _out_dir(args)
    videos = args.videos or [v.video_id for v in ds.videos]
    for vid in videos:
        video = ds.by_id(vid)
        length = args.length if args.length is not None else oracle_length(video)
        if args.model == "uniform" and not 1 <= length <= len(video.seq):
            raise UsageError(f"--length must be in [1, {len(video.seq)}] for {vid}")
        s = summarize(params, video, length)
        (out / f"{vid}.json").write_text(_dump(s.to_json()))
    return 0


def _load_summaries(path: Path, ds) -> list:
    files = sorted(path.glob("*.json"))
    if not files:
        raise UsageError(f"no summary files in {path}")
    out = []
    for f in files:
        obj = json.loads(f.read_text())
        try:
            video = ds.by_id(obj["video_id"])
        except KeyError:
            raise IntegrityError(f"{f}: video id {obj.get('video_id')!r} not in dataset") from None
        sel = video.seq.selection_from_ids(obj["selected_shot_ids"])
        out.append((VideoSummary(video.video_id, sel, list(obj["selected_shot_ids"]),
                                 obj.get("per_step_log_prob")), video))
    return out


def _write_curves(out: Path, result) -> None:
    write_curve_csv(out / "curve_pi.csv", result.grid, result.f1_pi, result.per_user_pi)
    write_curve_csv(out / "curve_gauss.csv", result.grid, result.f1_gauss, result.per_user_gauss)
    (out / "auc.json").write_text(_dump(result.auc_json()))


def cmd_eval(args) -> int:
    ds = _dataset(args)
    grid = parse_grid(args.grid)
    out = _out_dir(args)
    if args.summaries is not None:
        pairs = _load_summaries(Path(args.summaries), ds)
        folds = []
        for s, video in pairs:
            curves = evaluate_video(s, video, grid)
            folds.append(FoldResult(-1, "external", None, float("nan"), [s],
                                    {k: [c] for k, c in curves.items()}))
        _write_curves(out, aggregate("external", folds, grid))
        return 0
    cfg = _config(args)
    folds = None if args.all_folds or args.fold is None else _folds(args, len(ds.videos))
    with open(out / "train_log.jsonl", "w") as log_fh:
        res = run_benchmark(ds, args.model, cfg, grid, folds,
                            log=lambda r: log_fh.write(json.dumps(r, sort_keys=True) + "\n"))
    sdir = out / "summaries"
    sdir.mkdir(exist_ok=True)
    for f in res.folds:
        for s in f.summaries:
            (sdir / f"{s.video_id}.json").write_text(_dump(s.to_json()))
    _write_curves(out, res)
    return 0


def cmd_sample(args) -> int:
    ds = _dataset(args)
    params = _read_checkpoint(args.checkpoint)
    if params is None:
        raise UsageError("sampling needs a seqdpp or seqgdpp checkpoint")
    out = _out_dir(args)
    rng = np.random.default_rng(args.seed)
    videos = args.videos or [v.video_id for v in ds.videos]
    for vid in videos:
        video = ds.by_id(vid)
        length = args.length if args.length is not None else oracle_length(video)
        draws = []
        for _ in range(args.samples or 1):
            sel, lp = sample_sequence(params, video.seq, length, rng)
            draws.append({"selected_shot_ids": video.seq.selection_ids(sel),
                          "per_step_log_prob": lp})
        (out / f"{vid}.json").write_text(_dump({"video_id": vid, "samples": draws}))
    return 0


def cmd_bruteforce(args) -> int:
    results = run_checks(args.seed, args.samples, args.inject_fault)
    rep = report(results, args.seed)
    text = _dump(rep)
    if args.out is not None:
        (_out_dir(args) / "bruteforce.json").write_text(text)
    sys.stdout.write(text)
    for r in results:
        if not r.passed:
            print(f"FAILED {r.name}: deviation {r.max_deviation:.3g} > {r.tolerance:g}",
                  file=sys.stderr)
    return 0 if rep["passed"] else 1


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "infer": cmd_infer, "eval": cmd_eval,
            "sample": cmd_sample, "bruteforce": cmd_bruteforce}


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--data", help="dataset directory (index.json)")
    shared.add_argument("--out", help="output directory")
    shared.add_argument("--seed", type=int, default=DEFAULT_SEED)
    shared.add_argument("--model", choices=MODELS, default="seqgdpp")
    shared.add_argument("--length", type=int, help="summary length budget M0")
    shared.add_argument("--alpha", type=float, help="fix alpha instead of cross-validating it")
    shared.add_argument("--epochs", type=int, help="gradient steps (MLE) and margin epochs")
    shared.add_argument("--grid", help="filter parameters in seconds, e.g. 5:60:5")
    shared.add_argument("--config", help="JSON file replacing the packaged defaults")
    shared.add_argument("--fold", type=int, help="leave-one-out fold (default 0)")
    shared.add_argument("--all-folds", action="store_true")
    shared.add_argument("--checkpoint", help="model.json written by train")
    shared.add_argument("--videos", nargs="+", help="restrict to these video ids")
    shared.add_argument("--summaries", help="directory of summary JSON files to evaluate")
    shared.add_argument("--samples", type=int, help="draws per video / sampler check size")

    parser = argparse.ArgumentParser(prog="seqgdpp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[shared], help="fit a model on one or all folds")
    sub.add_parser("infer", parents=[shared], help="summarize videos with a checkpoint")
    sub.add_parser("eval", parents=[shared],
                   help="filtered F1 curves and AUCs (runs the benchmark without --summaries)")
    sub.add_parser("sample", parents=[shared], help="draw summaries from a checkpoint")
    synth = sub.add_parser("synth", parents=[shared], help="write the synthetic benchmark")
    synth.add_argument("--n-videos", type=int)
    synth.add_argument("--events", type=int)
    synth.add_argument("--noise", type=float)
    synth.add_argument("--sidecar", action="store_true", help="store features in features.bin")
    bf = sub.add_parser("bruteforce", parents=[shared],
                        help="compare fast paths against enumeration")
    bf.add_argument("--inject-fault", choices=FAULTS)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        parser.error(str(e))
    except TrainingDivergedError as e:
        print(f"seqgdpp: training failed: {e}", file=sys.stderr)
        return 1
    except (DatasetError, SeqGDPPError, ValueError, OSError, KeyError) as e:
        print(f"seqgdpp: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
