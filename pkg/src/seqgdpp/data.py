"""Dataset files, synthetic benchmark videos, splits and the uniform baseline.

On-disk layout (``format_version`` 1)::

    root/index.json               {"format_version": 1, "videos": ["vid/video.json", ...]}
    root/vid/video.json           {"format_version": 1, "video_id", "segments",
                                   "user_summaries", "oracle", ["feature_sidecar"]}
    root/features.bin (optional)  b"GDPPFEAT", u32 count, u32 dim, float64 rows

Shots are ``{"id", "time_s", "feature", "tags"}``; summaries are flat lists
of shot ids. With a sidecar, shots omit ``feature`` and the video carries
``{"path", "row_offset"}`` pointing at its first row.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DatasetError, InsufficientDataError, IntegrityError
from .metrics import aggregate_oracle
from .sequence import SegmentedSequence, Selection, Shot

FORMAT_VERSION = 1
SIDECAR_MAGIC = b"GDPPFEAT"
SHOT_SECONDS = 5.0


@dataclass
class Video:
    video_id: str
    seq: SegmentedSequence
    user_summaries: list[Selection]
    oracle: Selection | None = None

    def oracle_selection(self, metric: str = "iou") -> Selection:
        """Stored oracle, or the greedy aggregate of the user summaries."""
        if self.oracle is None:
            shots = aggregate_oracle([self.seq.selection_shots(u) for u in self.user_summaries],
                                     metric=metric)
            self.oracle = self.seq.selection_from_ids(s.id for s in shots)
        return self.oracle

    def user_shots(self) -> list[list[Shot]]:
        return [self.seq.selection_shots(u) for u in self.user_summaries]


@dataclass
class Dataset:
    videos: list[Video]

    def __post_init__(self):
        ids = [v.video_id for v in self.videos]
        if len(set(ids)) != len(ids):
            raise IntegrityError("duplicate video ids")
        dims = {v.seq.feature_dim for v in self.videos}
        if len(dims) > 1:
            raise IntegrityError(f"mixed feature dimensions across videos {sorted(dims)}")

    def __len__(self):
        return len(self.videos)

    def __getitem__(self, i):
        return self.videos[i]

    def by_id(self, video_id) -> Video:
        for v in self.videos:
            if v.video_id == video_id:
                return v
        raise KeyError(video_id)

    @property
    def feature_dim(self) -> int:
        return self.videos[0].seq.feature_dim


# --- binary sidecar ---------------------------------------------------------

def write_feature_sidecar(path, features: np.ndarray) -> None:
    features = np.ascontiguousarray(features, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(SIDECAR_MAGIC)
        fh.write(struct.pack("<II", *features.shape))
        fh.write(features.tobytes())


def read_feature_sidecar(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) < 16 or head[:8] != SIDECAR_MAGIC:
            raise DatasetError(f"{path}: not a feature sidecar (bad magic)")
        count, dim = struct.unpack("<II", head[8:])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != count * dim:
        raise DatasetError(f"{path}: expected {count}x{dim} floats, found {data.size}")
    return data.reshape(count, dim).astype(np.float64)


# --- JSON load / save -------------------------------------------------------

def _need(obj, key, where, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise DatasetError(f"{where}: missing field '{key}'")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise DatasetError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}")
    return val


def _parse_video(obj, where, base: Path, sidecars: dict) -> Video:
    if obj.get("format_version") != FORMAT_VERSION:
        raise DatasetError(f"{where}.format_version: expected {FORMAT_VERSION}")
    vid = _need(obj, "video_id", where, (str, int))
    segs = _need(obj, "segments", where, list)
    side = obj.get("feature_sidecar")
    rows = None
    if side is not None:
        spath = (base / _need(side, "path", f"{where}.feature_sidecar", str)).resolve()
        if spath not in sidecars:
            sidecars[spath] = read_feature_sidecar(spath)
        rows = sidecars[spath]
        row = int(_need(side, "row_offset", f"{where}.feature_sidecar", int))
    segments = []
    for t, seg in enumerate(segs):
        if not isinstance(seg, list) or not seg:
            raise DatasetError(f"{where}.segments[{t}]: expected a nonempty list of shots")
        shots = []
        for i, s in enumerate(seg):
            w = f"{where}.segments[{t}][{i}]"
            sid = _need(s, "id", w, (str, int))
            time_s = _need(s, "time_s", w, (int, float))
            tags = _need(s, "tags", w, list)
            if rows is not None:
                if row >= len(rows):
                    raise IntegrityError(f"{w}: sidecar row {row} out of range")
                feat = rows[row]
                row += 1
            else:
                feat = _need(s, "feature", w, list)
                if not all(isinstance(x, (int, float)) for x in feat):
                    raise DatasetError(f"{w}.feature: expected numbers")
            shots.append(Shot(sid, float(time_s), np.asarray(feat, dtype=np.float64), tags))
        segments.append(shots)
    dims = {s.feature.size for seg in segments for s in seg}
    if len(dims) != 1:
        raise IntegrityError(f"{where}: mixed feature dimensions {sorted(dims)}")
    try:
        seq = SegmentedSequence(segments)
    except ValueError as e:
        raise IntegrityError(f"{where}: {e}") from None

    def selection(ids, w):
        if not isinstance(ids, list):
            raise DatasetError(f"{w}: expected a list of shot ids")
        try:
            return seq.selection_from_ids(ids)
        except KeyError as e:
            raise IntegrityError(f"{w}: references unknown shot {e.args[0]!r}") from None

    users = [selection(u, f"{where}.user_summaries[{j}]")
             for j, u in enumerate(_need(obj, "user_summaries", where, list))]
    oracle = obj.get("oracle")
    oracle = None if oracle is None else selection(oracle, f"{where}.oracle")
    return Video(vid, seq, users, oracle)


def load_dataset(path) -> Dataset:
    """Load and fully validate a dataset directory (or its ``index.json``)."""
    path = Path(path)
    index = path / "index.json" if path.is_dir() else path
    if not index.exists():
        raise DatasetError(f"{index}: not found")
    root = index.parent
    try:
        idx = json.loads(index.read_text())
    except json.JSONDecodeError as e:
        raise DatasetError(f"{index}: invalid JSON ({e})") from None
    if idx.get("format_version") != FORMAT_VERSION:
        raise DatasetError(f"{index}.format_version: expected {FORMAT_VERSION}")
    videos, sidecars = [], {}
    for j, rel in enumerate(_need(idx, "videos", str(index), list)):
        vpath = root / rel
        if not vpath.exists():
            raise DatasetError(f"{index}.videos[{j}]: {vpath} not found")
        try:
            obj = json.loads(vpath.read_text())
        except json.JSONDecodeError as e:
            raise DatasetError(f"{vpath}: invalid JSON ({e})") from None
        videos.append(_parse_video(obj, str(vpath), vpath.parent, sidecars))
    if not videos:
        raise DatasetError(f"{index}: no videos")
    return Dataset(videos)


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def video_to_json(v: Video, with_features: bool = True) -> dict:
    segs = [[dict({"id": s.id, "time_s": float(s.time_s), "tags": sorted(s.tags)},
                  **({"feature": s.feature.tolist()} if with_features else {}))
             for s in seg] for seg in v.seq.segments]
    return {
        "format_version": FORMAT_VERSION,
        "video_id": v.video_id,
        "segments": segs,
        "user_summaries": [v.seq.selection_ids(u) for u in v.user_summaries],
        "oracle": None if v.oracle is None else v.seq.selection_ids(v.oracle),
    }


def save_dataset(ds: Dataset, path, sidecar: bool = False) -> Path:
    """Write ``ds`` in canonical form (sorted keys, sorted tags, float times)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    rels, offset, feats = [], 0, []
    for v in ds.videos:
        vdir = root / str(v.video_id)
        vdir.mkdir(exist_ok=True)
        obj = video_to_json(v, with_features=not sidecar)
        if sidecar:
            obj["feature_sidecar"] = {"path": "../features.bin", "row_offset": offset}
            feats.append(v.seq.features)
            offset += len(v.seq)
        (vdir / "video.json").write_text(_dump(obj))
        rels.append(f"{v.video_id}/video.json")
    if sidecar:
        write_feature_sidecar(root / "features.bin", np.concatenate(feats))
    (root / "index.json").write_text(_dump({"format_version": FORMAT_VERSION, "videos": rels}))
    return root


# --- synthetic benchmark ----------------------------------------------------

@dataclass
class SyntheticConfig:
    n_videos: int = 12
    T: int = 8
    segment_size: int = 8
    feature_dim: int = 16
    n_events: int = 16
    # Dirichlet concentration of event durations; None cuts at uniform
    # random positions, large values give near-equal durations
    duration_concentration: float | None = 20.0
    noise: float = 0.0
    n_users: int = 3
    p_drop: float = 0.05
    p_add: float = 0.01
    n_concepts: int = 24
    concepts_per_event: int = 3
    p_extra_tag: float = 0.2
    seed: int = 0
    oracle_metric: str = "iou"
    shot_seconds: float = SHOT_SECONDS

    def __post_init__(self):
        for name in ("n_videos", "T", "segment_size", "feature_dim", "n_events", "n_users"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_events > self.T * self.segment_size:
            raise ValueError("more events than shots")
        if self.duration_concentration is not None and not self.duration_concentration > 0:
            raise ValueError("duration_concentration must be positive")


def _synthetic_video(cfg: SyntheticConfig, rng: np.random.Generator, vid: str) -> Video:
    N = cfg.T * cfg.segment_size
    E = cfg.n_events
    if cfg.duration_concentration is None:
        cuts = np.sort(rng.choice(np.arange(1, N), size=E - 1, replace=False))
    else:
        # every event gets one shot, the rest is shared by Dirichlet weights
        extra = rng.multinomial(N - E, rng.dirichlet(np.full(E, cfg.duration_concentration)))
        cuts = np.cumsum(1 + extra)[:-1]
    starts = np.concatenate([[0], cuts]).astype(int)
    event_of = np.repeat(np.arange(cfg.n_events), np.diff(np.concatenate([starts, [N]])))
    means = rng.normal(size=(cfg.n_events, cfg.feature_dim))
    feats = means[event_of] + cfg.noise * rng.normal(size=(N, cfg.feature_dim))
    concepts = [set(f"c{c:02d}" for c in rng.choice(cfg.n_concepts, cfg.concepts_per_event,
                                                    replace=False))
                for _ in range(cfg.n_events)]
    shots = []
    for i in range(N):
        tags = {f"event{event_of[i]:03d}"} | concepts[event_of[i]]
        if rng.random() < cfg.p_extra_tag:
            tags.add(f"c{rng.integers(cfg.n_concepts):02d}")
        shots.append(Shot(f"{vid}_s{i:04d}", cfg.shot_seconds * i + cfg.shot_seconds / 2,
                          feats[i], tags))
    seq = SegmentedSequence.from_shots(shots, cfg.segment_size)
    base = set(starts.tolist())
    users = []
    for _ in range(cfg.n_users):
        drop = rng.random(N) < cfg.p_drop
        add = rng.random(N) < cfg.p_add
        picked = [i for i in range(N) if (i in base and not drop[i]) or (i not in base and add[i])]
        users.append(seq.selection_from_indices(picked))
    video = Video(vid, seq, users)
    video.oracle_selection(cfg.oracle_metric)
    return video


def generate_synthetic(config: SyntheticConfig | None = None, **overrides) -> Dataset:
    """Videos made of contiguous event runs with distinct mean features.

    Users pick the first shot of each event run, each independently dropping
    or adding shots with small probability. Deterministic given ``seed``.
    """
    cfg = config or SyntheticConfig()
    if overrides:
        cfg = SyntheticConfig(**{**cfg.__dict__, **overrides})
    rng = np.random.default_rng(cfg.seed)
    return Dataset([_synthetic_video(cfg, rng, f"video{j:02d}") for j in range(cfg.n_videos)])


# --- splits and baseline ----------------------------------------------------

@dataclass(frozen=True)
class SplitPlan:
    fold: int
    train: tuple = field(default=())
    validation: tuple = field(default=())
    test: tuple = field(default=())


def make_splits(dataset: Dataset | Sequence, scheme: str = "leave-one-out") -> list[SplitPlan]:
    """Leave-one-out folds; fold ``i`` validates on videos ``i+1`` and ``i+2`` (mod n)."""
    if scheme != "leave-one-out":
        raise ValueError(f"unknown split scheme {scheme!r}")
    ids = [v.video_id for v in dataset.videos] if isinstance(dataset, Dataset) else list(dataset)
    n = len(ids)
    if n < 4:
        raise InsufficientDataError(f"leave-one-out needs at least 4 videos, got {n}")
    plans = []
    for i in range(n):
        val = {(i + 1) % n, (i + 2) % n}
        plans.append(SplitPlan(i,
                               tuple(ids[j] for j in range(n) if j != i and j not in val),
                               tuple(ids[j] for j in sorted(val, key=lambda j: (j - i) % n)),
                               (ids[i],)))
    return plans


def uniform_baseline(seq: SegmentedSequence, target_length: int) -> Selection:
    """Shots at ``round(i * N / target_length)`` (half up), i = 0..target_length-1."""
    N = len(seq)
    if not 1 <= target_length <= N:
        raise ValueError(f"target_length must be in [1, {N}], got {target_length}")
    idx = [int(np.floor(i * N / target_length + 0.5)) for i in range(target_length)]
    return seq.selection_from_indices(idx)
