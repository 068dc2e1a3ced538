"""Shots, segmented sequences and per-segment selections."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

# A summary as per-segment tuples of local (within-segment) shot positions.
Selection = tuple[tuple[int, ...], ...]


@dataclass(frozen=True, eq=False)
class Shot:
    id: Hashable
    time_s: float
    feature: np.ndarray
    tags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        f = np.array(self.feature, dtype=np.float64).ravel()
        f.setflags(write=False)
        object.__setattr__(self, "feature", f)
        object.__setattr__(self, "tags", frozenset(self.tags))


class SegmentedSequence:
    """Ordered partition of a video's shots into nonempty segments.

    Hashes by identity so per-sequence kernel caches can key on it.
    """

    def __init__(self, segments: Iterable[Sequence[Shot]]):
        self.segments = tuple(tuple(s) for s in segments)
        if not self.segments:
            raise ValueError("a sequence needs at least one segment")
        if any(len(s) == 0 for s in self.segments):
            raise ValueError("segments must be nonempty")
        self.shots = tuple(s for seg in self.segments for s in seg)
        ids = [s.id for s in self.shots]
        if len(set(ids)) != len(ids):
            raise ValueError("shot ids must be unique within a sequence")
        dims = {s.feature.size for s in self.shots}
        if len(dims) != 1:
            raise ValueError(f"mixed feature dimensions {sorted(dims)}")
        times = [s.time_s for s in self.shots]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("shot times must be nondecreasing")
        self.features = np.stack([s.feature for s in self.shots])
        self.features.setflags(write=False)
        self.offsets = np.cumsum([0] + [len(s) for s in self.segments])
        self._position = {sid: i for i, sid in enumerate(ids)}
        self._cache: dict = {}

    @classmethod
    def from_shots(cls, shots: Sequence[Shot], m: int = 10) -> "SegmentedSequence":
        """Default segmenter: cut every ``m`` shots."""
        if m < 1:
            raise ValueError("segment size must be positive")
        return cls([shots[i:i + m] for i in range(0, len(shots), m)])

    @property
    def T(self) -> int:
        return len(self.segments)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return len(self.shots)

    def segment_features(self, t: int) -> np.ndarray:
        return self.features[self.offsets[t]:self.offsets[t + 1]]

    def global_index(self, t: int, local: Iterable[int]) -> list[int]:
        return [int(self.offsets[t] + i) for i in local]

    def selection_from_ids(self, ids: Iterable[Hashable]) -> Selection:
        """Map a flat list of shot ids to per-segment local positions."""
        per = [[] for _ in self.segments]
        for sid in ids:
            if sid not in self._position:
                raise KeyError(f"unknown shot id {sid!r}")
            g = self._position[sid]
            t = int(np.searchsorted(self.offsets, g, side="right") - 1)
            per[t].append(g - int(self.offsets[t]))
        return tuple(tuple(sorted(set(p))) for p in per)

    def selection_from_indices(self, indices: Iterable[int]) -> Selection:
        return self.selection_from_ids(self.shots[i].id for i in indices)

    def selection_ids(self, sel: Selection) -> list:
        return [self.shots[g].id for g in self.selection_indices(sel)]

    def selection_indices(self, sel: Selection) -> list[int]:
        self.check_selection(sel)
        return [g for t, x in enumerate(sel) for g in self.global_index(t, x)]

    def selection_shots(self, sel: Selection) -> list[Shot]:
        return [self.shots[g] for g in self.selection_indices(sel)]

    def check_selection(self, sel: Selection) -> None:
        if len(sel) != self.T:
            raise ValueError(f"selection has {len(sel)} steps, sequence has {self.T}")
        for t, x in enumerate(sel):
            n = len(self.segments[t])
            if list(x) != sorted(set(x)) or any(i < 0 or i >= n for i in x):
                raise ValueError(f"invalid subset {x} for segment {t} of size {n}")

    def median_distance(self) -> float:
        """Median pairwise Euclidean distance between all shots."""
        if "sigma0" not in self._cache:
            X = self.features
            sq = (X ** 2).sum(1)
            d2 = np.maximum(sq[:, None] + sq[None, :] - 2 * X @ X.T, 0.0)
            iu = np.triu_indices(len(X), k=1)
            self._cache["sigma0"] = float(np.median(np.sqrt(d2[iu]))) if iu[0].size else 0.0
        return self._cache["sigma0"]


def selection_size(sel: Selection) -> int:
    return sum(len(x) for x in sel)
