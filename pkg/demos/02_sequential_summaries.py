"""Summarizing one synthetic video with the two sequential models.

The video is a run of events, each lasting several shots. Users keep the
first shot of every event, so a good summary has one shot per event.
"""
import numpy as np

from seqgdpp.data import generate_synthetic
from seqgdpp.seqmodel import SeqParams, greedy_infer, log_likelihood, size_distribution
from seqgdpp.training import TrainConfig, oracle_length, train_mle

ds = generate_synthetic(n_videos=6, seed=3)
video = ds[0]
M0 = oracle_length(video)
print(f"video {video.video_id}: {len(video.seq)} shots in {video.seq.T} segments, "
      f"oracle summary has {M0} shots")

# Untrained models: equal bandwidth weights, no feature term.
d = ds.feature_dim
for kind in ("seqdpp", "seqgdpp"):
    p = SeqParams.init(kind, d, alpha=1.0, M0=M0)
    sel, _ = greedy_infer(p, video.seq, M0)
    print(f"{kind:8s} untrained: {sum(map(len, sel)):2d} shots  per segment {list(map(len, sel))}")

# The size prior of one segment, centred at the remaining budget per segment.
mu = M0 / video.seq.T
for alpha in (0.1, 1.0, 10.0):
    p = size_distribution(alpha, mu, 8)
    print(f"alpha={alpha:<4}  p(k) = {np.round(p, 2)}")

# Fit both models on the other videos and compare likelihood and length.
cfg = TrainConfig.from_defaults(steps=40)
train, val = ds.videos[1:4], ds.videos[4:]
for kind in ("seqdpp", "seqgdpp"):
    p = train_mle(kind, train, val, cfg)
    sel, _ = greedy_infer(p, video.seq, M0)
    ll = log_likelihood(p, video.seq, video.oracle_selection(), M0=M0)
    extra = f", alpha {p.alpha:g}" if kind == "seqgdpp" else ""
    print(f"{kind:8s} trained:   {sum(map(len, sel)):2d} shots, "
          f"oracle log-likelihood {ll:8.2f}{extra}")
