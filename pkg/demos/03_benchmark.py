"""Leave-one-out comparison of all models on the synthetic benchmark.

Uses a handful of folds to stay quick; pass ``--all`` for the full run.
"""
import sys

from seqgdpp.data import generate_synthetic
from seqgdpp.experiment import MODELS, run_benchmark

ds = generate_synthetic()
folds = None if "--all" in sys.argv else [0, 1, 2]

print(f"{'model':12s} {'val F1':>7s} {'AUC pi':>7s} {'AUC gauss':>9s} {'F1 raw':>7s}")
for model in MODELS:
    res = run_benchmark(ds, model, folds=folds)
    print(f"{model:12s} {res.validation_f1:7.3f} {res.auc_pi:7.3f} {res.auc_gauss:9.3f} "
          f"{res.f1_unfiltered:7.3f}")
