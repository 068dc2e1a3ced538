"""Sequential determinantal point processes with a size prior, for
supervised video summarization.

``kernel`` and ``gdpp`` hold the DPP machinery, ``seqmodel`` the sequential
models, ``training`` and ``large_margin`` the two trainers, ``metrics`` the
temporally filtered matching F1, ``data`` the dataset format and synthetic
benchmark, ``experiment`` the leave-one-out driver.
"""
from .data import (Dataset, SyntheticConfig, Video, generate_synthetic, load_dataset,
                   make_splits, save_dataset, uniform_baseline)
from .errors import SeqGDPPError
from .gdpp import GDPP, bounded_cardinality_prior, gdpp_log_prob, gdpp_normalizer, sample_gdpp
from .kernel import (PSDKernel, condition_kernel, elementary_symmetric, log_prob_ensemble,
                     marginal_kernel, sample_dpp, sample_kdpp)
from .large_margin import lm_loss, lm_train, margin_term, sequence_cost
from .metrics import (FilterKind, TemporalFilter, aggregate_oracle, evaluate_summary,
                      iou_similarity, match_f1)
from .seqmodel import (SeqParams, greedy_infer, sample_sequence, seqdpp_log_likelihood,
                       seqgdpp_conditional_log_prob, seqgdpp_log_likelihood)
from .sequence import SegmentedSequence, Shot
from .training import TrainConfig, train_mle

__version__ = "0.1.0"
