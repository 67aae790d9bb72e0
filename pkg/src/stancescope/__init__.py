"""Batch toolkit for characterizing stance and bot-like accounts in a
microblog discussion: seed labeling, boosted-tree stance propagation,
Isolation Forest anomaly scoring, a permutation null model, a
three-condition bot criterion and block-model community profiling, all
validated on synthetic corpora with planted ground truth."""

from . import (anomaly, botcrit, classifier, corpus, features, netcomm,
               nullmodel, seeding, synth)
from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = [
    "anomaly", "botcrit", "classifier", "corpus", "features", "netcomm",
    "nullmodel", "seeding", "synth", "kernel_backend",
]
