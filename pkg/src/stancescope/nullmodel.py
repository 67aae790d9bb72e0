"""Permutation null model for the anomaly/stance relationship.

The observed statistic is the fraction of apruebo accounts among the top-k
by anomaly rank, for every k. The null band re-computes the same curve
after uniformly shuffling stance labels across accounts; the observed curve
is flagged wherever it exits the pointwise percentile band. All curves
coincide at k = n by construction.
"""

from __future__ import annotations

import numpy as np

from .classifier import STANCE_APRUEBO, STANCE_RECHAZO


def _ranked_ids(ranking) -> list[int]:
    return [r.account_id if hasattr(r, "account_id") else r for r in ranking]


def stance_anomaly_curve(ranking, stances: dict[int, str]):
    """Fraction of apruebo among the top-k anomalous accounts, k = 1..n.

    ``ranking`` lists accounts (or records) in descending anomaly order and
    must cover every account with a stance; undisclosed accounts are
    excluded from the curve. Returns (kept account ids, curve array).
    """
    ids = _ranked_ids(ranking)
    missing = set(stances) - set(ids)
    if missing:
        raise ValueError(
            f"ranking does not cover {len(missing)} predicted accounts")
    kept = [a for a in ids
            if stances.get(a) in (STANCE_APRUEBO, STANCE_RECHAZO)]
    if not kept:
        raise ValueError("no disclosed accounts in ranking")
    is_apruebo = np.array([stances[a] == STANCE_APRUEBO for a in kept],
                          dtype=np.float64)
    curve = np.cumsum(is_apruebo) / np.arange(1, len(kept) + 1)
    return kept, curve


def permutation_envelope(ranking, stances: dict[int, str], M: int = 100,
                         seed: int = 0, lo_pct: float = 2.5,
                         hi_pct: float = 97.5) -> dict:
    """Pointwise percentile band over M label permutations.

    Returns arrays keyed k (1..n), observed, lo, hi and outside (bool flags
    where the observed curve exits the band). Per-permutation generators
    are spawned from the master seed.
    """
    if M < 2:
        raise ValueError("need at least 2 permutations")
    kept, observed = stance_anomaly_curve(ranking, stances)
    n = len(kept)
    labels = np.array([stances[a] == STANCE_APRUEBO for a in kept],
                      dtype=np.float64)
    denom = np.arange(1, n + 1, dtype=np.float64)
    curves = np.empty((M, n))
    for m, child in enumerate(np.random.SeedSequence(seed).spawn(M)):
        rng = np.random.default_rng(child)
        curves[m] = np.cumsum(rng.permutation(labels)) / denom
    lo = np.percentile(curves, lo_pct, axis=0)
    hi = np.percentile(curves, hi_pct, axis=0)
    outside = (observed < lo) | (observed > hi)
    return {
        "k": np.arange(1, n + 1),
        "account_ids": kept,
        "observed": observed,
        "lo": lo,
        "hi": hi,
        "outside": outside,
    }
