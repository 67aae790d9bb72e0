"""Behavioral account features and Isolation Forest anomaly scoring.

Each account gets a 15-dimensional behavior vector (activity rates, profile
shape, interaction-component membership, account age and global rates). An
ensemble of random binary-partition trees is grown on subsamples; the
anomaly score is 2^(-E[h]/c(psi)) with h the isolation path length. Higher
score = more anomalous (the original convention of the method; axis labels
in any report state it explicitly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .botcrit import digit_count
from .corpus import Corpus

EULER_GAMMA = 0.5772156649

FEATURE_NAMES = (
    "active_days",
    "rate_original",
    "rate_retweet",
    "rate_quote",
    "rate_reply",
    "daily_rhythm",
    "ff_ratio",
    "username_digits",
    "default_image",
    "in_interactions",
    "component_rank",
    "account_age_days",
    "rate_statuses",
    "rate_friends",
    "rate_followers",
)


@dataclass(frozen=True)
class BehaviorFeatures:
    active_days: int
    rate_original: float
    rate_retweet: float
    rate_quote: float
    rate_reply: float
    daily_rhythm: float
    ff_ratio: float
    username_digits: int
    default_image: int
    in_interactions: int
    component_rank: int
    account_age_days: int
    rate_statuses: float
    rate_friends: float
    rate_followers: float

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES],
                        dtype=np.float64)


def interaction_components(corpus: Corpus) -> list[list[int]]:
    """Weakly connected components of the union interaction graph.

    Edges are retweet/reply/quote pairs between corpus accounts (direction
    ignored). Components are sorted by size descending, ties by smallest
    member account id; members are sorted ascending.
    """
    adj: dict[int, set[int]] = {}
    for t in corpus.tweets:
        tgt = t.target_account_id
        if t.kind == "original" or tgt is None:
            continue
        if tgt not in corpus.accounts or tgt == t.author_id:
            continue
        adj.setdefault(t.author_id, set()).add(tgt)
        adj.setdefault(tgt, set()).add(t.author_id)
    seen: set[int] = set()
    components: list[list[int]] = []
    for start in sorted(adj):
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        comp = []
        while stack:
            node = stack.pop()
            comp.append(node)
            for nb in adj[node]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        components.append(sorted(comp))
    components.sort(key=lambda c: (-len(c), c[0]))
    return components


def behavior_features(corpus: Corpus,
                      components: list[list[int]] | None = None,
                      ) -> dict[int, BehaviorFeatures]:
    """Deterministic behavior vector per account with >= 1 tweet."""
    if corpus.window is None:
        raise ValueError("corpus has no study window; filter it first")
    window_end = corpus.window[1]
    if components is None:
        components = interaction_components(corpus)
    comp_rank = {}
    for rank, comp in enumerate(components):
        for aid in comp:
            comp_rank[aid] = rank
    isolate_rank = len(components)

    days: dict[int, set] = {}
    kind_counts: dict[int, dict[str, int]] = {}
    for t in corpus.tweets:
        days.setdefault(t.author_id, set()).add(t.created_at.date())
        kc = kind_counts.setdefault(
            t.author_id, {"original": 0, "retweet": 0, "quote": 0, "reply": 0})
        kc[t.kind] += 1

    out: dict[int, BehaviorFeatures] = {}
    for aid in corpus.sorted_account_ids():
        if aid not in days:
            continue  # zero tweets; cannot occur after filter_corpus
        acc = corpus.accounts[aid]
        active = len(days[aid])
        kc = kind_counts[aid]
        total = sum(kc.values())
        age = max((window_end - acc.created_at.date()).days, 1)
        in_graph = aid in comp_rank
        out[aid] = BehaviorFeatures(
            active_days=active,
            rate_original=math.log1p(kc["original"]) / active,
            rate_retweet=math.log1p(kc["retweet"]) / active,
            rate_quote=math.log1p(kc["quote"]) / active,
            rate_reply=math.log1p(kc["reply"]) / active,
            daily_rhythm=total / active,
            ff_ratio=acc.friends / (acc.followers + 1),
            username_digits=digit_count(acc.username),
            default_image=int(acc.default_profile_image),
            in_interactions=int(in_graph),
            component_rank=comp_rank.get(aid, isolate_rank),
            account_age_days=age,
            rate_statuses=math.log1p(acc.statuses) / age,
            rate_friends=math.log1p(acc.friends) / age,
            rate_followers=math.log1p(acc.followers) / age,
        )
    return out


def features_matrix(features: dict[int, BehaviorFeatures]):
    """Sorted account ids and the (n, 15) float64 matrix."""
    ids = sorted(features)
    X = np.empty((len(ids), len(FEATURE_NAMES)))
    for i, aid in enumerate(ids):
        X[i] = features[aid].as_vector()
    return ids, X


def path_norm(n: int) -> float:
    """Average unsuccessful-search path length c(n) in a binary tree."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n


@dataclass
class IsolationForestModel:
    feat: np.ndarray       # int64, -1 for external nodes
    thr: np.ndarray        # float64; x[feat] < thr goes left
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # external: depth + c(training count)
    tree_ptr: np.ndarray
    t: int
    psi: int               # effective subsample size
    c_norm: float
    n_features: int
    seed: int


@dataclass(frozen=True)
class AnomalyRecord:
    account_id: int
    features: BehaviorFeatures | None
    score: float
    rank: int


def fit_iforest(X, t: int = 100, psi: int = 256,
                seed: int = 0) -> IsolationForestModel:
    """Grow t isolation trees on subsamples of size min(psi, n).

    Split feature is uniform among columns that vary within the node; split
    value is uniform in the node's range. Height limit is ceil(log2 psi).
    Per-tree seeds come from spawning the master seed, so prefixes of the
    tree sequence are stable when t grows.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 observations")
    psi_eff = min(psi, n)
    if psi_eff < 2:
        raise ValueError("subsample size must be at least 2")
    hlim = math.ceil(math.log2(psi_eff))
    nodes = {"feat": [], "thr": [], "left": [], "right": [], "value": []}

    def alloc():
        gid = len(nodes["feat"])
        nodes["feat"].append(-1)
        nodes["thr"].append(0.0)
        nodes["left"].append(0)
        nodes["right"].append(0)
        nodes["value"].append(0.0)
        return gid

    def build(rng, idx, depth):
        gid = alloc()
        if depth >= hlim or len(idx) <= 1:
            nodes["value"][gid] = depth + path_norm(len(idx))
            return gid
        sub = X[idx]
        mins = sub.min(axis=0)
        maxs = sub.max(axis=0)
        eligible = np.flatnonzero(maxs > mins)
        if len(eligible) == 0:
            nodes["value"][gid] = depth + path_norm(len(idx))
            return gid
        f = int(eligible[rng.integers(len(eligible))])
        s = rng.uniform(mins[f], maxs[f])
        mask = sub[:, f] < s
        nodes["feat"][gid] = f
        nodes["thr"][gid] = float(s)
        lid = build(rng, idx[mask], depth + 1)
        rid = build(rng, idx[~mask], depth + 1)
        nodes["left"][gid] = lid
        nodes["right"][gid] = rid
        return gid

    tree_ptr = [0]
    for child in np.random.SeedSequence(seed).spawn(t):
        rng = np.random.default_rng(child)
        idx = rng.choice(n, size=psi_eff, replace=False)
        build(rng, idx, 0)
        tree_ptr.append(len(nodes["feat"]))

    return IsolationForestModel(
        feat=np.array(nodes["feat"], dtype=np.int64),
        thr=np.array(nodes["thr"], dtype=np.float64),
        left=np.array(nodes["left"], dtype=np.int64),
        right=np.array(nodes["right"], dtype=np.int64),
        value=np.array(nodes["value"], dtype=np.float64),
        tree_ptr=np.array(tree_ptr, dtype=np.int64),
        t=t,
        psi=psi_eff,
        c_norm=path_norm(psi_eff),
        n_features=X.shape[1],
        seed=seed,
    )


def average_path_lengths(model: IsolationForestModel, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"feature count mismatch: model has {model.n_features}, "
            f"X has {X.shape[1]}")
    sums = np.zeros(X.shape[0])
    _kernels.iforest_paths(X, model.feat, model.thr, model.left, model.right,
                           model.value, model.tree_ptr, sums)
    return sums / model.t


def score(model: IsolationForestModel, X) -> np.ndarray:
    """Anomaly score 2^(-E[h]/c(psi)), in (0, 1], higher = more anomalous."""
    return 2.0 ** (-average_path_lengths(model, X) / model.c_norm)


def score_accounts(model: IsolationForestModel, X, account_ids,
                   features: dict[int, BehaviorFeatures] | None = None,
                   ) -> list[AnomalyRecord]:
    """One ranked record per account, descending score, ties by account id."""
    scores = score(model, X)
    order = sorted(range(len(account_ids)),
                   key=lambda i: (-scores[i], account_ids[i]))
    records = []
    for rank, i in enumerate(order, start=1):
        aid = account_ids[i]
        records.append(AnomalyRecord(
            account_id=aid,
            features=features.get(aid) if features else None,
            score=float(scores[i]),
            rank=rank,
        ))
    return records


def anomaly_curves(records: list[AnomalyRecord], corpus: Corpus) -> dict:
    """Score-vs-rank series and cumulative tweet fraction by anomaly rank."""
    per_account = {aid: 0 for aid in corpus.accounts}
    for t in corpus.tweets:
        per_account[t.author_id] += 1
    total = sum(per_account.values())
    ranks = np.arange(1, len(records) + 1)
    scores = np.array([r.score for r in records])
    tweets = np.array([per_account.get(r.account_id, 0) for r in records],
                      dtype=np.float64)
    cum = np.cumsum(tweets) / total if total else np.zeros(len(records))
    return {"rank": ranks, "score": scores, "cum_tweet_fraction": cum}
