"""Gradient-boosted decision trees for stance propagation.

Trees are regression trees fit sequentially on logistic-loss gradients and
curvatures; leaf weight is -(sum gradient)/(sum curvature + L2). Split
search is sparsity-aware: explicit zeros are treated as missing and routed
to a learned default direction. Features are pre-binned (at most
``max_bins`` quantile bins per column, bin edges taken from actual data
values) so training cost scales with the number of nonzeros.

The per-account stance probability is the logistic link over the additive
tree scores. Labels: apruebo when p >= threshold, rechazo when
(1 - p) >= threshold, undisclosed otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import _kernels

STANCE_APRUEBO = "apruebo"
STANCE_RECHAZO = "rechazo"
STANCE_UNDISCLOSED = "undisclosed"


@dataclass
class GBTParams:
    rounds: int = 200
    max_depth: int = 6
    learning_rate: float = 0.1
    l2: float = 1.0
    max_bins: int = 256
    min_split_gain: float = 1e-12


@dataclass
class GBTModel:
    """Flattened forest; node ids are global, tree_ptr marks the roots."""

    feat: np.ndarray          # int64, -1 for leaves
    thr: np.ndarray           # float64 raw-value threshold (value <= thr -> left)
    left: np.ndarray          # int64 global child ids
    right: np.ndarray
    default_left: np.ndarray  # int64 0/1, direction for missing (zero) values
    value: np.ndarray         # float64 leaf weight (unscaled by shrinkage)
    tree_ptr: np.ndarray      # int64, len rounds+1
    base_score: float
    shrinkage: float
    n_rounds: int
    n_features: int
    l2: float
    max_depth: int
    train_loss: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class StancePrediction:
    account_id: int
    p_apruebo: float
    label: str


class _BinnedMatrix:
    """CSC layout of binned nonzero entries plus per-column bin edges."""

    def __init__(self, X, max_bins: int):
        X = sparse.csc_matrix(X, dtype=np.float64, copy=True)
        X.eliminate_zeros()
        X.sort_indices()
        self.n_rows, self.n_cols = X.shape
        self.edges: list[np.ndarray] = []
        indptr = X.indptr
        bins_in_col = np.zeros(X.nnz, dtype=np.int64)
        n_bins = np.zeros(self.n_cols, dtype=np.int64)
        for j in range(self.n_cols):
            lo, hi = indptr[j], indptr[j + 1]
            vals = X.data[lo:hi]
            if len(vals) == 0:
                self.edges.append(np.empty(0))
                continue
            uniq = np.unique(vals)
            if len(uniq) > max_bins:
                qs = np.linspace(0.0, 1.0, max_bins)
                cand = np.quantile(vals, qs, method="lower")
                uniq = np.unique(np.append(cand, uniq[-1]))
            self.edges.append(uniq)
            n_bins[j] = len(uniq)
            bins_in_col[lo:hi] = np.searchsorted(uniq, vals, side="left")
        self.col_starts = np.concatenate(([0], np.cumsum(n_bins)))
        self.total_bins = int(self.col_starts[-1])
        self.indptr = indptr.astype(np.int64)
        self.entry_rows = X.indices.astype(np.int64)
        self.bins_in_col = bins_in_col
        self.entry_flatbins = self.col_starts[:-1].repeat(np.diff(indptr)) + bins_in_col

    def col_slice(self, j: int):
        lo, hi = self.indptr[j], self.indptr[j + 1]
        return self.entry_rows[lo:hi], self.bins_in_col[lo:hi]


def _grow_tree(binned: _BinnedMatrix, g, h, params: GBTParams, nodes: dict):
    """Grow one tree level by level; returns leaf id per training row.

    ``nodes`` holds the global growing node arrays (python lists).
    """
    n = binned.n_rows
    lam = params.l2
    node_of_row = np.zeros(n, dtype=np.int64)
    leaf_of_row = np.full(n, -1, dtype=np.int64)

    def alloc():
        gid = len(nodes["feat"])
        for key in ("feat", "thr", "left", "right", "default_left", "value"):
            nodes[key].append(0 if key != "thr" else 0.0)
        nodes["feat"][gid] = -1
        nodes["value"][gid] = 0.0
        return gid

    root = alloc()
    frontier = [{"gid": root, "G": float(np.sum(g)), "H": float(np.sum(h)),
                 "C": n, "depth": 0}]

    while frontier:
        depth = frontier[0]["depth"]
        node_g = np.array([f["G"] for f in frontier])
        node_h = np.array([f["H"] for f in frontier])
        node_c = np.array([f["C"] for f in frontier], dtype=np.int64)
        if depth < params.max_depth and binned.total_bins > 0:
            hg, hh, hc = _kernels.hist_accumulate(
                binned.entry_rows, binned.entry_flatbins, node_of_row,
                g, h, len(frontier), binned.total_bins)
            (best_gain, best_col, best_bin, best_dir,
             left_g, left_h, left_c) = _kernels.split_scan(
                hg, hh, hc, node_g, node_h, node_c,
                binned.col_starts, lam, params.min_split_gain)
        else:
            best_col = np.full(len(frontier), -1, dtype=np.int64)

        new_frontier = []
        node_of_row_new = np.full(n, -1, dtype=np.int64)
        next_slot = 0
        for s, fr in enumerate(frontier):
            gid = fr["gid"]
            if best_col[s] < 0:
                nodes["feat"][gid] = -1
                nodes["value"][gid] = -fr["G"] / (fr["H"] + lam)
                leaf_of_row[node_of_row == s] = gid
                continue
            j = int(best_col[s])
            in_col_bin = int(best_bin[s] - binned.col_starts[j])
            lgid, rgid = alloc(), alloc()
            nodes["feat"][gid] = j
            nodes["thr"][gid] = float(binned.edges[j][in_col_bin])
            nodes["left"][gid] = lgid
            nodes["right"][gid] = rgid
            nodes["default_left"][gid] = int(best_dir[s])
            ls, rs = next_slot, next_slot + 1
            next_slot += 2
            default_slot = ls if best_dir[s] else rs
            node_of_row_new[node_of_row == s] = default_slot
            col_rows, col_bins = binned.col_slice(j)
            _kernels.route_rows(col_rows, col_bins, node_of_row, s,
                                in_col_bin, ls, rs, node_of_row_new)
            lG, lH, lC = float(left_g[s]), float(left_h[s]), int(left_c[s])
            new_frontier.append({"gid": lgid, "G": lG, "H": lH, "C": lC,
                                 "depth": depth + 1})
            new_frontier.append({"gid": rgid, "G": fr["G"] - lG,
                                 "H": fr["H"] - lH, "C": fr["C"] - lC,
                                 "depth": depth + 1})
        node_of_row = node_of_row_new
        frontier = new_frontier
    return leaf_of_row


def train_gbt(X, y, params: GBTParams | None = None, seed: int = 0) -> GBTModel:
    """Fit the boosted ensemble on binary stance labels (1 = apruebo).

    Deterministic: the procedure draws no random numbers (``seed`` is part
    of the signature for pipeline bookkeeping). Training log-loss is
    recorded after every round.
    """
    params = params or GBTParams()
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.shape[0]
    if X.shape[0] != n:
        raise ValueError(f"X has {X.shape[0]} rows but y has {n}")
    if X.shape[1] == 0 or n == 0:
        raise ValueError("empty feature matrix")
    classes, counts = np.unique(y, return_counts=True)
    if not set(classes).issubset({0.0, 1.0}):
        raise ValueError(f"labels must be binary 0/1, got {classes}")
    if len(classes) < 2 or counts.min() < 2:
        raise ValueError("need at least 2 examples of each class")

    binned = _BinnedMatrix(X, params.max_bins)
    base = 0.0
    raw = np.full(n, base)
    eta = params.learning_rate
    nodes = {"feat": [], "thr": [], "left": [], "right": [],
             "default_left": [], "value": []}
    tree_ptr = [0]
    losses = []
    for _ in range(params.rounds):
        p = 1.0 / (1.0 + np.exp(-raw))
        g = p - y
        h = p * (1.0 - p)
        leaf_of_row = _grow_tree(binned, g, h, params, nodes)
        tree_ptr.append(len(nodes["feat"]))
        values = np.array(nodes["value"], dtype=np.float64)
        raw = raw + eta * values[leaf_of_row]
        # stable -mean(y ln p + (1-y) ln(1-p))
        losses.append(float(np.mean(np.logaddexp(0.0, raw) - y * raw)))

    return GBTModel(
        feat=np.array(nodes["feat"], dtype=np.int64),
        thr=np.array(nodes["thr"], dtype=np.float64),
        left=np.array(nodes["left"], dtype=np.int64),
        right=np.array(nodes["right"], dtype=np.int64),
        default_left=np.array(nodes["default_left"], dtype=np.int64),
        value=np.array(nodes["value"], dtype=np.float64),
        tree_ptr=np.array(tree_ptr, dtype=np.int64),
        base_score=base,
        shrinkage=eta,
        n_rounds=params.rounds,
        n_features=binned.n_cols,
        l2=params.l2,
        max_depth=params.max_depth,
        train_loss=losses,
    )


def predict_margin(model: GBTModel, X, batch_rows: int = 4096) -> np.ndarray:
    """Raw additive score base + shrinkage * sum of tree outputs."""
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"feature count mismatch: model has {model.n_features}, "
            f"X has {X.shape[1]}")
    n = X.shape[0]
    out = np.full(n, model.base_score)
    is_sparse = sparse.issparse(X)
    Xc = X.tocsr() if is_sparse else np.ascontiguousarray(X, dtype=np.float64)
    for lo in range(0, n, batch_rows):
        hi = min(lo + batch_rows, n)
        block = Xc[lo:hi].toarray().astype(np.float64) if is_sparse \
            else np.ascontiguousarray(Xc[lo:hi])
        _kernels.predict_margins(block, model.feat, model.thr, model.left,
                                 model.right, model.default_left, model.value,
                                 model.tree_ptr, model.shrinkage, out[lo:hi])
    return out


def predict_proba(model: GBTModel, X) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-predict_margin(model, X)))


def label_from_probability(p: float, threshold: float = 0.55) -> str:
    """Threshold rule; inclusive on both sides (p = 0.55 is labeled)."""
    if not threshold > 0.5:
        raise ValueError("threshold must exceed 0.5")
    if p >= threshold:
        return STANCE_APRUEBO
    if (1.0 - p) >= threshold:
        return STANCE_RECHAZO
    return STANCE_UNDISCLOSED


def predict_stances(model: GBTModel, X, account_ids,
                    threshold: float = 0.55) -> list[StancePrediction]:
    """One prediction per account, in the given account order."""
    probs = predict_proba(model, X)
    if len(account_ids) != len(probs):
        raise ValueError("account_ids length does not match X rows")
    return [StancePrediction(aid, float(p), label_from_probability(float(p), threshold))
            for aid, p in zip(account_ids, probs)]


def effective_stances(predictions, seed_labels) -> dict[int, str]:
    """Final stance per account: the seed label where present, else the
    classifier label (which may be undisclosed)."""
    out = {p.account_id: p.label for p in predictions}
    for aid, lab in seed_labels.items():
        if aid in out:
            out[aid] = lab.stance
    return out


def stance_shares(predictions) -> dict[str, float]:
    """Percentage of accounts per stance bucket (sums to 100 for nonempty)."""
    labels = [p.label if isinstance(p, StancePrediction) else p
              for p in predictions]
    n = len(labels)
    shares = {}
    for stance in (STANCE_APRUEBO, STANCE_RECHAZO, STANCE_UNDISCLOSED):
        shares[stance] = 100.0 * labels.count(stance) / n if n else 0.0
    return shares


def log_odds_terms(counts_a, counts_r, alpha: float = 0.5,
                   names=None) -> list[tuple[str, float]]:
    """Smoothed log-odds association of each feature with the apruebo group.

    score(t) = ln((f_a+a)/(N_a-f_a+a)) - ln((f_r+a)/(N_r-f_r+a)) with N_g
    the total occurrences in group g. Positive scores lean apruebo. Sorted
    by descending score, ties broken by name.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    fa = np.asarray(counts_a, dtype=np.float64)
    fr = np.asarray(counts_r, dtype=np.float64)
    if fa.shape != fr.shape:
        raise ValueError("count vectors must align")
    na = fa.sum()
    nr = fr.sum()
    if na == 0 or nr == 0:
        raise ValueError("empty stance group (no feature occurrences)")
    score = (np.log((fa + alpha) / (na - fa + alpha))
             - np.log((fr + alpha) / (nr - fr + alpha)))
    if names is None:
        names = [str(j) for j in range(len(fa))]
    ranked = sorted(zip(names, score.tolist()), key=lambda kv: (-kv[1], kv[0]))
    return ranked


def save_model(model: GBTModel, path) -> None:
    """Structured text dump; floats use repr for exact round-trip."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("stancescope-gbt 1\n")
        fh.write(f"base_score {model.base_score!r}\n")
        fh.write(f"shrinkage {model.shrinkage!r}\n")
        fh.write(f"rounds {model.n_rounds}\n")
        fh.write(f"n_features {model.n_features}\n")
        fh.write(f"l2 {model.l2!r}\n")
        fh.write(f"max_depth {model.max_depth}\n")
        for t in range(model.n_rounds):
            lo, hi = model.tree_ptr[t], model.tree_ptr[t + 1]
            fh.write(f"tree {t} {hi - lo}\n")
            for gid in range(lo, hi):
                i = gid - lo
                if model.feat[gid] < 0:
                    fh.write(f"node {i} leaf {float(model.value[gid])!r}\n")
                else:
                    d = "L" if model.default_left[gid] else "R"
                    fh.write(
                        f"node {i} split {int(model.feat[gid])} "
                        f"{float(model.thr[gid])!r} "
                        f"{int(model.left[gid] - lo)} {int(model.right[gid] - lo)} {d}\n")
        for r, loss in enumerate(model.train_loss):
            fh.write(f"train_loss {r} {loss!r}\n")
        fh.write("end\n")


def load_model(path) -> GBTModel:
    meta = {}
    feat, thr, left, right, dfl, value = [], [], [], [], [], []
    tree_ptr = [0]
    losses = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "stancescope-gbt 1":
            raise ValueError(f"not a gbt model file: {header!r}")
        base = 0
        for line in fh:
            parts = line.split()
            if not parts or parts[0] == "end":
                continue
            key = parts[0]
            if key == "tree":
                base = len(feat)
                tree_ptr.append(base + int(parts[2]))
            elif key == "node":
                if parts[2] == "leaf":
                    feat.append(-1)
                    thr.append(0.0)
                    left.append(0)
                    right.append(0)
                    dfl.append(0)
                    value.append(float(parts[3]))
                else:
                    feat.append(int(parts[3]))
                    thr.append(float(parts[4]))
                    left.append(base + int(parts[5]))
                    right.append(base + int(parts[6]))
                    dfl.append(1 if parts[7] == "L" else 0)
                    value.append(0.0)
            elif key == "train_loss":
                losses.append(float(parts[2]))
            else:
                meta[key] = parts[1]
    return GBTModel(
        feat=np.array(feat, dtype=np.int64),
        thr=np.array(thr, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        default_left=np.array(dfl, dtype=np.int64),
        value=np.array(value, dtype=np.float64),
        tree_ptr=np.array(tree_ptr, dtype=np.int64),
        base_score=float(meta["base_score"]),
        shrinkage=float(meta["shrinkage"]),
        n_rounds=int(meta["rounds"]),
        n_features=int(meta["n_features"]),
        l2=float(meta["l2"]),
        max_depth=int(meta["max_depth"]),
        train_loss=losses,
    )
