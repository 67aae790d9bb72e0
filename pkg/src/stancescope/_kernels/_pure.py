"""Pure-numpy fallback kernels.

These mirror the compiled kernels in `_core.pyx` operation for operation:
accumulations run in the same element order and gains use the same
expressions, so a model trained on either backend is bit-identical. Keep the
two files in sync when touching either.
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure"


def hist_accumulate(entry_rows, entry_flatbins, node_of_row, g, h,
                    n_nodes, total_bins):
    """Gradient/hessian/count histograms over nonzero binned entries.

    Entries whose row is not assigned to an active node (slot < 0) are
    skipped. Accumulation follows entry order.
    """
    hg = np.zeros(n_nodes * total_bins, dtype=np.float64)
    hh = np.zeros(n_nodes * total_bins, dtype=np.float64)
    hc = np.zeros(n_nodes * total_bins, dtype=np.int64)
    nodes = node_of_row[entry_rows]
    m = nodes >= 0
    rows = entry_rows[m]
    flat = nodes[m].astype(np.int64) * total_bins + entry_flatbins[m]
    np.add.at(hg, flat, g[rows])
    np.add.at(hh, flat, h[rows])
    np.add.at(hc, flat, 1)
    shape = (n_nodes, total_bins)
    return hg.reshape(shape), hh.reshape(shape), hc.reshape(shape)


def split_scan(hg, hh, hc, node_g, node_h, node_c, col_starts, lam, min_gain):
    """Best sparsity-aware split per active node.

    Missing (zero) entries go to a learned default side; both directions are
    scored. Cumulative left sums are a running total over the flat bin
    layout minus the column-start prefix (same arithmetic as the compiled
    scan). Ties keep the first candidate in (feature, bin) order preferring
    missing->right.

    Returns per-node arrays (best_gain, best_col, best_flatbin, best_dir,
    left_g, left_h, left_c); best_col -1 means no usable split. left_*
    describe the left child including missing mass when best_dir is 1.
    """
    n_nodes, total_bins = hg.shape
    n_cols = len(col_starts) - 1

    colof = np.zeros(total_bins, dtype=np.int64)
    for j in range(n_cols):
        colof[col_starts[j]:col_starts[j + 1]] = j
    # index of the element just before each column start (clamped for col 0)
    prev_idx = np.maximum(col_starts[colof] - 1, 0)
    at_first_col = col_starts[colof] == 0
    last_idx = col_starts[colof + 1] - 1

    best_gain = np.full(n_nodes, min_gain, dtype=np.float64)
    best_col = np.full(n_nodes, -1, dtype=np.int64)
    best_bin = np.full(n_nodes, -1, dtype=np.int64)
    best_dir = np.zeros(n_nodes, dtype=np.int64)
    left_g = np.zeros(n_nodes, dtype=np.float64)
    left_h = np.zeros(n_nodes, dtype=np.float64)
    left_c = np.zeros(n_nodes, dtype=np.int64)

    for nd in range(n_nodes):
        pg, ph, pc = node_g[nd], node_h[nd], node_c[nd]
        if pc < 2:
            continue
        sg = np.cumsum(hg[nd])
        sh = np.cumsum(hh[nd])
        sc = np.cumsum(hc[nd])
        pre_g = np.where(at_first_col, 0.0, sg[prev_idx])
        pre_h = np.where(at_first_col, 0.0, sh[prev_idx])
        pre_c = np.where(at_first_col, 0, sc[prev_idx])
        cg = sg - pre_g
        ch = sh - pre_h
        cc = sc - pre_c
        miss_g = pg - (sg[last_idx] - pre_g)
        miss_h = ph - (sh[last_idx] - pre_h)
        miss_c = pc - (sc[last_idx] - pre_c)

        parent = pg * pg / (ph + lam)

        # direction 0: missing goes right
        ga_l, ha_l, ca_l = cg, ch, cc
        ga_r = pg - ga_l
        ha_r = ph - ha_l
        ca_r = pc - ca_l
        gain_a = ga_l * ga_l / (ha_l + lam) + ga_r * ga_r / (ha_r + lam) - parent
        gain_a = np.where((ca_l >= 1) & (ca_r >= 1), gain_a, -np.inf)

        # direction 1: missing goes left
        gb_l = cg + miss_g
        hb_l = ch + miss_h
        cb_l = cc + miss_c
        gb_r = pg - gb_l
        hb_r = ph - hb_l
        cb_r = pc - cb_l
        gain_b = gb_l * gb_l / (hb_l + lam) + gb_r * gb_r / (hb_r + lam) - parent
        gain_b = np.where((cb_l >= 1) & (cb_r >= 1), gain_b, -np.inf)

        use_b = gain_b > gain_a
        gain = np.where(use_b, gain_b, gain_a)
        if gain.size == 0:
            continue
        p = int(np.argmax(gain))
        if gain[p] > min_gain:
            best_gain[nd] = gain[p]
            best_col[nd] = colof[p]
            best_bin[nd] = p
            if use_b[p]:
                best_dir[nd] = 1
                left_g[nd] = gb_l[p]
                left_h[nd] = hb_l[p]
                left_c[nd] = cb_l[p]
            else:
                best_dir[nd] = 0
                left_g[nd] = ga_l[p]
                left_h[nd] = ha_l[p]
                left_c[nd] = ca_l[p]
    return best_gain, best_col, best_bin, best_dir, left_g, left_h, left_c


def route_rows(col_rows, col_bins, node_of_row_old, node_id, split_bin,
               left_slot, right_slot, node_of_row_new):
    """Send rows with a nonzero entry in the split column to a child slot.

    Callers pre-fill `node_of_row_new` with the default (missing) child for
    every row of `node_id`; this fixes the rows that do have an entry.
    `split_bin` is the in-column bin index.
    """
    m = node_of_row_old[col_rows] == node_id
    rows = col_rows[m]
    node_of_row_new[rows] = np.where(col_bins[m] <= split_bin,
                                     left_slot, right_slot)


def predict_margins(X, feat, thr, left, right, default_left, value,
                    tree_ptr, eta, out):
    """Accumulate eta * leaf_value per tree into `out`.

    X is a dense row batch; exact zeros are treated as missing and follow
    the stored default direction. Trees are applied in order.
    """
    n = X.shape[0]
    rows = np.arange(n)
    for t in range(len(tree_ptr) - 1):
        node = np.full(n, tree_ptr[t], dtype=np.int64)
        while True:
            f = feat[node]
            active = f >= 0
            if not active.any():
                break
            an = node[active]
            v = X[rows[active], f[active]]
            miss = v == 0.0
            go_left = np.where(miss, default_left[an] != 0, v <= thr[an])
            node[active] = np.where(go_left, left[an], right[an])
        out += eta * value[node]
    return out


def iforest_paths(X, feat, thr, left, right, value, tree_ptr, out):
    """Sum per-tree isolation path lengths into `out`.

    Leaf `value` holds depth + c(training count); internal nodes compare
    x[feature] < threshold to go left. Trees are applied in order.
    """
    n = X.shape[0]
    rows = np.arange(n)
    for t in range(len(tree_ptr) - 1):
        node = np.full(n, tree_ptr[t], dtype=np.int64)
        while True:
            f = feat[node]
            active = f >= 0
            if not active.any():
                break
            an = node[active]
            v = X[rows[active], f[active]]
            node[active] = np.where(v < thr[an], left[an], right[an])
        out += value[node]
    return out
