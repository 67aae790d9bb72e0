# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for boosting and isolation-forest scoring.

Mirrors `_pure.py` operation for operation; accumulation order and gain
expressions must stay identical so both backends produce bit-identical
models. Keep the two files in sync when touching either.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"

cdef double NEG_INF = float("-inf")


def hist_accumulate(cnp.int64_t[::1] entry_rows,
                    cnp.int64_t[::1] entry_flatbins,
                    cnp.int64_t[::1] node_of_row,
                    cnp.float64_t[::1] g,
                    cnp.float64_t[::1] h,
                    Py_ssize_t n_nodes,
                    Py_ssize_t total_bins):
    hg_arr = np.zeros(n_nodes * total_bins, dtype=np.float64)
    hh_arr = np.zeros(n_nodes * total_bins, dtype=np.float64)
    hc_arr = np.zeros(n_nodes * total_bins, dtype=np.int64)
    cdef cnp.float64_t[::1] hg = hg_arr
    cdef cnp.float64_t[::1] hh = hh_arr
    cdef cnp.int64_t[::1] hc = hc_arr
    cdef Py_ssize_t i, r
    cdef cnp.int64_t nd, flat
    for i in range(entry_rows.shape[0]):
        r = entry_rows[i]
        nd = node_of_row[r]
        if nd < 0:
            continue
        flat = nd * total_bins + entry_flatbins[i]
        hg[flat] += g[r]
        hh[flat] += h[r]
        hc[flat] += 1
    shape = (n_nodes, total_bins)
    return hg_arr.reshape(shape), hh_arr.reshape(shape), hc_arr.reshape(shape)


def split_scan(cnp.float64_t[:, ::1] hg,
               cnp.float64_t[:, ::1] hh,
               cnp.int64_t[:, ::1] hc,
               cnp.float64_t[::1] node_g,
               cnp.float64_t[::1] node_h,
               cnp.int64_t[::1] node_c,
               cnp.int64_t[::1] col_starts,
               double lam,
               double min_gain):
    cdef Py_ssize_t n_nodes = hg.shape[0]
    cdef Py_ssize_t total_bins = hg.shape[1]
    cdef Py_ssize_t n_cols = col_starts.shape[0] - 1

    best_gain_arr = np.full(n_nodes, min_gain, dtype=np.float64)
    best_col_arr = np.full(n_nodes, -1, dtype=np.int64)
    best_bin_arr = np.full(n_nodes, -1, dtype=np.int64)
    best_dir_arr = np.zeros(n_nodes, dtype=np.int64)
    left_g_arr = np.zeros(n_nodes, dtype=np.float64)
    left_h_arr = np.zeros(n_nodes, dtype=np.float64)
    left_c_arr = np.zeros(n_nodes, dtype=np.int64)
    cdef cnp.float64_t[::1] best_gain = best_gain_arr
    cdef cnp.int64_t[::1] best_col = best_col_arr
    cdef cnp.int64_t[::1] best_bin = best_bin_arr
    cdef cnp.int64_t[::1] best_dir = best_dir_arr
    cdef cnp.float64_t[::1] left_g = left_g_arr
    cdef cnp.float64_t[::1] left_h = left_h_arr
    cdef cnp.int64_t[::1] left_c = left_c_arr

    cdef Py_ssize_t nd, j, p, start, end
    cdef double pg, ph, parent, run_g, run_h, pre_g, pre_h
    cdef double colsum_g, colsum_h, miss_g, miss_h
    cdef double cg, ch, ga_l, ha_l, ga_r, ha_r, gb_l, hb_l, gb_r, hb_r
    cdef double gain_a, gain_b, gain, b_gain
    cdef cnp.int64_t pc, run_c, pre_c, colsum_c, miss_c
    cdef cnp.int64_t cc, ca_l, ca_r, cb_l, cb_r
    cdef cnp.int64_t b_col, b_bin, b_dir
    cdef double b_lg, b_lh
    cdef cnp.int64_t b_lc
    cdef int use_b

    for nd in range(n_nodes):
        pg = node_g[nd]
        ph = node_h[nd]
        pc = node_c[nd]
        if pc < 2:
            continue
        parent = pg * pg / (ph + lam)
        b_gain = min_gain
        b_col = -1
        b_bin = -1
        b_dir = 0
        b_lg = 0.0
        b_lh = 0.0
        b_lc = 0
        run_g = 0.0
        run_h = 0.0
        run_c = 0
        for j in range(n_cols):
            start = col_starts[j]
            end = col_starts[j + 1]
            if start == end:
                continue
            pre_g = run_g
            pre_h = run_h
            pre_c = run_c
            # same cumsum-minus-prefix arithmetic as the pure backend:
            # colsum_j = S[end-1] - prefix
            for p in range(start, end):
                run_g += hg[nd, p]
                run_h += hh[nd, p]
                run_c += hc[nd, p]
            colsum_g = run_g - pre_g
            colsum_h = run_h - pre_h
            colsum_c = run_c - pre_c
            miss_g = pg - colsum_g
            miss_h = ph - colsum_h
            miss_c = pc - colsum_c
            run_g = pre_g
            run_h = pre_h
            run_c = pre_c
            for p in range(start, end):
                run_g += hg[nd, p]
                run_h += hh[nd, p]
                run_c += hc[nd, p]
                cg = run_g - pre_g
                ch = run_h - pre_h
                cc = run_c - pre_c

                ga_l = cg
                ha_l = ch
                ca_l = cc
                ga_r = pg - ga_l
                ha_r = ph - ha_l
                ca_r = pc - ca_l
                if ca_l >= 1 and ca_r >= 1:
                    gain_a = ga_l * ga_l / (ha_l + lam) + ga_r * ga_r / (ha_r + lam) - parent
                else:
                    gain_a = NEG_INF

                gb_l = cg + miss_g
                hb_l = ch + miss_h
                cb_l = cc + miss_c
                gb_r = pg - gb_l
                hb_r = ph - hb_l
                cb_r = pc - cb_l
                if cb_l >= 1 and cb_r >= 1:
                    gain_b = gb_l * gb_l / (hb_l + lam) + gb_r * gb_r / (hb_r + lam) - parent
                else:
                    gain_b = NEG_INF

                use_b = gain_b > gain_a
                gain = gain_b if use_b else gain_a
                if gain > b_gain:
                    b_gain = gain
                    b_col = j
                    b_bin = p
                    if use_b:
                        b_dir = 1
                        b_lg = gb_l
                        b_lh = hb_l
                        b_lc = cb_l
                    else:
                        b_dir = 0
                        b_lg = ga_l
                        b_lh = ha_l
                        b_lc = ca_l
        if b_col >= 0:
            best_gain[nd] = b_gain
            best_col[nd] = b_col
            best_bin[nd] = b_bin
            best_dir[nd] = b_dir
            left_g[nd] = b_lg
            left_h[nd] = b_lh
            left_c[nd] = b_lc
    return (best_gain_arr, best_col_arr, best_bin_arr, best_dir_arr,
            left_g_arr, left_h_arr, left_c_arr)


def route_rows(cnp.int64_t[::1] col_rows,
               cnp.int64_t[::1] col_bins,
               cnp.int64_t[::1] node_of_row_old,
               cnp.int64_t node_id,
               cnp.int64_t split_bin,
               cnp.int64_t left_slot,
               cnp.int64_t right_slot,
               cnp.int64_t[::1] node_of_row_new):
    cdef Py_ssize_t i, r
    for i in range(col_rows.shape[0]):
        r = col_rows[i]
        if node_of_row_old[r] != node_id:
            continue
        if col_bins[i] <= split_bin:
            node_of_row_new[r] = left_slot
        else:
            node_of_row_new[r] = right_slot


def predict_margins(cnp.float64_t[:, ::1] X,
                    cnp.int64_t[::1] feat,
                    cnp.float64_t[::1] thr,
                    cnp.int64_t[::1] left,
                    cnp.int64_t[::1] right,
                    cnp.int64_t[::1] default_left,
                    cnp.float64_t[::1] value,
                    cnp.int64_t[::1] tree_ptr,
                    double eta,
                    cnp.float64_t[::1] out):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t n_trees = tree_ptr.shape[0] - 1
    cdef Py_ssize_t i, t
    cdef cnp.int64_t node, f
    cdef double v
    for t in range(n_trees):
        for i in range(n):
            node = tree_ptr[t]
            f = feat[node]
            while f >= 0:
                v = X[i, f]
                if v == 0.0:
                    node = left[node] if default_left[node] != 0 else right[node]
                elif v <= thr[node]:
                    node = left[node]
                else:
                    node = right[node]
                f = feat[node]
            out[i] += eta * value[node]
    return np.asarray(out)


def iforest_paths(cnp.float64_t[:, ::1] X,
                  cnp.int64_t[::1] feat,
                  cnp.float64_t[::1] thr,
                  cnp.int64_t[::1] left,
                  cnp.int64_t[::1] right,
                  cnp.float64_t[::1] value,
                  cnp.int64_t[::1] tree_ptr,
                  cnp.float64_t[::1] out):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t n_trees = tree_ptr.shape[0] - 1
    cdef Py_ssize_t i, t
    cdef cnp.int64_t node, f
    for t in range(n_trees):
        for i in range(n):
            node = tree_ptr[t]
            f = feat[node]
            while f >= 0:
                if X[i, f] < thr[node]:
                    node = left[node]
                else:
                    node = right[node]
                f = feat[node]
            out[i] += value[node]
    return np.asarray(out)
