"""Numeric kernels for tree growing and ensemble prediction.

Each kernel has a numba loop implementation (``*_nb``) and a vectorized numpy
implementation (``*_np``). Both evaluate the same floating-point expressions in
the same order, so they return bit-identical results; the public names bind to
one of them according to :data:`judgekit._accel.USE_NUMBA`.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit


@njit
def best_split_nb(X, y, rows, features, min_leaf):
    n = rows.shape[0]
    best_feature = -1
    best_threshold = 0.0
    best_child = np.inf
    parent = 0.0
    if n == 0:
        return best_feature, best_threshold, 0.0
    pos_total = 0.0
    for r in range(n):
        pos_total += y[rows[r]]
    parent = 2.0 * (pos_total * (n - pos_total) / n)
    vals = np.empty(n, dtype=np.float64)
    labs = np.empty(n, dtype=np.float64)
    for fi in range(features.shape[0]):
        f = features[fi]
        for r in range(n):
            vals[r] = X[rows[r], f]
        # stability is not needed: splits are only taken between distinct
        # values, where the left label count is order independent
        order = np.argsort(vals)
        a = 0.0
        for i in range(n):
            labs[i] = y[rows[order[i]]]
        for i in range(1, n):
            a += labs[i - 1]
            lo = vals[order[i - 1]]
            hi = vals[order[i]]
            if hi <= lo or i < min_leaf or n - i < min_leaf:
                continue
            nl = float(i)
            nr = float(n - i)
            b = pos_total - a
            child = 2.0 * (a * (nl - a) / nl + b * (nr - b) / nr)
            if child < best_child:
                best_child = child
                best_feature = f
                thr = 0.5 * (lo + hi)
                if thr >= hi:
                    thr = lo
                best_threshold = thr
    if best_feature < 0:
        return best_feature, best_threshold, 0.0
    return best_feature, best_threshold, parent - best_child


def best_split_np(X, y, rows, features, min_leaf):
    n = rows.shape[0]
    if n == 0:
        return -1, 0.0, 0.0
    ys_node = y[rows]
    pos_total = float(ys_node.sum())  # 0/1 labels: exact in any order
    parent = 2.0 * (pos_total * (n - pos_total) / n)
    best_feature, best_threshold, best_child = -1, 0.0, np.inf
    i = np.arange(1, n)
    size_ok = (i >= min_leaf) & (n - i >= min_leaf)
    nl = i.astype(np.float64)
    nr = (n - i).astype(np.float64)
    for f in features:
        vals = X[rows, f]
        order = np.argsort(vals, kind="mergesort")
        vs = vals[order]
        a = np.cumsum(ys_node[order])[:-1]
        valid = size_ok & (vs[1:] > vs[:-1])
        if not valid.any():
            continue
        b = pos_total - a
        child = 2.0 * (a * (nl - a) / nl + b * (nr - b) / nr)
        child = np.where(valid, child, np.inf)
        j = int(np.argmin(child))
        if child[j] < best_child:
            best_child = float(child[j])
            best_feature = int(f)
            lo, hi = vs[j], vs[j + 1]
            thr = 0.5 * (lo + hi)
            best_threshold = float(lo if thr >= hi else thr)
    if best_feature < 0:
        return -1, 0.0, 0.0
    return best_feature, best_threshold, parent - best_child


@njit
def predict_forest_nb(X, feature, threshold, left, right, value, roots):
    n = X.shape[0]
    n_trees = roots.shape[0]
    out = np.zeros(n, dtype=np.float64)
    for r in range(n):
        total = 0.0
        for t in range(n_trees):
            node = roots[t]
            while left[node] >= 0:
                if X[r, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            total += value[node]
        out[r] = total / n_trees
    return out


def predict_forest_np(X, feature, threshold, left, right, value, roots):
    n = X.shape[0]
    total = np.zeros(n, dtype=np.float64)
    idx = np.arange(n)
    for root in roots:
        node = np.full(n, root, dtype=np.int64)
        internal = left[node] >= 0
        while internal.any():
            go_left = X[idx, feature[node]] <= threshold[node]
            nxt = np.where(go_left, left[node], right[node])
            node = np.where(internal, nxt, node)
            internal = left[node] >= 0
        total += value[node]
    return total / len(roots)


if USE_NUMBA:
    best_split = best_split_nb
    predict_forest = predict_forest_nb
else:
    best_split = best_split_np
    predict_forest = predict_forest_np
