"""Compiled tree growing on pre-binned features.

Features arrive as per-column bin codes (ranks of the training values), so
each candidate split is a cumulative scan over at most ``n_bins[j]`` bins.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _gini(counts, total):
    if total <= 0.0:
        return 0.0
    s = 0.0
    for c in range(counts.shape[0]):
        p = counts[c] / total
        s += p * p
    return 1.0 - s


@njit(cache=True)
def grow_tree(codes, y, w, n_bins, n_classes, max_features, max_depth,
              min_samples_leaf, seed):
    """Grow one classification tree depth-first.

    Returns ``(left, right, feature, split_bin, value, n_nodes)``; ``value``
    holds weighted class counts per node and leaves have ``feature == -1``.
    """
    np.random.seed(seed)
    n, d = codes.shape
    cap = 2 * n + 1
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    feature = np.full(cap, -1, np.int32)
    split_bin = np.full(cap, -1, np.int32)
    value = np.zeros((cap, n_classes))

    idx = np.arange(n)
    max_bins = 1
    for j in range(d):
        if n_bins[j] > max_bins:
            max_bins = n_bins[j]
    hist = np.zeros((max_bins, n_classes))
    bin_n = np.zeros(max_bins, np.int64)
    cand = np.empty(d, np.int64)
    lcounts = np.zeros(n_classes)
    rcounts = np.zeros(n_classes)

    # stack entries: start, end, depth, parent, is_left
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_parent = np.empty(cap, np.int64)
    st_left = np.empty(cap, np.int64)
    top = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    st_parent[0] = -1
    st_left[0] = 0
    top = 1
    n_nodes = 0

    while top > 0:
        top -= 1
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        parent = st_parent[top]
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if st_left[top] == 1:
                left[parent] = node
            else:
                right[parent] = node

        total = 0.0
        for k in range(start, end):
            i = idx[k]
            value[node, y[i]] += w[i]
            total += w[i]
        impurity = _gini(value[node], total)
        n_here = end - start
        if (impurity <= 1e-12 or (max_depth >= 0 and depth >= max_depth)
                or n_here < 2 * min_samples_leaf):
            continue

        # features that vary inside this node, in index order
        n_cand = 0
        for j in range(d):
            first = codes[idx[start], j]
            for k in range(start + 1, end):
                if codes[idx[k], j] != first:
                    cand[n_cand] = j
                    n_cand += 1
                    break

        best_feat = -1
        best_bin = -1
        best_score = np.inf
        visited = 0
        for pos in range(n_cand):
            if visited >= max_features:
                break
            r = pos + np.random.randint(0, n_cand - pos)
            tmp = cand[pos]
            cand[pos] = cand[r]
            cand[r] = tmp
            j = cand[pos]
            visited += 1

            nb = n_bins[j]
            for b in range(nb):
                bin_n[b] = 0
                for c in range(n_classes):
                    hist[b, c] = 0.0
            for k in range(start, end):
                i = idx[k]
                b = codes[i, j]
                hist[b, y[i]] += w[i]
                bin_n[b] += 1
            for c in range(n_classes):
                lcounts[c] = 0.0
                rcounts[c] = value[node, c]
            wl = 0.0
            nl = 0
            for b in range(nb - 1):
                if bin_n[b] == 0:
                    continue
                for c in range(n_classes):
                    lcounts[c] += hist[b, c]
                    rcounts[c] -= hist[b, c]
                    wl += hist[b, c]
                nl += bin_n[b]
                nr = n_here - nl
                if nl < min_samples_leaf:
                    continue
                if nr < min_samples_leaf:
                    break
                wr = total - wl
                score = wl * _gini(lcounts, wl) + wr * _gini(rcounts, wr)
                if score < best_score - 1e-12:
                    best_score = score
                    best_feat = j
                    best_bin = b

        if best_feat < 0:
            continue

        # partition idx[start:end] so that codes <= best_bin come first
        lo = start
        hi = end - 1
        while lo <= hi:
            if codes[idx[lo], best_feat] <= best_bin:
                lo += 1
            else:
                tmp = idx[lo]
                idx[lo] = idx[hi]
                idx[hi] = tmp
                hi -= 1
        feature[node] = best_feat
        split_bin[node] = best_bin

        # push right first so the left subtree is numbered first
        st_start[top] = lo
        st_end[top] = end
        st_depth[top] = depth + 1
        st_parent[top] = node
        st_left[top] = 0
        top += 1
        st_start[top] = start
        st_end[top] = lo
        st_depth[top] = depth + 1
        st_parent[top] = node
        st_left[top] = 1
        top += 1

    return (left[:n_nodes].copy(), right[:n_nodes].copy(),
            feature[:n_nodes].copy(), split_bin[:n_nodes].copy(),
            value[:n_nodes].copy(), n_nodes)
