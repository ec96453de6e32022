"""Compiled inner loops for Gini tree growth and prediction."""
import numpy as np
from numba import njit

# impurity differences below this are ties
TIE_EPS = 1e-12


@njit(cache=True)
def node_counts(y, w, idx, start, end, n_classes):
    counts = np.zeros(n_classes)
    for i in range(start, end):
        j = idx[i]
        counts[y[j]] += w[j]
    return counts


@njit(cache=True)
def gini_of(counts):
    total = counts.sum()
    s = 0.0
    for c in counts:
        s += c * c
    return 1.0 - s / (total * total)


@njit(cache=True)
def best_split_kernel(X, y, w, idx, start, end, candidates, n_classes):
    """Best (feature, threshold, weighted child impurity) over the candidates.

    Candidates are scanned in ascending feature order and thresholds in
    ascending order; a candidate wins only if it beats the incumbent by more
    than TIE_EPS.  Returns feature -1 when no split lowers the node impurity.
    """
    n = end - start
    parent = node_counts(y, w, idx, start, end, n_classes)
    total = parent.sum()
    parent_gini = gini_of(parent)

    best_f = -1
    best_t = 0.0
    best_imp = np.inf
    if n < 2 or parent_gini <= TIE_EPS:
        return best_f, best_t, best_imp

    vals = np.empty(n)
    cls = np.empty(n, dtype=np.int64)
    wts = np.empty(n)
    left = np.empty(n_classes)
    for f in candidates:
        for i in range(n):
            vals[i] = X[idx[start + i], f]
        order = np.argsort(vals)
        for i in range(n):
            j = idx[start + order[i]]
            cls[i] = y[j]
            wts[i] = w[j]
        sv = vals[order]
        left[:] = 0.0
        wl = 0.0
        for i in range(n - 1):
            left[cls[i]] += wts[i]
            wl += wts[i]
            if sv[i] == sv[i + 1]:
                continue
            wr = total - wl
            if wl <= 0.0 or wr <= 0.0:
                continue
            sl = 0.0
            sr = 0.0
            for k in range(n_classes):
                sl += left[k] * left[k]
                r = parent[k] - left[k]
                sr += r * r
            imp = (wl - sl / wl + wr - sr / wr) / total
            if imp < best_imp - TIE_EPS:
                best_imp = imp
                best_f = f
                thr = 0.5 * (sv[i] + sv[i + 1])
                if thr >= sv[i + 1]:
                    thr = sv[i]
                best_t = thr
    if best_f >= 0 and not best_imp < parent_gini - TIE_EPS:
        best_f = -1
    return best_f, best_t, best_imp


@njit(cache=True)
def grow_tree(X, y, w, n_classes, max_depth, min_samples_split, m_try, seed):
    """Depth-first growth; returns flat node arrays (feature -1 marks a leaf)."""
    np.random.seed(seed)
    n_features = X.shape[1]
    idx = np.flatnonzero(w > 0)
    n = idx.shape[0]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left_child = np.full(cap, -1, dtype=np.int64)
    right_child = np.full(cap, -1, dtype=np.int64)
    weight = np.zeros(cap)
    counts = np.zeros((cap, n_classes))

    # stack rows: start, end, depth, node id
    stack = np.empty((cap, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = n
    stack[0, 2] = 0
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    pool = np.arange(n_features)
    scratch = np.empty(n, dtype=np.int64)

    while top > 0:
        top -= 1
        start = stack[top, 0]
        end = stack[top, 1]
        depth = stack[top, 2]
        node = stack[top, 3]
        c = node_counts(y, w, idx, start, end, n_classes)
        counts[node] = c
        weight[node] = c.sum()
        if end - start < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            continue
        if gini_of(c) <= TIE_EPS:
            continue

        if m_try < n_features:
            for i in range(m_try):
                j = i + np.random.randint(n_features - i)
                tmp = pool[i]
                pool[i] = pool[j]
                pool[j] = tmp
            candidates = np.sort(pool[:m_try].copy())
        else:
            candidates = np.arange(n_features)

        f, t, _ = best_split_kernel(X, y, w, idx, start, end, candidates, n_classes)
        if f < 0:
            continue

        # stable partition of idx[start:end]
        nl = 0
        nr = 0
        for i in range(start, end):
            j = idx[i]
            if X[j, f] <= t:
                idx[start + nl] = j
                nl += 1
            else:
                scratch[nr] = j
                nr += 1
        for i in range(nr):
            idx[start + nl + i] = scratch[i]

        feature[node] = f
        threshold[node] = t
        left_child[node] = n_nodes
        right_child[node] = n_nodes + 1
        # push right first so the left subtree is grown first
        stack[top, 0] = start + nl
        stack[top, 1] = end
        stack[top, 2] = depth + 1
        stack[top, 3] = n_nodes + 1
        top += 1
        stack[top, 0] = start
        stack[top, 1] = start + nl
        stack[top, 2] = depth + 1
        stack[top, 3] = n_nodes
        top += 1
        n_nodes += 2

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left_child[:n_nodes].copy(),
            right_child[:n_nodes].copy(), weight[:n_nodes].copy(), counts[:n_nodes].copy())


@njit(cache=True)
def apply_tree(X, feature, threshold, left_child, right_child):
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left_child[node]
            else:
                node = right_child[node]
        out[i] = node
    return out
