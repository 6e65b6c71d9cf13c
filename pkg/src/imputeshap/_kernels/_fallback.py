"""Pure numpy versions of the compiled kernels.

Semantics (shared with ``_core.pyx``):

best_split
    Squared-error split search over ``features`` for the node whose rows carry
    positive weight in ``w``.  ``order[f]`` lists all rows sorted by
    ``X[:, f]`` with NaN last.  Candidate thresholds are midpoints between
    consecutive distinct observed values; rows with ``x < threshold`` go left.
    Rows with ``x`` missing are tried on both sides and the side with the
    larger gain becomes the default direction (left on ties).  Gain is
    ``SL^2/NL + SR^2/NR - S^2/N`` with weighted residual sums ``S`` and
    weighted counts ``N``.  Both children need weight ``>= min_leaf``.  The
    first strictly best candidate wins (features in the given order, then
    ascending threshold); nothing beats ``min_gain``.  Returns
    ``(feature, threshold, default_left, gain)`` with ``feature == -1`` when
    no split qualifies.

grow_tree
    Grow one tree depth-first (a LIFO stack; both children are allocated when
    their parent splits, the left one is expanded first).  Node value is
    ``scale`` times the weighted mean residual.  A node stays a leaf at
    ``max_depth``, when its weight is below ``2 * min_leaf`` or when no split
    beats ``max(1e-14, 1e-12 * sum(w r^2))``.  With ``keys`` given (one row of
    uniform draws per node index) only the ``n_candidates`` features with the
    smallest keys are searched.  Returns node arrays with local indices plus
    each positive-weight row's leaf value.

predict_ensemble
    Sum of leaf values over the trees rooted at ``roots``; leaves have
    ``feature == -1``.

coalition_shapley
    ``phi[i] = sum_{S not containing i} weights[|S|] * (v[S | i] - v[S])``
    where coalitions are bitmasks indexing the rows of ``v``.
"""

from __future__ import annotations

import numpy as np


def best_split(X, order, w, r, features, min_leaf, min_gain):
    best = (-1, 0.0, True, min_gain)
    for f in features:
        o = order[f]
        o = o[w[o] != 0.0]
        xs = X[o, f]
        miss = np.isnan(xs)
        k = int((~miss).sum())
        if k == 0:
            continue
        wr = w[o] * r[o]
        ws = w[o]
        csum = np.add.accumulate(wr[:k])
        ccnt = np.add.accumulate(ws[:k])
        sn, nn = csum[-1], ccnt[-1]
        if k < len(o):
            sm = np.add.accumulate(wr[k:])[-1]
            nm = np.add.accumulate(ws[k:])[-1]
        else:
            sm = nm = 0.0
        s, cnt = sn + sm, nn + nm
        xo = xs[:k]
        cand = np.flatnonzero(xo[1:] > xo[:-1])
        if cand.size == 0:
            continue
        sl, nl = csum[cand], ccnt[cand]
        okl = (nl + nm >= min_leaf) & (nn - nl >= min_leaf)
        okr = (nl >= min_leaf) & (nn - nl + nm >= min_leaf)
        with np.errstate(divide="ignore", invalid="ignore"):
            gl = (sl + sm) ** 2 / (nl + nm) + (sn - sl) ** 2 / (nn - nl) - s * s / cnt
            gr = sl ** 2 / nl + (sn - sl + sm) ** 2 / (nn - nl + nm) - s * s / cnt
        gl = np.where(okl, gl, -1.0)
        gr = np.where(okr, gr, -1.0)
        take_left = okl & (~okr | (gl >= gr))
        g = np.where(take_left, gl, gr)
        g = np.where(okl | okr, g, -np.inf)
        j = int(np.argmax(g))
        if g[j] > best[3]:
            lo, hi = xo[cand[j]], xo[cand[j] + 1]
            thr = lo + (hi - lo) * 0.5
            if thr <= lo:
                thr = hi
            best = (int(f), float(thr), bool(take_left[j]), float(g[j]))
    return best


def grow_tree(X, order, r, w, max_depth, min_leaf, scale, keys, n_candidates):
    n, p = X.shape
    use_keys = keys is not None and n_candidates < p
    missing = np.isnan(X)
    feature, threshold, left, right, default_left, value, gain = [], [], [], [], [], [], []

    def new_node():
        for lst, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (default_left, 1),
                       (value, 0.0), (gain, 0.0)):
            lst.append(v)
        return len(feature) - 1

    fitted = np.zeros(n)
    all_features = np.arange(p)
    stack = [(new_node(), w, 0)]
    while stack:
        k, wk, depth = stack.pop()
        pos = wk > 0
        # sequential sums in feature-0 sort order, the order the compiled loop uses
        rows = order[0][pos[order[0]]]
        total = np.add.accumulate(wk[rows])[-1]
        value[k] = scale * np.add.accumulate(wk[rows] * r[rows])[-1] / total
        f = -1
        if depth < max_depth and total >= 2 * min_leaf:
            min_gain = max(1e-14, 1e-12 * np.add.accumulate(wk[rows] * r[rows] * r[rows])[-1])
            if use_keys:
                feats = np.sort(np.argsort(keys[k], kind="stable")[:n_candidates])
            else:
                feats = all_features
            f, thr, dl, g = best_split(X, order, wk, r, feats, min_leaf, min_gain)
        if f < 0:
            fitted[pos] = value[k]
            continue
        go_left = np.where(missing[:, f], dl, X[:, f] < thr)
        feature[k], threshold[k], default_left[k], gain[k] = f, thr, int(dl), g
        lk, rk = new_node(), new_node()
        left[k], right[k] = lk, rk
        stack.append((rk, np.where(go_left, 0.0, wk), depth + 1))
        stack.append((lk, np.where(go_left, wk, 0.0), depth + 1))
    return (np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
            np.array(right, dtype=np.int64), np.array(default_left, dtype=np.uint8), np.array(value),
            np.array(gain), fitted)


def predict_ensemble(X, feature, threshold, left, right, default_left, value, roots):
    n = X.shape[0]
    out = np.zeros(n, dtype=np.float64)
    rows = np.arange(n)
    dl = default_left.astype(bool)
    for root in roots:
        node = np.full(n, root, dtype=np.int64)
        active = feature[node] >= 0
        while active.any():
            a = node[active]
            x = X[rows[active], feature[a]]
            go_left = np.where(np.isnan(x), dl[a], x < threshold[a])
            node[active] = np.where(go_left, left[a], right[a])
            active = feature[node] >= 0
        out += value[node]
    return out


def coalition_shapley(v, weights, p):
    masks = np.arange(1 << p)
    sizes = np.zeros(masks.size, dtype=np.int64)
    for i in range(p):
        sizes += (masks >> i) & 1
    phi = np.zeros((p, v.shape[1]))
    for i in range(p):
        without = masks[((masks >> i) & 1) == 0]
        wt = weights[sizes[without]]
        phi[i] = (wt[:, None] * (v[without | (1 << i)] - v[without])).sum(axis=0)
    return phi
