# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops; see _fallback.py for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport isnan

cnp.import_array()


cdef inline double _gain(double sl, double nl, double sr, double nr, double s, double n) noexcept nogil:
    return sl * sl / nl + sr * sr / nr - s * s / n


cdef struct Split:
    long long feature
    double threshold
    int default_left
    double gain


cdef Split _split_node(const double[:, ::1] X, const long long[:, ::1] order, const double[::1] w,
                       const double[::1] r, const long long[::1] node_of, long long node,
                       const long long[::1] features, Py_ssize_t n_features,
                       double min_leaf, double min_gain) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t fi, k, row, f
    cdef double sn, nn, sm, nm, s, cnt, sl, nl, x, prev, gl, gr, g, wi
    cdef int dl, have_prev, okl, okr
    cdef Split best
    best.feature = -1
    best.threshold = 0.0
    best.default_left = 1
    best.gain = min_gain
    for fi in range(n_features):
        f = features[fi]
        sn = 0.0; nn = 0.0; sm = 0.0; nm = 0.0
        for k in range(n):
            row = order[f, k]
            if node_of[row] != node:
                continue
            wi = w[row]
            if isnan(X[row, f]):
                sm = sm + wi * r[row]
                nm = nm + wi
            else:
                sn = sn + wi * r[row]
                nn = nn + wi
        if nn == 0.0:
            continue
        s = sn + sm
        cnt = nn + nm
        sl = 0.0; nl = 0.0; prev = 0.0; have_prev = 0
        for k in range(n):
            row = order[f, k]
            if node_of[row] != node:
                continue
            wi = w[row]
            x = X[row, f]
            if isnan(x):
                break
            if have_prev and x > prev:
                okl = (nl + nm >= min_leaf) and (nn - nl >= min_leaf)
                okr = (nl >= min_leaf) and (nn - nl + nm >= min_leaf)
                if okl or okr:
                    gl = _gain(sl + sm, nl + nm, sn - sl, nn - nl, s, cnt) if okl else -1.0
                    gr = _gain(sl, nl, sn - sl + sm, nn - nl + nm, s, cnt) if okr else -1.0
                    if okl and (not okr or gl >= gr):
                        g = gl; dl = 1
                    else:
                        g = gr; dl = 0
                    if g > best.gain:
                        best.gain = g
                        best.feature = f
                        best.default_left = dl
                        best.threshold = prev + (x - prev) * 0.5
                        if best.threshold <= prev:
                            best.threshold = x
            sl = sl + wi * r[row]
            nl = nl + wi
            prev = x
            have_prev = 1
    return best


def best_split(const double[:, ::1] X, const long long[:, ::1] order, const double[::1] w,
               const double[::1] r, const long long[::1] features, double min_leaf, double min_gain):
    node_of = np.where(np.asarray(w) != 0.0, 0, -1).astype(np.int64)
    cdef const long long[::1] nd = node_of
    cdef Split s
    with nogil:
        s = _split_node(X, order, w, r, nd, 0, features, features.shape[0], min_leaf, min_gain)
    return s.feature, s.threshold, bool(s.default_left), s.gain


cdef Split _split_segment(const double[:, ::1] XT, long long[:, ::1] seg, Py_ssize_t lo, Py_ssize_t hi,
                          const double[::1] w, const double[::1] r, const long long[::1] features,
                          Py_ssize_t n_features, double min_leaf, double min_gain) noexcept nogil:
    """Same search as _split_node over the rows seg[f, lo:hi] (sorted by feature f, NaN
    last); ``XT`` is X transposed so one feature's values are contiguous."""
    cdef Py_ssize_t fi, k, row, f
    cdef double sn, nn, sm, nm, s, cnt, sl, nl, x, prev, gl, gr, g, wi, c0
    cdef int dl, have_prev, okl, okr
    cdef Split best
    best.feature = -1
    best.threshold = 0.0
    best.default_left = 1
    best.gain = min_gain
    for fi in range(n_features):
        f = features[fi]
        sn = 0.0; nn = 0.0; sm = 0.0; nm = 0.0
        for k in range(lo, hi):
            row = seg[f, k]
            wi = w[row]
            if isnan(XT[f, row]):
                sm = sm + wi * r[row]
                nm = nm + wi
            else:
                sn = sn + wi * r[row]
                nn = nn + wi
        if nn == 0.0:
            continue
        s = sn + sm
        cnt = nn + nm
        c0 = s * s / cnt
        sl = 0.0; nl = 0.0; prev = 0.0; have_prev = 0
        for k in range(lo, hi):
            row = seg[f, k]
            wi = w[row]
            x = XT[f, row]
            if isnan(x):
                break
            if have_prev and x > prev:
                okl = (nl + nm >= min_leaf) and (nn - nl >= min_leaf)
                okr = (nl >= min_leaf) and (nn - nl + nm >= min_leaf)
                if nm == 0.0:
                    # no missing rows: both default directions give the same gain
                    okr = 0
                    if okl:
                        g = sl * sl / nl + (sn - sl) * (sn - sl) / (nn - nl) - c0
                        dl = 1
                elif okl or okr:
                    gl = (sl + sm) * (sl + sm) / (nl + nm) + (sn - sl) * (sn - sl) / (nn - nl) - c0 if okl else -1.0
                    gr = sl * sl / nl + (sn - sl + sm) * (sn - sl + sm) / (nn - nl + nm) - c0 if okr else -1.0
                    if okl and (not okr or gl >= gr):
                        g = gl; dl = 1
                    else:
                        g = gr; dl = 0
                if okl or okr:
                    if g > best.gain:
                        best.gain = g
                        best.feature = f
                        best.default_left = dl
                        best.threshold = prev + (x - prev) * 0.5
                        if best.threshold <= prev:
                            best.threshold = x
            sl = sl + wi * r[row]
            nl = nl + wi
            prev = x
            have_prev = 1
    return best


def grow_tree(const double[:, ::1] X, const long long[:, ::1] order, const double[::1] r,
              const double[::1] w, int max_depth, double min_leaf, double scale, keys, int n_candidates):
    # Each node owns the slice seg[:, lo:hi]; row f of seg lists the node's rows
    # sorted by feature f (NaN last).  Splitting stably partitions every row of
    # seg, so children inherit sorted slices without re-sorting.
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1]
    cdef Py_ssize_t i, a, b, f, row, top = 0, count = 1, npos = 0, lo, hi, nl_rows, q
    for i in range(n):
        if w[i] > 0.0:
            npos += 1
    cdef Py_ssize_t cap = 2 * npos + 1
    if max_depth < 40 and ((<Py_ssize_t>1) << (max_depth + 1)) - 1 < cap:
        cap = ((<Py_ssize_t>1) << (max_depth + 1)) - 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    default_left = np.ones(cap, dtype=np.uint8)
    value = np.zeros(cap)
    gain = np.zeros(cap)
    fitted = np.zeros(n)
    XT_arr = np.ascontiguousarray(np.asarray(X).T)
    cdef const double[:, ::1] XT = XT_arr
    seg_arr = np.empty((p, npos), dtype=np.int64)
    cdef long long[:, ::1] seg = seg_arr
    for f in range(p):
        a = 0
        for i in range(n):
            row = order[f, i]
            if w[row] > 0.0:
                seg[f, a] = row
                a += 1
    cdef long long[::1] fe = feature, le = left, ri = right
    cdef double[::1] th = threshold, va = value, ga = gain, fi = fitted
    cdef unsigned char[::1] dl = default_left
    cdef long long[::1] stack_node = np.zeros(cap, dtype=np.int64)
    cdef long long[::1] stack_depth = np.zeros(cap, dtype=np.int64)
    cdef long long[::1] stack_lo = np.zeros(cap, dtype=np.int64)
    cdef long long[::1] stack_hi = np.zeros(cap, dtype=np.int64)
    cdef long long[::1] all_feats = np.arange(p, dtype=np.int64)
    cdef long long[::1] cand = np.zeros(p, dtype=np.int64)
    cdef long long[::1] buf = np.zeros(max(npos, 1), dtype=np.int64)
    cdef unsigned char[::1] go_left = np.zeros(n, dtype=np.uint8)
    cdef const double[:, ::1] kv
    cdef int use_keys = keys is not None and n_candidates < p
    if use_keys:
        kv = keys
    cdef long long k, depth, tmp, lk, rk
    cdef double total, wr, wr2, min_gain, x
    cdef Split s
    stack_node[0] = 0
    stack_depth[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = npos
    top = 1 if npos > 0 else 0
    with nogil:
        while top > 0:
            top -= 1
            k = stack_node[top]
            depth = stack_depth[top]
            lo = stack_lo[top]
            hi = stack_hi[top]
            total = 0.0; wr = 0.0; wr2 = 0.0
            for a in range(lo, hi):
                row = seg[0, a]
                total = total + w[row]
                wr = wr + w[row] * r[row]
                wr2 = wr2 + w[row] * r[row] * r[row]
            va[k] = scale * wr / total
            s.feature = -1
            if depth < max_depth and total >= 2 * min_leaf:
                min_gain = 1e-12 * wr2
                if min_gain < 1e-14:
                    min_gain = 1e-14
                if use_keys:
                    # the n_candidates features with the smallest keys, in index order
                    for a in range(p):
                        cand[a] = a
                    for a in range(1, p):
                        b = a
                        while b > 0 and (kv[k, cand[b]] < kv[k, cand[b - 1]] or
                                         (kv[k, cand[b]] == kv[k, cand[b - 1]] and cand[b] < cand[b - 1])):
                            tmp = cand[b]; cand[b] = cand[b - 1]; cand[b - 1] = tmp
                            b -= 1
                    for a in range(1, n_candidates):
                        b = a
                        while b > 0 and cand[b] < cand[b - 1]:
                            tmp = cand[b]; cand[b] = cand[b - 1]; cand[b - 1] = tmp
                            b -= 1
                    s = _split_segment(XT, seg, lo, hi, w, r, cand, n_candidates, min_leaf, min_gain)
                else:
                    s = _split_segment(XT, seg, lo, hi, w, r, all_feats, p, min_leaf, min_gain)
            if s.feature < 0:
                for a in range(lo, hi):
                    fi[seg[0, a]] = va[k]
                continue
            fe[k] = s.feature
            th[k] = s.threshold
            dl[k] = s.default_left
            ga[k] = s.gain
            lk = count
            rk = count + 1
            count += 2
            le[k] = lk
            ri[k] = rk
            nl_rows = 0
            for a in range(lo, hi):
                row = seg[0, a]
                x = XT[s.feature, row]
                if isnan(x):
                    go_left[row] = s.default_left
                else:
                    go_left[row] = x < s.threshold
                nl_rows = nl_rows + go_left[row]
            for f in range(p):
                b = 0
                q = lo
                for a in range(lo, hi):
                    row = seg[f, a]
                    if go_left[row]:
                        seg[f, q] = row
                        q += 1
                    else:
                        buf[b] = row
                        b += 1
                for a in range(b):
                    seg[f, q + a] = buf[a]
            stack_node[top] = rk
            stack_depth[top] = depth + 1
            stack_lo[top] = lo + nl_rows
            stack_hi[top] = hi
            top += 1
            stack_node[top] = lk
            stack_depth[top] = depth + 1
            stack_lo[top] = lo
            stack_hi[top] = lo + nl_rows
            top += 1
    return (feature[:count], threshold[:count], left[:count], right[:count], default_left[:count],
            value[:count], gain[:count], fitted)


def predict_ensemble(const double[:, ::1] X, const long long[::1] feature, const double[::1] threshold,
                     const long long[::1] left, const long long[::1] right,
                     const unsigned char[::1] default_left, const double[::1] value,
                     const long long[::1] roots):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t i, t
    cdef long long node, f
    cdef double x
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for t in range(roots.shape[0]):
            for i in range(n):
                node = roots[t]
                while feature[node] >= 0:
                    f = feature[node]
                    x = X[i, f]
                    if isnan(x):
                        node = left[node] if default_left[node] else right[node]
                    elif x < threshold[node]:
                        node = left[node]
                    else:
                        node = right[node]
                o[i] = o[i] + value[node]
    return out


def coalition_shapley(const double[:, ::1] v, const double[::1] weights, int p):
    cdef Py_ssize_t n_out = v.shape[1]
    cdef Py_ssize_t mask, i, k, with_i, size
    cdef Py_ssize_t n_masks = (<Py_ssize_t>1) << p
    cdef double wt
    phi = np.zeros((p, n_out), dtype=np.float64)
    cdef double[:, ::1] ph = phi
    with nogil:
        for mask in range(n_masks):
            size = 0
            k = mask
            while k:
                size = size + (k & 1)
                k = k >> 1
            if size == p:
                continue
            wt = weights[size]
            for i in range(p):
                if (mask >> i) & 1:
                    continue
                with_i = mask | ((<Py_ssize_t>1) << i)
                for k in range(n_out):
                    ph[i, k] = ph[i, k] + wt * (v[with_i, k] - v[mask, k])
    return phi
