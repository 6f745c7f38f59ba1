# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: Lance-Williams linkage, regression-split scan,
grouped Spearman.  Semantics mirror localcontrol._fallback exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, isfinite, sqrt
from libc.stdlib cimport free, malloc, qsort

cnp.import_array()

METHOD_WARD = 0
METHOD_COMPLETE = 1
METHOD_AVERAGE = 2
METHOD_MCQUITTY = 3
METHOD_MEDIAN = 4
METHOD_CENTROID = 5


cdef inline double _lw_update(int method, double dik, double djk, double dij,
                              double ni, double nj, double nk) noexcept nogil:
    cdef double t, s
    if method == 0:  # ward
        t = ni + nj + nk
        return ((ni + nk) * dik + (nj + nk) * djk - nk * dij) / t
    elif method == 1:  # complete
        return dik if dik >= djk else djk
    elif method == 2:  # average
        return (ni * dik + nj * djk) / (ni + nj)
    elif method == 3:  # mcquitty
        return 0.5 * dik + 0.5 * djk
    elif method == 4:  # median
        return 0.5 * dik + 0.5 * djk - 0.25 * dij
    else:  # centroid
        s = ni + nj
        return (ni * dik + nj * djk) / s - (ni * nj * dij) / (s * s)


def lw_linkage(cnp.ndarray[cnp.float64_t, ndim=2] dmat, int method):
    """Agglomerate a full symmetric dissimilarity matrix (consumed).

    Returns (merge_a, merge_b, heights); the merge at step s creates node
    n + s; ties resolved by the smallest (node-id, node-id) pair.
    """
    cdef Py_ssize_t n = dmat.shape[0]
    cdef double[:, ::1] d = np.ascontiguousarray(dmat)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] merge_a = np.empty(n - 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] merge_b = np.empty(n - 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] heights = np.empty(n - 1, dtype=np.float64)

    cdef cnp.ndarray[cnp.uint8_t, ndim=1] active = np.ones(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] size = np.ones(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] node_id = np.arange(n, dtype=np.int64)
    # per-row cached minimum over active columns
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rmin = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] rmin_idx = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] rvalid = np.zeros(n, dtype=np.uint8)

    cdef Py_ssize_t step, i, j, k, si, sj
    cdef double m, v, newv, ni_, nj_
    cdef long long ia, ib, lo, hi, best_lo, best_hi

    for i in range(n):
        d[i, i] = INFINITY

    for step in range(n - 1):
        m = INFINITY
        for i in range(n):
            if not active[i]:
                continue
            if not rvalid[i]:
                rmin[i] = INFINITY
                rmin_idx[i] = -1
                for j in range(n):
                    if j == i or not active[j]:
                        continue
                    v = d[i, j]
                    if v < rmin[i]:
                        rmin[i] = v
                        rmin_idx[i] = j
                rvalid[i] = 1
            if rmin[i] < m:
                m = rmin[i]
        if not isfinite(m):
            raise ValueError("non-finite dissimilarity encountered during linkage")

        best_lo = -1
        best_hi = -1
        si = -1
        sj = -1
        for i in range(n):
            if not active[i] or rmin[i] != m:
                continue
            for j in range(n):
                if j == i or not active[j] or d[i, j] != m:
                    continue
                ia = node_id[i]
                ib = node_id[j]
                if ia < ib:
                    lo = ia; hi = ib
                else:
                    lo = ib; hi = ia
                if best_lo < 0 or lo < best_lo or (lo == best_lo and hi < best_hi):
                    best_lo = lo
                    best_hi = hi
                    si = i
                    sj = j
        merge_a[step] = best_lo
        merge_b[step] = best_hi
        heights[step] = m

        ni_ = size[si]
        nj_ = size[sj]
        for k in range(n):
            if k == si or k == sj or not active[k]:
                continue
            newv = _lw_update(method, d[si, k], d[sj, k], m, ni_, nj_, size[k])
            d[si, k] = newv
            d[k, si] = newv
            d[k, sj] = INFINITY
            d[sj, k] = INFINITY
            if rvalid[k]:
                if rmin_idx[k] == si or rmin_idx[k] == sj:
                    if newv <= rmin[k]:
                        rmin[k] = newv
                        rmin_idx[k] = si
                    else:
                        rvalid[k] = 0
                elif newv < rmin[k]:
                    rmin[k] = newv
                    rmin_idx[k] = si
        d[si, sj] = INFINITY
        d[sj, si] = INFINITY
        active[sj] = 0
        size[si] = ni_ + nj_
        node_id[si] = n + step
        rvalid[si] = 0

    return merge_a, merge_b, heights


def best_split_sorted(double[::1] xs, double[::1] ys, Py_ssize_t min_leaf):
    """Best variance-reducing split of a presorted feature column.

    Returns (gain, pos): gain is the total-SSE decrease, left child takes
    positions [0, pos).  (-1.0, -1) when no valid split exists; ties keep
    the smallest pos.
    """
    cdef Py_ssize_t n = xs.shape[0]
    if n < 2 * min_leaf:
        return -1.0, -1
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        total += ys[i]
    cdef double sl = 0.0
    for i in range(min_leaf - 1):
        sl += ys[i]
    cdef double best = -INFINITY
    cdef Py_ssize_t best_pos = -1
    cdef double sr, score
    cdef Py_ssize_t pos
    for pos in range(min_leaf, n - min_leaf + 1):
        sl += ys[pos - 1]
        if xs[pos] <= xs[pos - 1]:
            continue
        sr = total - sl
        score = sl * sl / pos + sr * sr / (n - pos)
        if score > best:
            best = score
            best_pos = pos
    if best_pos < 0:
        return -1.0, -1
    return best - total * total / n, best_pos


cdef struct _VP:
    double v
    Py_ssize_t p


cdef int _vp_cmp(const void* a, const void* b) noexcept nogil:
    cdef double va = (<const _VP*> a).v
    cdef double vb = (<const _VP*> b).v
    if va < vb:
        return -1
    elif va > vb:
        return 1
    return 0


cdef int _midranks(double* vals, Py_ssize_t s, _VP* buf, double* out) except -1 nogil:
    """Midrank (1-based, ties averaged) of each of the s values."""
    cdef Py_ssize_t i, j, t
    cdef double r
    for i in range(s):
        buf[i].v = vals[i]
        buf[i].p = i
    qsort(buf, s, sizeof(_VP), _vp_cmp)
    i = 0
    while i < s:
        j = i
        while j + 1 < s and buf[j + 1].v == buf[i].v:
            j += 1
        r = 0.5 * ((i + 1) + (j + 1))
        for t in range(i, j + 1):
            out[buf[t].p] = r
        i = j + 1
    return 0


def grouped_spearman(double[::1] x, double[::1] y,
                     cnp.int64_t[::1] order, cnp.int64_t[::1] offsets):
    """Spearman rho (midrank ties) of (x, y) within each contiguous group
    of ``order``.  Undefined groups yield NaN."""
    cdef Py_ssize_t k = offsets.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(k, dtype=np.float64)
    cdef Py_ssize_t smax = 0, g, s, i
    for g in range(k):
        s = offsets[g + 1] - offsets[g]
        if s > smax:
            smax = s
    if smax == 0:
        return out

    cdef double* gx = <double*> malloc(smax * sizeof(double))
    cdef double* gy = <double*> malloc(smax * sizeof(double))
    cdef double* rx = <double*> malloc(smax * sizeof(double))
    cdef double* ry = <double*> malloc(smax * sizeof(double))
    cdef _VP* buf = <_VP*> malloc(smax * sizeof(_VP))
    if gx == NULL or gy == NULL or rx == NULL or ry == NULL or buf == NULL:
        free(gx); free(gy); free(rx); free(ry); free(buf)
        raise MemoryError()

    cdef Py_ssize_t u
    cdef double mx, my, dx, dy, sxx, syy, sxy, r
    try:
        for g in range(k):
            s = offsets[g + 1] - offsets[g]
            if s < 2:
                out[g] = np.nan
                continue
            for i in range(s):
                u = order[offsets[g] + i]
                gx[i] = x[u]
                gy[i] = y[u]
            _midranks(gx, s, buf, rx)
            _midranks(gy, s, buf, ry)
            mx = 0.0
            my = 0.0
            for i in range(s):
                mx += rx[i]
                my += ry[i]
            mx /= s
            my /= s
            sxx = 0.0
            syy = 0.0
            sxy = 0.0
            for i in range(s):
                dx = rx[i] - mx
                dy = ry[i] - my
                sxx += dx * dx
                syy += dy * dy
                sxy += dx * dy
            if sxx <= 0.0 or syy <= 0.0:
                out[g] = np.nan
                continue
            r = sxy / sqrt(sxx * syy)
            if r > 1.0:
                r = 1.0
            elif r < -1.0:
                r = -1.0
            out[g] = r
    finally:
        free(gx); free(gy); free(rx); free(ry); free(buf)
    return out
