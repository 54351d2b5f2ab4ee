# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; exact twins of ``_pure`` (see that module for contracts).

Accumulation order, tie breaking and division direction match the numpy
reference so results are bit-identical across backends. The extension is
built with -ffp-contract=off to keep multiply-add rounding identical too.
"""

import numpy as np

from libc.math cimport INFINITY, isfinite


def scan_split(double[::1] xs, double[::1] ys, int min_leaf):
    cdef Py_ssize_t m = xs.shape[0]
    if m < 2 * min_leaf or m < 2:
        return (-np.inf, np.nan, 0)

    cdef double total = 0.0
    cdef double total_sq = 0.0
    cdef Py_ssize_t i
    for i in range(m):
        total = total + ys[i]
        total_sq = total_sq + ys[i] * ys[i]
    cdef double parent_sse = total_sq - total * total / (<double> m)

    cdef double left_sum = 0.0
    cdef double left_sq = 0.0
    cdef double best_gain = -INFINITY
    cdef Py_ssize_t best_pos = -1
    cdef double nl, nr, sse_l, sse_r, rs, gain
    for i in range(m - 1):
        left_sum = left_sum + ys[i]
        left_sq = left_sq + ys[i] * ys[i]
        if i + 1 < min_leaf:
            continue
        if m - i - 1 < min_leaf:
            break
        if xs[i + 1] <= xs[i]:
            continue
        nl = <double> (i + 1)
        nr = <double> (m - i - 1)
        sse_l = left_sq - left_sum * left_sum / nl
        rs = total - left_sum
        sse_r = (total_sq - left_sq) - rs * rs / nr
        gain = parent_sse - sse_l - sse_r
        if gain > best_gain:
            best_gain = gain
            best_pos = i
    if best_pos < 0:
        return (-np.inf, np.nan, 0)
    cdef double thr = 0.5 * (xs[best_pos] + xs[best_pos + 1])
    if thr >= xs[best_pos + 1]:
        thr = xs[best_pos]
    return (best_gain, thr, <int> (best_pos + 1))


def first_accepting_group(
    double[:, ::1] gmin,
    double[:, ::1] gmax,
    int n_groups,
    double[::1] v,
    double a_v,
):
    cdef Py_ssize_t d = v.shape[0]
    cdef Py_ssize_t g, k
    cdef bint ok
    cdef double vk
    for g in range(n_groups):
        ok = True
        for k in range(d):
            vk = v[k]
            if vk == 0.0:
                if gmax[g, k] != 0.0:
                    ok = False
                    break
            else:
                if gmin[g, k] <= 0.0:
                    ok = False
                    break
                if vk / gmax[g, k] < a_v:
                    ok = False
                    break
                if gmin[g, k] / vk < a_v:
                    ok = False
                    break
        if ok:
            return g
    return -1


def smo_solve(
    double[:, ::1] kmat,
    double[::1] y,
    double c,
    double epsilon,
    double tol,
    long max_iter,
):
    cdef Py_ssize_t n = y.shape[0]
    beta_arr = np.zeros(n, dtype=np.float64)
    f_arr = np.empty(n, dtype=np.float64)
    hi_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] beta = beta_arr
    cdef double[::1] f = f_arr
    cdef double[::1] hi = hi_arr
    cdef Py_ssize_t p
    for p in range(n):
        f[p] = -y[p]

    cdef long it = 0
    cdef double gap = INFINITY
    cdef Py_ssize_t i = 0, j = 0
    cdef double lo_i = -INFINITY, hi_min = INFINITY
    cdef double lo_p, hi_p, kappa, kap, t, cap, diff, score, best_score
    while True:
        lo_i = -INFINITY
        hi_min = INFINITY
        i = 0
        for p in range(n):
            if beta[p] < c:
                if beta[p] >= 0.0:
                    lo_p = -(f[p] + epsilon)
                else:
                    lo_p = -(f[p] - epsilon)
                if lo_p > lo_i:
                    lo_i = lo_p
                    i = p
            if beta[p] > -c:
                if beta[p] > 0.0:
                    hi_p = -(f[p] + epsilon)
                else:
                    hi_p = -(f[p] - epsilon)
            else:
                hi_p = INFINITY
            hi[p] = hi_p
            if hi_p < hi_min:
                hi_min = hi_p
        gap = lo_i - hi_min
        if gap <= tol or it >= max_iter:
            break
        best_score = -INFINITY
        j = 0
        for p in range(n):
            diff = lo_i - hi[p]
            if diff > 0.0:
                kappa = kmat[i, i] + kmat[p, p] - 2.0 * kmat[i, p]
                if kappa < 1e-12:
                    kappa = 1e-12
                score = diff * diff / kappa
                if score > best_score:
                    best_score = score
                    j = p
        kap = kmat[i, i] + kmat[j, j] - 2.0 * kmat[i, j]
        if kap < 1e-12:
            kap = 1e-12
        t = (lo_i - hi[j]) / kap
        cap = c - beta[i]
        if t > cap:
            t = cap
        cap = beta[j] + c
        if t > cap:
            t = cap
        if beta[i] < 0.0 and t > -beta[i]:
            t = -beta[i]
        if beta[j] > 0.0 and t > beta[j]:
            t = beta[j]
        beta[i] = beta[i] + t
        beta[j] = beta[j] - t
        for p in range(n):
            f[p] = f[p] + t * kmat[i, p]
        for p in range(n):
            f[p] = f[p] - t * kmat[j, p]
        it += 1

    cdef double bias
    if isfinite(lo_i) and isfinite(hi_min):
        bias = 0.5 * (lo_i + hi_min)
    else:
        bias = 0.0
    return beta_arr, bias, int(it), float(gap)
