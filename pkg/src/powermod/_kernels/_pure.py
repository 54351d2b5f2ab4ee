"""Pure-numpy kernels: the reference implementations of the hot loops.

The compiled backend in ``_core.pyx`` mirrors these functions operation by
operation (same accumulation order, same first-extreme tie breaking, same
division direction), so both backends produce identical results and either
can serve the rest of the package.
"""

from __future__ import annotations

import numpy as np


def scan_split(xs: np.ndarray, ys: np.ndarray, min_leaf: int):
    """Best variance-reduction split of a sorted feature column.

    ``xs`` must be ascending; ``ys`` are the targets in the same order.
    Returns ``(gain, threshold, n_left)`` where gain is the decrease in
    summed squared error versus the unsplit node (-inf when no position is
    valid). The threshold is the midpoint of the boundary pair, nudged down
    to the left value when rounding would send the right value left under
    an ``x <= threshold`` routing rule.
    """
    m = xs.shape[0]
    if m < 2 * min_leaf or m < 2:
        return (-np.inf, np.nan, 0)
    csum = np.cumsum(ys)
    csq = np.cumsum(ys * ys)
    total = csum[-1]
    total_sq = csq[-1]
    parent_sse = total_sq - total * total / m

    nl = np.arange(1, m, dtype=np.float64)
    nr = m - nl
    left_sum = csum[:-1]
    left_sq = csq[:-1]
    valid = (nl >= min_leaf) & (nr >= min_leaf) & (xs[1:] > xs[:-1])
    if not valid.any():
        return (-np.inf, np.nan, 0)
    with np.errstate(invalid="ignore"):
        sse_l = left_sq - left_sum * left_sum / nl
        right_sum = total - left_sum
        sse_r = (total_sq - left_sq) - right_sum * right_sum / nr
        gain = parent_sse - sse_l - sse_r
    gain[~valid] = -np.inf
    best = int(np.argmax(gain))
    thr = 0.5 * (xs[best] + xs[best + 1])
    if thr >= xs[best + 1]:
        thr = xs[best]
    return (float(gain[best]), float(thr), best + 1)


def first_accepting_group(
    gmin: np.ndarray, gmax: np.ndarray, n_groups: int, v: np.ndarray, a_v: float
) -> int:
    """Index of the first group every member of which is ratio-band similar to v.

    ``gmin``/``gmax`` hold per-group coordinate minima/maxima over the members
    (rows beyond ``n_groups`` are scratch capacity). For non-negative data the
    member-wise band test reduces exactly to the extremes: v/gmax >= a_v and
    gmin/v >= a_v, with 0-vs-0 passing and 0-vs-positive failing. Returns -1
    when no group accepts.
    """
    if n_groups == 0:
        return -1
    gmn = gmin[:n_groups]
    gmx = gmax[:n_groups]
    vz = v == 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ok = np.where(
            vz[None, :],
            gmx == 0.0,
            (gmn > 0.0) & (v / gmx >= a_v) & (gmn / v >= a_v),
        )
    accept = ok.all(axis=1)
    idx = int(np.argmax(accept))
    return idx if accept[idx] else -1


def smo_solve(
    kmat: np.ndarray,
    y: np.ndarray,
    c: float,
    epsilon: float,
    tol: float,
    max_iter: int,
):
    """Pairwise coordinate descent on the tube-regression dual.

    Minimizes 0.5 b'Kb - y'b + epsilon*|b|_1 subject to sum(b) = 0 and
    |b_i| <= c. The first pair index is the maximal violator; the second is
    chosen by largest expected objective decrease (second-order selection).
    Steps are capped at sign-change kinks and box bounds. Returns
    ``(beta, bias, iterations, gap)`` where gap is the final maximal KKT
    violation (<= tol on convergence).
    """
    n = y.shape[0]
    beta = np.zeros(n, dtype=np.float64)
    f = -np.asarray(y, dtype=np.float64)  # K@beta - y at beta = 0
    kd = np.ascontiguousarray(np.diag(kmat))
    it = 0
    gap = np.inf
    lo_i = -np.inf
    hi_min = np.inf
    while True:
        g_plus = f + np.where(beta >= 0.0, epsilon, -epsilon)
        g_minus = f + np.where(beta > 0.0, epsilon, -epsilon)
        lo = np.where(beta < c, -g_plus, -np.inf)
        hi = np.where(beta > -c, -g_minus, np.inf)
        i = int(np.argmax(lo))
        lo_i = lo[i]
        hi_min = float(hi.min())
        gap = lo_i - hi_min
        if gap <= tol or it >= max_iter:
            break
        diff = lo_i - hi
        kappa = kd[i] + kd - 2.0 * kmat[i]
        kappa = np.maximum(kappa, 1e-12)
        score = np.where(diff > 0.0, diff * diff / kappa, -np.inf)
        j = int(np.argmax(score))
        kap = kd[i] + kd[j] - 2.0 * kmat[i, j]
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
        beta[i] += t
        beta[j] -= t
        f += t * kmat[i]
        f -= t * kmat[j]
        it += 1
    if np.isfinite(lo_i) and np.isfinite(hi_min):
        bias = 0.5 * (lo_i + hi_min)
    else:
        bias = 0.0
    return beta, float(bias), it, float(gap)
