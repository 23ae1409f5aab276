"""Exact supremum engine for the sequential statistics.

All public statistics of the form

    sup_{0 <= kappa <= theta' <= theta} | V(kappa) - (kappa / theta') V(theta') |

with ``V`` a right-continuous step function on the grid ``{i/n}`` reduce to
this module.  Within each grid cell the expression is monotone in both
``kappa`` and ``theta'``, so the supremum is attained (or approached) on the
finite candidate set

    kappa  -> (i, V_i) and (i, V_{i-1})      (value and left limit at i/n)
    theta' -> (j, V_j) and (j, V_{j-1})      (same pairing)

Scaling by ``n`` turns every candidate value into ``|c * j - i * C| / j`` with
``c``, ``C`` drawn from ``V``.  For a fixed ``theta'`` candidate ``(j, C)`` the
maximum over ``kappa`` candidates is a linear query against the upper and
lower convex hulls of the points ``(i, c)``; points arrive in increasing ``i``
so both hulls are maintained incrementally (monotone chain) and queried by
binary search.

When ``V`` holds integers (counts, or the integer numerators used for
Rademacher multipliers) every intermediate quantity is an exact integer below
``2**53`` for ``n`` up to roughly ``10**5``, so the result coincides bit for
bit with brute-force enumeration.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _query_upper(hx, hy, h, j, c):
    # max over hull vertices of j*y - c*x; concave along the upper hull
    lo = 0
    hi = h - 1
    while lo < hi:
        mid = (lo + hi) // 2
        d = j * (hy[mid + 1] - hy[mid]) - c * (hx[mid + 1] - hx[mid])
        if d > 0:
            lo = mid + 1
        else:
            hi = mid
    return j * hy[lo] - c * hx[lo]


@njit(cache=True, nogil=True)
def _query_lower(hx, hy, h, j, c):
    # min over hull vertices of j*y - c*x; convex along the lower hull
    lo = 0
    hi = h - 1
    while lo < hi:
        mid = (lo + hi) // 2
        d = j * (hy[mid + 1] - hy[mid]) - c * (hx[mid + 1] - hx[mid])
        if d < 0:
            lo = mid + 1
        else:
            hi = mid
    return j * hy[lo] - c * hx[lo]


@njit(cache=True, nogil=True)
def _push_upper(hx, hy, h, x, y):
    while h >= 2:
        cross = (hx[h - 1] - hx[h - 2]) * (y - hy[h - 2]) - (hy[h - 1] - hy[h - 2]) * (
            x - hx[h - 2]
        )
        if cross >= 0:
            h -= 1
        else:
            break
    hx[h] = x
    hy[h] = y
    return h + 1


@njit(cache=True, nogil=True)
def _push_lower(hx, hy, h, x, y):
    while h >= 2:
        cross = (hx[h - 1] - hx[h - 2]) * (y - hy[h - 2]) - (hy[h - 1] - hy[h - 2]) * (
            x - hx[h - 2]
        )
        if cross <= 0:
            h -= 1
        else:
            break
    hx[h] = x
    hy[h] = y
    return h + 1


@njit(cache=True, nogil=True)
def _scan(V, m, curve, out_curve):
    ux = np.empty(m + 1)
    uy = np.empty(m + 1)
    lx = np.empty(m + 1)
    ly = np.empty(m + 1)
    ux[0] = 0.0
    uy[0] = V[0]
    lx[0] = 0.0
    ly[0] = V[0]
    hu = 1
    hl = 1
    hi_y = V[0]
    lo_y = V[0]
    best = 0.0
    if out_curve:
        curve[0] = 0.0
    for jj in range(1, m + 1):
        j = float(jj)
        prev = V[jj - 1]
        cur = V[jj]
        # theta' approaching j/n from the left: kappa candidates up to (j-1).
        # Each query is skipped when its cheap upper bound cannot beat best.
        if hi_y - min(prev, 0.0) > best:
            val = _query_upper(ux, uy, hu, j, prev) / j
            if val > best:
                best = val
        if max(prev, 0.0) - lo_y > best:
            val = -_query_lower(lx, ly, hl, j, prev) / j
            if val > best:
                best = val
        if cur >= prev:
            top = cur
            bot = prev
        else:
            top = prev
            bot = cur
        hu = _push_upper(ux, uy, hu, j, top)
        hl = _push_lower(lx, ly, hl, j, bot)
        if top > hi_y:
            hi_y = top
        if bot < lo_y:
            lo_y = bot
        # theta' = j/n exactly
        if hi_y - min(cur, 0.0) > best:
            val = _query_upper(ux, uy, hu, j, cur) / j
            if val > best:
                best = val
        if max(cur, 0.0) - lo_y > best:
            val = -_query_lower(lx, ly, hl, j, cur) / j
            if val > best:
                best = val
        if out_curve:
            curve[jj] = best
    return best


@njit(cache=True, nogil=True)
def sup_curve(V):
    """Running supremum ``curve[j]`` over all candidates with ``theta' <= j/n``."""
    m = V.shape[0] - 1
    curve = np.empty(m + 1)
    _scan(V, m, curve, True)
    return curve


@njit(cache=True, nogil=True)
def sup_upto(V, m):
    """Value of :func:`sup_curve` at index ``m`` without storing the curve."""
    dummy = np.empty(1)
    if m <= 0:
        return 0.0
    return _scan(V, m, dummy, False)


@njit(cache=True, nogil=True)
def weighted_sups(indicators, totals, xi, m):
    """Per-column supremum of centered, multiplier-weighted prefix sums.

    ``indicators`` is ``(n, K)`` of 0/1, ``totals`` the column counts and
    ``xi`` the multipliers.  Column ``k`` uses the numerator representation
    ``V_i = n * sum_{l<=i} xi_l I_lk - N_k * sum_{l<=i} xi_l`` which equals
    ``n`` times the centered weighted sum; callers divide by ``n``.
    """
    n = indicators.shape[0]
    K = indicators.shape[1]
    out = np.zeros(K)
    V = np.empty(m + 1)
    for k in range(K):
        V[0] = 0.0
        a = 0.0
        w = 0.0
        for i in range(m):
            x = xi[i]
            w += x
            if indicators[i, k]:
                a += x
            V[i + 1] = n * a - totals[k] * w
        out[k] = sup_upto(V, m)
    return out
