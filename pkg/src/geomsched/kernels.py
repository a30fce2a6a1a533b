"""Hot loops: interval reduction, exhaustive assignment search, batch row
checks and the reconstruction resource ledgers.

Every function is numba-compiled unless ``GEOMSCHED_DISABLE_JIT`` is set;
``batch_check``, ``fit_cumulative`` and ``fit_renewable`` then switch to
vectorised numpy versions, the rest run as plain Python.

Assignment tables (shared by the search kernels) describe a model where
each job picks one choice: 0 = unscheduled, c >= 1 = period or slot c.

    order    (N,)            jobs in predecessors-first order
    allowed  (N, C)          choice admissible for the job
    pair_ptr (N+1,)          CSR over precedence pairs of each job
    pair_k   (P,)            the required job of each pair
    lim      (P, C)          latest choice of pair_k when the job takes c
                             (-1: the job cannot take c)
    contrib  (N, C, R)       non-negative row contribution of each choice
    rhs      (R,)            row capacities
    value    (N, C)          objective contribution
"""

import numpy as np

from ._accel import JIT_ENABLED, njit

FEAS_TOL = 1e-9


@njit
def slot_index(x, tau_tab):
    """0 for x < 1, else max(1, smallest s with tau_tab[s] >= x)."""
    if x < 1.0:
        return 0
    lo = 0
    hi = tau_tab.shape[0] - 1
    if tau_tab[hi] < x:
        return hi + 1
    while lo < hi:
        mid = (lo + hi) // 2
        if tau_tab[mid] >= x:
            hi = mid
        else:
            lo = mid + 1
    return max(1, lo)


@njit
def reduce_interval(ptr, idx, val, tau_t, t, tau_tab):
    n = ptr.shape[0] - 1
    nnz = idx.shape[0]
    forced = np.zeros(n, dtype=np.bool_)
    limit = np.zeros(nnz, dtype=np.int64)
    w = np.zeros(nnz, dtype=np.int64)
    for j in range(n):
        for e in range(ptr[j], ptr[j + 1]):
            if tau_t < val[e]:
                forced[j] = True
            else:
                s = slot_index(tau_t - val[e], tau_tab)
                limit[e] = s
                w[e] = t - s
    keep = np.ones(nnz, dtype=np.bool_)
    wj = np.full(n, -1, dtype=np.int64)
    at = np.full(n, -1, dtype=np.int64)
    for j in range(n):
        if forced[j]:
            continue
        for e in range(ptr[j], ptr[j + 1]):
            wj[idx[e]] = w[e]
            at[idx[e]] = e
        for e in range(ptr[j], ptr[j + 1]):
            k = idx[e]
            if forced[k]:
                continue
            for e2 in range(ptr[k], ptr[k + 1]):
                l = idx[e2]
                if at[l] >= 0 and wj[l] < w[e] + w[e2]:
                    keep[at[l]] = False
        for e in range(ptr[j], ptr[j + 1]):
            wj[idx[e]] = -1
            at[idx[e]] = -1
    return forced, keep, limit


@njit
def _choice_ok(j, c, choice, allowed, pair_ptr, pair_k, lim):
    if not allowed[j, c]:
        return False
    if c == 0:
        return True
    for e in range(pair_ptr[j], pair_ptr[j + 1]):
        ck = choice[pair_k[e]]
        if ck <= 0 or ck > lim[e, c]:
            return False
    return True


@njit
def _rows_ok(base, add, rhs):
    for r in range(rhs.shape[0]):
        cap = rhs[r]
        if base[r] + add[r] > cap + FEAS_TOL * max(1.0, abs(cap)):
            return False
    return True


@njit
def search_best(order, allowed, pair_ptr, pair_k, lim, contrib, rhs, value):
    """Exhaustive branch and bound for the maximum-value feasible assignment.

    Ties within 1e-9 (relative) go to the lexicographically smallest choice
    vector in job-index order.
    """
    n = order.shape[0]
    nc = allowed.shape[1]
    nr = rhs.shape[0]
    best_val = 0.0
    best = np.zeros(n, dtype=np.int64)
    found = False
    if n == 0:
        return best, 0.0, True
    rest = np.zeros(n + 1)
    for d in range(n - 1, -1, -1):
        j = order[d]
        m = 0.0
        for c in range(nc):
            if allowed[j, c] and value[j, c] > m:
                m = value[j, c]
        rest[d] = rest[d + 1] + m
    choice = np.zeros(n, dtype=np.int64)
    usage = np.zeros((n + 1, nr))
    val = np.zeros(n + 1)
    nxt = np.zeros(n, dtype=np.int64)
    d = 0
    nxt[0] = 0
    while d >= 0:
        j = order[d]
        c = nxt[d]
        if c >= nc:
            choice[j] = 0
            d -= 1
            continue
        nxt[d] = c + 1
        if not _choice_ok(j, c, choice, allowed, pair_ptr, pair_k, lim):
            continue
        if not _rows_ok(usage[d], contrib[j, c], rhs):
            continue
        v = val[d] + value[j, c]
        if found and v + rest[d + 1] < best_val - 1e-9 * max(1.0, abs(best_val)):
            continue
        choice[j] = c
        if d == n - 1:
            tol = 1e-9 * max(1.0, abs(best_val))
            take = False
            if not found or v > best_val + tol:
                take = True
            elif v >= best_val - tol:
                for i in range(n):
                    if choice[i] != best[i]:
                        take = choice[i] < best[i]
                        break
            if take:
                best[:] = choice
                best_val = v
                found = True
            choice[j] = 0
            continue
        for r in range(nr):
            usage[d + 1, r] = usage[d, r] + contrib[j, c, r]
        val[d + 1] = v
        d += 1
        nxt[d] = 0
    return best, best_val, found


@njit
def enumerate_feasible(order, allowed, pair_ptr, pair_k, lim, contrib, rhs, capacity):
    """All feasible choice vectors (rows in job-index order).

    Returns ``(out, count)``; ``count == -1`` means ``capacity`` was too small.
    """
    n = order.shape[0]
    nc = allowed.shape[1]
    nr = rhs.shape[0]
    out = np.zeros((capacity, n), dtype=np.int16)
    count = 0
    if n == 0:
        return out, 1 if capacity > 0 else -1
    choice = np.zeros(n, dtype=np.int64)
    usage = np.zeros((n + 1, nr))
    nxt = np.zeros(n, dtype=np.int64)
    d = 0
    while d >= 0:
        j = order[d]
        c = nxt[d]
        if c >= nc:
            choice[j] = 0
            d -= 1
            continue
        nxt[d] = c + 1
        if not _choice_ok(j, c, choice, allowed, pair_ptr, pair_k, lim):
            continue
        if not _rows_ok(usage[d], contrib[j, c], rhs):
            continue
        choice[j] = c
        if d == n - 1:
            if count >= capacity:
                return out, -1
            for i in range(n):
                out[count, i] = choice[i]
            count += 1
            choice[j] = 0
            continue
        for r in range(nr):
            usage[d + 1, r] = usage[d, r] + contrib[j, c, r]
        d += 1
        nxt[d] = 0
    return out, count


@njit
def _batch_check_jit(S, allowed, pair_ptr, pair_k, lim, contrib, rhs):
    m, n = S.shape
    nr = rhs.shape[0]
    ok = np.ones(m, dtype=np.bool_)
    acc = np.zeros(nr)
    for a in range(m):
        good = True
        for j in range(n):
            c = S[a, j]
            if not allowed[j, c]:
                good = False
                break
            if c > 0:
                for e in range(pair_ptr[j], pair_ptr[j + 1]):
                    ck = S[a, pair_k[e]]
                    if ck <= 0 or ck > lim[e, c]:
                        good = False
                        break
            if not good:
                break
        if good:
            acc[:] = 0.0
            for j in range(n):
                c = S[a, j]
                for r in range(nr):
                    acc[r] += contrib[j, c, r]
            for r in range(nr):
                if acc[r] > rhs[r] + FEAS_TOL * max(1.0, abs(rhs[r])):
                    good = False
                    break
        ok[a] = good
    return ok


def _batch_check_np(S, allowed, pair_ptr, pair_k, lim, contrib, rhs, chunk=65536):
    S = np.asarray(S, dtype=np.int64)
    m, n = S.shape
    ok = np.ones(m, dtype=bool)
    cap = rhs + FEAS_TOL * np.maximum(1.0, np.abs(rhs))
    for lo in range(0, m, chunk):
        blk = S[lo:lo + chunk]
        good = np.ones(len(blk), dtype=bool)
        acc = np.zeros((len(blk), len(rhs)))
        for j in range(n):
            c = blk[:, j]
            good &= allowed[j, c]
            acc += contrib[j, c]
            for e in range(pair_ptr[j], pair_ptr[j + 1]):
                ck = blk[:, pair_k[e]]
                bad = (c > 0) & ((ck <= 0) | (ck > lim[e, c]))
                good &= ~bad
        good &= np.all(acc <= cap, axis=1)
        ok[lo:lo + chunk] = good
    return ok


batch_check = _batch_check_jit if JIT_ENABLED else _batch_check_np


# --- reconstruction ledgers ------------------------------------------------
# slack[k, u] (u = 1..H, column 0 unused) holds cumulative availability minus
# cumulative consumption up to period u; sufmin[k, u] = min(slack[k, u:]).


@njit
def _fit_cumulative_jit(t0, p, q, slack, sufmin, H):
    K = q.shape[0]
    for t in range(t0, H + 1):
        good = True
        for k in range(K):
            qk = q[k]
            if qk <= 0.0:
                continue
            if qk * p > sufmin[k, t] + FEAS_TOL * max(1.0, abs(sufmin[k, t])):
                good = False
                break
            for u in range(max(1, t - p + 1), t):
                need = qk * (u - (t - p))
                if need > slack[k, u] + FEAS_TOL * max(1.0, abs(slack[k, u])):
                    good = False
                    break
            if not good:
                break
        if good:
            return t
    return -1


def _fit_cumulative_np(t0, p, q, slack, sufmin, H):
    if t0 > H:
        return -1
    ts = np.arange(t0, H + 1)
    good = np.ones(len(ts), dtype=bool)
    for k in np.flatnonzero(q > 0):
        qk = q[k]
        tol = FEAS_TOL * np.maximum(1.0, np.abs(sufmin[k, ts]))
        good &= qk * p <= sufmin[k, ts] + tol
        for back in range(1, p):
            u = ts - back
            valid = u >= 1
            uu = np.where(valid, u, 0)
            need = qk * (p - back)
            tol_u = FEAS_TOL * np.maximum(1.0, np.abs(slack[k, uu]))
            good &= ~valid | (need <= slack[k, uu] + tol_u)
    hit = np.flatnonzero(good)
    return int(ts[hit[0]]) if len(hit) else -1


@njit
def commit_cumulative(t, p, q, slack, sufmin, H):
    K = q.shape[0]
    for k in range(K):
        qk = q[k]
        if qk <= 0.0:
            continue
        for u in range(max(1, t - p + 1), H + 1):
            slack[k, u] -= qk * min(p, u - (t - p))
        m = np.inf
        for u in range(H, 0, -1):
            if slack[k, u] < m:
                m = slack[k, u]
            sufmin[k, u] = m


@njit
def _fit_renewable_jit(t0, p, q, rem, H):
    K = q.shape[0]
    for t in range(t0, H + 1):
        good = True
        for k in range(K):
            qk = q[k]
            if qk <= 0.0:
                continue
            for u in range(max(1, t - p + 1), t + 1):
                if qk > rem[k, u] + FEAS_TOL * max(1.0, abs(rem[k, u])):
                    good = False
                    break
            if not good:
                break
        if good:
            return t
    return -1


def _fit_renewable_np(t0, p, q, rem, H):
    if t0 > H:
        return -1
    ts = np.arange(t0, H + 1)
    good = np.ones(len(ts), dtype=bool)
    for k in np.flatnonzero(q > 0):
        short = q[k] > rem[k] + FEAS_TOL * np.maximum(1.0, np.abs(rem[k]))
        short[0] = False
        # windows [t-p+1, t] touching a short period
        c = np.concatenate([[0], np.cumsum(short)])
        lo = np.maximum(1, ts - p + 1)
        good &= (c[ts + 1] - c[lo]) == 0
    hit = np.flatnonzero(good)
    return int(ts[hit[0]]) if len(hit) else -1


@njit
def commit_renewable(t, p, q, rem):
    K = q.shape[0]
    for k in range(K):
        if q[k] <= 0.0:
            continue
        for u in range(max(1, t - p + 1), t + 1):
            rem[k, u] -= q[k]


fit_cumulative = _fit_cumulative_jit if JIT_ENABLED else _fit_cumulative_np
fit_renewable = _fit_renewable_jit if JIT_ENABLED else _fit_renewable_np
