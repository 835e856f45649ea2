"""Hot loops of the slotted fluid simulator and the schedule-search oracles.

All quantities are integers: rational rates and widths are pre-scaled by a
common denominator, so the kernels are exact.  Each kernel compiles with
numba when available; DEADLINESCHED_NUMBA=0 selects the pure-Python path
(same code, interpreted) for debugging and benchmarking.
"""

from __future__ import annotations

import numpy as np

from ._accel import njit


@njit(cache=True)
def fluid_warmup(Q, pend, lam, W, RL, rlen, act, K, t_start, n_slots, qmax, served_total):
    """Advance the queue state by n_slots without recording.

    Q, pend: (F, L) scaled volumes; lam: (F,); W: (F, L) scaled widths;
    RL: (F, L) link ids; rlen: (F,) route lengths; act: (K, E) uint8.
    qmax: (F,) running max of the post-arrival route queue sum.
    served_total: (F, L) cumulative volume served per hop (the last hop is
    the delivered volume).  All updated in place.
    """
    F = Q.shape[0]
    for t in range(t_start, t_start + n_slots):
        row = t % K
        for f in range(F):
            L = rlen[f]
            total = 0
            for j in range(L):
                Q[f, j] += pend[f, j]
                pend[f, j] = 0
                total += Q[f, j]
            Q[f, 0] += lam[f]
            total += lam[f]
            if total > qmax[f]:
                qmax[f] = total
            for j in range(L):
                if act[row, RL[f, j]]:
                    x = Q[f, j]
                    if W[f, j] < x:
                        x = W[f, j]
                    Q[f, j] -= x
                    served_total[f, j] += x
                    if j + 1 < L:
                        pend[f, j + 1] = x


@njit(cache=True)
def fluid_record(Q, pend, lam, W, RL, rlen, act, K, t_start, n_slots, qmax, served_total,
                 served, qvol):
    """Like fluid_warmup, but also records per-slot service and queue volumes.

    served: (F, L, n_slots) volume served at each hop per slot.
    qvol: (F, L, n_slots) post-arrival queue volumes.
    """
    F = Q.shape[0]
    for s in range(n_slots):
        t = t_start + s
        row = t % K
        for f in range(F):
            L = rlen[f]
            total = 0
            for j in range(L):
                Q[f, j] += pend[f, j]
                pend[f, j] = 0
                total += Q[f, j]
            Q[f, 0] += lam[f]
            total += lam[f]
            if total > qmax[f]:
                qmax[f] = total
            for j in range(L):
                qvol[f, j, s] = Q[f, j]
                if act[row, RL[f, j]]:
                    x = Q[f, j]
                    if W[f, j] < x:
                        x = W[f, j]
                    Q[f, j] -= x
                    served_total[f, j] += x
                    served[f, j, s] = x
                    if j + 1 < L:
                        pend[f, j + 1] = x


@njit(cache=True)
def greedy_line_run(Q, pend, lam, W, phi, t_start, n_slots, qmax, served_total, served, record):
    """Solitary-flow greedy policy on a line: scan destination -> source,
    activate the first link with a full slice, skip phi links, repeat; if the
    region containing the source had no full queue, activate the source link.

    Q, pend, W, served_total: (L,); qmax: (1,);
    served: (L, n_slots) written only when record != 0.
    Returns nothing; state arrays updated in place.
    """
    L = Q.shape[0]
    for s in range(n_slots):
        total = 0
        for j in range(L):
            Q[j] += pend[j]
            pend[j] = 0
            total += Q[j]
        Q[0] += lam
        total += lam
        if total > qmax[0]:
            qmax[0] = total
        # choose the activation set for this slot
        lowest = -1  # lowest-index activated link so far
        j = L - 1
        while j >= 0:
            if Q[j] >= W[j]:
                # serve link j
                x = Q[j]
                if W[j] < x:
                    x = W[j]
                Q[j] -= x
                served_total[j] += x
                if j + 1 < L:
                    pend[j + 1] = x
                if record:
                    served[j, s] = x
                lowest = j
                j -= phi + 1
            else:
                j -= 1
        if (lowest == -1 or lowest > phi) and lowest != 0:
            # work conservation: source link runs when its region had no full queue
            x = Q[0]
            if W[0] < x:
                x = W[0]
            if x > 0:
                Q[0] -= x
                served_total[0] += x
                if L > 1:
                    pend[1] = x
                if record:
                    served[0, s] = x


@njit(cache=True)
def impulse_delay_worst(offset, route, K):
    """Worst end-to-end delay of a unit impulse over all arrival phases.

    offset: (E, K) cyclic wait until link e is next active from slot phase
    s (0 if active at s; >= NEVER when never active); route: link ids in
    order.  Returns the max of (delivery slot + 1 - phase)."""
    big = 1 << 40
    worst = 0
    for phase in range(K):
        t = phase
        for idx in range(route.shape[0]):
            start = t if idx == 0 else t + 1
            wait = offset[route[idx], start % K]
            if wait >= big:
                return big
            t = start + wait
        d = t + 1 - phase
        if d > worst:
            worst = d
    return worst


@njit(cache=True)
def fill_offsets(active, offset):
    """offset[e, s] = cyclic wait from slot s to the next slot with link e
    active; active: (K, E) uint8, offset: (E, K) int64 (written)."""
    K = active.shape[0]
    E = active.shape[1]
    big = 1 << 40
    for e in range(E):
        nxt = np.int64(big)
        for s in range(2 * K - 1, -1, -1):
            if active[s % K, e]:
                nxt = s
            if s < K:
                offset[e, s] = nxt - s if nxt - s < K else big
    return offset


@njit(cache=True)
def oracle_impulse_search(member, route, K, prune_rotations):
    """Exhaustive impulse-delay minimization over period-K cyclic schedules.

    member: (n_sets, n_links) uint8 membership of each candidate activation
    set.  Enumerates all n_sets^K assignments (odometer order), optionally
    skipping non-canonical rotations, evaluates the worst-phase impulse
    delay of the route, and returns (best delay, candidates examined).
    """
    n_sets = member.shape[0]
    n_links = member.shape[1]
    assign = np.zeros(K, dtype=np.int64)
    active = np.zeros((K, n_links), dtype=np.uint8)
    offset = np.zeros((n_links, K), dtype=np.int64)
    best = np.int64(1 << 60)
    examined = np.int64(0)
    while True:
        canonical = True
        if prune_rotations:
            for r in range(1, K):
                smaller = False
                for i in range(K):
                    a = assign[(i + r) % K]
                    b = assign[i]
                    if a != b:
                        smaller = a < b
                        break
                if smaller:
                    canonical = False
                    break
        if canonical:
            examined += 1
            for t in range(K):
                for e in range(n_links):
                    active[t, e] = member[assign[t], e]
            fill_offsets(active, offset)
            d = impulse_delay_worst(offset, route, K)
            if d < best:
                best = d
        # odometer increment
        pos = K - 1
        while pos >= 0 and assign[pos] == n_sets - 1:
            assign[pos] = 0
            pos -= 1
        if pos < 0:
            return best, examined
        assign[pos] += 1


@njit(cache=True)
def line_schedule_max_qsum(order, lam, W, warm_periods, max_doublings):
    """Steady-state max route-queue-sum for a single-link-per-slot line
    schedule given as `order` (link index per slot, period len(order)).

    Doubles the warmup until the state repeats across period boundaries;
    returns (max qsum over one steady period, reached_steady flag).
    """
    K = order.shape[0]
    L = W.shape[0]
    Q = np.zeros(L, dtype=np.int64)
    pend = np.zeros(L, dtype=np.int64)

    warm = warm_periods
    for _ in range(max_doublings):
        prevQ = Q.copy()
        prevP = pend.copy()
        for t in range(warm * K):
            row = t % K
            for j in range(L):
                Q[j] += pend[j]
                pend[j] = 0
            Q[0] += lam
            j = order[row]
            if j >= 0:
                x = Q[j]
                if W[j] < x:
                    x = W[j]
                Q[j] -= x
                if j + 1 < L:
                    pend[j + 1] = x
        same = True
        for j in range(L):
            if Q[j] != prevQ[j] or pend[j] != prevP[j]:
                same = False
        if same:
            qmax = np.int64(0)
            for t in range(K):
                row = t % K
                total = np.int64(0)
                for j in range(L):
                    Q[j] += pend[j]
                    pend[j] = 0
                    total += Q[j]
                Q[0] += lam
                total += lam
                if total > qmax:
                    qmax = total
                j = order[row]
                if j >= 0:
                    x = Q[j]
                    if W[j] < x:
                        x = W[j]
                    Q[j] -= x
                    if j + 1 < L:
                        pend[j + 1] = x
            return qmax, True
        warm = 1
    return np.int64(-1), False


@njit(cache=True)
def oracle_rate_search(counts, lam, W, warm_periods):
    """Minimum steady-state max queue-sum over all arrangements of a slot
    multiset: counts[j] slots serve link j (sum = period K), under total
    interference at arrival rate lam.  Iterates multiset permutations in
    lexicographic order via next-permutation.  Returns (best max qsum,
    best arrangement, arrangements examined)."""
    L = counts.shape[0]
    K = np.int64(0)
    for j in range(L):
        K += counts[j]
    order = np.zeros(K, dtype=np.int64)
    pos = 0
    for j in range(L):
        for _ in range(counts[j]):
            order[pos] = j
            pos += 1
    best = np.int64(1 << 60)
    best_order = order.copy()
    examined = np.int64(0)
    while True:
        examined += 1
        qmax, ok = line_schedule_max_qsum(order, lam, W, warm_periods, 16)
        if ok and qmax < best:
            best = qmax
            best_order = order.copy()
        # next lexicographic permutation of `order`
        i = K - 2
        while i >= 0 and order[i] >= order[i + 1]:
            i -= 1
        if i < 0:
            return best, best_order, examined
        j = K - 1
        while order[j] <= order[i]:
            j -= 1
        tmp = order[i]
        order[i] = order[j]
        order[j] = tmp
        lo = i + 1
        hi = K - 1
        while lo < hi:
            tmp = order[lo]
            order[lo] = order[hi]
            order[hi] = tmp
            lo += 1
            hi -= 1
