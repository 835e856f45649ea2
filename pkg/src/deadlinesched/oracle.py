"""Independent brute-force baselines.

These deliberately share no logic with the analytical modules they check:
the deadline oracle enumerates cyclic schedules directly, the throughput
oracle solves an independent-set LP, and the pinwheel oracle decides
schedulability by exhaustive search of the gap-state graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .pinwheel import EXACT_STATE_GUARD, PinwheelSchedule, exact_pinwheel_search
from .simulator import CyclicSchedule
from .topology import ConflictGraph, build_conflict_graph, maximal_independent_sets
from .traffic import Scenario

SEARCH_GUARD = 10**8


@dataclass(frozen=True)
class OracleResult:
    best_schedule: CyclicSchedule | None
    best_objective: Fraction | int | None
    examined: int


def _candidate_sets(scn: Scenario) -> list[frozenset[int]]:
    """Maximal independent sets of the conflict graph induced on used links."""
    used = scn.used_links()
    cg = build_conflict_graph(scn.net, scn.model)
    idx = {e: i for i, e in enumerate(used)}
    sub_edges = frozenset(
        frozenset((idx[a], idx[b]))
        for a in used
        for b in used
        if a < b and cg.adjacent(a, b)
    )
    sub = ConflictGraph(len(used), sub_edges)
    return [
        frozenset(used[i] for i in mis) for mis in maximal_independent_sets(sub)
    ]


def min_deadline_oracle(
    scn: Scenario, period_bound: int, vanishing_rate: bool = False
) -> OracleResult:
    """Minimum worst-case end-to-end delay over cyclic schedules.

    vanishing_rate=True: enumerates every assignment of maximal independent
    sets to slots for each period up to period_bound (rotation-pruned) and
    scores it by the worst-phase traversal time of a unit impulse on each
    route (the vanishing-rate delay).

    vanishing_rate=False: the scenario must be a solitary flow on a line
    under total interference; the oracle then searches all arrangements of
    the per-link slot counts eta_e = K*lambda/w'_e (one link per slot) and
    scores each by its steady-state max queue sum, converted to a delay by
    ceil(maxQ/lambda).
    """
    if vanishing_rate:
        return _impulse_oracle(scn, period_bound)
    return _rate_oracle(scn, period_bound)


def _impulse_oracle(scn: Scenario, period_bound: int) -> OracleResult:
    sets = _candidate_sets(scn)
    n_links = len(scn.net.links)
    member = np.zeros((len(sets), n_links), dtype=np.uint8)
    for i, s in enumerate(sets):
        for e in s:
            member[i, e] = 1
    total = sum(len(sets) ** k for k in range(1, period_bound + 1))
    if total > SEARCH_GUARD:
        raise ValueError(f"search space {total} exceeds guard {SEARCH_GUARD}")
    best = None
    best_k = None
    examined = 0
    for K in range(1, period_bound + 1):
        worst_route = 0
        for f in scn.flows:
            route = np.array(f.route, dtype=np.int64)
            d, ex = kernels.oracle_impulse_search(member, route, K, True)
            worst_route = max(worst_route, int(d))
            examined += int(ex)
        if best is None or worst_route < best:
            best = worst_route
            best_k = K
    # rebuild one witness schedule achieving the optimum (cheap re-search)
    witness = _impulse_witness(scn, member, sets, best_k, best)
    return OracleResult(witness, best, examined)


def _impulse_witness(scn, member, sets, K, target) -> CyclicSchedule | None:
    n_links = member.shape[1]
    assign = [0] * K
    active = np.zeros((K, n_links), dtype=np.uint8)
    offset = np.zeros((n_links, K), dtype=np.int64)
    while True:
        for t in range(K):
            active[t, :] = member[assign[t], :]
        kernels.fill_offsets(active, offset)
        worst = 0
        for f in scn.flows:
            route = np.array(f.route, dtype=np.int64)
            worst = max(worst, int(kernels.impulse_delay_worst(offset, route, K)))
        if worst == target:
            return CyclicSchedule(K, tuple(sets[i] for i in assign))
        pos = K - 1
        while pos >= 0 and assign[pos] == len(sets) - 1:
            assign[pos] = 0
            pos -= 1
        if pos < 0:
            return None
        assign[pos] += 1


def _rate_oracle(scn: Scenario, period_bound: int) -> OracleResult:
    from .solitary import bottleneck_widths  # local import to avoid a cycle

    if len(scn.flows) != 1:
        raise ValueError("rate-mode oracle requires a solitary flow")
    f = scn.flows[0]
    n = len(f.route)
    if scn.model.phi < n - 1:
        raise ValueError("rate-mode oracle requires total interference")
    caps = [scn.net.links[e].capacity for e in f.route]
    wprime = bottleneck_widths(caps, f.rate, scn.model.phi)
    shares = [f.rate / c for c in wprime]
    K = 1
    for s in shares:
        K = K * s.denominator // math.gcd(K, s.denominator)
    if K > period_bound:
        raise ValueError(f"schedule period {K} exceeds bound {period_bound}")
    counts = [int(s * K) for s in shares]
    idle = K - sum(counts)
    perms = math.factorial(K)
    for c in counts + [idle]:
        perms //= math.factorial(c)
    if perms > SEARCH_GUARD:
        raise ValueError(f"{perms} arrangements exceed guard {SEARCH_GUARD}")
    D = f.rate.denominator
    for c in wprime:
        D = D * c.denominator // math.gcd(D, c.denominator)
    lam = int(f.rate * D)
    W = [int(c * D) for c in wprime]
    carr = np.array(counts + ([idle] if idle else []), dtype=np.int64)
    warr = np.array(W + ([1 << 40] if idle else []), dtype=np.int64)
    best_q, best_order, examined = kernels.oracle_rate_search(carr, lam, warr, 4)
    if best_q >= 1 << 60:
        return OracleResult(None, None, int(examined))
    delay = -(-int(best_q) // lam)
    activation = tuple(
        frozenset([f.route[j]] if j < n else []) for j in best_order
    )
    return OracleResult(CyclicSchedule(K, activation), delay, int(examined))


def throughput_lp(scn: Scenario) -> Fraction:
    """Max common rate lambda such that some convex combination of maximal
    independent sets serves every used link e at fraction >= lambda*n_e/c_e
    (n_e = flows routed through e).  Solved as a single LP (variables: set
    weights and lambda) rather than bisection: both trace the same polytope
    boundary, and one HiGHS solve is well within the 1e-9 tolerance."""
    sets = _candidate_sets(scn)
    used = scn.used_links()
    if not used:
        raise ValueError("no links carry traffic")
    m = len(sets)
    # variables x = (alpha_0..alpha_{m-1}, lam); maximize lam
    c = np.zeros(m + 1)
    c[m] = -1.0
    a_ub = []
    b_ub = []
    row = np.zeros(m + 1)
    row[:m] = 1.0
    a_ub.append(row.copy())  # sum alpha <= 1
    b_ub.append(1.0)
    for e in used:
        row = np.zeros(m + 1)
        for i, s in enumerate(sets):
            if e in s:
                row[i] = -1.0
        n_e = len(scn.flows_on(e))
        row[m] = float(Fraction(n_e) / scn.net.links[e].capacity)
        a_ub.append(row)
        b_ub.append(0.0)
    res = linprog(c, A_ub=np.array(a_ub), b_ub=np.array(b_ub), bounds=[(0, None)] * (m + 1))
    if not res.success:
        raise RuntimeError(f"throughput LP failed: {res.message}")
    return Fraction(float(res.x[m])).limit_denominator(10**9)


def exhaustive_pinwheel(
    k, period_bound: int | None = None, max_states: int = EXACT_STATE_GUARD
) -> tuple[bool | None, PinwheelSchedule | None]:
    """Exact schedulability decision for a pinwheel vector.

    Searches the gap-state graph depth-first; any cycle is a valid cyclic
    schedule and an acyclic graph proves unschedulability, so the decision
    does not depend on a period bound (the argument is accepted for callers
    that budget one; any witness found has period <= number of states).
    Returns (None, None) when the state space exceeds max_states.
    """
    del period_bound
    return exact_pinwheel_search(k, max_states=max_states)
