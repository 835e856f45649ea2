"""Exact slotted fluid simulation of slice queues under cyclic schedules.

Slot semantics (hard contract, reproducing the worked two-hop example):
at slot t, exogenous arrivals and the volumes relayed at slot t-1 join the
queues first; each scheduled link then serves min(width, queue) FCFS from
its slice queue; volume served at the destination link in slot t is
delivered at t+1; a cohort's delay is the delivery time of its last
fraction minus its arrival slot.

Internally all volumes are scaled to a common integer denominator, so the
numba kernels are exact; results are reported as Fractions / ints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .pinwheel import cyclic_gaps
from .topology import ConflictGraph, build_conflict_graph
from .traffic import Scenario, SliceAssignment

INT_GUARD = 1 << 62


class SimulationError(Exception):
    pass


@dataclass(frozen=True)
class CyclicSchedule:
    """Periodic mapping slot -> set of activated links."""

    period: int
    activation: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.period != len(self.activation) or self.period < 1:
            raise ValueError("period must match the activation list and be >= 1")

    def validate(self, cg: ConflictGraph) -> None:
        for t, links in enumerate(self.activation):
            if not cg.is_independent(links):
                raise SimulationError(f"slot {t} activates conflicting links {sorted(links)}")

    def active_array(self, n_links: int) -> np.ndarray:
        act = np.zeros((self.period, n_links), dtype=np.uint8)
        for t, links in enumerate(self.activation):
            for e in links:
                act[t, e] = 1
        return act

    def occurrences(self, e: int) -> list[int]:
        return [t for t, links in enumerate(self.activation) if e in links]

    def repeat(self, m: int) -> "CyclicSchedule":
        return CyclicSchedule(self.period * m, self.activation * m)

    @staticmethod
    def from_tasks(period: int, slots, task_links: list[frozenset[int]]) -> "CyclicSchedule":
        """Lift a single-server task schedule to link sets via a coloring."""
        return CyclicSchedule(
            period,
            tuple(frozenset() if s < 0 else task_links[s] for s in slots),
        )


@dataclass(frozen=True)
class InterSchedStats:
    """Measured cyclic inter-scheduling times per link and ordered pair."""

    k_min: dict[int, float]
    k_max: dict[int, float]
    pair_min: dict[tuple[int, int], float]
    pair_max: dict[tuple[int, int], float]


def measure_inter_scheduling(schedule: CyclicSchedule, links=None, pairs=None) -> InterSchedStats:
    K = schedule.period
    occ = {}
    if links is None:
        links = sorted({e for s in schedule.activation for e in s})
    for e in links:
        occ[e] = schedule.occurrences(e)
    k_min, k_max = {}, {}
    for e in links:
        gaps = cyclic_gaps(occ[e], K)
        k_min[e] = min(gaps) if gaps else math.inf
        k_max[e] = max(gaps) if gaps else math.inf
    pair_min, pair_max = {}, {}
    for a, b in pairs or []:
        if not occ.get(a) or not occ.get(b):
            pair_min[(a, b)] = pair_max[(a, b)] = math.inf
            continue
        # time from each scheduling of a to the next scheduling of b
        # (strictly later, cyclically)
        waits = [
            min((t2 - t1 - 1) % K + 1 for t2 in occ[b])
            for t1 in occ[a]
        ]
        pair_min[(a, b)] = min(waits)
        pair_max[(a, b)] = max(waits)
    return InterSchedStats(k_min, k_max, pair_min, pair_max)


@dataclass
class SimTrace:
    scale: int
    period: int
    flows: tuple
    steady: bool
    steady_start: int
    window_start: int
    window_slots: int
    lam_scaled: np.ndarray
    route_len: np.ndarray
    max_qsum: list[Fraction]  # post-arrival route queue sum, max over the run
    delays: list[np.ndarray]  # per flow: delay of each cohort arriving in one steady period
    max_delay: list[float]  # int, or inf if undelivered within the window
    served: np.ndarray | None  # (F, L, window) scaled service volumes
    qvol: np.ndarray | None  # (F, L, window) scaled post-arrival volumes
    served_at_start: np.ndarray = field(default=None)  # (F, L) cumulative at window start
    stats: InterSchedStats = field(default=None)

    def queue_volume(self, f: int, hop: int, s: int) -> Fraction:
        return Fraction(int(self.qvol[f, hop, s]), self.scale)


def _scale_denominator(scn: Scenario, slices: SliceAssignment) -> int:
    d = 1
    for f in scn.flows:
        d = d * f.rate.denominator // math.gcd(d, f.rate.denominator)
        for e in f.route:
            wd = slices.width(f.id, e).denominator
            d = d * wd // math.gcd(d, wd)
    return d


def simulate(
    scn: Scenario,
    schedule: CyclicSchedule,
    slices: SliceAssignment,
    horizon: int | None = None,
    max_warmup_periods: int = 4000,
    record_guard: int = 32_000_000,
) -> SimTrace:
    """Run to steady state (exact state recurrence across period boundaries),
    then measure every cohort arriving in one steady period."""
    cg = build_conflict_graph(scn.net, scn.model)
    schedule.validate(cg)
    slices.validate(scn)

    flows = scn.flows
    F = len(flows)
    if F == 0:
        raise SimulationError("no flows")
    K = schedule.period
    D = _scale_denominator(scn, slices)
    Lmax = max(len(f.route) for f in flows)
    lam = np.array([int(f.rate * D) for f in flows], dtype=np.int64)
    rlen = np.array([len(f.route) for f in flows], dtype=np.int64)
    RL = np.zeros((F, Lmax), dtype=np.int64)
    W = np.zeros((F, Lmax), dtype=np.int64)
    for i, f in enumerate(flows):
        for j, e in enumerate(f.route):
            RL[i, j] = e
            W[i, j] = int(slices.width(f.id, e) * D)
    act = schedule.active_array(len(scn.net.links))

    max_slots = horizon if horizon is not None else (max_warmup_periods + Lmax + 16) * K
    if int(lam.sum()) * (max_slots + 1) >= INT_GUARD:
        raise SimulationError("scaled volumes may overflow; reduce denominators or horizon")

    Q = np.zeros((F, Lmax), dtype=np.int64)
    pend = np.zeros((F, Lmax), dtype=np.int64)
    qmax = np.zeros(F, dtype=np.int64)
    served_total = np.zeros((F, Lmax), dtype=np.int64)

    t = 0
    steady = False
    chunk = 1
    while t + chunk * K <= max_slots:
        prev = (Q.copy(), pend.copy())
        kernels.fluid_warmup(Q, pend, lam, W, RL, rlen, act, K, t, chunk * K, qmax, served_total)
        t += chunk * K
        if np.array_equal(Q, prev[0]) and np.array_equal(pend, prev[1]):
            steady = True
            break
        if chunk < 64:
            chunk *= 2

    # measurement window: one period of cohorts plus enough tail to drain the
    # steady-state backlog through every hop
    tail = 0
    for i in range(F):
        backlog = int(Q[i].sum() + pend[i].sum())
        tail = max(tail, K * (int(rlen[i]) + 3) + K * (backlog // (int(lam[i]) * K) + 1))
    window = K + tail
    if 2 * F * Lmax * window > record_guard:
        raise SimulationError(
            f"measurement window of {window} slots exceeds the recording guard"
        )
    served = np.zeros((F, Lmax, window), dtype=np.int64)
    qvol = np.zeros((F, Lmax, window), dtype=np.int64)
    served_at_start = served_total.copy()
    ws = t
    kernels.fluid_record(
        Q, pend, lam, W, RL, rlen, act, K, ws, window, qmax, served_total, served, qvol
    )
    t += window

    # conservation: injected = delivered + in flight, exactly
    for i in range(F):
        injected = int(lam[i]) * t
        onhand = int(Q[i].sum() + pend[i].sum()) + int(served_total[i, int(rlen[i]) - 1])
        if injected != onhand:
            raise SimulationError(f"conservation violated for flow {flows[i].id}")

    delays: list[np.ndarray] = []
    max_delay: list[float] = []
    for i in range(F):
        last = int(rlen[i]) - 1
        dcum = served_at_start[i, last] + np.cumsum(served[i, last, :])
        targets = (np.arange(ws, ws + K, dtype=np.int64) + 1) * int(lam[i])
        idx = np.searchsorted(dcum, targets, side="left")
        ok = idx < window
        d = np.where(ok, ws + idx + 1 - np.arange(ws, ws + K), 0)
        delays.append(d)
        max_delay.append(float("inf") if not ok.all() else int(d.max()))

    used = sorted({e for f in flows for e in f.route})
    stats = measure_inter_scheduling(schedule, links=used)
    return SimTrace(
        scale=D,
        period=K,
        flows=flows,
        steady=steady,
        steady_start=ws,
        window_start=ws,
        window_slots=window,
        lam_scaled=lam,
        route_len=rlen,
        max_qsum=[Fraction(int(q), D) for q in qmax],
        delays=delays,
        max_delay=max_delay,
        served=served,
        qvol=qvol,
        served_at_start=served_at_start,
        stats=stats,
    )


@dataclass(frozen=True)
class FlowVerdict:
    supported: bool
    max_delay: float
    max_qsum: Fraction
    qsum_bound: Fraction


def verify_support(trace: SimTrace, scn: Scenario) -> dict[int, FlowVerdict]:
    """Per-flow support verdict (every cohort delay <= deadline), with the
    queue-sum criterion max_t sum Q <= lambda*tau asserted to agree."""
    if not trace.steady:
        raise SimulationError("steady state not reached; cannot certify support")
    verdicts = {}
    for i, f in enumerate(scn.flows):
        supported = trace.max_delay[i] <= f.deadline
        bound = f.rate * f.deadline
        by_queue = trace.max_qsum[i] <= bound
        if supported != by_queue:
            raise AssertionError(
                f"support criteria disagree for flow {f.id}: "
                f"delay {trace.max_delay[i]} vs tau {f.deadline}, "
                f"qsum {trace.max_qsum[i]} vs {bound}"
            )
        verdicts[f.id] = FlowVerdict(supported, trace.max_delay[i], trace.max_qsum[i], bound)
    return verdicts


@dataclass
class DeficitReport:
    applicable: bool  # Lemma 2 hypothesis w >= lambda * k_max held on every link
    deficits: dict[int, np.ndarray]  # flow id -> (cohorts, hops) deficit at each link arrival
    violations: list[tuple[int, int, int, int]]  # (flow id, cohort slot, hop, deficit)


def delay_deficit_trace(trace: SimTrace, schedule: CyclicSchedule, slices: SliceAssignment) -> DeficitReport:
    """Delay deficit of each measured cohort at each link arrival: its age
    minus the sum of k_max over links already traversed; nonpositive under
    the Lemma 2 hypothesis."""
    if trace.qvol is None and trace.served is None:
        raise SimulationError("trace was recorded without per-hop service")
    applicable = True
    deficits = {}
    violations = []
    ws, K, window = trace.window_start, trace.period, trace.window_slots
    for i, f in enumerate(trace.flows):
        kbar = [trace.stats.k_max[e] for e in f.route]
        if any(math.isinf(kb) for kb in kbar):
            applicable = False
            deficits[f.id] = np.zeros((0, 0), dtype=np.int64)
            continue
        kbar = [int(kb) for kb in kbar]
        for e, kb in zip(f.route, kbar):
            if slices.width(f.id, e) < f.rate * kb:
                applicable = False
        lam_i = int(trace.lam_scaled[i])
        arrivals = np.arange(ws, ws + K, dtype=np.int64)
        targets = (arrivals + 1) * lam_i
        L = int(trace.route_len[i])
        out = np.zeros((K, L), dtype=np.int64)
        quota = 0
        undelivered = False
        for j in range(L):
            # cohort's last fraction leaves hop j at slot ws+idx, arrives at
            # hop j+1 (or the destination) at ws+idx+1
            dcum = trace.served_at_start[i, j] + np.cumsum(trace.served[i, j, :])
            idx = np.searchsorted(dcum, targets, side="left")
            if (idx >= window).any():
                undelivered = True
                break
            quota += kbar[j]
            age = ws + idx + 1 - arrivals
            out[:, j] = age - quota
        if undelivered:
            deficits[f.id] = out[:0]
            continue
        deficits[f.id] = out
        for c, a in enumerate(arrivals):
            for j in range(L):
                if out[c, j] > 0:
                    violations.append((f.id, int(a), j, int(out[c, j])))
    return DeficitReport(applicable, deficits, violations)


def worst_impulse_delay(schedule: CyclicSchedule, route, n_links: int) -> int:
    """Worst-case end-to-end delay of a single unit impulse injected into an
    empty network, over all arrival phases (the vanishing-rate regime)."""
    act = schedule.active_array(n_links)
    offset = np.zeros((n_links, schedule.period), dtype=np.int64)
    kernels.fill_offsets(act, offset)
    d = kernels.impulse_delay_worst(offset, np.asarray(route, dtype=np.int64), schedule.period)
    if d >= 1 << 40:
        raise SimulationError("some route link is never scheduled")
    return int(d)


def block_policy(scn: Scenario, widths: list[Fraction]) -> CyclicSchedule:
    """Worst-case stabilizing block schedule for a solitary flow on a line:
    with service fractions mu_e = lambda/w_e and K = lcm of their
    denominators, link e runs for eta_e = K*mu_e consecutive slots starting
    right where link e+1's block ends (reverse flow order)."""
    if len(scn.flows) != 1:
        raise SimulationError("block policy is defined for a solitary flow")
    flow = scn.flows[0]
    route = flow.route
    if len(widths) != len(route):
        raise ValueError("one width per route hop required")
    mu = [flow.rate / w for w in widths]
    if any(m > 1 for m in mu):
        raise SimulationError("width below the arrival rate; unstable")
    K = 1
    for m in mu:
        K = K * m.denominator // math.gcd(K, m.denominator)
    eta = [int(m * K) for m in mu]
    n = len(route)
    start = [0] * n
    for e in range(n - 2, -1, -1):
        start[e] = (start[e + 1] + eta[e + 1]) % K
    activation = []
    for t in range(K):
        links = frozenset(
            route[e] for e in range(n) if (t - start[e]) % K < eta[e]
        )
        activation.append(links)
    sched = CyclicSchedule(K, tuple(activation))
    sched.validate(build_conflict_graph(scn.net, scn.model))
    return sched
