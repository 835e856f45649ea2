"""Solitary-flow analysis on a line network.

The flow's route is viewed as a line of links with slice widths w; under
phi-hop interference the throughput-optimal rate is
lambda* = min over windows of (phi+1) consecutive links of 1/sum(1/w),
achieved by the Ordered Round Robin schedule.  Also provides the minimal
("bottleneck") widths supporting a given rate, and the width-aware greedy
policy with its delay ratio zeta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .simulator import CyclicSchedule, SimulationError
from .topology import Link, NetworkGraph, InterferenceModel
from .traffic import Flow, Scenario


@dataclass(frozen=True)
class LineInstance:
    widths: tuple[Fraction, ...]  # per hop, source -> destination order
    phi: int
    rate: Fraction

    def __post_init__(self):
        if not self.widths:
            raise ValueError("empty widths")
        if not 0 <= self.phi <= len(self.widths) - 1:
            raise ValueError("phi outside [0, n_links-1]")


def _windows(n: int, phi: int):
    return [range(j, j + phi + 1) for j in range(n - phi)]


def lambda_star(w, phi: int) -> Fraction:
    """Theorem-2 closed form: the tightest (phi+1)-window of inverse widths."""
    w = [Fraction(v) for v in w]
    if not w:
        raise ValueError("empty widths")
    if not 0 <= phi <= len(w) - 1:
        raise ValueError("invalid phi")
    return min(1 / sum(Fraction(1, 1) / w[j] for j in win) for win in _windows(len(w), phi))


def orr_schedule(n_links: int, phi: int) -> CyclicSchedule:
    """Period phi+1; slot t activates every link j with j = t mod (phi+1).
    (The period fixes the stated 'j = t mod phi' as a typo.)"""
    if n_links < 1 or not 0 <= phi <= n_links - 1:
        raise ValueError("invalid (n_links, phi)")
    K = phi + 1
    return CyclicSchedule(
        K, tuple(frozenset(j for j in range(n_links) if j % K == t) for t in range(K))
    )


def line_scenario(inst: LineInstance, deadline: int = 1_000_000) -> Scenario:
    """Scenario whose link ids coincide with hop indices 0..n-1."""
    n = len(inst.widths)
    net = NetworkGraph(
        tuple(range(n + 1)), tuple(Link(j, j + 1, inst.widths[j]) for j in range(n))
    )
    flow = Flow(0, 0, n, inst.rate, deadline, tuple(range(n)))
    return Scenario(net, InterferenceModel(inst.phi), (flow,))


def bottleneck_widths(w, lam, phi: int) -> list[Fraction]:
    """Minimum slice widths w' <= w with sum(1/w') <= 1/lambda on every
    (phi+1)-window: floating-point convex solve, then exact rational repair
    (scale up to feasibility, then per-coordinate exact tightening)."""
    w = [Fraction(v) for v in w]
    lam = Fraction(lam)
    n = len(w)
    if lam > lambda_star(w, phi):
        raise ValueError("rate exceeds lambda*")
    wins = _windows(n, phi)
    inv_lam = float(1 / lam)
    wf = np.array([float(v) for v in w])
    cons = [
        {
            "type": "ineq",
            "fun": (lambda x, win=win: inv_lam - sum(1.0 / x[j] for j in win)),
            "jac": (
                lambda x, win=win: np.array(
                    [1.0 / x[j] ** 2 if j in win else 0.0 for j in range(n)]
                )
            ),
        }
        for win in wins
    ]
    res = minimize(
        lambda x: x.sum(),
        wf,
        jac=lambda x: np.ones(n),
        bounds=[(float(lam), float(v)) for v in w],
        constraints=cons,
        method="SLSQP",
        options={"maxiter": 400, "ftol": 1e-12},
    )
    x = np.clip(res.x if res.success else wf, float(lam), wf)
    out = [min(Fraction(v).limit_denominator(10**9), we) for v, we in zip(x, w)]
    out = [we if abs(c - we) < we * Fraction(1, 10**7) else c for c, we in zip(out, w)]
    # exact feasibility repair: scale up by the worst window overload
    for _ in range(100):
        gamma = max(lam * sum(1 / c for c in (out[j] for j in win)) for win in wins)
        if gamma <= 1:
            break
        out = [min(gamma * c, we) for c, we in zip(out, w)]
    else:
        out = list(w)
    # exact per-coordinate tightening (keeps feasibility, reduces the sum)
    for _ in range(2):
        for e in range(n):
            lo = lam
            for win in wins:
                if e not in win:
                    continue
                slack = 1 / lam - sum(1 / out[j] for j in win if j != e)
                if slack <= 0:
                    lo = None
                    break
                lo = max(lo, 1 / slack)
            if lo is not None and lo < out[e]:
                out[e] = lo
    for win in wins:
        assert sum(1 / out[j] for j in win) <= 1 / lam
    assert all(0 < c <= we for c, we in zip(out, w))
    return out


def greedy_step(queues, widths, phi: int) -> set[int]:
    """One slot of the width-aware greedy scan, destination to source:
    activate the first link whose queue holds a full slice, skip the next
    phi links, repeat; activate the source link if its scan region had no
    full queue (work conservation)."""
    n = len(queues)
    act: set[int] = set()
    lowest = -1
    j = n - 1
    while j >= 0:
        if queues[j] >= widths[j]:
            act.add(j)
            lowest = j
            j -= phi + 1
        else:
            j -= 1
    if (lowest == -1 or lowest > phi) and 0 not in act:
        act.add(0)
    return act


@dataclass
class GreedyResult:
    max_delay: float  # int, or inf when undelivered in the window
    steady: bool  # exact state recurrence found (delay is then stationary)
    max_qsum: Fraction
    widths: list[Fraction]  # the bottleneck widths used as thresholds
    zeta: Fraction | float


def simulate_greedy(
    inst: LineInstance,
    max_warmup_slots: int = 1 << 17,
    measure_slots: int | None = None,
) -> GreedyResult:
    """Run the greedy policy with bottleneck-width thresholds to (exact)
    steady state when a state recurrence is found within the warmup budget,
    otherwise over a long observation window, and measure cohort delays."""
    wprime = bottleneck_widths(inst.widths, inst.rate, inst.phi)
    n = len(wprime)
    D = inst.rate.denominator
    for c in wprime:
        D = D * c.denominator // math.gcd(D, c.denominator)
    budget = (1 << 62) // (4 * max_warmup_slots + 16)
    if (inst.rate + sum(wprime)) * D < budget:
        lam = int(inst.rate * D)
        W = np.array([int(c * D) for c in wprime], dtype=np.int64)
    else:
        # exact denominators would overflow int64: snap the instance to a
        # dyadic grid (rate down, widths up, so feasibility is preserved)
        D = 1 << 21
        lam = int(inst.rate * D)
        W = np.array([-int(-c * D) for c in wprime], dtype=np.int64)
        if lam < 1 or (lam + int(W.sum())) >= budget:
            raise SimulationError("scaled volumes may overflow")

    Q = np.zeros(n, dtype=np.int64)
    pend = np.zeros(n, dtype=np.int64)
    qmax = np.zeros(1, dtype=np.int64)
    served_total = np.zeros(n, dtype=np.int64)
    dummy = np.zeros((n, 1), dtype=np.int64)

    # the steady cycle length divides K = lcm of the denominators of the
    # per-link slot shares lam/W_e; state recurrence is only visible across
    # chunks that are multiples of the cycle, so align chunks to K if small
    K = 1
    for v in W:
        d = int(v) // math.gcd(lam, int(v))
        K = K * d // math.gcd(K, d)
        if K > max_warmup_slots // 2:
            break
    t = 0
    chunk = K if K <= max_warmup_slots // 2 else max(16, 2 * n)
    steady = False
    while t + chunk <= max_warmup_slots:
        prev = (Q.copy(), pend.copy())
        kernels.greedy_line_run(
            Q, pend, lam, W, inst.phi, t, chunk, qmax, served_total, dummy, 0
        )
        t += chunk
        if np.array_equal(Q, prev[0]) and np.array_equal(pend, prev[1]):
            steady = True
            break
        if chunk < 1 << 14:
            chunk *= 2

    cycle = chunk if steady else (measure_slots or max(512, chunk))
    backlog = int(Q.sum() + pend.sum())
    span = int(W.sum()) // lam + n + 1
    tail = backlog // lam + (n + 3) * span + 8
    window = cycle + tail
    served = np.zeros((n, window), dtype=np.int64)
    ws = t
    base = served_total.copy()
    kernels.greedy_line_run(
        Q, pend, lam, W, inst.phi, ws, window, qmax, served_total, served, 1
    )
    t += window
    assert lam * t == int(Q.sum() + pend.sum() + served_total[n - 1]), "conservation"

    dcum = base[n - 1] + np.cumsum(served[n - 1])
    arrivals = np.arange(ws, ws + cycle, dtype=np.int64)
    targets = (arrivals + 1) * lam
    idx = np.searchsorted(dcum, targets, side="left")
    if (idx >= window).any():
        max_delay: float = float("inf")
    else:
        max_delay = int((idx + 1 - (arrivals - ws)).max())
    zeta = (
        Fraction(lam * max_delay, int(W.sum()))
        if max_delay != float("inf")
        else float("inf")
    )
    return GreedyResult(max_delay, steady, Fraction(int(qmax[0]), D), wprime, zeta)


def greedy_delay_ratio(inst: LineInstance, **kwargs) -> Fraction:
    """zeta = lambda * (observed max packet delay) / sum of bottleneck widths."""
    res = simulate_greedy(inst, **kwargs)
    if res.max_delay == float("inf"):
        raise SimulationError("greedy simulation did not reach steady state")
    return Fraction(res.zeta)
