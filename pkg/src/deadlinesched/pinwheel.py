"""Pinwheel vectors and schedulers.

A pinwheel vector k assigns each task a maximum inter-scheduling time: a
single-server cyclic schedule satisfies k when no two consecutive
appearances of task s (wrapping around the period) are more than k_s slots
apart.  Density rho(k) = sum 1/k_s <= 1 is necessary for schedulability.

Schedulers implemented here:
  * step-down vectors (ascending sort forms a divisibility chain),
  * vectors with at most two distinct values,
  * the S_xy two-base specializer for general vectors (complete in practice
    for density <= 0.7), backed by an exact state-graph search on small
    state spaces.

Every scheduler verifies its own output against the *original* vector
before returning it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

PERIOD_CAP = 10**6
EXACT_STATE_GUARD = 500_000

IDLE = -1


@dataclass(frozen=True)
class PinwheelSchedule:
    """period-K single-server schedule; slots holds a task index or IDLE."""

    period: int
    slots: tuple[int, ...]

    def __post_init__(self):
        if self.period != len(self.slots) or self.period < 1:
            raise ValueError("period must equal the slot count and be >= 1")

    def occurrences(self, task: int) -> list[int]:
        return [t for t, s in enumerate(self.slots) if s == task]


@dataclass(frozen=True)
class GapStats:
    """Measured cyclic inter-scheduling gaps, per task."""

    k_min: tuple[float, ...]
    k_max: tuple[float, ...]


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    violation: tuple[int, float, int] | None  # (task, gap, slot where gap ends)
    stats: GapStats


def density(k) -> Fraction:
    return sum((Fraction(1, int(v)) for v in k), Fraction(0))


def is_step_down(k) -> bool:
    s = sorted(int(v) for v in k)
    return all(b % a == 0 for a, b in zip(s, s[1:]))


def cyclic_gaps(occ: list[int], period: int) -> list[int]:
    """Gaps between consecutive occurrences, wrapping across the boundary."""
    if not occ:
        return []
    if len(occ) == 1:
        return [period]
    gaps = [b - a for a, b in zip(occ, occ[1:])]
    gaps.append(occ[0] + period - occ[-1])
    return gaps


def verify_pinwheel(schedule: PinwheelSchedule, k) -> VerifyResult:
    k = [int(v) for v in k]
    kmin, kmax = [], []
    violation = None
    for task, bound in enumerate(k):
        occ = schedule.occurrences(task)
        if not occ:
            kmin.append(math.inf)
            kmax.append(math.inf)
            if violation is None:
                violation = (task, math.inf, 0)
            continue
        gaps = cyclic_gaps(occ, schedule.period)
        kmin.append(min(gaps))
        kmax.append(max(gaps))
        if max(gaps) > bound and violation is None:
            worst = gaps.index(max(gaps))
            end_slot = occ[(worst + 1) % len(occ)]
            violation = (task, max(gaps), end_slot)
    return VerifyResult(violation is None, violation, GapStats(tuple(kmin), tuple(kmax)))


def _verified(slots: list[int], k) -> PinwheelSchedule:
    sched = PinwheelSchedule(len(slots), tuple(slots))
    result = verify_pinwheel(sched, k)
    if not result.ok:
        raise AssertionError(f"constructed schedule violates its vector: {result.violation}")
    return sched


def schedule_step_down(k) -> PinwheelSchedule | None:
    """Offset assignment in a calendar of length max(k); each task takes the
    smallest offset whose arithmetic progression is still free.  Always
    succeeds for step-down vectors with density <= 1."""
    k = [int(v) for v in k]
    if not is_step_down(k):
        raise ValueError("not a step-down vector")
    if density(k) > 1:
        return None
    period = max(k)
    calendar = [IDLE] * period
    for task in sorted(range(len(k)), key=lambda s: (k[s], s)):
        v = k[task]
        offset = next(
            (o for o in range(v) if all(calendar[p] == IDLE for p in range(o, period, v))),
            None,
        )
        if offset is None:  # cannot happen at density <= 1; defensive
            raise AssertionError("no free offset despite density <= 1")
        for p in range(offset, period, v):
            calendar[p] = task
    return _verified(calendar, k)


def _two_value_slots(a: int, m: int, b: int, n: int) -> tuple[list[int], int]:
    """Slot layout for m tasks of gap a and n of gap b (a <= b, m/a+n/b <= 1).

    Slots whose index mod a falls in {floor(j*a/m)} host the a-tasks in round
    robin (each recurs with gap exactly a); the complementary slots host the
    b-tasks in round robin.  Task indices: 0..m-1 then m..m+n-1.
    """
    if n == 0:
        return [i if i < m else IDLE for i in range(a)], a
    if m == 0:
        return [i if i < n else IDLE for i in range(b)], b
    a_pattern = {(j * a) // m for j in range(m)}
    period = a * n // math.gcd(n, a - m)
    slots = []
    ca = cb = 0
    for t in range(period):
        if t % a in a_pattern:
            slots.append(ca % m)
            ca += 1
        else:
            slots.append(m + cb % n)
            cb += 1
    return slots, period


def schedule_two_values(k) -> PinwheelSchedule | None:
    k = [int(v) for v in k]
    values = sorted(set(k))
    if len(values) > 2:
        raise ValueError("more than two distinct values")
    if density(k) > 1:
        return None
    a = values[0]
    b = values[-1]
    low = [s for s in range(len(k)) if k[s] == a]
    high = [s for s in range(len(k)) if k[s] == b and b != a]
    slots, _ = _two_value_slots(a, len(low), b, len(high))
    order = low + high
    return _verified([order[s] if s != IDLE else IDLE for s in slots], k)


def _largest_pow2_multiple(base: int, limit: int) -> int | None:
    """Largest base * 2^a <= limit, or None if base > limit."""
    if base > limit:
        return None
    exp = 0
    while base * 2 ** (exp + 1) <= limit:
        exp += 1
    return exp


def _sxy_attempt(k: list[int], x: int, y: int) -> PinwheelSchedule | None:
    """One (x,y) candidate: specialize, test the admission condition, build."""
    exps: list[tuple[int, int]] = []  # (class 0=x / 1=y, exponent)
    for v in k:
        ax = _largest_pow2_multiple(x, v)
        ay = _largest_pow2_multiple(y, v) if y != x else None
        vx = x * 2**ax if ax is not None else 0
        vy = y * 2**ay if ay is not None else 0
        if vx == 0 and vy == 0:
            return None
        exps.append((0, ax) if vx >= vy else (1, ay))
    xs = [(s, a) for s, (cls, a) in enumerate(exps) if cls == 0]
    ys = [(s, a) for s, (cls, a) in enumerate(exps) if cls == 1]
    # Admission: ceil(x rho(k_X))/x + ceil(y rho(k_Y))/y <= 1 with
    # x rho(k_X) = sum of 2^-a over the X side (and symmetrically for Y).
    n_x = math.ceil(sum(Fraction(1, 2**a) for _, a in xs)) if xs else 0
    n_y = math.ceil(sum(Fraction(1, 2**a) for _, a in ys)) if ys else 0
    if (Fraction(n_x, x) if n_x else 0) + (Fraction(n_y, y) if n_y else 0) > 1:
        return None

    def pack(tasks: list[tuple[int, int]], bins: int) -> list[list[int]]:
        """First-fit decreasing of dyadic loads 2^-a; fits exactly ceil(total)
        bins because every partial fill is a multiple of the incoming size."""
        fills = [Fraction(0)] * bins
        hosts: list[list[int]] = [[IDLE] for _ in range(bins)]
        for s, a in sorted(tasks, key=lambda t: (t[1], t[0])):
            size = Fraction(1, 2**a)
            c = next(i for i in range(bins) if fills[i] + size <= 1)
            fills[c] += size
            table = hosts[c]
            if len(table) < 2**a:
                table *= 2**a // len(table)
            offset = next(
                o for o in range(2**a) if all(table[p] == IDLE for p in range(o, len(table), 2**a))
            )
            for p in range(offset, len(table), 2**a):
                table[p] = s
        return hosts

    hosts = pack(xs, n_x) + pack(ys, n_y)
    top_slots, top_period = _two_value_slots(x, n_x, y, n_y)
    # occurrences of each channel per top-level period
    occ = [sum(1 for s in top_slots if s == c) for c in range(n_x + n_y)]
    repeat = 1
    for c, table in enumerate(hosts):
        cycle = len(table) // math.gcd(occ[c], len(table))
        repeat = repeat * cycle // math.gcd(repeat, cycle)
    if top_period * repeat > PERIOD_CAP:
        return None
    slots = []
    counters = [0] * len(hosts)
    for t in range(top_period * repeat):
        c = top_slots[t % top_period]
        if c == IDLE:
            slots.append(IDLE)
        else:
            table = hosts[c]
            slots.append(table[counters[c] % len(table)])
            counters[c] += 1
    return _verified(slots, k)


def exact_pinwheel_search(k, max_states: int = EXACT_STATE_GUARD):
    """Exact schedulability decision via cycle detection on the state graph.

    A state records, per task, the slots elapsed since it was last served
    (capped at k_s); any cycle in the transition graph is a valid cyclic
    schedule, and an acyclic graph proves unschedulability.  Returns
    (True, schedule), (False, None), or (None, None) when the state space
    exceeds max_states.
    """
    k = [int(v) for v in k]
    n = len(k)
    n_states = math.prod(k)
    if n_states > max_states:
        return None, None
    if density(k) > 1:
        return False, None

    def encode(r):
        code = 0
        for i in range(n):
            code = code * k[i] + r[i]
        return code

    def decode(code):
        r = [0] * n
        for i in range(n - 1, -1, -1):
            r[i] = code % k[i]
            code //= k[i]
        return r

    def moves(code):
        # r[i] = slots since task i was last served, kept <= k[i]-1 so the
        # task can always still be served next slot with gap r[i]+1 <= k[i].
        r = decode(code)
        out = []
        blocked = [i for i in range(n) if r[i] == k[i] - 1]
        if len(blocked) > 1:
            return out
        choices = blocked if blocked else list(range(n)) + [IDLE]
        for j in choices:
            nxt = [(0 if i == j else r[i] + 1) for i in range(n)]
            out.append((j, encode(nxt)))
        return out

    color = bytearray(n_states)  # 0 white, 1 on stack, 2 done
    stack_pos: dict[int, int] = {}
    for root in range(n_states):
        if color[root]:
            continue
        stack: list[tuple[int, list, int]] = [(root, moves(root), IDLE)]
        color[root] = 1
        stack_pos[root] = 0
        while stack:
            state, pending, _ = stack[-1]
            if not pending:
                color[state] = 2
                del stack_pos[state]
                stack.pop()
                continue
            move, nxt = pending.pop()
            if color[nxt] == 1:  # back edge: cycle found
                start = stack_pos[nxt]
                slots = [stack[i][2] for i in range(start + 1, len(stack))] + [move]
                return True, _verified(slots, k)
            if color[nxt] == 0:
                color[nxt] = 1
                stack_pos[nxt] = len(stack)
                stack.append((nxt, moves(nxt), move))
    return False, None


def schedule_sxy(k) -> PinwheelSchedule | None:
    """Two-base specializer: search (x, y) pairs in increasing x+y order,
    specialize every task down to the largest x*2^a or y*2^b not exceeding
    it, and accept the first pair whose specialized classes pass the
    admission test.  When no pair is admitted, small instances fall through
    to the exact state-graph search before reporting infeasibility."""
    k = [int(v) for v in k]
    if not k:
        raise ValueError("empty vector")
    if density(k) > 1:
        return None
    top = min(k)
    pairs = sorted(
        ((x, y) for x in range(1, top + 1) for y in range(x, top + 1)),
        key=lambda p: (p[0] + p[1], p[0]),
    )
    for x, y in pairs:
        sched = _sxy_attempt(k, x, y)
        if sched is not None:
            return sched
    feasible, witness = exact_pinwheel_search(k)
    if feasible:
        return witness
    return None
