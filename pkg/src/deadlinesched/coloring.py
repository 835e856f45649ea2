"""Weighted greedy coloring of the conflict graph.

Activation sets are the color classes of the conflict graph restricted to
links that carry traffic; each set s gets an integer maximum
inter-scheduling time k_s.  The pipeline is:

  1. solve a convex relaxation for per-link estimates k_v,
  2. first-fit color the conflict graph with vertices ordered by k_v,
  3. iterate 1-2 with the set-size weights from the latest coloring until
     the relaxation value stops improving,
  4. solve the remaining small integer program for k_s exactly.

The emitted (sets, k) pair is the input contract of the pinwheel scheduler.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize

from .topology import ConflictGraph, build_conflict_graph
from .traffic import Scenario, SliceAssignment


class InfeasibleError(Exception):
    """A pipeline stage proved the instance infeasible (stage attribute
    is one of 'relaxation' / 'integer')."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class Coloring:
    """Partition of the colored vertices into independent sets."""

    sets: tuple[frozenset[int], ...]
    set_of: dict[int, int]

    def __post_init__(self):
        seen: set[int] = set()
        for i, s in enumerate(self.sets):
            if not s:
                raise ValueError("empty color class")
            if s & seen:
                raise ValueError("color classes overlap")
            seen |= s
            for v in s:
                if self.set_of.get(v) != i:
                    raise ValueError("set_of inconsistent with sets")
        if len(self.set_of) != len(seen):
            raise ValueError("set_of inconsistent with sets")

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(self.set_of)

    def validate(self, cg: ConflictGraph) -> None:
        for s in self.sets:
            if not cg.is_independent(s):
                raise AssertionError(f"color class {sorted(s)} is not independent")


@dataclass(frozen=True)
class KAssignment:
    """Integer inter-scheduling time per color class."""

    coloring: Coloring
    k: tuple[int, ...]

    def __post_init__(self):
        if len(self.k) != len(self.coloring.sets):
            raise ValueError("one k per color class required")
        if any(v < 1 for v in self.k):
            raise ValueError("k values must be >= 1")

    def k_of(self, v: int) -> int:
        return self.k[self.coloring.set_of[v]]

    def objective(self) -> Fraction:
        return sum((Fraction(1, v) for v in self.k), Fraction(0))


def greedy_color(cg: ConflictGraph, order) -> Coloring:
    """First-fit: each vertex takes the smallest color with no conflicting
    member.  Uses at most max_degree+1 colors."""
    order = list(order)
    if len(set(order)) != len(order):
        raise ValueError("order contains duplicates")
    sets: list[set[int]] = []
    set_of: dict[int, int] = {}
    for v in order:
        for i, s in enumerate(sets):
            if not any(cg.adjacent(v, u) for u in s):
                s.add(v)
                set_of[v] = i
                break
        else:
            sets.append({v})
            set_of[v] = len(sets) - 1
    coloring = Coloring(tuple(frozenset(s) for s in sets), set_of)
    coloring.validate(cg)
    assert len(coloring.sets) <= cg.max_degree() + 1
    return coloring


def _vertex_rates(scn: Scenario) -> dict[int, Fraction]:
    """lambda_v = aggregate rate over flows crossing link v (simple routes,
    so each flow counts once)."""
    return {v: scn.link_rate(v) for v in scn.used_links()}


def solve_relaxation(scn: Scenario, omega_hat: dict[int, int]) -> dict[int, float]:
    """min sum_v 1/(omega_v k_v) s.t. route sums <= tau, 1 <= k_v <= c_v/lambda_v."""
    vc = scn.used_links()
    if not vc:
        raise InfeasibleError("relaxation", "no links carry traffic")
    rates = _vertex_rates(scn)
    ub = {v: float(scn.net.links[v].capacity / rates[v]) for v in vc}
    for f in scn.flows:
        if f.deadline < len(f.route):
            raise InfeasibleError(
                "relaxation", f"flow {f.id}: deadline {f.deadline} < route length"
            )
    if any(ub[v] < 1 for v in vc):
        raise InfeasibleError("relaxation", "a link's aggregate rate exceeds capacity")
    idx = {v: i for i, v in enumerate(vc)}
    omega = np.array([float(omega_hat[v]) for v in vc])
    x0 = np.array(
        [
            min(ub[v], min(f.deadline / len(f.route) for f in scn.flows_on(v)))
            for v in vc
        ]
    )
    cons = [
        {
            "type": "ineq",
            "fun": (lambda x, r=f.route, t=f.deadline: t - sum(x[idx[v]] for v in r)),
            "jac": (
                lambda x, r=frozenset(f.route): np.array(
                    [-1.0 if v in r else 0.0 for v in vc]
                )
            ),
        }
        for f in scn.flows
    ]
    res = minimize(
        lambda x: float(np.sum(1.0 / (omega * x))),
        x0,
        jac=lambda x: -1.0 / (omega * x * x),
        bounds=[(1.0, ub[v]) for v in vc],
        constraints=cons,
        method="SLSQP",
        options={"maxiter": 400, "ftol": 1e-12},
    )
    x = res.x if res.success else x0
    x = np.clip(x, 1.0, np.array([ub[v] for v in vc]))
    return {v: float(x[idx[v]]) for v in vc}


INTEGER_NODE_BUDGET = 200_000


def solve_integer(
    scn: Scenario, coloring: Coloring, max_nodes: int = INTEGER_NODE_BUDGET
) -> KAssignment:
    """Min of sum_s 1/k_s over integer k_s in [1, floor(min c_v/lambda_v)]
    s.t. sum_s n_{i,s} k_s <= tau_i: depth-first branch and bound, trying
    larger k first so the first optimum found is the lexicographically
    largest one.  The search is exact unless it exceeds max_nodes, in which
    case the best feasible assignment found so far is returned (the search
    order is deterministic, so the anytime result is too)."""
    rates = _vertex_rates(scn)
    kmax = [
        min(int(scn.net.links[v].capacity / rates[v]) for v in s)
        for s in coloring.sets
    ]
    if any(m < 1 for m in kmax):
        raise InfeasibleError("integer", "a link's aggregate rate exceeds capacity")
    n_is = [
        [sum(1 for v in f.route if v in s) for s in coloring.sets] for f in scn.flows
    ]
    taus = [f.deadline for f in scn.flows]
    m = len(coloring.sets)

    for fi, f in enumerate(scn.flows):
        if sum(n_is[fi]) > taus[fi]:
            raise InfeasibleError(
                "integer", f"flow {f.id}: deadline {f.deadline} < colored route length"
            )

    # warm start: raise the k with the largest objective gain while feasible;
    # its value seeds the branch-and-bound pruning threshold
    inc = [1] * m
    inc_slack = [taus[fi] - sum(n_is[fi]) for fi in range(len(taus))]
    while True:
        cand = [
            j
            for j in range(m)
            if inc[j] < kmax[j]
            and all(n_is[fi][j] <= inc_slack[fi] for fi in range(len(taus)))
        ]
        if not cand:
            break
        j = max(cand, key=lambda j: (Fraction(1, inc[j] * (inc[j] + 1)), j))
        inc[j] += 1
        for fi in range(len(taus)):
            inc_slack[fi] -= n_is[fi][j]
    threshold = sum((Fraction(1, v) for v in inc), Fraction(0))

    best_obj: list[Fraction | None] = [None]
    best_k: list[tuple[int, ...] | None] = [None]
    k = [0] * m
    # rem[fi][s] = colored hops of flow fi in sets s..m-1 (room that must be
    # reserved for the unassigned sets at their minimum k = 1)
    rem = [
        [sum(row[j] for j in range(s, m)) for s in range(m + 1)] for row in n_is
    ]

    def optimistic_cap(j: int, s: int, slack: list[int]) -> int:
        """Largest k_j any completion from level s could still use."""
        hi = kmax[j]
        for fi in range(len(taus)):
            n = n_is[fi][j]
            if n:
                hi = min(hi, (slack[fi] - (rem[fi][s] - n)) // n)
        return hi

    nodes = [0]

    def descend(s: int, slack: list[int], partial: Fraction) -> None:
        nodes[0] += 1
        if nodes[0] > max_nodes:
            return
        if s == m:
            if partial <= threshold and (best_obj[0] is None or partial < best_obj[0]):
                best_obj[0] = partial
                best_k[0] = tuple(k)
            return
        # optimistic bound: every remaining set at its slack-aware cap; ties
        # against the incumbent are pruned too — descending enumeration means
        # the first optimum recorded is the lexicographically largest one
        bound = partial
        for j in range(s, m):
            cap = optimistic_cap(j, s, slack)
            if cap < 1:
                return
            bound += Fraction(1, cap)
        if bound > threshold or (best_obj[0] is not None and bound >= best_obj[0]):
            return
        for val in range(optimistic_cap(s, s, slack), 0, -1):
            k[s] = val
            nxt = [slack[fi] - n_is[fi][s] * val for fi in range(len(taus))]
            descend(s + 1, nxt, partial + Fraction(1, val))
        k[s] = 0

    descend(0, list(taus), Fraction(0))
    chosen = best_k[0] if best_k[0] is not None else tuple(inc)
    out = KAssignment(coloring, chosen)
    # exact re-check of the (P2) constraints
    for fi, f in enumerate(scn.flows):
        assert sum(n_is[fi][j] * out.k[j] for j in range(m)) <= taus[fi]
    for j, s in enumerate(coloring.sets):
        for v in s:
            assert out.k[j] * rates[v] <= scn.net.links[v].capacity
    return out


def relaxation_value(k: dict[int, float], omega_hat: dict[int, int]) -> float:
    return sum(1.0 / (omega_hat[v] * k[v]) for v in k)


def wgc(scn: Scenario) -> tuple[Coloring, KAssignment]:
    """Iterated relaxation-ordered first-fit coloring, then the exact
    integer program on the best coloring found."""
    cg = build_conflict_graph(scn.net, scn.model)
    vc = scn.used_links()
    omega_hat = {v: 1 for v in vc}
    kstar = solve_relaxation(scn, omega_hat)
    rho_best = float("inf")
    coloring: Coloring | None = None
    best: Coloring | None = None
    for _ in range(max(len(vc), 1)):
        rho = relaxation_value(kstar, omega_hat)
        if not rho < rho_best:
            break
        rho_best = rho
        best = coloring
        order = sorted(vc, key=lambda v: (kstar[v], v))
        coloring = greedy_color(cg, order)
        omega_hat = {v: len(coloring.sets[coloring.set_of[v]]) for v in vc}
        kstar = solve_relaxation(scn, omega_hat)
    if best is None:  # first coloring was already non-improving
        best = coloring
    assert best is not None
    return best, solve_integer(scn, best)


def slice_widths(assignment: KAssignment, scn: Scenario) -> SliceAssignment:
    """w_{i,e} = lambda_i * k_e; the integer program's capacity constraint
    guarantees per-link sums fit."""
    widths = {
        (f.id, e): f.rate * assignment.k_of(e) for f in scn.flows for e in f.route
    }
    out = SliceAssignment(widths)
    out.validate(scn)
    return out


def delta_widths(
    assignment: KAssignment, scn: Scenario, mu_bar: dict[int, Fraction]
) -> dict[tuple[int, int], Fraction]:
    """Extra reserved capacity of each slice over a schedule with measured
    activation fractions mu_bar: delta = lambda_i (k_e - 1/mu_bar_e); zero
    exactly when the schedule is regular (k_e = 1/mu_bar_e)."""
    out = {}
    for f in scn.flows:
        for e in f.route:
            out[(f.id, e)] = f.rate * (assignment.k_of(e) - 1 / mu_bar[e])
    return out
