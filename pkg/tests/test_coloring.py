from fractions import Fraction

import pytest

from conftest import two_hop_scenario
from deadlinesched.coloring import (
    Coloring,
    InfeasibleError,
    KAssignment,
    delta_widths,
    greedy_color,
    slice_widths,
    solve_integer,
    solve_relaxation,
    wgc,
)
from deadlinesched.solitary import LineInstance, line_scenario
from deadlinesched.topology import (
    ConflictGraph,
    InterferenceModel,
    build_conflict_graph,
    line,
)
from deadlinesched.traffic import Flow, Scenario, shortest_route


def _line_flow_scenario(n_hops, capacity, rate, deadline, phi):
    inst = LineInstance((Fraction(capacity),) * n_hops, phi, Fraction(rate))
    return line_scenario(inst, deadline=deadline)


def test_greedy_color_complete_graph_singletons():
    cg = ConflictGraph(4, frozenset(frozenset((a, b)) for a in range(4) for b in range(a + 1, 4)))
    coloring = greedy_color(cg, range(4))
    assert len(coloring.sets) == 4
    assert all(len(s) == 1 for s in coloring.sets)


def test_greedy_color_empty_graph_one_color():
    cg = ConflictGraph(5, frozenset())
    coloring = greedy_color(cg, range(5))
    assert coloring.sets == (frozenset(range(5)),)


def test_greedy_color_path_order_trace():
    # path 0-1-2, order (0, 2, 1): first fit puts 0 and 2 together
    cg = ConflictGraph(3, frozenset({frozenset((0, 1)), frozenset((1, 2))}))
    coloring = greedy_color(cg, [0, 2, 1])
    assert coloring.sets == (frozenset({0, 2}), frozenset({1}))


def test_greedy_color_rejects_duplicate_order():
    cg = ConflictGraph(2, frozenset())
    with pytest.raises(ValueError):
        greedy_color(cg, [0, 0])


def test_coloring_validation():
    cg = ConflictGraph(2, frozenset({frozenset((0, 1))}))
    bad = Coloring((frozenset({0, 1}),), {0: 0, 1: 0})
    with pytest.raises(AssertionError):
        bad.validate(cg)


def test_relaxation_capacity_bound_binds():
    scn = _line_flow_scenario(1, 3, 1, 5, 0)
    k = solve_relaxation(scn, {0: 1})
    assert k[0] == pytest.approx(3.0, abs=1e-6)


def test_relaxation_symmetric_deadline_split():
    scn = _line_flow_scenario(2, 100, 1, 4, 1)
    k = solve_relaxation(scn, {0: 1, 1: 1})
    assert k[0] == pytest.approx(2.0, abs=1e-6)
    assert k[1] == pytest.approx(2.0, abs=1e-6)


def test_relaxation_infeasible_deadline():
    scn = _line_flow_scenario(3, 10, 1, 2, 1)
    with pytest.raises(InfeasibleError) as err:
        solve_relaxation(scn, {e: 1 for e in range(3)})
    assert err.value.stage == "relaxation"


def test_integer_single_set():
    scn = _line_flow_scenario(2, Fraction(15, 2), 1, 10, 0)
    coloring = Coloring((frozenset({0, 1}),), {0: 0, 1: 0})
    out = solve_integer(scn, coloring)
    assert out.k == (5,)  # largest k with 2k <= 10, capped at floor(7.5)


def test_integer_lexicographically_largest_tie():
    scn = _line_flow_scenario(2, 4, 1, 7, 0)
    coloring = Coloring((frozenset({0}), frozenset({1})), {0: 0, 1: 1})
    out = solve_integer(scn, coloring)
    assert out.k == (4, 3)
    assert out.objective() == Fraction(1, 4) + Fraction(1, 3)


def test_integer_infeasible_deadline():
    scn = _line_flow_scenario(2, 4, 1, 1, 0)
    coloring = Coloring((frozenset({0}), frozenset({1})), {0: 0, 1: 1})
    with pytest.raises(InfeasibleError) as err:
        solve_integer(scn, coloring)
    assert err.value.stage == "integer"


def test_integer_matches_exhaustive_small_boxes():
    scn = _line_flow_scenario(3, 6, 1, 12, 2)
    coloring = Coloring(
        (frozenset({0}), frozenset({1}), frozenset({2})), {0: 0, 1: 1, 2: 2}
    )
    out = solve_integer(scn, coloring)
    best = min(
        Fraction(1, a) + Fraction(1, b) + Fraction(1, c)
        for a in range(1, 7)
        for b in range(1, 7)
        for c in range(1, 7)
        if a + b + c <= 12
    )
    assert out.objective() == best
    assert out.k == (4, 4, 4)


def test_wgc_solitary_total_interference_uniform():
    scn = _line_flow_scenario(3, 6, 1, 12, 2)
    coloring, assignment = wgc(scn)
    assert all(len(s) == 1 for s in coloring.sets)
    assert set(assignment.k) == {4}


def test_wgc_no_interference_single_color():
    scn = _line_flow_scenario(3, 9, 1, 12, 0)
    coloring, assignment = wgc(scn)
    assert len(coloring.sets) == 1
    assert assignment.k == (4,)  # 3 hops share one k; 3k <= 12


def test_wgc_two_hop_assignment():
    scn = two_hop_scenario(10, 10)
    coloring, assignment = wgc(scn)
    k_of = {e: assignment.k_of(e) for e in range(4)}
    assert (k_of[0], k_of[1]) == (3, 3)  # capacity 27 / rate 9
    assert (k_of[2], k_of[3]) == (5, 5)
    for f in scn.flows:
        assert sum(k_of[e] for e in f.route) <= f.deadline


def test_objective_identity_over_vertices():
    scn = two_hop_scenario(10, 10)
    coloring, assignment = wgc(scn)
    per_set = assignment.objective()
    per_vertex = sum(
        Fraction(1, len(coloring.sets[coloring.set_of[v]]) * assignment.k_of(v))
        for v in coloring.vertices
    )
    assert per_set == per_vertex


def test_wgc_infeasible_overload():
    scn = _line_flow_scenario(2, 1, 2, 10, 1)  # rate above capacity
    with pytest.raises(InfeasibleError):
        wgc(scn)


def test_kassignment_validation():
    coloring = Coloring((frozenset({0}),), {0: 0})
    with pytest.raises(ValueError):
        KAssignment(coloring, (1, 1))
    with pytest.raises(ValueError):
        KAssignment(coloring, (0,))


def test_slice_widths_products():
    scn = two_hop_scenario(10, 10)
    coloring, assignment = wgc(scn)
    slices = slice_widths(assignment, scn)
    assert slices.width(0, 0) == Fraction(9) * 3
    assert slices.width(1, 2) == Fraction(1) * 5


def test_slice_widths_shared_link_fills_capacity():
    net = line(2, Fraction(12))
    e = net.link_id(1, 2)
    flows = (
        Flow(0, 1, 2, Fraction(1), 8, (e,)),
        Flow(1, 1, 2, Fraction(2), 8, (e,)),
    )
    scn = Scenario(net, InterferenceModel(0), flows)
    coloring = Coloring((frozenset({e}),), {e: 0})
    assignment = KAssignment(coloring, (4,))
    slices = slice_widths(assignment, scn)
    assert slices.width(0, e) == 4 and slices.width(1, e) == 8
    assert slices.width(0, e) + slices.width(1, e) == 12


def test_delta_widths_zero_for_regular_schedule():
    scn = _line_flow_scenario(3, 6, 1, 12, 2)
    coloring, assignment = wgc(scn)
    mu_bar = {e: Fraction(1, assignment.k_of(e)) for e in range(3)}
    deltas = delta_widths(assignment, scn, mu_bar)
    assert all(d == 0 for d in deltas.values())
