from fractions import Fraction

import pytest

from conftest import PI1, PI2, two_hop_scenario, two_hop_slices
from deadlinesched.simulator import (
    CyclicSchedule,
    SimulationError,
    block_policy,
    delay_deficit_trace,
    measure_inter_scheduling,
    simulate,
    verify_support,
    worst_impulse_delay,
)
from deadlinesched.solitary import LineInstance, line_scenario, orr_schedule
from deadlinesched.topology import build_conflict_graph
from deadlinesched.traffic import SliceAssignment


def test_two_hop_golden_delays_pi1():
    scn = two_hop_scenario()
    trace = simulate(scn, PI1, two_hop_slices(scn))
    assert trace.max_delay == [4, 9]


def test_two_hop_golden_delays_pi2():
    scn = two_hop_scenario()
    trace = simulate(scn, PI2, two_hop_slices(scn))
    assert trace.max_delay == [9, 11]


def test_two_hop_support_verdicts():
    scn = two_hop_scenario(10, 10)
    trace = simulate(scn, PI1, two_hop_slices(scn))
    assert all(v.supported for v in verify_support(trace, scn).values())

    tight = two_hop_scenario(8, 8)
    trace = simulate(tight, PI1, two_hop_slices(tight))
    verdicts = verify_support(trace, tight)
    assert verdicts[0].supported and not verdicts[1].supported

    trace = simulate(scn, PI2, two_hop_slices(scn))
    verdicts = verify_support(trace, scn)
    assert not verdicts[1].supported


def test_schedule_validation_rejects_conflicts():
    scn = two_hop_scenario()
    cg = build_conflict_graph(scn.net, scn.model)
    bad = CyclicSchedule(2, (frozenset({0, 1}), frozenset({2})))
    with pytest.raises(SimulationError):
        bad.validate(cg)
    with pytest.raises(SimulationError):
        simulate(scn, bad, two_hop_slices(scn))


def test_inter_scheduling_pi1():
    stats = measure_inter_scheduling(PI1, links=[0, 1, 2, 3])
    assert stats.k_max[0] == 3
    assert stats.k_max[2] == 6 and stats.k_max[3] == 6


def test_inter_scheduling_single_link_period_one():
    sched = CyclicSchedule(1, (frozenset({0}),))
    stats = measure_inter_scheduling(sched, links=[0])
    assert stats.k_min[0] == stats.k_max[0] == 1


def test_inter_scheduling_absent_link_is_infinite():
    stats = measure_inter_scheduling(PI1, links=[5])
    assert stats.k_max[5] == float("inf")


def test_impulse_delay_sandwiched_by_gap_stats():
    # worst vanishing-rate delay lies between the optimistic and pessimistic
    # first-wait plus per-handoff wait sums, for assorted line schedules
    cases = [
        CyclicSchedule(4, tuple(frozenset({s}) for s in (0, 1, 0, 2))),
        CyclicSchedule(6, tuple(frozenset({s}) for s in (0, 1, 2, 0, 1, 2))),
        CyclicSchedule(5, tuple(frozenset({s}) for s in (0, 0, 1, 2, 1))),
    ]
    route = (0, 1, 2)
    for sched in cases:
        stats = measure_inter_scheduling(
            sched, links=route, pairs=[(0, 1), (1, 2)]
        )
        d = worst_impulse_delay(sched, route, 3)
        lo = stats.k_min[0] + stats.pair_min[(0, 1)] + stats.pair_min[(1, 2)]
        hi = stats.k_max[0] + stats.pair_max[(0, 1)] + stats.pair_max[(1, 2)]
        assert lo <= d <= hi


def test_impulse_delay_unscheduled_link():
    sched = CyclicSchedule(2, (frozenset({0}), frozenset({0})))
    with pytest.raises(SimulationError):
        worst_impulse_delay(sched, (0, 1), 2)


def test_deficit_nonpositive_when_hypothesis_holds():
    # k = (3, 4) single-server schedule; widths exactly lambda * k_bar
    inst = LineInstance((Fraction(4), Fraction(4)), 1, Fraction(1))
    scn = line_scenario(inst, deadline=100)
    slots = [{0}, {1}, set(), {0}, set(), {1}, {0}, set(), {1}, {0}, set(), {1}]
    sched = CyclicSchedule(12, tuple(frozenset(s) for s in slots))
    slices = SliceAssignment({(0, 0): Fraction(3), (0, 1): Fraction(4)})
    trace = simulate(scn, sched, slices)
    report = delay_deficit_trace(trace, sched, slices)
    assert report.applicable
    assert report.violations == []
    assert all((d <= 0).all() for d in report.deficits.values())


def test_deficit_nonpositive_under_orr():
    inst = LineInstance((Fraction(60),) * 4, 1, Fraction(1, 10))
    scn = line_scenario(inst, deadline=100)
    sched = orr_schedule(4, 1)
    slices = SliceAssignment({(0, e): Fraction(60) for e in range(4)})
    report = delay_deficit_trace(simulate(scn, sched, slices), sched, slices)
    assert report.applicable and report.violations == []


def test_deficit_violation_with_undersized_slice():
    # link 0 scheduled at slots {0,1,4} (k_bar=4) with width 8/3 < 1*4:
    # the uneven gaps leave a cohort one slot older than its quota
    inst = LineInstance((Fraction(16), Fraction(16)), 1, Fraction(1))
    scn = line_scenario(inst, deadline=1000)
    slots = [{0}, {0}, {1}, {1}, {0}, set(), set(), set()]
    sched = CyclicSchedule(8, tuple(frozenset(s) for s in slots))
    slices = SliceAssignment({(0, 0): Fraction(8, 3), (0, 1): Fraction(4)})
    trace = simulate(scn, sched, slices)
    report = delay_deficit_trace(trace, sched, slices)
    assert not report.applicable
    assert report.violations
    assert max(v[3] for v in report.violations) == 1


def test_block_policy_delay_formula():
    # simulated worst delay is sum(K - eta) + 1: the final slot delivers one
    # slot after the last service
    for widths in [(Fraction(2), Fraction(2)), (Fraction(3), Fraction(2)), (Fraction(4), Fraction(6), Fraction(4))]:
        n = len(widths)
        inst = LineInstance(widths, n - 1, Fraction(1))
        scn = line_scenario(inst, deadline=10**6)
        sched = block_policy(scn, list(widths))
        K = sched.period
        eta = [len(sched.occurrences(e)) for e in range(n)]
        slices = SliceAssignment({(0, e): widths[e] for e in range(n)})
        trace = simulate(scn, sched, slices)
        assert trace.max_delay[0] == sum(K - h for h in eta) + 1


def test_block_policy_doubling_scales_delay():
    widths = (Fraction(3), Fraction(2))
    inst = LineInstance(widths, 1, Fraction(1))
    scn = line_scenario(inst, deadline=10**6)
    sched = block_policy(scn, list(widths))
    slices = SliceAssignment({(0, e): widths[e] for e in range(2)})
    base = simulate(scn, sched, slices).max_delay[0]

    # block repetition: each link's block runs twice as long
    stretched = []
    for links in sched.activation:
        stretched.extend([links, links])
    double = CyclicSchedule(2 * sched.period, tuple(stretched))
    scaled = simulate(scn, double, slices).max_delay[0]
    assert scaled - 1 == 2 * (base - 1)


def test_block_policy_requires_solitary_line():
    scn = two_hop_scenario()
    with pytest.raises(SimulationError):
        block_policy(scn, [Fraction(1), Fraction(1)])


def test_stability_dichotomy():
    # width below the rate/activation-fraction threshold: queues keep growing
    inst = LineInstance((Fraction(4), Fraction(4)), 1, Fraction(1))
    scn = line_scenario(inst, deadline=100)
    sched = CyclicSchedule(4, tuple(frozenset(s) for s in [{0}, {1}, {0}, {1}]))
    stable = SliceAssignment({(0, 0): Fraction(2), (0, 1): Fraction(2)})
    trace = simulate(scn, sched, stable)
    assert trace.steady

    starved = SliceAssignment({(0, 0): Fraction(3, 2), (0, 1): Fraction(3)})
    trace = simulate(scn, sched, starved, max_warmup_periods=200)
    assert not trace.steady
    with pytest.raises(SimulationError):
        verify_support(trace, scn)


def test_cohort_delays_cover_one_period():
    scn = two_hop_scenario()
    trace = simulate(scn, PI1, two_hop_slices(scn))
    for i in range(2):
        assert len(trace.delays[i]) == trace.period
        assert trace.delays[i].max() == trace.max_delay[i]
