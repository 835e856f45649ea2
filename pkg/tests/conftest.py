"""Shared builders for the worked two-hop example used across the suite."""

from fractions import Fraction

from deadlinesched.simulator import CyclicSchedule
from deadlinesched.topology import InterferenceModel, Link, NetworkGraph
from deadlinesched.traffic import Flow, Scenario
from deadlinesched.traffic import SliceAssignment


def two_hop_scenario(tau1: int = 10, tau2: int = 10) -> Scenario:
    """Two flows crossing at a relay: f1 (rate 9) over 1->2->3, f2 (rate 1)
    over 3->2->1; all capacities 27, total interference."""
    net = NetworkGraph(
        (1, 2, 3),
        (
            Link(1, 2, Fraction(27)),
            Link(2, 3, Fraction(27)),
            Link(3, 2, Fraction(27)),
            Link(2, 1, Fraction(27)),
        ),
    )
    f1 = Flow(0, 1, 3, Fraction(9), tau1, (0, 1))
    f2 = Flow(1, 3, 1, Fraction(1), tau2, (2, 3))
    return Scenario(net, InterferenceModel(3), (f1, f2))


def two_hop_slices(scn: Scenario) -> SliceAssignment:
    return SliceAssignment.from_capacities(scn)


# one link per slot, by link index into the network above
PI1 = CyclicSchedule(
    6, tuple(frozenset([e]) for e in (0, 1, 2, 0, 1, 3))
)
PI2 = CyclicSchedule(
    6, tuple(frozenset([e]) for e in (1, 1, 0, 0, 3, 2))
)
