"""Deadline-constrained link scheduling for multi-hop wireless networks.

Exact slotted fluid simulation, solitary-flow throughput/delay analysis,
conflict-graph coloring with integer inter-scheduling times, pinwheel
schedule construction, and brute-force oracles for cross-checking.
"""

__version__ = "0.1.0"
