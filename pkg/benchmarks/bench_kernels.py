"""Compare the numba-compiled kernels against the pure-Python fallback.

The jit switch (DEADLINESCHED_NUMBA) is read at import time, so each mode
runs in a fresh subprocess.  Reported times exclude compilation: every
workload does one untimed warmup call first.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKLOADS = ("fluid_simulate", "greedy_line", "impulse_oracle")


def run_workload(name: str, repeat: int) -> float:
    from fractions import Fraction

    from deadlinesched.cli import solve_scenario
    from deadlinesched.oracle import min_deadline_oracle
    from deadlinesched.solitary import (
        LineInstance,
        lambda_star,
        line_scenario,
        simulate_greedy,
    )
    from deadlinesched.topology import InterferenceModel, grid_random
    from deadlinesched.traffic import Flow, Scenario, random_flows

    if name == "fluid_simulate":
        net = grid_random(4, 4, 0.6, 3, Fraction(64))
        flows = tuple(
            Flow(f.id, f.src, f.dst, Fraction(1), 150, f.route)
            for f in random_flows(net, 32, 3)
        )
        scn = Scenario(net, InterferenceModel(1), flows)
        work = lambda: solve_scenario(scn)
    elif name == "greedy_line":
        w = tuple(Fraction(v) for v in (17, 23, 55, 31, 40, 64))
        inst = LineInstance(w, 5, lambda_star(w, 5))
        work = lambda: simulate_greedy(inst)
    else:
        inst = LineInstance((Fraction(1),) * 4, 3, Fraction(1, 100))
        scn = line_scenario(inst)
        work = lambda: min_deadline_oracle(scn, period_bound=10, vanishing_rate=True)

    work()  # warmup (jit compilation, caches)
    t0 = time.perf_counter()
    for _ in range(repeat):
        work()
    return (time.perf_counter() - t0) / repeat


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--workload", choices=WORKLOADS, help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.workload:  # child process: one workload in the current jit mode
        print(json.dumps(run_workload(args.workload, args.repeat)))
        return 0

    results = {}
    for mode, flag in (("numba", "1"), ("python", "0")):
        env = dict(os.environ, DEADLINESCHED_NUMBA=flag)
        for name in WORKLOADS:
            out = subprocess.run(
                [sys.executable, __file__, "--workload", name, "--repeat", str(args.repeat)],
                env=env,
                capture_output=True,
                text=True,
                check=True,
            )
            results[(mode, name)] = json.loads(out.stdout.strip().splitlines()[-1])

    print(f"{'workload':<16} {'numba':>10} {'python':>10} {'speedup':>8}")
    for name in WORKLOADS:
        jit = results[("numba", name)]
        py = results[("python", name)]
        print(f"{name:<16} {jit:>9.3f}s {py:>9.3f}s {py / jit:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
