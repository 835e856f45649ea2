"""Batch front-end: scenario files, end-to-end solve, sweeps, reports.

Scenario JSON:
  {"nodes": [...], "links": [[src, dst, cap_num, cap_den], ...], "phi": p,
   "flows": [{"src": s, "dst": d, "lambda": [num, den], "tau": t}, ...]}

Routes are derived with deterministic shortest-hop routing.  All internal
math is in slots; the 125 us slot duration appears only in reports.
"""

from __future__ import annotations

import argparse
import csv
import json
import multiprocessing
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .coloring import Coloring, InfeasibleError, KAssignment, slice_widths, wgc
from .oracle import exhaustive_pinwheel, min_deadline_oracle, throughput_lp
from .pinwheel import (
    PinwheelSchedule,
    is_step_down,
    schedule_step_down,
    schedule_sxy,
    schedule_two_values,
    verify_pinwheel,
)
from .simulator import (
    CyclicSchedule,
    SimulationError,
    SimTrace,
    measure_inter_scheduling,
    simulate,
    verify_support,
)
from .topology import InterferenceModel, Link, NetworkGraph, build_conflict_graph, generate_topology
from .traffic import Flow, Scenario, random_flows, shortest_route, validate_scenario

SLOT_MS = 0.125  # 125 us per slot, used for reporting only

STAGES = ("validation", "relaxation", "integer", "pinwheel", "simulation")


def load_scenario(data) -> Scenario:
    if isinstance(data, (str, Path)):
        data = json.loads(Path(data).read_text())
    net = NetworkGraph(
        tuple(data["nodes"]),
        tuple(Link(s, d, Fraction(n, m)) for s, d, n, m in data["links"]),
    )
    flows = tuple(
        Flow(
            i,
            f["src"],
            f["dst"],
            Fraction(f["lambda"][0], f["lambda"][1]),
            f["tau"],
            shortest_route(net, f["src"], f["dst"]),
        )
        for i, f in enumerate(data["flows"])
    )
    return Scenario(net, InterferenceModel(data["phi"]), flows)


def scenario_to_json(scn: Scenario) -> dict:
    return {
        "nodes": list(scn.net.nodes),
        "links": [
            [l.src, l.dst, l.capacity.numerator, l.capacity.denominator]
            for l in scn.net.links
        ],
        "phi": scn.model.phi,
        "flows": [
            {
                "src": f.src,
                "dst": f.dst,
                "lambda": [f.rate.numerator, f.rate.denominator],
                "tau": f.deadline,
            }
            for f in scn.flows
        ],
    }


def build_pinwheel(k: tuple[int, ...]) -> PinwheelSchedule | None:
    """Dispatch on the shape of the inter-scheduling vector."""
    values = set(k)
    if len(values) == 1:
        if len(k) > k[0]:
            return None
        # round robin over the colors
        return PinwheelSchedule(len(k), tuple(range(len(k))))
    if is_step_down(k):
        return schedule_step_down(k)
    if len(values) == 2:
        return schedule_two_values(k)
    return schedule_sxy(k)


@dataclass
class SolveOutcome:
    feasible: bool
    stage: str | None  # failing stage, None when feasible
    detail: str
    coloring: Coloring | None = None
    assignment: KAssignment | None = None
    pin: PinwheelSchedule | None = None
    schedule: CyclicSchedule | None = None
    trace: SimTrace | None = None
    verdicts: dict | None = None


def solve_scenario(scn: Scenario) -> SolveOutcome:
    """validation -> coloring -> integer k -> pinwheel -> simulate -> certify."""
    problems = validate_scenario(scn)
    if problems:
        return SolveOutcome(False, "validation", "; ".join(problems))
    try:
        coloring, assignment = wgc(scn)
    except InfeasibleError as err:
        return SolveOutcome(False, err.stage, str(err))
    pin = build_pinwheel(assignment.k)
    if pin is None:
        return SolveOutcome(
            False,
            "pinwheel",
            f"no verified schedule for k={assignment.k}",
            coloring,
            assignment,
        )
    check = verify_pinwheel(pin, assignment.k)
    assert check.ok, check.violation
    schedule = CyclicSchedule.from_tasks(
        pin.period, pin.slots, [frozenset(s) for s in coloring.sets]
    )
    schedule.validate(build_conflict_graph(scn.net, scn.model))
    slices = slice_widths(assignment, scn)
    try:
        trace = simulate(scn, schedule, slices)
        verdicts = verify_support(trace, scn)
    except SimulationError as err:
        return SolveOutcome(
            False, "simulation", str(err), coloring, assignment, pin, schedule
        )
    feasible = all(v.supported for v in verdicts.values())
    return SolveOutcome(
        feasible,
        None if feasible else "simulation",
        "" if feasible else "some flow misses its deadline",
        coloring,
        assignment,
        pin,
        schedule,
        trace,
        verdicts,
    )


def schedule_to_json(outcome: SolveOutcome) -> dict:
    return {
        "period": outcome.schedule.period,
        "activation": [sorted(s) for s in outcome.schedule.activation],
        "sets": [sorted(s) for s in outcome.coloring.sets],
        "k": list(outcome.assignment.k),
    }


def write_trace_csv(path: Path, scn: Scenario, outcome: SolveOutcome) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "flow",
                "src",
                "dst",
                "rate",
                "tau",
                "max_delay_slots",
                "max_delay_ms",
                "max_qsum",
                "supported",
            ]
        )
        for i, f in enumerate(scn.flows):
            d = outcome.trace.max_delay[i]
            w.writerow(
                [
                    f.id,
                    f.src,
                    f.dst,
                    str(f.rate),
                    f.deadline,
                    d,
                    f"{d * SLOT_MS:.3f}",
                    str(outcome.trace.max_qsum[i]),
                    int(outcome.verdicts[f.id].supported),
                ]
            )


def _write_metadata(outdir: Path, args_dict: dict, elapsed: float) -> None:
    meta = {
        "version": __version__,
        "args": {k: v for k, v in args_dict.items() if k != "func"},
        "elapsed_s": round(elapsed, 3),
    }
    (outdir / "metadata.json").write_text(json.dumps(meta, indent=2, default=str))


def cmd_solve(args) -> int:
    t0 = time.monotonic()
    scn = load_scenario(args.scenario)
    outcome = solve_scenario(scn)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    verdict = {
        "feasible": outcome.feasible,
        "stage": outcome.stage,
        "detail": outcome.detail,
    }
    if outcome.trace is not None:
        verdict["max_delay_slots"] = outcome.trace.max_delay
        write_trace_csv(outdir / "trace.csv", scn, outcome)
    if outcome.schedule is not None:
        (outdir / "schedule.json").write_text(json.dumps(schedule_to_json(outcome)))
    (outdir / "verdict.json").write_text(json.dumps(verdict))
    _write_metadata(outdir, vars(args), time.monotonic() - t0)
    print(
        f"{'feasible' if outcome.feasible else 'infeasible'}"
        + (f" (stage: {outcome.stage}; {outcome.detail})" if outcome.stage else "")
    )
    return 0 if outcome.feasible else 1


def cmd_simulate(args) -> int:
    """Re-run and re-certify a persisted schedule artifact."""
    scn = load_scenario(args.scenario)
    data = json.loads(Path(args.schedule).read_text())
    schedule = CyclicSchedule(
        data["period"], tuple(frozenset(s) for s in data["activation"])
    )
    schedule.validate(build_conflict_graph(scn.net, scn.model))
    sets = [frozenset(s) for s in data["sets"]]
    set_of = {v: i for i, s in enumerate(sets) for v in s}
    assignment = KAssignment(Coloring(tuple(sets), set_of), tuple(data["k"]))
    slices = slice_widths(assignment, scn)
    trace = simulate(scn, schedule, slices)
    verdicts = verify_support(trace, scn)
    for f in scn.flows:
        v = verdicts[f.id]
        print(
            f"flow {f.id}: max delay {v.max_delay} slots "
            f"({v.max_delay * SLOT_MS:.3f} ms), "
            f"{'supported' if v.supported else 'late'} (tau={f.deadline})"
        )
    return 0 if all(v.supported for v in verdicts.values()) else 1


def _parse_fraction_list(text: str) -> list[Fraction]:
    return [Fraction(tok) for tok in text.split(",") if tok]


_LAMSTAR_CACHE: dict[tuple, Fraction | None] = {}


def _sweep_point(job) -> dict:
    topo_kind, topo_params, capacity, phi, n_flows, seed, lam, tau = job
    kwargs = dict(topo_params, capacity=capacity)
    if topo_kind == "grid_random":
        kwargs["seed"] = seed
    net = generate_topology(topo_kind, **kwargs)
    if n_flows is None:  # one flow per leaf of a sink tree, routed to the root
        degree = {v: 0 for v in net.nodes}
        for l in net.links:
            degree[l.src] += 1
        leaves = sorted(v for v in net.nodes if degree[v] == 1 and v != net.nodes[0])
        flows = tuple(
            Flow(i, v, net.nodes[0], lam, tau, shortest_route(net, v, net.nodes[0]))
            for i, v in enumerate(leaves)
        )
    else:
        flows = tuple(
            Flow(f.id, f.src, f.dst, lam, tau, f.route)
            for f in random_flows(net, n_flows, seed)
        )
    scn = Scenario(net, InterferenceModel(phi), flows)
    outcome = solve_scenario(scn)
    # lambda* depends only on topology and routes, so cache it per seed
    key = (topo_kind, tuple(sorted(topo_params.items())), capacity, phi, n_flows, seed)
    if key not in _LAMSTAR_CACHE:
        try:
            _LAMSTAR_CACHE[key] = throughput_lp(scn)
        except ValueError:
            _LAMSTAR_CACHE[key] = None
    lam_star = _LAMSTAR_CACHE[key]
    normalized = "" if lam_star is None else f"{float(lam / lam_star):.9f}"
    return {
        "lambda": str(lam),
        "tau": tau,
        "seed": seed,
        "feasible": int(outcome.feasible),
        "stage": outcome.stage or "",
        "normalized_rate": normalized,
    }


def cmd_sweep(args) -> int:
    t0 = time.monotonic()
    lams = _parse_fraction_list(args.lam_grid)
    taus = [int(t) for t in args.tau_grid.split(",") if t]
    seeds = [int(s) for s in args.seeds.split(",") if s]
    if not lams or not taus or not seeds:
        raise SystemExit("empty grid")
    topo_params = json.loads(args.topo_params)
    capacity = Fraction(args.capacity)
    n_flows = args.flows if args.flows > 0 else None
    jobs = [
        (args.topology, topo_params, capacity, args.phi, n_flows, seed, lam, tau)
        for lam in lams
        for tau in taus
        for seed in seeds
    ]
    if args.jobs > 1:
        with multiprocessing.Pool(args.jobs) as pool:
            rows = pool.map(_sweep_point, jobs)
    else:
        rows = [_sweep_point(j) for j in jobs]
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    with (outdir / "sweep.csv").open("w", newline="") as fh:
        w = csv.DictWriter(
            fh, fieldnames=["lambda", "tau", "seed", "feasible", "stage", "normalized_rate"]
        )
        w.writeheader()
        w.writerows(rows)
    _write_metadata(outdir, vars(args), time.monotonic() - t0)
    n_ok = sum(r["feasible"] for r in rows)
    print(f"{n_ok}/{len(rows)} points feasible -> {outdir / 'sweep.csv'}")
    return 0


def cmd_report(args) -> int:
    root = Path(args.trace_dir)
    traces = sorted(root.rglob("trace.csv"))
    sweeps = sorted(root.rglob("sweep.csv"))
    if not traces and not sweeps:
        raise SystemExit(f"no trace.csv or sweep.csv under {root}")
    out = []
    delays = []
    for path in traces:
        with path.open() as fh:
            for row in csv.DictReader(fh):
                d = float(row["max_delay_slots"])
                delays.append(d)
                out.append(
                    f"{path.parent.name}/flow {row['flow']}: "
                    f"{row['max_delay_slots']} slots = {d * SLOT_MS:.3f} ms, "
                    f"supported={row['supported']}"
                )
        sched = path.parent / "schedule.json"
        if sched.exists():
            data = json.loads(sched.read_text())
            cyc = CyclicSchedule(
                data["period"], tuple(frozenset(s) for s in data["activation"])
            )
            stats = measure_inter_scheduling(cyc)
            table = ", ".join(
                f"{e}:{stats.k_max[e]}" for e in sorted(stats.k_max)
            )
            out.append(f"{path.parent.name}/measured max inter-scheduling: {table}")
    for path in sweeps:
        with path.open() as fh:
            rows = list(csv.DictReader(fh))
        n_ok = sum(int(r["feasible"]) for r in rows)
        out.append(f"{path}: {n_ok}/{len(rows)} feasible")
    if delays:
        delays.sort()
        qs = {
            q: delays[min(len(delays) - 1, int(q * len(delays)))]
            for q in (0.5, 0.9, 0.95)
        }
        out.append(
            "delay quantiles (slots): "
            + ", ".join(f"p{int(q * 100)}={v:g}" for q, v in qs.items())
        )
    text = "\n".join(out)
    print(text)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "report.txt").write_text(text + "\n")
    return 0


def cmd_oracle(args) -> int:
    if args.kind == "throughput":
        scn = load_scenario(args.scenario)
        print(str(throughput_lp(scn)))
    elif args.kind == "pinwheel":
        k = [int(v) for v in args.vector.split(",")]
        feasible, witness = exhaustive_pinwheel(k, args.period_bound)
        if feasible is None:
            print("unknown (state space exceeds guard)")
        elif feasible:
            print(f"schedulable: period {witness.period} slots {list(witness.slots)}")
        else:
            print("unschedulable")
    else:  # deadline
        scn = load_scenario(args.scenario)
        res = min_deadline_oracle(
            scn, args.period_bound, vanishing_rate=args.vanishing
        )
        print(f"optimum {res.best_objective} ({res.examined} candidates)")
    return 0


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="deadlinesched")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="end-to-end solve of one scenario")
    ps.add_argument("--scenario", required=True)
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_solve)

    pm = sub.add_parser("simulate", help="re-run a persisted schedule")
    pm.add_argument("--scenario", required=True)
    pm.add_argument("--schedule", required=True)
    pm.set_defaults(func=cmd_simulate)

    pw = sub.add_parser("sweep", help="(lambda, tau) feasibility sweep")
    pw.add_argument("--topology", required=True, choices=("line", "grid", "sink_tree", "grid_random"))
    pw.add_argument("--topo-params", default="{}", help='JSON, e.g. {"rows":4,"cols":4}')
    pw.add_argument("--capacity", default="1")
    pw.add_argument("--phi", type=int, required=True)
    pw.add_argument("--flows", type=int, default=0, help="0 = one flow per sink-tree leaf")
    pw.add_argument("--seeds", required=True, help="comma-separated seeds")
    pw.add_argument("--lam-grid", required=True, help="comma-separated rates (fractions)")
    pw.add_argument("--tau-grid", required=True, help="comma-separated deadlines")
    pw.add_argument("--jobs", type=int, default=1)
    pw.add_argument("--out", required=True)
    pw.set_defaults(func=cmd_sweep)

    pr = sub.add_parser("report", help="summarize trace artifacts")
    pr.add_argument("--trace-dir", required=True)
    pr.add_argument("--out", default="")
    pr.set_defaults(func=cmd_report)

    po = sub.add_parser("oracle", help="brute-force baselines")
    po.add_argument("kind", choices=("throughput", "pinwheel", "deadline"))
    po.add_argument("--scenario")
    po.add_argument("--vector", help="pinwheel vector, comma-separated")
    po.add_argument("--period-bound", type=int, default=24)
    po.add_argument("--vanishing", action="store_true")
    po.set_defaults(func=cmd_oracle)

    args = p.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
