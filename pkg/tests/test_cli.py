import json
from fractions import Fraction

import pytest

from deadlinesched.cli import (
    build_pinwheel,
    load_scenario,
    main,
    scenario_to_json,
    solve_scenario,
)
from deadlinesched.pinwheel import verify_pinwheel


def crossing_flows_json(tau1=12, tau2=12):
    """Two flows crossing at a relay (rates 9 and 1, capacities 27)."""
    return {
        "nodes": [1, 2, 3],
        "links": [[1, 2, 27, 1], [2, 3, 27, 1], [3, 2, 27, 1], [2, 1, 27, 1]],
        "phi": 3,
        "flows": [
            {"src": 1, "dst": 3, "lambda": [9, 1], "tau": tau1},
            {"src": 3, "dst": 1, "lambda": [1, 1], "tau": tau2},
        ],
    }


def write_scenario(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_scenario_round_trip(tmp_path):
    data = crossing_flows_json()
    scn = load_scenario(write_scenario(tmp_path, data))
    assert scenario_to_json(scn) == data
    assert scn.flows[0].route == (0, 1)
    assert scn.flows[1].rate == Fraction(1)


def test_build_pinwheel_dispatch():
    uniform = build_pinwheel((3, 3, 3))
    assert uniform is not None and verify_pinwheel(uniform, (3, 3, 3)).ok
    assert build_pinwheel((2, 2, 2)) is None
    stepdown = build_pinwheel((2, 6, 6, 12, 12))
    assert stepdown is not None
    general = build_pinwheel((3, 4, 8, 8, 8))
    assert general is not None and verify_pinwheel(general, (3, 4, 8, 8, 8)).ok


def test_solve_feasible_end_to_end(tmp_path):
    scenario = write_scenario(tmp_path, crossing_flows_json(12, 12))
    out = tmp_path / "run"
    assert main(["solve", "--scenario", str(scenario), "--out", str(out)]) == 0
    verdict = json.loads((out / "verdict.json").read_text())
    assert verdict["feasible"] and verdict["stage"] is None
    assert verdict["max_delay_slots"] == [4, 9]
    schedule = json.loads((out / "schedule.json").read_text())
    assert sorted(schedule["k"]) == [3, 3, 6, 6]
    assert (out / "trace.csv").exists() and (out / "metadata.json").exists()


def test_simulate_recertifies_persisted_schedule(tmp_path):
    scenario = write_scenario(tmp_path, crossing_flows_json(12, 12))
    out = tmp_path / "run"
    main(["solve", "--scenario", str(scenario), "--out", str(out)])
    code = main(
        [
            "simulate",
            "--scenario",
            str(scenario),
            "--schedule",
            str(out / "schedule.json"),
        ]
    )
    assert code == 0


def test_solve_tight_deadline_fails_at_pinwheel(tmp_path):
    # tau=10 forces k=(3,3) on the heavy route, leaving no pinwheel-feasible
    # completion for the other two links (density exceeds 1)
    scenario = write_scenario(tmp_path, crossing_flows_json(10, 10))
    out = tmp_path / "run"
    assert main(["solve", "--scenario", str(scenario), "--out", str(out)]) == 1
    verdict = json.loads((out / "verdict.json").read_text())
    assert not verdict["feasible"]
    assert verdict["stage"] == "pinwheel"


def test_solve_deadline_below_route_length_fails_validation(tmp_path):
    scenario = write_scenario(tmp_path, crossing_flows_json(1, 1))
    out = tmp_path / "run"
    assert main(["solve", "--scenario", str(scenario), "--out", str(out)]) == 1
    verdict = json.loads((out / "verdict.json").read_text())
    assert verdict["stage"] == "validation"


def test_solve_outcome_stages_are_canonical(tmp_path):
    for tau, stage in [(1, "validation"), (10, "pinwheel")]:
        scn = load_scenario(write_scenario(tmp_path, crossing_flows_json(tau, tau)))
        outcome = solve_scenario(scn)
        assert not outcome.feasible
        assert outcome.stage == stage


def _sweep_args(outdir):
    return [
        "sweep",
        "--topology",
        "line",
        "--topo-params",
        '{"n": 4}',
        "--capacity",
        "4",
        "--phi",
        "1",
        "--flows",
        "2",
        "--seeds",
        "0,1",
        "--lam-grid",
        "1/2,100",
        "--tau-grid",
        "6,12",
        "--out",
        str(outdir),
    ]


def test_sweep_deterministic_and_structured(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(_sweep_args(a)) == 0
    assert main(_sweep_args(b)) == 0
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    rows = (a / "sweep.csv").read_text().strip().splitlines()
    assert rows[0] == "lambda,tau,seed,feasible,stage,normalized_rate"
    assert len(rows) == 1 + 2 * 2 * 2
    # rates far above the throughput-optimal rate are never feasible
    for row in rows[1:]:
        lam, _tau, _seed, feasible, stage, _norm = row.split(",")
        if lam == "100":
            assert feasible == "0" and stage != ""


def test_report_aggregates_runs(tmp_path, capsys):
    scenario = write_scenario(tmp_path, crossing_flows_json(12, 12))
    main(["solve", "--scenario", str(scenario), "--out", str(tmp_path / "run")])
    assert main(["report", "--trace-dir", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "delay quantiles" in text
    assert "supported=1" in text


def test_report_empty_directory_errors(tmp_path):
    with pytest.raises(SystemExit):
        main(["report", "--trace-dir", str(tmp_path / "nothing")])


def test_oracle_pinwheel_command(capsys):
    assert main(["oracle", "pinwheel", "--vector", "2,2,2"]) == 0
    assert "unschedulable" in capsys.readouterr().out
    assert main(["oracle", "pinwheel", "--vector", "3,4,8,8,8"]) == 0
    assert "schedulable" in capsys.readouterr().out


def test_oracle_throughput_command(tmp_path, capsys):
    scenario = write_scenario(tmp_path, crossing_flows_json())
    assert main(["oracle", "throughput", "--scenario", str(scenario)]) == 0
    out = capsys.readouterr().out.strip()
    assert Fraction(out) > 0
