import math

import pytest

from palwabp.core import (INFEASIBLE_BOUND, Instance, InstanceError, LineSolution, ParallelSolution, SolutionError,
                          Station, combined_cycle_time, evaluate_line, lower_bound, throughput, throughput_report,
                          transitive_reduction, validate_solution)
from palwabp.constructive import solve_serial_best


def test_combined_cycle_time_examples():
    assert combined_cycle_time([135, 354]) == pytest.approx(97.73, abs=0.05)
    assert combined_cycle_time([42]) == 42
    assert combined_cycle_time([100, 100]) == pytest.approx(50)


@pytest.mark.parametrize("bad,msg", [([], "no active lines"), ([10, 0], "invalid cycle time"),
                                     ([-3], "invalid cycle time"), ([math.inf], "invalid cycle time")])
def test_combined_cycle_time_errors(bad, msg):
    with pytest.raises(ValueError, match=msg):
        combined_cycle_time(bad)


def test_throughput_per_hour():
    assert throughput(135) == pytest.approx(26.67, abs=0.01)
    assert throughput(354) == pytest.approx(10.17, abs=0.01)


def test_evaluate_heskia_line(heskia, heskia_line2):
    loads, ct = evaluate_line(heskia, heskia_line2)
    assert loads == [347, 354, 354]
    assert ct == 354


def test_evaluate_rejects_incapable_worker(heskia):
    w3 = heskia.workers.index("W3")
    with pytest.raises(SolutionError, match="task 13"):
        evaluate_line(heskia, [Station(w3, tuple(range(28)))])


def test_evaluate_toy_single_station(toy):
    assert evaluate_line(toy, [Station(2, (0, 1, 2, 3, 4))]) == ([5], 5)


def test_two_line_heskia_partition_validates(heskia, heskia_line2):
    team1 = frozenset(heskia.workers.index(w) for w in ("W5", "W4", "W1", "W7"))
    line1 = solve_serial_best(heskia, team1)
    assert line1 is not None
    line2 = LineSolution.from_stations(heskia, heskia_line2)
    sol = ParallelSolution((line1, line2), 2)
    assert validate_solution(heskia, sol).ok
    assert sol.combined_cycle_time < line2.cycle_time


def test_duplicated_worker_reported(toy):
    a = LineSolution.from_stations(toy, [Station(2, (0, 1, 2, 3, 4))])
    b = LineSolution.from_stations(toy, [Station(2, (0, 1, 2, 3, 4)), Station(0, ()), Station(1, ())])
    report = validate_solution(toy, ParallelSolution((a, b), 2))
    assert "worker duplicated" in report.kinds()


def test_precedence_violation_reported(toy):
    # task 2 placed before task 1
    line = LineSolution.from_stations(toy, [Station(1, (1,)), Station(2, (0, 2, 3, 4)), Station(0, ())])
    assert "precedence" in validate_solution(toy, ParallelSolution((line,), 1)).kinds()


def test_other_violation_kinds(toy):
    line = LineSolution((Station(0, (0, 1, 2)), Station(1, (3,)), Station(2, ())), 3)
    kinds = validate_solution(toy, ParallelSolution((line,), 1)).kinds()
    assert {"incompatibility", "coverage"} <= kinds
    full = LineSolution.from_stations(toy, [Station(2, (0, 1, 2, 3, 4))])
    part = ParallelSolution((full, LineSolution.from_stations(toy, [Station(0, (0, 2, 4)), Station(1, (1, 3))])), 1)
    assert "line count" in validate_solution(toy, part).kinds()
    assert "worker missing" in validate_solution(toy, ParallelSolution((full,), 1)).kinds()
    wrong_ct = LineSolution(full.stations + (Station(0,), Station(1,)), 4)
    assert "cycle time" in validate_solution(toy, ParallelSolution((wrong_ct,), 1)).kinds()


def test_lower_bound_examples(heskia, toy):
    assert lower_bound(heskia, range(7)) == 108
    assert lower_bound(toy, range(3)) == 2
    assert lower_bound(heskia, [heskia.workers.index("W3")]) == INFEASIBLE_BOUND
    with pytest.raises(ValueError):
        lower_bound(toy, [])


def test_instance_invariants():
    with pytest.raises(InstanceError, match="uncoverable"):
        Instance(2, frozenset(), ("a",), ((1, None),))
    with pytest.raises(InstanceError, match="invalid time"):
        Instance(1, frozenset(), ("a",), ((0,),))
    with pytest.raises(InstanceError, match="cycle"):
        Instance(2, frozenset({(0, 1), (1, 0)}), ("a",), ((1, 1),))


def test_precedence_stored_reduced():
    assert transitive_reduction(3, {(0, 1), (1, 2), (0, 2)}) == {(0, 1), (1, 2)}


def test_throughput_report(heskia, heskia_line2):
    line = LineSolution.from_stations(heskia, heskia_line2)
    rep = throughput_report(heskia, ParallelSolution((line,), 1))
    assert rep.combined_cycle_time == rep.lines[0].cycle_time == 354
    assert rep.lines[0].bottleneck_station == 1
