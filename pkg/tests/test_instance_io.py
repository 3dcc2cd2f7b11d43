import numpy as np
import pytest

from palwabp.core import ParallelSolution, LineSolution, Station
from palwabp.instance_io import (GeneratorConfig, ParseError, SalbpBase, generate_instance, parse_instance,
                                 parse_salbp_base, parse_solution, random_base, seeded_suite, write_instance,
                                 write_salbp_base, write_solution)
from palwabp.core import Instance


def test_heskia_fixture(heskia):
    assert heskia.n_tasks == 28 and heskia.n_workers == 7
    assert heskia.times[0][0] == 70
    assert heskia.times[heskia.workers.index("W3")][12] is None


def test_cycle_rejected():
    text = "tasks 2\nworkers 1\nprecedence\n2 1\n1 2\nend\ntimes\na: 1 1\n"
    with pytest.raises(ParseError, match="precedence cycle"):
        parse_instance(text)


def test_uncoverable_task_rejected():
    text = "tasks 4\nworkers 2\nprecedence\nend\ntimes\na: 1 1 1 -\nb: 2 2 2 -\n"
    with pytest.raises(Exception, match="uncoverable task"):
        parse_instance(text)


def test_duplicate_row_rejected():
    text = "tasks 1\nworkers 2\nprecedence\nend\ntimes\na: 1\na: 2\n"
    with pytest.raises(ParseError, match="duplicate"):
        parse_instance(text)


def test_syntax_error_has_line_number():
    text = "tasks 2\nworkers 1\nprecedence\n1 x\nend\ntimes\na: 1 1\n"
    with pytest.raises(ParseError, match="line 4"):
        parse_instance(text)


def test_roundtrip_heskia(heskia):
    assert parse_instance(write_instance(heskia)) == heskia


def test_one_task_document():
    inst = Instance(1, frozenset(), ("a",), ((3,),))
    text = write_instance(inst)
    assert text == "tasks 1\nworkers 1\nprecedence\nend\ntimes\na: 3\n"
    assert parse_instance(text) == inst


def test_generated_roundtrip_100_seeds():
    base = random_base(12, 0.2, 5)
    for seed in range(100):
        inst = generate_instance(base, GeneratorConfig(2, 0.2, 4, seed))
        assert parse_instance(write_instance(inst)) == inst


def test_generated_times_in_range():
    base = SalbpBase((40, 40, 40), frozenset({(0, 1)}))
    inst = generate_instance(base, GeneratorConfig(2, 0.1, 6, 9))
    assert all(40 <= p <= 80 for row in inst.times for p in row if p is not None)


def test_degenerate_factor():
    base = SalbpBase((3, 7, 11), frozenset())
    inst = generate_instance(base, GeneratorConfig(1, 0.0, 4, 1))
    assert all(row == (3, 7, 11) for row in inst.times)


def test_generation_deterministic():
    base = random_base(10, 0.3, 2)
    cfg = GeneratorConfig(5, 0.2, 3, 123)
    assert write_instance(generate_instance(base, cfg)) == write_instance(generate_instance(base, cfg))


def test_infeasible_fraction_over_seeds():
    base = random_base(20, 0.2, 0, t_min=1, t_max=100)
    infeasible = cells = 0
    for seed in range(10_000):
        inst, repairs = generate_instance(base, GeneratorConfig(2, 0.10, 5, seed), return_repairs=True)
        infeasible += sum(p is None for row in inst.times for p in row) + len(repairs)
        cells += 100
    assert abs(infeasible / cells - 0.10) <= 0.01


def test_config_validation():
    with pytest.raises(ValueError):
        GeneratorConfig(2, 1.0, 3, 0)
    with pytest.raises(ValueError):
        GeneratorConfig(2, 0.1, 0, 0)
    with pytest.raises(ValueError):
        GeneratorConfig(0, 0.1, 3, 0)


def test_salbp_formats():
    base = random_base(8, 0.3, 4)
    assert parse_salbp_base(write_salbp_base(base)) == base
    alb = ("<number of tasks>\n3\n<cycle time>\n1000\n<task times>\n1 5\n2 6\n3 7\n"
           "<precedence relations>\n1,2\n1,3\n<end>\n")
    got = parse_salbp_base(alb)
    assert got.times == (5, 6, 7) and got.precedence == {(0, 1), (0, 2)}


def test_random_base_order_strength():
    n = 20
    base = random_base(n, 0.2, 11)
    inst = Instance(n, base.precedence, ("a",), ((1,) * n,))
    comparable = sum(bin(d).count("1") for d in inst.descendants)
    assert comparable == round(0.2 * n * (n - 1) / 2)


def test_solution_roundtrip(toy):
    line1 = LineSolution.from_stations(toy, [Station(0, (0, 2, 4)), Station(1, (1, 3))])
    line2 = LineSolution.from_stations(toy, [Station(2, (0, 1, 2, 3, 4))])
    sol = ParallelSolution((line1, line2), 2)
    text = write_solution(toy, sol, ["demo"])
    assert text.startswith("# demo\nkmax 2\nline 1\nstation 1 worker w1: 1 3 5  # load 3\n")
    back, claims = parse_solution(toy, text)
    assert back == sol
    assert claims.line_cycles == [3, 5]
    assert claims.combined == pytest.approx(1.875)


def test_seeded_suite_is_stable():
    a = seeded_suite(5, seed=2)
    b = seeded_suite(8, seed=2)[:5]
    assert [write_instance(i) for _, i in a] == [write_instance(i) for _, i in b]
    for _, inst in seeded_suite(20, seed=1, unit_times=True):
        assert inst.n_tasks <= 8 and inst.n_workers <= 4
        assert {p for row in inst.times for p in row} <= {1, None}
