"""Domain model, feasibility checks and the combined cycle-time objective.

Tasks and workers are addressed by 0-based indices everywhere inside the
library; 1-based task ids and worker names only appear at the I/O boundary.
Task sets are frequently handled as int bitmasks (bit ``i`` set means task
``i`` is in the set).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

INFEASIBLE = None
INFEASIBLE_BOUND = math.inf
SECONDS_PER_HOUR = 3600.0


class InstanceError(ValueError):
    """Raised when instance data violates an Instance invariant."""


class SolutionError(ValueError):
    """Raised when a line or solution cannot be evaluated."""


class NoSolutionError(RuntimeError):
    """Raised when a solver finds no feasible solution at all."""


def bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def mask_of(items: Iterable[int]) -> int:
    m = 0
    for i in items:
        m |= 1 << i
    return m


def _topological_order(n: int, edges: Iterable[tuple[int, int]]) -> Optional[list[int]]:
    succ = [[] for _ in range(n)]
    indeg = [0] * n
    for i, j in edges:
        succ[i].append(j)
        indeg[j] += 1
    ready = [i for i in range(n) if indeg[i] == 0]
    order = []
    while ready:
        ready.sort(reverse=True)
        i = ready.pop()
        order.append(i)
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
    return order if len(order) == n else None


def transitive_reduction(n: int, edges: Iterable[tuple[int, int]]) -> frozenset[tuple[int, int]]:
    """Reduce an acyclic relation. Raises InstanceError on a cycle."""
    edges = set(edges)
    for i, j in edges:
        if i == j:
            raise InstanceError(f"precedence cycle at task {i + 1}")
    order = _topological_order(n, edges)
    if order is None:
        raise InstanceError("precedence cycle")
    desc = [0] * n
    succ = [[] for _ in range(n)]
    for i, j in edges:
        succ[i].append(j)
    for i in reversed(order):
        for j in succ[i]:
            desc[i] |= desc[j] | (1 << j)
    reduced = set()
    for i, j in edges:
        # (i, j) is redundant if j is reachable through another successor of i
        if not any(k != j and desc[k] >> j & 1 for k in succ[i]):
            reduced.add((i, j))
    return frozenset(reduced)


@dataclass(frozen=True)
class Instance:
    """A worker-dependent assembly line balancing instance.

    ``times[w][i]`` is worker ``w``'s integer time for task ``i`` or
    ``INFEASIBLE``. ``precedence`` holds 0-based pairs and is stored
    transitively reduced.
    """

    n_tasks: int
    precedence: frozenset
    workers: tuple
    times: tuple

    def __post_init__(self):
        if self.n_tasks < 1:
            raise InstanceError("instance needs at least one task")
        if len(self.workers) < 1:
            raise InstanceError("instance needs at least one worker")
        if len(set(self.workers)) != len(self.workers):
            raise InstanceError("duplicate worker name")
        if len(self.times) != len(self.workers):
            raise InstanceError("one time row per worker required")
        times = tuple(tuple(row) for row in self.times)
        for w, row in enumerate(times):
            if len(row) != self.n_tasks:
                raise InstanceError(f"worker {self.workers[w]}: expected {self.n_tasks} times")
            for p in row:
                if p is not None and (isinstance(p, bool) or not isinstance(p, int) or p < 1):
                    raise InstanceError(f"worker {self.workers[w]}: invalid time {p!r}")
        for i in range(self.n_tasks):
            if all(times[w][i] is None for w in range(len(times))):
                raise InstanceError(f"uncoverable task {i + 1}")
        for i, j in self.precedence:
            if not (0 <= i < self.n_tasks and 0 <= j < self.n_tasks):
                raise InstanceError(f"precedence pair ({i + 1}, {j + 1}) out of range")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "workers", tuple(self.workers))
        object.__setattr__(self, "precedence", transitive_reduction(self.n_tasks, self.precedence))

    @classmethod
    def build(cls, times, precedence=(), workers=None) -> "Instance":
        """Convenience constructor: ``times`` is worker-major, ``precedence`` 1-based."""
        times = [list(r) for r in times]
        if workers is None:
            workers = [f"W{w + 1}" for w in range(len(times))]
        n = len(times[0]) if times else 0
        return cls(n, frozenset((i - 1, j - 1) for i, j in precedence), tuple(workers), tuple(map(tuple, times)))

    @property
    def n_workers(self) -> int:
        return len(self.workers)

    @cached_property
    def all_tasks(self) -> int:
        return (1 << self.n_tasks) - 1

    @cached_property
    def all_workers(self) -> frozenset:
        return frozenset(range(self.n_workers))

    @cached_property
    def topo_order(self) -> tuple:
        return tuple(_topological_order(self.n_tasks, self.precedence))

    @cached_property
    def pred_mask(self) -> tuple:
        """Immediate predecessors of each task as a bitmask."""
        m = [0] * self.n_tasks
        for i, j in self.precedence:
            m[j] |= 1 << i
        return tuple(m)

    @cached_property
    def succ_mask(self) -> tuple:
        """Immediate successors of each task as a bitmask."""
        m = [0] * self.n_tasks
        for i, j in self.precedence:
            m[i] |= 1 << j
        return tuple(m)

    @cached_property
    def descendants(self) -> tuple:
        d = [0] * self.n_tasks
        for i in reversed(self.topo_order):
            for j in bits(self.succ_mask[i]):
                d[i] |= d[j] | (1 << j)
        return tuple(d)

    @cached_property
    def ancestors(self) -> tuple:
        a = [0] * self.n_tasks
        for j in self.topo_order:
            for i in bits(self.pred_mask[j]):
                a[j] |= a[i] | (1 << i)
        return tuple(a)

    @cached_property
    def incompatible(self) -> tuple:
        """I_w: bitmask of tasks each worker cannot perform."""
        return tuple(mask_of(i for i, p in enumerate(row) if p is None) for row in self.times)

    @cached_property
    def reverse(self) -> "Instance":
        """Same workers and times with every precedence arc flipped."""
        return Instance(self.n_tasks, frozenset((j, i) for i, j in self.precedence), self.workers, self.times)

    @cached_property
    def min_feasible_time(self) -> int:
        return min(p for row in self.times for p in row if p is not None)

    def time(self, w: int, i: int) -> Optional[int]:
        return self.times[w][i]

    def worker_index(self, name: str) -> int:
        try:
            return self.workers.index(name)
        except ValueError:
            raise SolutionError(f"unknown worker {name!r}") from None


@dataclass(frozen=True)
class Station:
    worker: int
    tasks: tuple = ()


@dataclass(frozen=True)
class LineSolution:
    stations: tuple
    cycle_time: float

    @property
    def team(self) -> frozenset:
        return frozenset(s.worker for s in self.stations)

    @classmethod
    def from_stations(cls, instance: Instance, stations: Sequence[Station]) -> "LineSolution":
        stations = tuple(stations)
        _, ct = evaluate_line(instance, stations)
        return cls(stations, ct)


@dataclass(frozen=True)
class ParallelSolution:
    lines: tuple
    k_max: int

    @property
    def line_cycle_times(self) -> list:
        return [ln.cycle_time for ln in self.lines if ln.stations]

    @property
    def combined_cycle_time(self) -> float:
        return combined_cycle_time(self.line_cycle_times)

    @property
    def combined_throughput(self) -> float:
        return SECONDS_PER_HOUR / self.combined_cycle_time

    @property
    def total_rate(self) -> float:
        """Products per second summed over lines (the maximized objective)."""
        return sum(1.0 / c for c in self.line_cycle_times)

    @property
    def n_active_lines(self) -> int:
        return sum(1 for ln in self.lines if ln.stations)

    @property
    def teams(self) -> list:
        return [ln.team for ln in self.lines]


@dataclass(frozen=True)
class LineReport:
    cycle_time: float
    throughput: float
    loads: tuple
    bottleneck_station: int


@dataclass(frozen=True)
class ThroughputReport:
    lines: tuple
    combined_cycle_time: float
    combined_throughput: float


def combined_cycle_time(line_cts: Sequence[float]) -> float:
    """Cycle time equivalent of running lines in parallel: 1 / sum(1/ct)."""
    if len(line_cts) == 0:
        raise ValueError("no active lines")
    total = 0.0
    for ct in line_cts:
        if not (ct > 0 and math.isfinite(ct)):
            raise ValueError(f"invalid cycle time {ct!r}")
        total += 1.0 / ct
    return 1.0 / total


def throughput(ct: float) -> float:
    """Products per hour for a cycle time in seconds."""
    return SECONDS_PER_HOUR / ct


def station_loads(instance: Instance, stations: Sequence[Station]) -> list:
    loads = []
    for st in stations:
        row = instance.times[st.worker]
        load = 0
        for i in st.tasks:
            p = row[i]
            if p is None:
                raise SolutionError(
                    f"task {i + 1} assigned to incapable worker {instance.workers[st.worker]}"
                )
            load += p
        loads.append(load)
    return loads


def evaluate_line(instance: Instance, line) -> tuple:
    """Return (station loads, cycle time) of a line.

    Structural checks are limited to what the arithmetic needs; use
    validate_solution for a full feasibility report.
    """
    stations = line.stations if isinstance(line, LineSolution) else tuple(line)
    loads = station_loads(instance, stations)
    return loads, (max(loads) if loads else 0)


def throughput_report(instance: Instance, sol: ParallelSolution) -> ThroughputReport:
    reports = []
    for ln in sol.lines:
        if not ln.stations:
            continue
        loads, ct = evaluate_line(instance, ln)
        reports.append(LineReport(ct, throughput(ct), tuple(loads), loads.index(ct)))
    cct = combined_cycle_time([r.cycle_time for r in reports])
    return ThroughputReport(tuple(reports), cct, throughput(cct))


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def add(self, kind: str, detail: str):
        self.violations.append(Violation(kind, detail))


def _check_line(instance: Instance, line: LineSolution, where: str, report: ValidationReport):
    station_of = {}
    for s, st in enumerate(line.stations):
        if not 0 <= st.worker < instance.n_workers:
            report.add("unknown worker", f"{where}: worker index {st.worker}")
            continue
        row = instance.times[st.worker]
        for pos, i in enumerate(st.tasks):
            if not 0 <= i < instance.n_tasks:
                report.add("unknown task", f"{where}: task index {i}")
                continue
            if i in station_of:
                report.add("coverage", f"{where}: task {i + 1} assigned twice")
                continue
            station_of[i] = (s, pos)
            if row[i] is None:
                report.add(
                    "incompatibility",
                    f"{where}: worker {instance.workers[st.worker]} cannot do task {i + 1}",
                )
    missing = [i + 1 for i in range(instance.n_tasks) if i not in station_of]
    if missing:
        report.add("coverage", f"{where}: tasks not assigned {missing}")
    for i, j in instance.precedence:
        if i in station_of and j in station_of and station_of[i] > station_of[j]:
            report.add("precedence", f"{where}: task {i + 1} must precede task {j + 1}")
    if not any(v.kind == "incompatibility" for v in report.violations):
        try:
            _, ct = evaluate_line(instance, line)
        except SolutionError:
            return
        if line.stations and abs(ct - line.cycle_time) > 1e-9:
            report.add("cycle time", f"{where}: stated {line.cycle_time}, actual {ct}")


def validate_solution(instance: Instance, sol: ParallelSolution) -> ValidationReport:
    """Check every feasibility rule; violations are returned, never raised."""
    report = ValidationReport()
    lines = [ln for ln in sol.lines if ln.stations]
    if not lines:
        report.add("line count", "no active lines")
    if len(lines) > sol.k_max:
        report.add("line count", f"{len(lines)} active lines exceed k_max={sol.k_max}")
    seen = {}
    for k, ln in enumerate(lines):
        for st in ln.stations:
            if st.worker in seen:
                name = instance.workers[st.worker] if 0 <= st.worker < instance.n_workers else st.worker
                report.add("worker duplicated", f"worker {name} in line {seen[st.worker] + 1} and line {k + 1}")
            else:
                seen[st.worker] = k
    for w in range(instance.n_workers):
        if w not in seen:
            report.add("worker missing", f"worker {instance.workers[w]} not assigned")
    for k, ln in enumerate(lines):
        _check_line(instance, ln, f"line {k + 1}", report)
    return report


def lower_bound(instance: Instance, team: Iterable[int]) -> float:
    """max(ceil(sum of best task times / |team|), largest best task time).

    Returns INFEASIBLE_BOUND when some task has no capable team member.
    """
    team = sorted(set(team))
    if not team:
        raise ValueError("empty worker subset")
    total = 0
    worst = 0
    for i in range(instance.n_tasks):
        best = None
        for w in team:
            p = instance.times[w][i]
            if p is not None and (best is None or p < best):
                best = p
        if best is None:
            return INFEASIBLE_BOUND
        total += best
        worst = max(worst, best)
    return max(-(-total // len(team)), worst)
