"""Greedy station-oriented heuristic for a single line (serial ALWABP-2)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .core import Instance, LineSolution, Station, bits, lower_bound

WORKER_RULES = ("fewest-capable", "min-total-time", "external")
TASK_RULES = ("most-successors", "max-positional-weight", "relative-time", "external")
STATION_CHOICES = ("fixed", "best-station")
DIRECTIONS = ("forward", "backward")


@dataclass(frozen=True)
class PriorityRules:
    """How the greedy pass orders workers and tasks.

    ``station_choice="fixed"`` opens stations in worker-rule order (skipping
    ahead to a worker who can start some available task); ``"best-station"``
    fills a trial station for every remaining worker and keeps the one that
    removes the most work, measured in the team's best task times, with
    ties going to worker-rule order. ``direction="backward"`` builds the
    line from the last station on the reversed precedence graph.
    """

    worker_rule: str = "min-total-time"
    task_rule: str = "most-successors"
    worker_priority: Optional[tuple] = None
    task_priority: Optional[tuple] = None
    station_choice: str = "fixed"
    direction: str = "forward"

    def __post_init__(self):
        if self.worker_rule not in WORKER_RULES:
            raise ValueError(f"unknown worker rule {self.worker_rule!r}")
        if self.task_rule not in TASK_RULES:
            raise ValueError(f"unknown task rule {self.task_rule!r}")
        if self.station_choice not in STATION_CHOICES:
            raise ValueError(f"unknown station choice {self.station_choice!r}")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.worker_rule == "external" and self.worker_priority is None:
            raise ValueError("external worker rule needs a priority vector")
        if self.task_rule == "external" and self.task_priority is None:
            raise ValueError("external task rule needs a priority vector")

    @classmethod
    def external(cls, worker_priority: Sequence[float], task_priority: Sequence[float]) -> "PriorityRules":
        return cls("external", "external", tuple(worker_priority), tuple(task_priority))

    def check(self, inst: Instance):
        if self.worker_priority is not None and len(self.worker_priority) != inst.n_workers:
            raise ValueError(f"worker priority vector needs {inst.n_workers} entries")
        if self.task_priority is not None and len(self.task_priority) != inst.n_tasks:
            raise ValueError(f"task priority vector needs {inst.n_tasks} entries")


DEFAULT_RULES = PriorityRules()

# rule combinations tried per team by the metaheuristics; best line wins
DEFAULT_PORTFOLIO = (
    DEFAULT_RULES,
    PriorityRules("fewest-capable", "relative-time", station_choice="best-station"),
    PriorityRules("fewest-capable", "relative-time", station_choice="best-station", direction="backward"),
    PriorityRules("min-total-time", "most-successors", station_choice="best-station", direction="backward"),
    PriorityRules("fewest-capable", "max-positional-weight", direction="backward"),
    PriorityRules("fewest-capable", "max-positional-weight"),
    PriorityRules("fewest-capable", "max-positional-weight", station_choice="best-station"),
    PriorityRules("min-total-time", "max-positional-weight", station_choice="best-station", direction="backward"),
)


def worker_order(inst: Instance, team: Iterable[int], rules: PriorityRules) -> list:
    team = sorted(set(team))
    if rules.worker_rule == "fewest-capable":
        key = lambda w: (sum(p is not None for p in inst.times[w]), w)
    elif rules.worker_rule == "min-total-time":
        key = lambda w: (sum(p for p in inst.times[w] if p is not None), w)
    else:
        pr = rules.worker_priority
        key = lambda w: (-pr[w], w)
    return sorted(team, key=key)


def _best_times(inst: Instance, team) -> list:
    best = []
    for i in range(inst.n_tasks):
        ps = [inst.times[w][i] for w in team if inst.times[w][i] is not None]
        best.append(min(ps) if ps else 0)
    return best


def task_order(inst: Instance, team: Iterable[int], rules: PriorityRules, worker: Optional[int] = None) -> list:
    """Task priority list (highest first); ties go to the lowest index.

    ``relative-time`` is worker dependent: tasks on which ``worker`` is
    closest to the team's best time come first, then by positional weight.
    """
    n = inst.n_tasks
    team = list(team)
    if rules.task_rule == "most-successors":
        key = lambda i: (-bin(inst.descendants[i]).count("1"), i)
    elif rules.task_rule in ("max-positional-weight", "relative-time"):
        best = _best_times(inst, team)
        weight = [best[i] + sum(best[d] for d in bits(inst.descendants[i])) for i in range(n)]
        if rules.task_rule == "max-positional-weight":
            key = lambda i: (-weight[i], i)
        else:
            if worker is None:
                raise ValueError("relative-time ordering needs a worker")
            row = inst.times[worker]
            key = lambda i: (row[i] / best[i] if row[i] is not None else math.inf, -weight[i], i)
    else:
        pr = rules.task_priority
        key = lambda i: (-pr[i], i)
    return sorted(range(n), key=key)


def task_orders(inst: Instance, team: Iterable[int], rules: PriorityRules) -> dict:
    """Task priority list per team member."""
    team = sorted(set(team))
    if rules.task_rule == "relative-time":
        return {w: task_order(inst, team, rules, w) for w in team}
    shared = task_order(inst, team, rules)
    return {w: shared for w in team}


def _fill(inst: Instance, w: int, order, assigned: int, trial_ct: float):
    """Load one station for ``w``: returns (tasks, load, assigned mask, threshold)."""
    pred = inst.pred_mask
    row = inst.times[w]
    load = 0
    chosen = []
    threshold = math.inf
    while True:
        pick = -1
        for i in order:
            if assigned >> i & 1 or pred[i] & ~assigned:
                continue
            p = row[i]
            if p is None:
                continue
            if load + p <= trial_ct:
                pick = i
                break
            if load + p < threshold:
                threshold = load + p
        if pick < 0:
            break
        assigned |= 1 << pick
        chosen.append(pick)
        load += row[pick]
    return chosen, load, assigned, threshold


def greedy_pass(inst: Instance, workers: Sequence[int], orders, trial_ct: float, station_choice: str = "fixed"):
    """One station-by-station pass at a trial cycle time.

    ``orders`` is a task priority list, or a dict of lists per worker.
    Returns ``(stations or None, threshold)``. ``threshold`` is the smallest
    load that was turned down only because it exceeded ``trial_ct`` (over
    every trial station filled); any trial value below it replays this pass
    exactly.
    """
    if not isinstance(orders, dict):
        orders = {w: orders for w in workers}
    pred = inst.pred_mask
    incompatible = inst.incompatible
    assigned = 0
    threshold = math.inf
    stations = []
    remaining = list(workers)
    while remaining:
        if station_choice == "best-station":
            best = None
            for v in remaining:
                chosen, _, after, thr = _fill(inst, v, orders[v], assigned, trial_ct)
                threshold = min(threshold, thr)
                content = 0
                for i in chosen:
                    content += min(inst.times[u][i] for u in remaining if inst.times[u][i] is not None)
                if best is None or content > best[0]:
                    best = (content, v, chosen, after)
            _, w, chosen, assigned = best
        else:
            available = 0
            for i in range(inst.n_tasks):
                if not (assigned >> i & 1 or pred[i] & ~assigned):
                    available |= 1 << i
            # first worker in rule order able to start an available task
            w = next((v for v in remaining if available & ~incompatible[v]), remaining[0])
            chosen, _, assigned, thr = _fill(inst, w, orders[w], assigned, trial_ct)
            threshold = min(threshold, thr)
        remaining.remove(w)
        stations.append(Station(w, tuple(chosen)))
    if assigned != inst.all_tasks:
        return None, threshold
    return stations, threshold


def _line(inst: Instance, stations) -> LineSolution:
    ct = max(sum(inst.times[st.worker][i] for i in st.tasks) for st in stations)
    return LineSolution(tuple(stations), ct)


def construct_line(inst: Instance, team: Iterable[int], rules: PriorityRules, trial_ct: float) -> Optional[LineSolution]:
    """Build a line for ``team`` whose cycle time is at most ``trial_ct``; None on failure."""
    team = set(team)
    if not team:
        raise ValueError("empty team")
    if trial_ct < 1:
        raise ValueError("trial cycle time must be >= 1")
    rules.check(inst)
    work = inst.reverse if rules.direction == "backward" else inst
    stations, _ = greedy_pass(work, worker_order(work, team, rules), task_orders(work, team, rules), trial_ct,
                              rules.station_choice)
    return _line(inst, _oriented(stations, rules)) if stations is not None else None


def _oriented(stations, rules: PriorityRules) -> list:
    # a backward pass lists stations (and tasks inside them) last to first
    if rules.direction == "forward":
        return stations
    return [Station(st.worker, st.tasks[::-1]) for st in reversed(stations)]


def serial_upper_limit(inst: Instance, team: Iterable[int]) -> int:
    total = 0
    for i in range(inst.n_tasks):
        ps = [inst.times[w][i] for w in team if inst.times[w][i] is not None]
        total += max(ps) if ps else 0
    return total


def solve_serial(inst: Instance, team: Iterable[int], rules: PriorityRules = DEFAULT_RULES,
                 increment: str = "min-time") -> Optional[LineSolution]:
    """Raise the trial cycle time from the lower bound until the greedy pass succeeds.

    The step is the smallest feasible task time of the instance (``increment=
    "min-time"``) or 1 (``"unit"``). Trial values the previous pass proves to
    fail are skipped; the result equals the plain step-by-step scan.
    Returns None when no trial value up to the sum of the team's worst task
    times succeeds.
    """
    team = set(team)
    if not team:
        raise ValueError("empty team")
    if increment not in ("min-time", "unit"):
        raise ValueError(f"unknown increment {increment!r}")
    rules.check(inst)
    lb = lower_bound(inst, team)
    if math.isinf(lb):
        return None
    step = inst.min_feasible_time if increment == "min-time" else 1
    limit = serial_upper_limit(inst, team)
    work = inst.reverse if rules.direction == "backward" else inst
    workers = worker_order(work, team, rules)
    orders = task_orders(work, team, rules)
    trial = lb
    while trial <= limit:
        stations, threshold = greedy_pass(work, workers, orders, trial, rules.station_choice)
        if stations is not None:
            return _line(inst, _oriented(stations, rules))
        if math.isinf(threshold):
            return None
        trial += max(1, math.ceil((threshold - trial) / step)) * step
    return None


def solve_serial_best(inst: Instance, team: Iterable[int], portfolio: Sequence[PriorityRules] = DEFAULT_PORTFOLIO,
                      increment: str = "min-time") -> Optional[LineSolution]:
    """solve_serial under each rule set; the lowest cycle time wins, earlier rules on ties."""
    best = None
    for rules in portfolio:
        line = solve_serial(inst, team, rules, increment)
        if line is not None and (best is None or line.cycle_time < best.cycle_time):
            best = line
    return best


class SerialCache:
    """Memoized team evaluation for one instance.

    ``rules`` is a single PriorityRules or a sequence tried as a portfolio.
    """

    def __init__(self, inst: Instance, rules=DEFAULT_PORTFOLIO, increment: str = "min-time"):
        self.inst = inst
        self.portfolio = (rules,) if isinstance(rules, PriorityRules) else tuple(rules)
        self.increment = increment
        self._cache = {}
        self.calls = 0

    def __call__(self, team) -> Optional[LineSolution]:
        team = frozenset(team)
        if team not in self._cache:
            self.calls += 1
            self._cache[team] = solve_serial_best(self.inst, team, self.portfolio, self.increment)
        return self._cache[team]

    def cycle_time(self, team) -> float:
        line = self(team)
        return math.inf if line is None else line.cycle_time
