"""Tabu search over partitions of the workers into line teams."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .constructive import DEFAULT_PORTFOLIO, SerialCache
from .core import Instance, NoSolutionError, ParallelSolution
from .preprocess import DEFAULT_ENTRY_LIMIT, WorkerSetCatalog, worker_sets


def _team_key(team: frozenset) -> tuple:
    return tuple(sorted(team))


@dataclass(frozen=True)
class Transfer:
    workers: frozenset
    from_line: int
    to_line: int
    kind = "transfer"

    def apply(self, partition: Sequence[frozenset]) -> list:
        out = list(partition)
        out[self.from_line] = out[self.from_line] - self.workers
        out[self.to_line] = out[self.to_line] | self.workers
        return [t for t in out if t]

    def lines(self) -> tuple:
        return self.from_line, self.to_line

    def inverse(self) -> "Transfer":
        return Transfer(self.workers, self.to_line, self.from_line)


@dataclass(frozen=True)
class Exchange:
    lack: frozenset    # moves from line i2 into line i1
    excess: frozenset  # moves from line i1 into line i2
    i1: int
    i2: int
    kind = "exchange"

    def apply(self, partition: Sequence[frozenset]) -> list:
        out = list(partition)
        out[self.i1] = (out[self.i1] - self.excess) | self.lack
        out[self.i2] = (out[self.i2] - self.lack) | self.excess
        return out

    def lines(self) -> tuple:
        return self.i1, self.i2

    def inverse(self) -> "Exchange":
        return Exchange(self.excess, self.lack, self.i1, self.i2)


def _touched(move, partition) -> tuple:
    a, b = move.lines()
    before = (partition[a], partition[b])
    if isinstance(move, Transfer):
        after = (partition[a] - move.workers, partition[b] | move.workers)
    else:
        after = ((partition[a] - move.excess) | move.lack, (partition[b] - move.lack) | move.excess)
    return before, after


def fingerprint(move, partition: Sequence[frozenset]) -> frozenset:
    """Unordered pair {teams before, teams after} on the two lines touched.

    A move and the move that undoes it share the fingerprint.
    """
    before, after = _touched(move, partition)
    return frozenset((frozenset(before), frozenset(after)))


def initial_solution(catalog: WorkerSetCatalog, k_max: int, rng: np.random.Generator,
                     pinned: Optional[int] = None, max_nodes: int = 100_000) -> list:
    """Seed up to k_max disjoint catalogued teams, then scatter the leftover workers.

    A random team (or ``catalog.teams[pinned]``) is placed first and kept;
    the rest are found first-fit with backtracking over the catalog order.
    """
    everyone = frozenset(range(catalog.n_workers))
    if k_max == 1:
        return [everyone]
    teams = catalog.teams
    if not teams:
        raise NoSolutionError("no solution exists")
    if pinned is None:
        pinned = int(rng.integers(len(teams)))
    best = [teams[pinned]]
    nodes = 0

    def search(start, chosen, used):
        nonlocal best, nodes
        if len(chosen) > len(best):
            best = list(chosen)
        if len(chosen) == k_max:
            return True
        for idx in range(start, len(teams)):
            nodes += 1
            if nodes > max_nodes:
                return True
            t = teams[idx]
            if not (t & used):
                chosen.append(t)
                if search(idx + 1, chosen, used | t):
                    return True
                chosen.pop()
        return False

    search(0, [teams[pinned]], teams[pinned])
    leftover = sorted(everyone.difference(*best))
    out = [set(t) for t in best]
    for w in leftover:
        out[int(rng.integers(len(out)))].add(w)
    return [frozenset(t) for t in out]


def neighborhood(current: Sequence[frozenset], catalog: WorkerSetCatalog) -> list:
    """Transfers and exchanges suggested by comparing each line with catalogued teams.

    Moves reaching the same pair of line teams are kept once.
    """
    moves = []
    seen = set()
    n = len(current)
    for i1, team in enumerate(current):
        for wj in catalog.teams:
            if not (team & wj):
                continue
            excess = team - wj
            lack = wj - team
            if not excess:
                continue
            if not lack:
                for x in sorted(excess):
                    for i2 in range(n):
                        if i2 == i1 or not catalog.covers(current[i2] | {x}):
                            continue
                        mv = Transfer(frozenset((x,)), i1, i2)
                        fp = fingerprint(mv, current)
                        if fp not in seen:
                            seen.add(fp)
                            moves.append(mv)
            else:
                for i2, other in enumerate(current):
                    if i2 == i1 or not lack <= other:
                        continue
                    if catalog.covers((other - lack) | excess):
                        mv = Exchange(lack, excess, i1, i2)
                        fp = fingerprint(mv, current)
                        if fp not in seen:
                            seen.add(fp)
                            moves.append(mv)
    return moves


@dataclass
class TabuParams:
    k_max: int = 2
    tenure: int = 10
    max_idle_iterations: int = 1000
    max_restarts: int = 10
    seed: int = 0
    time_limit: Optional[float] = None
    rules: tuple = DEFAULT_PORTFOLIO
    catalog_limit: int = DEFAULT_ENTRY_LIMIT

    def __post_init__(self):
        for name in ("k_max", "tenure", "max_idle_iterations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be >= 0")


@dataclass
class TabuState:
    tenure: int
    tabu: dict = field(default_factory=dict)  # fingerprint -> expiry iteration
    idle: int = 0
    restarts: int = 0

    def purge(self, iteration: int):
        self.tabu = {fp: exp for fp, exp in self.tabu.items() if exp > iteration}

    def add(self, fp, iteration: int):
        self.tabu[fp] = iteration + self.tenure


@dataclass
class LogRow:
    iteration: int
    kind: str
    combined_ct: float
    incumbent_ct: float


@dataclass
class TabuResult:
    solution: ParallelSolution
    log: list
    serial_ct: float
    iterations: int
    restarts: int
    catalog_size: int
    catalog_overflow: bool

    @property
    def combined_cycle_time(self) -> float:
        return self.solution.combined_cycle_time


def write_log(rows, path_or_file):
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        wr = csv.writer(fh)
        wr.writerow(["iteration", "move", "combined_ct", "incumbent_ct"])
        for r in rows:
            wr.writerow([r.iteration, r.kind, f"{r.combined_ct:.6f}", f"{r.incumbent_ct:.6f}"])
    finally:
        if own:
            fh.close()


def _rate(evaluate, partition) -> float:
    total = 0.0
    for team in partition:
        ct = evaluate.cycle_time(team)
        if math.isinf(ct):
            return -math.inf
        total += 1.0 / ct
    return total


def _ct(rate: float) -> float:
    return 1.0 / rate if rate > 0 else math.inf


def build_solution(evaluate: SerialCache, partition, k_max: int) -> ParallelSolution:
    lines = tuple(evaluate(team) for team in sorted(partition, key=_team_key))
    if any(ln is None for ln in lines):
        raise NoSolutionError("partition contains an infeasible team")
    return ParallelSolution(lines, k_max)


def tabu_search(inst: Instance, params: TabuParams = None, catalog: Optional[WorkerSetCatalog] = None,
                evaluate: Optional[SerialCache] = None) -> TabuResult:
    params = params or TabuParams()
    evaluate = evaluate or SerialCache(inst, params.rules)
    rng = np.random.default_rng(params.seed)
    started = time.perf_counter()
    everyone = inst.all_workers

    serial = evaluate(everyone)
    serial_ct = math.inf if serial is None else serial.cycle_time
    best_part = [everyone] if serial is not None else None
    best_rate = 1.0 / serial_ct
    log = [LogRow(0, "serial", serial_ct, serial_ct)]
    if catalog is None and params.k_max > 1:
        catalog = worker_sets(inst, limit=params.catalog_limit)
    iteration = 0
    state = TabuState(params.tenure)

    def out_of_time():
        return params.time_limit is not None and time.perf_counter() - started > params.time_limit

    if params.k_max > 1 and catalog is not None and catalog.teams:
        for run in range(params.max_restarts + 1):
            if out_of_time():
                break
            state = TabuState(params.tenure, restarts=run)
            current = initial_solution(catalog, params.k_max, rng)
            cur_rate = _rate(evaluate, current)
            if cur_rate > best_rate:
                best_rate, best_part = cur_rate, list(current)
            log.append(LogRow(iteration, "restart", _ct(cur_rate), _ct(best_rate)))
            while state.idle < params.max_idle_iterations and not out_of_time():
                iteration += 1
                state.purge(iteration)
                chosen = None
                chosen_rate = -math.inf
                for mv in neighborhood(current, catalog):
                    cand = mv.apply(current)
                    r = _rate(evaluate, cand)
                    if r == -math.inf or r <= chosen_rate:
                        continue
                    if fingerprint(mv, current) in state.tabu and not r > best_rate:
                        continue
                    chosen, chosen_rate = mv, r
                if chosen is None:
                    break
                state.add(fingerprint(chosen, current), iteration)
                current = chosen.apply(current)
                cur_rate = chosen_rate
                if cur_rate > best_rate:
                    best_rate, best_part = cur_rate, list(current)
                    state.idle = 0
                else:
                    state.idle += 1
                log.append(LogRow(iteration, chosen.kind, _ct(cur_rate), _ct(best_rate)))

    if best_part is None:
        raise NoSolutionError("no solution exists")
    return TabuResult(
        solution=build_solution(evaluate, best_part, params.k_max),
        log=log,
        serial_ct=serial_ct,
        iterations=iteration,
        restarts=state.restarts,
        catalog_size=len(catalog) if catalog is not None else 0,
        catalog_overflow=bool(catalog is not None and catalog.overflow),
    )
