"""Biased random-key genetic algorithm.

Chromosome layout (length 2|W| + |N|*k_max, genes in [0, 1)):

* genes ``[0, |W|)``: line of worker w is ``floor(gene * k_max)``
* genes ``[|W|, 2|W|)``: worker priorities (larger goes first)
* genes ``[2|W|, ...)``: task priorities, one block of |N| per line
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constructive import DEFAULT_PORTFOLIO, PriorityRules, solve_serial, solve_serial_best
from .core import Instance, LineSolution, NoSolutionError, ParallelSolution, Station


@dataclass
class BrkgaParams:
    population: int = 100
    elite: int = 20
    mutants: int = 10
    elite_inherit_prob: float = 0.70
    k_max: int = 2
    seed: int = 0
    max_generations: int = 1000
    time_limit: Optional[float] = 300.0

    def __post_init__(self):
        if min(self.population, self.elite, self.k_max) < 1 or self.mutants < 0:
            raise ValueError("population, elite and k_max must be positive")
        if self.elite + self.mutants >= self.population:
            raise ValueError("elite + mutants must be smaller than the population")
        if not 0.0 <= self.elite_inherit_prob <= 1.0:
            raise ValueError("elite_inherit_prob must lie in [0, 1]")


def chromosome_length(inst: Instance, k_max: int) -> int:
    return 2 * inst.n_workers + inst.n_tasks * k_max


def worker_lines(genes: np.ndarray, n_workers: int, k_max: int) -> list:
    return [min(int(math.floor(g * k_max)), k_max - 1) for g in genes[:n_workers]]


@dataclass
class Decoded:
    teams: list          # team per line index (possibly empty)
    lines: list          # LineSolution, or None for an empty or infeasible line
    fitness: float       # products per second over feasible lines
    infeasible: list     # indices of nonempty lines that could not be built

    @property
    def feasible(self) -> bool:
        return not self.infeasible and any(self.lines)

    def solution(self, k_max: int) -> ParallelSolution:
        if not self.feasible:
            raise ValueError("decoded chromosome has infeasible lines")
        return ParallelSolution(tuple(ln for ln in self.lines if ln is not None), k_max)

    @property
    def combined_cycle_time(self) -> float:
        return 1.0 / self.fitness if self.fitness > 0 else math.inf


def decode(genes, inst: Instance, k_max: int) -> Decoded:
    genes = np.asarray(genes, dtype=float)
    m, n = inst.n_workers, inst.n_tasks
    if genes.shape != (chromosome_length(inst, k_max),):
        raise ValueError(f"chromosome must have {chromosome_length(inst, k_max)} genes")
    assignment = worker_lines(genes, m, k_max)
    worker_prio = tuple(genes[m : 2 * m].tolist())
    teams, lines, infeasible = [], [], []
    fitness = 0.0
    for k in range(k_max):
        team = frozenset(w for w in range(m) if assignment[w] == k)
        teams.append(team)
        if not team:
            lines.append(None)
            continue
        start = 2 * m + k * n
        rules = PriorityRules.external(worker_prio, tuple(genes[start : start + n].tolist()))
        line = solve_serial(inst, team, rules)
        lines.append(line)
        if line is None:
            infeasible.append(k)
        else:
            fitness += 1.0 / line.cycle_time
    return Decoded(teams, lines, fitness, infeasible)


def evolve(population: np.ndarray, params: BrkgaParams, rng: np.random.Generator) -> np.ndarray:
    """Next generation from a population sorted best-first.

    Elites are copied, mutants are fresh uniform vectors, and the rest are
    children of one elite and one non-elite parent taking each gene from the
    elite parent with probability ``elite_inherit_prob``.
    """
    size, length = population.shape
    if size < params.elite + params.mutants + 1:
        raise ValueError("population smaller than elite + mutants + 1")
    n_children = size - params.elite - params.mutants
    elite = population[: params.elite]
    mutants = rng.random((params.mutants, length))
    ep = rng.integers(0, params.elite, size=n_children)
    op = rng.integers(params.elite, size, size=n_children)
    take_elite = rng.random((n_children, length)) < params.elite_inherit_prob
    children = np.where(take_elite, population[ep], population[op])
    return np.vstack([elite.copy(), mutants, children])


@dataclass
class GenerationRow:
    generation: int
    best_fitness: float
    best_ct: float
    mean_fitness: float


@dataclass
class BrkgaResult:
    solution: ParallelSolution
    best_fitness: float
    best_genes: np.ndarray
    log: list
    generations: int
    repaired: bool

    @property
    def combined_cycle_time(self) -> float:
        return self.solution.combined_cycle_time


def write_log(rows, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["generation", "best_fitness", "best_ct", "mean_fitness"])
        for r in rows:
            wr.writerow([r.generation, f"{r.best_fitness:.9f}", f"{r.best_ct:.6f}", f"{r.mean_fitness:.9f}"])


def repair(inst: Instance, decoded: Decoded, k_max: int, genes=None) -> ParallelSolution:
    """Fold the workers of unbuildable lines into the best feasible line.

    The absorbing line is re-solved with its task priorities; if that fails
    or is worse, the extra workers get empty stations at the end of the line.
    """
    if decoded.feasible:
        return decoded.solution(k_max)
    good = [k for k, ln in enumerate(decoded.lines) if ln is not None]
    if not good:
        line = solve_serial_best(inst, inst.all_workers, DEFAULT_PORTFOLIO)
        if line is None:
            raise NoSolutionError("no solution exists")
        return ParallelSolution((line,), k_max)
    target = min(good, key=lambda k: (decoded.lines[k].cycle_time, k))
    extra = frozenset().union(*(decoded.teams[k] for k in decoded.infeasible))
    base = decoded.lines[target]
    padded = LineSolution(base.stations + tuple(Station(w) for w in sorted(extra)), base.cycle_time)
    best = padded
    if genes is not None:
        m, n = inst.n_workers, inst.n_tasks
        start = 2 * m + target * n
        rules = PriorityRules.external(tuple(genes[m : 2 * m].tolist()), tuple(genes[start : start + n].tolist()))
        resolved = solve_serial(inst, decoded.teams[target] | extra, rules)
        if resolved is not None and resolved.cycle_time < best.cycle_time:
            best = resolved
    lines = [best] + [decoded.lines[k] for k in good if k != target]
    return ParallelSolution(tuple(lines), k_max)


def brkga_solve(inst: Instance, params: BrkgaParams = None) -> BrkgaResult:
    params = params or BrkgaParams()
    rng = np.random.default_rng(params.seed)
    started = time.perf_counter()
    length = chromosome_length(inst, params.k_max)
    pop = rng.random((params.population, length))
    fit = np.array([decode(c, inst, params.k_max).fitness for c in pop])
    log = []
    gen = 0
    while True:
        order = np.argsort(-fit, kind="stable")
        pop, fit = pop[order], fit[order]
        log.append(GenerationRow(gen, float(fit[0]), 1.0 / fit[0] if fit[0] > 0 else math.inf, float(fit.mean())))
        if gen >= params.max_generations:
            break
        if params.time_limit is not None and time.perf_counter() - started > params.time_limit:
            break
        pop = evolve(pop, params, rng)
        fresh = np.array([decode(c, inst, params.k_max).fitness for c in pop[params.elite :]])
        fit = np.concatenate([fit[: params.elite], fresh])
        gen += 1
    best = pop[0]
    decoded = decode(best, inst, params.k_max)
    sol = repair(inst, decoded, params.k_max, best)
    return BrkgaResult(sol, float(fit[0]), best.copy(), log, gen, not decoded.feasible)
