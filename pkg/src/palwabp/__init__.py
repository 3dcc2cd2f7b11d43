"""Parallel assembly line worker assignment and balancing (cycle-time minimization)."""
from importlib.resources import files

from .brkga import BrkgaParams, brkga_solve, decode, evolve
from .constructive import DEFAULT_PORTFOLIO, DEFAULT_RULES, PriorityRules, construct_line, solve_serial
from .core import (Instance, LineSolution, ParallelSolution, Station, combined_cycle_time, lower_bound,
                   throughput, validate_solution)
from .exact import enumerate_solve, exhaustive_oracle, export_milp, verify_milp_solution
from .instance_io import GeneratorConfig, generate_instance, load_instance, parse_instance
from .preprocess import task_sets, worker_sets
from .tabu import TabuParams, tabu_search

__version__ = "0.1.0"


def bundled_instance(name: str) -> Instance:
    """Load a packaged fixture: ``"toy5"`` or ``"heskia64"``."""
    return parse_instance(files(__package__).joinpath("data", f"{name}.txt").read_text(encoding="utf-8"))
