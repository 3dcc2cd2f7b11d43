"""Command-line front end: ``palwabp {generate,solve,verify,benchmark}``.

Exit codes: 0 ok, 1 solve or verification failure, 2 usage error, 3 method guard
(oracle size limit, enumeration catalog overflow).
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from .brkga import BrkgaParams, brkga_solve
from .brkga import write_log as write_brkga_log
from .core import InstanceError, validate_solution
from .exact import EnumerationError, OracleSizeError, enumerate_solve, exhaustive_oracle
from .instance_io import (GeneratorConfig, ParseError, generate_instance, iter_instance_files, load_instance,
                          parse_salbp_base, parse_solution, write_instance, write_solution)
from .tabu import NoSolutionError, TabuParams, tabu_search
from .tabu import write_log as write_tabu_log

METHODS = ("tabu", "brkga", "enum", "oracle")
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3
OBJECTIVE_TOLERANCE = 0.01


class GuardError(RuntimeError):
    pass


@dataclass
class RunOutcome:
    solution: object
    iterations: int
    log: list


def run_method(inst, method: str, k_max: int, seed: int = 0, time_limit: Optional[float] = None,
               generations: int = 1000) -> RunOutcome:
    if method == "tabu":
        r = tabu_search(inst, TabuParams(k_max=k_max, seed=seed, time_limit=time_limit))
        return RunOutcome(r.solution, r.iterations, r.log)
    if method == "brkga":
        limit = 300.0 if time_limit is None else time_limit
        r = brkga_solve(inst, BrkgaParams(k_max=k_max, seed=seed, max_generations=generations, time_limit=limit))
        return RunOutcome(r.solution, r.generations, r.log)
    try:
        if method == "enum":
            return RunOutcome(enumerate_solve(inst, k_max), 0, [])
        if method == "oracle":
            return RunOutcome(exhaustive_oracle(inst, k_max), 0, [])
    except (OracleSizeError, EnumerationError) as exc:
        raise GuardError(str(exc)) from None
    raise ValueError(f"unknown method {method!r}")


def _err(msg: str):
    print(f"palwabp: {msg}", file=sys.stderr)


def cmd_generate(args) -> int:
    try:
        cfg = GeneratorConfig(args.factor, args.rate, args.workers, args.seed)
    except ValueError as exc:
        _err(f"usage: {exc}")
        return EXIT_USAGE
    try:
        base = parse_salbp_base(Path(args.base))
        inst, repairs = generate_instance(base, cfg, return_repairs=True)
    except (OSError, InstanceError) as exc:
        _err(f"generation failed: {exc}")
        return EXIT_FAIL
    text = write_instance(inst)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    infeasible = sum(p is None for row in inst.times for p in row)
    print(f"tasks {inst.n_tasks} workers {inst.n_workers} infeasible {infeasible} repaired {len(repairs)}",
          file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        inst = load_instance(args.instance)
    except (OSError, InstanceError) as exc:
        _err(str(exc))
        return EXIT_FAIL
    try:
        out = run_method(inst, args.method, args.kmax, args.seed, args.time_limit, args.generations)
    except GuardError as exc:
        _err(str(exc))
        return EXIT_GUARD
    except NoSolutionError as exc:
        _err(str(exc))
        return EXIT_FAIL
    header = [f"method {args.method} seed {args.seed} kmax {args.kmax}"]
    text = write_solution(inst, out.solution, header)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"combined {out.solution.combined_cycle_time:.6f}")
    else:
        sys.stdout.write(text)
    if args.log and out.log:
        (write_tabu_log if args.method == "tabu" else write_brkga_log)(out.log, args.log)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        inst = load_instance(args.instance)
        sol, claims = parse_solution(inst, Path(args.solution))
    except OSError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except InstanceError as exc:
        _err(str(exc))
        return EXIT_FAIL
    report = validate_solution(inst, sol)
    ok = report.ok
    for v in report.violations:
        _err(f"{v.kind}: {v.detail}")
    if ok:
        actual = sol.combined_cycle_time
        if claims.combined is None or abs(actual - claims.combined) > OBJECTIVE_TOLERANCE:
            _err(f"objective mismatch: file claims {claims.combined}, recomputed {actual:.6f}")
            ok = False
    if ok:
        print(f"ok combined {sol.combined_cycle_time:.6f}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- benchmark

CSV_COLUMNS = ["row", "instance", "method", "seed", "k_max", "ct", "serial_ct", "C_pct", "T_s",
               "P_pct", "Best_pct", "SD", "parallel_found", "iterations"]


@dataclass
class BenchmarkRecord:
    instance: str
    method: str
    seed: int
    k_max: int
    ct: float
    serial_ct: float
    wall_s: float
    parallel_found: bool
    iterations: int

    @property
    def c_pct(self) -> Optional[float]:
        if math.isfinite(self.ct) and math.isfinite(self.serial_ct):
            return 100.0 * (self.ct - self.serial_ct) / self.serial_ct
        return None


@dataclass
class Aggregate:
    instance: str
    method: str
    c_pct: float
    t_s: float
    p_pct: float
    best_pct: float
    sd: float


def aggregate(records) -> Aggregate:
    """Mean C%, mean time, share of parallel runs, best C% and SD of C% for one group."""
    cs = [r.c_pct for r in records if r.c_pct is not None]
    return Aggregate(
        records[0].instance,
        records[0].method,
        statistics.fmean(cs) if cs else math.nan,
        statistics.fmean(r.wall_s for r in records),
        100.0 * sum(r.parallel_found for r in records) / len(records),
        min(cs) if cs else math.nan,
        statistics.stdev(cs) if len(cs) > 1 else 0.0,
    )


def _bench_job(job):
    path, method, k_max, seeds, time_limit, generations = job
    try:
        inst = load_instance(path)
    except (OSError, InstanceError) as exc:
        return path, method, None, str(exc)
    name = Path(path).name
    try:
        t0 = time.perf_counter()
        base = run_method(inst, method, 1, seeds[0], time_limit, generations)
        base_t = time.perf_counter() - t0
        serial_ct = base.solution.combined_cycle_time
        recs = []
        for seed in seeds:
            t0 = time.perf_counter()
            out = run_method(inst, method, k_max, seed, time_limit, generations)
            recs.append(BenchmarkRecord(name, method, seed, k_max, out.solution.combined_cycle_time, serial_ct,
                                        time.perf_counter() - t0, out.solution.n_active_lines >= 2,
                                        out.iterations))
    except (GuardError, NoSolutionError) as exc:
        return path, method, None, str(exc)
    return path, method, (recs, base_t), None


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def cmd_benchmark(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        _err(f"usage: {directory} is not a directory")
        return EXIT_USAGE
    files = list(iter_instance_files(directory))
    if not files:
        _err(f"usage: no instance files in {directory}")
        return EXIT_USAGE
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or args.reps < 1:
        _err(f"usage: unknown method(s) {bad}" if bad else "usage: --reps must be >= 1")
        return EXIT_USAGE
    seeds = [args.seed + r for r in range(args.reps)]
    jobs = [(str(f), m, args.kmax, seeds, args.time_limit, args.generations) for f in files for m in methods]
    width = max(1, int(os.environ.get("PALWABP_THREADS", "1") or 1))
    if width > 1:
        with ProcessPoolExecutor(width) as pool:
            results = list(pool.map(_bench_job, jobs))
    else:
        results = [_bench_job(j) for j in jobs]

    detail, groups = [], []
    for path, method, payload, error in results:
        if payload is None:
            _err(f"warning: skipped {Path(path).name} ({method}): {error}")
            continue
        recs, _ = payload
        detail.extend(recs)
        groups.append(recs)
    if not groups:
        _err("no instance could be solved")
        return EXIT_FAIL

    rows = []
    for r in detail:
        rows.append(["detail", r.instance, r.method, r.seed, r.k_max, r.ct, r.serial_ct, r.c_pct, r.wall_s,
                     None, None, None, r.parallel_found, r.iterations])
    aggs = [aggregate(g) for g in groups]
    for a in aggs:
        rows.append(["aggregate", a.instance, a.method, None, args.kmax, None, None, a.c_pct, a.t_s,
                     a.p_pct, a.best_pct, a.sd, None, None])
    for method in methods:
        mine = [a for a in aggs if a.method == method]
        if not mine:
            continue
        runs = [r for r in detail if r.method == method]

        def mean(xs):
            xs = [x for x in xs if not math.isnan(x)]
            return statistics.fmean(xs) if xs else math.nan

        rows.append(["summary", "*", method, None, args.kmax, None, None, mean(a.c_pct for a in mine),
                     mean(a.t_s for a in mine), 100.0 * sum(r.parallel_found for r in runs) / len(runs),
                     mean(a.best_pct for a in mine), mean(a.sd for a in mine), None, None])
        rows.append(["summary-instances", "*", method, None, args.kmax, None, None, None, None,
                     100.0 * sum(a.p_pct > 0 for a in mine) / len(mine), None, None, None, None])

    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        fh.write("# serial baseline: same method run once with k_max = 1 (seed of the first repetition)\n")
        fh.write("# C_pct = 100*(CT - CT_serial)/CT_serial; P_pct = share of runs using >= 2 lines "
                 "(summary-instances: share of instances with any such run)\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(CSV_COLUMNS)
        for row in rows:
            wr.writerow([_fmt(x) for x in row])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _err(f"usage: {message}")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="palwabp", description="Parallel assembly line worker assignment and balancing")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="generate an instance from a SALBP base file")
    g.add_argument("base")
    g.add_argument("--factor", type=int, default=2, help="time factor F (times drawn in [t, F*t])")
    g.add_argument("--rate", type=float, default=0.10, help="infeasibility rate")
    g.add_argument("--workers", type=int, default=4)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve an instance")
    s.add_argument("instance")
    s.add_argument("--method", choices=METHODS, default="tabu")
    s.add_argument("--kmax", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--time-limit", type=float, default=None)
    s.add_argument("--generations", type=int, default=1000, help="BRKGA generation budget")
    s.add_argument("--out")
    s.add_argument("--log", help="write the search log as CSV")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check a solution file against its instance")
    v.add_argument("instance")
    v.add_argument("solution")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("benchmark", help="run methods over a directory of instances")
    b.add_argument("directory")
    b.add_argument("--methods", default="tabu,brkga")
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--kmax", type=int, default=2)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--time-limit", type=float, default=None)
    b.add_argument("--generations", type=int, default=1000)
    b.add_argument("--out")
    b.set_defaults(func=cmd_benchmark)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "kmax", 1) < 1:
        _err("usage: --kmax must be >= 1")
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
