"""Tabu search and BRKGA on the bundled HESKIA_64 instance with two lines."""
import argparse
import time

from palwabp import bundled_instance
from palwabp.brkga import BrkgaParams, brkga_solve
from palwabp.constructive import solve_serial_best
from palwabp.core import throughput_report, validate_solution
from palwabp.tabu import TabuParams, tabu_search

REFERENCE_CT = 97.7


def show(name, inst, sol, wall):
    rep = throughput_report(inst, sol)
    print(f"{name}: combined CT {rep.combined_cycle_time:.3f} s ({rep.combined_throughput:.2f}/h) in {wall:.1f}s, "
          f"valid={validate_solution(inst, sol).ok}")
    for k, (line, lr) in enumerate(zip([ln for ln in sol.lines if ln.stations], rep.lines), start=1):
        team = ",".join(inst.workers[st.worker] for st in line.stations)
        print(f"  line {k}: {team}  CT {lr.cycle_time}  loads {list(lr.loads)}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--generations", type=int, default=100)
    args = ap.parse_args()
    inst = bundled_instance("heskia64")

    serial = solve_serial_best(inst, inst.all_workers)
    print(f"serial heuristic CT {serial.cycle_time}")

    t0 = time.perf_counter()
    res = tabu_search(inst, TabuParams(k_max=2, seed=args.seed))
    show("tabu", inst, res.solution, time.perf_counter() - t0)
    print(f"  gap to reference {REFERENCE_CT}: {res.combined_cycle_time - REFERENCE_CT:+.3f}")

    t0 = time.perf_counter()
    bres = brkga_solve(inst, BrkgaParams(k_max=2, seed=args.seed, max_generations=args.generations))
    show("brkga", inst, bres.solution, time.perf_counter() - t0)


if __name__ == "__main__":
    main()
