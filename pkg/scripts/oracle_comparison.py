"""Compare tabu, enumeration and BRKGA with the exhaustive oracle on seeded tiny instances."""
import argparse
import csv
import sys
import time

from palwabp.brkga import BrkgaParams, brkga_solve
from palwabp.constructive import SerialCache
from palwabp.core import NoSolutionError
from palwabp.exact import enumerate_solve, exhaustive_oracle
from palwabp.instance_io import seeded_suite
from palwabp.tabu import TabuParams, tabu_search

TOL = 1e-9


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=120)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--unit", action="store_true", help="unit task times")
    ap.add_argument("--kmax", type=int, default=2)
    ap.add_argument("--generations", type=int, default=50)
    ap.add_argument("--out", help="per-instance CSV")
    args = ap.parse_args()

    methods = {
        "tabu": lambda inst, ev: tabu_search(inst, TabuParams(k_max=args.kmax), evaluate=ev).solution,
        "enum": lambda inst, ev: enumerate_solve(inst, args.kmax, evaluate=ev),
        "brkga": lambda inst, ev: brkga_solve(inst, BrkgaParams(k_max=args.kmax,
                                                               max_generations=args.generations)).solution,
    }
    hits = dict.fromkeys(methods, 0)
    rows = []
    n = 0
    t0 = time.perf_counter()
    for label, inst in seeded_suite(args.count, seed=args.seed, unit_times=args.unit):
        try:
            opt = exhaustive_oracle(inst, args.kmax)
        except NoSolutionError:
            continue
        n += 1
        ev = SerialCache(inst)
        row = {"instance": label, "oracle": opt.combined_cycle_time}
        for name, run in methods.items():
            sol = run(inst, ev)
            row[name] = sol.combined_cycle_time
            hits[name] += abs(sol.total_rate - opt.total_rate) <= TOL
        rows.append(row)
    for name, h in hits.items():
        print(f"{name:6s} matches oracle on {h}/{n} ({h / n:.1%})")
    print(f"{time.perf_counter() - t0:.1f}s")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            wr = csv.DictWriter(fh, fieldnames=["instance", "oracle", *methods])
            wr.writeheader()
            wr.writerows(rows)


if __name__ == "__main__":
    sys.exit(main())
