"""How often each constructive rule set reaches the exact optimum of a catalogued team."""
import argparse

from palwabp.constructive import DEFAULT_PORTFOLIO, solve_serial
from palwabp.exact import team_optima
from palwabp.instance_io import seeded_suite
from palwabp.preprocess import worker_sets


def describe(r):
    return f"{r.worker_rule}/{r.task_rule}/{r.station_choice}/{r.direction}"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=60)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    hits = [0] * len(DEFAULT_PORTFOLIO)
    best = total = 0
    for _, inst in seeded_suite(args.count, seed=args.seed):
        optima = team_optima(inst)
        for team in worker_sets(inst).teams:
            opt = optima[team].cycle_time
            got = [solve_serial(inst, team, r) for r in DEFAULT_PORTFOLIO]
            ok = [g is not None and g.cycle_time == opt for g in got]
            hits = [h + o for h, o in zip(hits, ok)]
            best += any(ok)
            total += 1
    for r, h in zip(DEFAULT_PORTFOLIO, hits):
        print(f"{describe(r):60s} {h}/{total}")
    print(f"{'portfolio':60s} {best}/{total}")


if __name__ == "__main__":
    main()
