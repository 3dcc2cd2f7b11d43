"""Write a directory of generated instances (random 20-task bases, time factor x infeasibility rate grid)."""
import argparse
from pathlib import Path

from palwabp.instance_io import GeneratorConfig, generate_instance, random_base, save_instance


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out")
    ap.add_argument("--bases", type=int, default=5)
    ap.add_argument("--tasks", type=int, default=20)
    ap.add_argument("--order-strength", type=float, default=0.2)
    ap.add_argument("--workers", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for b in range(args.bases):
        base = random_base(args.tasks, args.order_strength, args.seed * 1000 + b)
        for factor in (2, 5):
            for rate in (0.10, 0.20):
                cfg = GeneratorConfig(factor, rate, args.workers, args.seed * 1000 + b)
                save_instance(generate_instance(base, cfg), out / f"b{b:03d}_f{factor}_r{int(rate * 100)}.txt")
    print(f"wrote {args.bases * 4} instances to {out}")


if __name__ == "__main__":
    main()
