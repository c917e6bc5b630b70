"""Measure the space, cost and checkpoint constants over trace lengths and epsilons.

    python3 scripts/measure_constants.py --lengths 1000 10000 --eps 1/16 1/4
"""

import argparse
import math
from fractions import Fraction

from costrealloc.harness import RunConfig, generate, run

MODELS = ("constant:1", "linear:1", "sqrt:1", "seek:10,1")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--lengths", type=int, nargs="+", default=[1000, 10_000])
    p.add_argument("--eps", type=Fraction, nargs="+", default=[Fraction(1, 16), Fraction(1, 8), Fraction(1, 4), Fraction(1, 2)])
    p.add_argument("--modes", nargs="+", default=["amortized", "checkpointed", "deamortized"])
    p.add_argument("--kind", default="uniform-random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-validate", action="store_true", help="skip the oracle (no space ratios)")
    args = p.parse_args(argv)
    print("mode eps n c_boundary c_transient C_max C_per_model C'_flush C'_op log_frac wall")
    for n in args.lengths:
        trace = generate(args.kind, {"n": n}, seed=args.seed + n)
        for mode in args.modes:
            for eps in args.eps:
                rep = run(trace, RunConfig(mode, eps, models=MODELS, validate=not args.no_validate))
                ep = eps / 8
                norm = float(1 / ep) * math.log2(max(2, float(1 / ep)))
                cs = [float(m.b_ratio) / norm for m in rep.models]
                print(f"{mode} {eps} {n} {float(rep.c_boundary):.3f} {float(rep.c_transient):.3f} "
                      f"{max(cs):.3f} {','.join(f'{c:.3f}' for c in cs)} "
                      f"{float(rep.max_checkpoints_per_flush * ep):.3f} {float(rep.max_checkpoints_per_op * ep):.3f} "
                      f"{float(rep.max_log_fraction):.3f} {rep.wall_time:.1f}", flush=True)
                if rep.violations:
                    print(f"  violation: {rep.violations[0].line()}")


if __name__ == "__main__":
    main()
