"""Oracle replay of random traces under every reallocator mode and epsilon.

Prints one line per (seed, mode, eps) cell and a summary; exits 2 on any violation.
"""

import argparse
import sys
import time
from fractions import Fraction

from costrealloc.harness import RunConfig, generate, run

MODES = ("amortized", "checkpointed", "deamortized")
EPSILONS = (Fraction(1, 16), Fraction(1, 8), Fraction(1, 4), Fraction(1, 2))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--traces", type=int, default=100)
    p.add_argument("--ops", type=int, default=10_000)
    p.add_argument("--max-size", type=int, default=1024)
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--out", help="also append lines to this file")
    args = p.parse_args(argv)
    out = open(args.out, "a") if args.out else None
    t0 = time.perf_counter()
    bad = cells = 0
    for seed in range(args.first_seed, args.first_seed + args.traces):
        trace = generate("uniform-random", {"n": args.ops, "max_size": args.max_size}, seed=seed)
        for mode in MODES:
            for eps in EPSILONS:
                rep = run(trace, RunConfig(mode, eps, models=("linear:1",), validate=True))
                cells += 1
                bad += len(rep.violations)
                line = (f"seed={seed} mode={mode} eps={eps} violations={len(rep.violations)} "
                        f"c_boundary={float(rep.c_boundary):.3f} c_transient={float(rep.c_transient):.3f} "
                        f"log={float(rep.max_log_fraction):.3f} wall={rep.wall_time:.1f}")
                for v in rep.violations[:3]:
                    line += f"\n  {v.line()}"
                print(line, flush=True)
                if out:
                    out.write(line + "\n")
                    out.flush()
    summary = f"cells={cells} violations={bad} wall={time.perf_counter() - t0:.0f}s"
    print(summary)
    if out:
        out.write(summary + "\n")
    return 2 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
