"""Baseline separations and the lower-bound trace.

Prints gap-classes b-ratio against lg(delta) on anti-gap traces, log-compact
cost per delete on anti-compact traces, and max single-op costs on lb-delta
traces, each next to the amortized allocator.
"""

import argparse
import math
from fractions import Fraction

from costrealloc.costmodel import parse_model
from costrealloc.harness import RunConfig, generate, run


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--eps", type=Fraction, default=Fraction(1, 4))
    args = p.parse_args(argv)

    print("# anti-gap, linear cost: delta lg(delta) gap-classes ours")
    for k in range(4, 13):
        trace = generate("anti-gap", {"delta": 2**k})
        g = run(trace, RunConfig("baseline:gap-classes", models=("linear:1",))).model("linear").b_ratio
        o = run(trace, RunConfig("amortized", args.eps, models=("linear:1",))).model("linear").b_ratio
        print(2**k, k, f"{float(g):.3f}", f"{float(o):.3f}")

    print("# anti-compact, constant cost: delta log-compact-per-delete ours-b-ratio")
    for d in (8, 16, 32, 64, 128):
        trace = generate("anti-compact", {"delta": d, "rounds": 10})
        deletes = sum(1 for op in trace.ops if op[0] == "D")
        lc = run(trace, RunConfig("baseline:log-compact", models=("constant:1",))).model("constant")
        o = run(trace, RunConfig("amortized", args.eps, models=("constant:1",))).model("constant")
        print(d, f"{float(lc.reallocation) / deletes:.2f}", f"{float(o.b_ratio):.3f}")

    print("# lb-delta: delta mode max-op-realloc/f(delta) [constant, linear] extent-ratio")
    for d in (64, 256, 1024):
        trace = generate("lb-delta", {"delta": d})
        for mode in ("amortized", "checkpointed", "deamortized", "baseline:log-compact", "baseline:first-fit"):
            rep = run(trace, RunConfig(mode, Fraction(1, 2), models=("constant:1", "linear:1"), validate=True))
            vals = []
            for spec in ("constant:1", "linear:1"):
                f = parse_model(spec).price
                costs = [c - (f(op[2]) if op[0] == "I" else 0) for c, op in zip(rep.model(spec).per_op, trace.ops)]
                vals.append(f"{max(costs) / f(d):.3f}")
            print(d, mode, vals, f"{float(rep.max_extent_ratio):.3f}")


if __name__ == "__main__":
    main()
