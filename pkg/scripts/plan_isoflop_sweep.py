"""Plan a compute-matched training sweep and print a summary table.

Emits one fully specified training configuration per (budget, width):
model shape from the width/depth rules, token budget from 6NT accounting,
power-of-two batch against the 2^16 step target, capped learning rate,
and the warmup-stable-decay schedule.

Run:  python scripts/plan_isoflop_sweep.py --budgets 1e18 1e19 1e20 -o plans.jsonl
"""

import argparse
import json
from pathlib import Path

from relscale import SweepPolicy, plan_sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--budgets", nargs="+", type=float,
                        default=[1e18, 3e18, 1e19, 3e19, 1e20])
    parser.add_argument("--policy", type=Path, default=None,
                        help="SweepPolicy JSON overrides")
    parser.add_argument("-o", "--output", type=Path, default=Path("plans.jsonl"))
    args = parser.parse_args()

    policy = SweepPolicy.from_file(args.policy) if args.policy else SweepPolicy()
    plans = plan_sweep(args.budgets, policy)

    header = f"{'budget':>10} {'d':>5} {'L':>4} {'heads':>5} {'params':>9} {'tokens':>10} {'B':>6} {'steps':>11} {'lr':>9}"
    print(header)
    print("-" * len(header))
    for plan in plans:
        shape = plan.shape
        print(
            f"{plan.budget:>10.1e} {shape.width:>5} {shape.depth:>4} "
            f"{shape.n_heads:>5} {shape.params:>9.2e} {plan.tokens:>10.2e} "
            f"{plan.batch:>6} {plan.steps:>11} {plan.lr:>9.2e}"
        )

    with open(args.output, "w") as fh:
        for plan in plans:
            fh.write(json.dumps(plan.to_dict(), sort_keys=True) + "\n")
    print(f"\n{len(plans)} plans -> {args.output}")


if __name__ == "__main__":
    main()
