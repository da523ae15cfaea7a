"""Largest certified delta per epsilon, for shadowing and the three periodic variants.

    python3 scripts/delta_table.py --system paper-example --level 3
    python3 scripts/delta_table.py --system odometer --level 4 --power 2
"""

import argparse
import sys

from zerodim.cli import build_system
from zerodim.shadowing import CERTIFIED, PERIODIC, PSEUDO, STRICT, check_periodic_shadowing, find_delta, positive_grid
from zerodim.space import format_scalar
from zerodim.systems import system_power


def largest_periodic_delta(sys_, eps, variant):
    # certified verdicts are monotone in delta, so bisect over the grid
    grid = [0] + positive_grid(sys_.model)
    lo, hi = -1, len(grid) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if check_periodic_shadowing(sys_, eps, grid[mid], variant).result == CERTIFIED:
            lo = mid
        else:
            hi = mid - 1
    return None if lo < 0 else grid[lo]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--system", default="paper-example",
                    choices=["odometer", "paper-example", "identity", "embed-binary-odometer"])
    ap.add_argument("--level", type=int, default=3)
    ap.add_argument("--atoms", type=int)
    ap.add_argument("--power", type=int, default=1)
    ap.add_argument("--rows", type=int, default=12, help="number of epsilon values shown")
    args = ap.parse_args()
    fam = build_system(args.system, args.level, atoms=args.atoms)
    if args.power != 1:
        fam = system_power(fam, args.power)
    f = fam.finest
    eps_values = [e for e in positive_grid(f.model) if e >= f.model.mesh]
    step = max(1, len(eps_values) // args.rows)
    fmt = lambda x: "-" if x is None else format_scalar(x)
    print(f"{args.system} level {args.level} power {args.power}: {f.n} atoms, mesh {fmt(f.model.mesh)}")
    print(f"{'eps':>10} {'shadowing':>10} {'pseudo':>10} {'periodic':>10} {'strict':>10}")
    for eps in eps_values[::step]:
        row = [find_delta(f, eps).delta] + [largest_periodic_delta(f, eps, v) for v in (PSEUDO, PERIODIC, STRICT)]
        print(f"{fmt(eps):>10} " + " ".join(f"{fmt(x):>10}" for x in row))
    return 0


if __name__ == "__main__":
    sys.exit(main())
