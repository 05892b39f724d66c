"""Squared-norm regularizer on instances whose optimum sits on a simplex vertex.

Prints the main-theorem gap as the reward spread grows. Below tau the optimum
is interior and the two sides agree. At tau it reaches the vertex, and past
tau the inequality is strict.

    python scripts/boundary_exhibit.py --tau 1.0
"""

import argparse

import numpy as np

from regmdp.identities import check_main_theorem
from regmdp.mdp import Policy, boundary_mdp
from regmdp.regularizers import SquaredNorm
from regmdp.solver import solve_optimal


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tau", type=float, default=1.0)
    ap.add_argument("--states", type=int, default=4)
    ap.add_argument("--actions", type=int, default=3)
    ap.add_argument("--gamma", type=float, default=0.9)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    reg = SquaredNorm(args.tau)
    pi = Policy.uniform(args.states, args.actions)
    print(f"{'spread/tau':>10} {'min pi*':>10} {'interior':>9} {'lhs':>12} {'rhs':>12} {'rhs-lhs':>10} equality")
    for ratio in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0):
        m = boundary_mdp(args.states, args.actions, args.gamma, spread=ratio * args.tau, seed=args.seed)
        opt = solve_optimal(m, reg)
        rep = check_main_theorem(m, reg, pi, 1e-7, opt)
        print(
            f"{ratio:>10g} {np.min(opt.policy.probs):>10.3g} {str(bool(opt.interior_flags.all())):>9} "
            f"{rep.lhs:>12.6g} {rep.rhs:>12.6g} {rep.rhs - rep.lhs:>10.3g} {rep.equality}"
        )


if __name__ == "__main__":
    main()
