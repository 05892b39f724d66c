"""Main-theorem and KL residuals over the seeded sweep, grouped by regularizer, tau and gamma.

    python scripts/run_sweep.py --reg entropy --instances 50
"""

import argparse
import time
from collections import defaultdict

from regmdp.identities import check_kl_corollary, check_main_theorem
from regmdp.regularizers import NegEntropy, SquaredNorm
from regmdp.solver import solve_optimal
from regmdp.sweep import SweepConfig, instances

REGS = {"entropy": NegEntropy, "l2": SquaredNorm}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reg", choices=sorted(REGS), default="entropy")
    ap.add_argument("--instances", type=int, default=50)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    cfg = SweepConfig(n_instances=args.instances, seed=args.seed)
    groups = defaultdict(lambda: {"n": 0, "main": 0.0, "kl": 0.0, "boundary": 0, "sweeps": 0})
    t0 = time.perf_counter()
    for inst in instances(cfg):
        for tau in cfg.taus:
            reg = REGS[args.reg](tau)
            opt = solve_optimal(inst.mdp, reg)
            g = groups[(tau, inst.mdp.discount)]
            g["boundary"] += not opt.interior_flags.all()
            g["sweeps"] += opt.iterations
            for pi in inst.policies:
                g["n"] += 1
                g["main"] = max(g["main"], abs(check_main_theorem(inst.mdp, reg, pi, 1e-7, opt).residual))
                if args.reg == "entropy":
                    g["kl"] = max(g["kl"], abs(check_kl_corollary(inst.mdp, tau, pi, 1e-7, opt).residual))

    print(f"{'tau':>6} {'gamma':>6} {'checks':>7} {'max|main|':>10} {'max|kl|':>10} {'boundary':>9} {'sweeps':>8}")
    for (tau, gamma), g in sorted(groups.items()):
        kl = f"{g['kl']:.2e}" if args.reg == "entropy" else "-"
        print(f"{tau:>6g} {gamma:>6g} {g['n']:>7} {g['main']:>10.2e} {kl:>10} {g['boundary']:>9} {g['sweeps']:>8}")
    print(f"elapsed {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
