"""Command-line front end: ``generate``, ``solve``, ``evaluate``, ``verify``.

Exit codes: 0 success, 1 a verification check failed, 2 usage or input error,
3 numerical breakdown.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import textio
from .errors import ConvergenceError, MdpFormatError, NumericalBreakdown, PreconditionError, ValidationError
from .identities import IDENTITIES, verify_instance
from .mdp import load_mdp, load_policy, mdp_to_dict, random_mdp, save_mdp
from .regularizers import parse_regularizer
from .solver import evaluate_policy, solve_optimal

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

SELECTORS = {
    "pdl": "pdl",
    "basic": "basic_lemma",
    "normalcone": "normal_cone",
    "relint": "relint_lemma",
    "main": "main_theorem",
    "kl": "kl_corollary",
}


class UsageError(ValueError):
    pass


def parse_seeds(text: str) -> list[int]:
    """``A..B`` (inclusive), ``A,B,C`` or a single integer."""
    try:
        if ".." in text:
            a, b = text.split("..")
            lo, hi = int(a), int(b)
            if hi < lo:
                raise UsageError(f"empty seed range {text!r}")
            return list(range(lo, hi + 1))
        return [int(t) for t in text.split(",")]
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"malformed seed list {text!r}") from None


def parse_sizes(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        n, m = (int(p) for p in parts)
    except ValueError:
        raise UsageError(f"malformed sizes {text!r}, expected NxM") from None
    if n < 1 or m < 1:
        raise UsageError(f"sizes must be positive, got {text!r}")
    return n, m


def parse_identities(text: str, regularizer_spec: str | None) -> tuple[str, ...]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    entropy = regularizer_spec is not None and regularizer_spec.startswith("entropy")
    if "all" in names:
        return tuple(i for i in IDENTITIES if entropy or i != "kl_corollary")
    out = []
    for t in names:
        if t not in SELECTORS:
            raise UsageError(f"unknown identity {t!r} (choose from {', '.join([*SELECTORS, 'all'])})")
        if t == "kl" and not entropy:
            raise UsageError("identity 'kl' needs an entropy regularizer (--reg entropy:TAU)")
        out.append(SELECTORS[t])
    if not out:
        raise UsageError("no identity selected")
    return tuple(dict.fromkeys(out))


@dataclass
class RunConfig:
    command: str
    mdp_path: str | None = None
    policy_path: str | None = None
    regularizer_spec: str | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    gamma: float = 0.9
    sizes: tuple[int, int] = (5, 3)
    tolerance: float | None = None
    identity_selector: tuple[str, ...] = IDENTITIES
    output_path: str | None = None

    def validate(self):
        if self.command in ("solve", "evaluate", "verify") and not self.regularizer_spec:
            raise UsageError(f"{self.command} requires --reg")
        if self.command == "evaluate" and not (self.mdp_path and self.policy_path):
            raise UsageError("evaluate requires --mdp and --policy")
        if self.command == "generate" and len(self.seeds) > 1 and not self.output_path:
            raise UsageError("generate with several seeds requires --out DIR")
        if not (0.0 <= self.gamma < 1.0):
            raise UsageError(f"--gamma must be in [0, 1), got {self.gamma!r}")
        if self.tolerance is not None and not self.tolerance > 0:
            raise UsageError("--tol must be positive")

    @classmethod
    def from_args(cls, ns) -> "RunConfig":
        cfg = cls(
            command=ns.command,
            mdp_path=ns.mdp,
            policy_path=ns.policy,
            regularizer_spec=ns.reg,
            seeds=parse_seeds(ns.seeds) if ns.seeds else [0],
            gamma=ns.gamma,
            sizes=parse_sizes(ns.sizes) if ns.sizes else (5, 3),
            tolerance=ns.tol,
            output_path=ns.out,
        )
        if ns.command == "verify":
            cfg.identity_selector = parse_identities(ns.identity, ns.reg)
        cfg.validate()
        return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mdp", metavar="PATH")
    common.add_argument("--policy", metavar="PATH")
    common.add_argument("--reg", metavar="SPEC", help="entropy:TAU or l2:TAU")
    common.add_argument("--seeds", metavar="A..B|A,B,C")
    common.add_argument("--sizes", metavar="NxM")
    common.add_argument("--gamma", type=float, default=0.9)
    common.add_argument("--tol", type=float)
    common.add_argument("--identity", default="all", metavar="NAME[,NAME...]")
    common.add_argument("--out", metavar="PATH")

    parser = argparse.ArgumentParser(prog="regmdp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write seeded random MDP files")
    sub.add_parser("solve", parents=[common], help="regularized optimal values and policy")
    sub.add_parser("evaluate", parents=[common], help="regularized values of a given policy")
    sub.add_parser("verify", parents=[common], help="check the identities on seeded instances")
    return parser


def _emit(doc, path):
    if path:
        textio.dump(doc, path)
    else:
        sys.stdout.write(textio.dumps(doc))


def _instance(cfg: RunConfig, seed: int):
    if cfg.mdp_path:
        return load_mdp(cfg.mdp_path)
    n, m = cfg.sizes
    return random_mdp(n, m, cfg.gamma, seed)


def cmd_generate(cfg: RunConfig) -> int:
    n, m = cfg.sizes
    if len(cfg.seeds) == 1:
        mdp = random_mdp(n, m, cfg.gamma, cfg.seeds[0])
        if cfg.output_path:
            save_mdp(mdp, cfg.output_path)
        else:
            sys.stdout.write(textio.dumps(mdp_to_dict(mdp)))
        return EXIT_OK
    os.makedirs(cfg.output_path, exist_ok=True)
    for seed in cfg.seeds:
        save_mdp(random_mdp(n, m, cfg.gamma, seed), os.path.join(cfg.output_path, f"mdp_seed{seed}.json"))
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    reg = parse_regularizer(cfg.regularizer_spec)
    mdp = _instance(cfg, cfg.seeds[0])
    sol = solve_optimal(mdp, reg, tol=cfg.tolerance or 1e-10)
    _emit({"command": "solve", "regularizer": cfg.regularizer_spec, **sol.to_dict()}, cfg.output_path)
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig) -> int:
    reg = parse_regularizer(cfg.regularizer_spec)
    mdp = load_mdp(cfg.mdp_path)
    pi = load_policy(cfg.policy_path, mdp)
    sol = evaluate_policy(mdp, reg, pi)
    _emit({"command": "evaluate", "regularizer": cfg.regularizer_spec, **sol.to_dict()}, cfg.output_path)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    reg = parse_regularizer(cfg.regularizer_spec)
    tol = cfg.tolerance or 1e-7
    policy = None
    entries = []
    for seed in cfg.seeds:
        mdp = _instance(cfg, seed)
        if cfg.policy_path:
            policy = load_policy(cfg.policy_path, mdp)
        # policies and test vectors use a stream separate from the instance's
        rng = np.random.default_rng([seed, 1])
        for rep in verify_instance(mdp, reg, rng, cfg.identity_selector, tol=tol, policy=policy):
            entries.append({"seed": seed, **rep.to_dict()})
    entries.sort(key=lambda e: (e["seed"], e["identity"]))
    n_failed = sum(not e["passed"] for e in entries)
    doc = {
        "command": "verify",
        "regularizer": cfg.regularizer_spec,
        "tolerance": tol,
        "identities": list(cfg.identity_selector),
        "seeds": cfg.seeds,
        "n_entries": len(entries),
        "n_passed": len(entries) - n_failed,
        "all_passed": n_failed == 0,
        "entries": entries,
    }
    _emit(doc, cfg.output_path)
    if n_failed:
        failed = sorted({e["identity"] for e in entries if not e["passed"]})
        print(f"regmdp verify: {n_failed} of {len(entries)} checks failed ({', '.join(failed)})", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "evaluate": cmd_evaluate, "verify": cmd_verify}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = RunConfig.from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, MdpFormatError, ValidationError, PreconditionError, ValueError) as exc:
        print(f"regmdp {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalBreakdown, ConvergenceError) as exc:
        print(f"regmdp {ns.command}: numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"regmdp {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())
