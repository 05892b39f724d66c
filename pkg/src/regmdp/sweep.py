"""Seeded instance sweeps shared by the acceptance suite and the scripts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .mdp import Mdp, Policy, random_mdp, random_policy


@dataclass(frozen=True)
class SweepConfig:
    """Instance ``i`` gets sizes from ``default_rng([i, seed])`` and ``gammas[i % len(gammas)]``.

    Every instance is paired with every ``tau``. The last of the
    ``n_policies`` test policies is deterministic (one-hot).
    """

    n_instances: int = 50
    min_states: int = 2
    max_states: int = 10
    min_actions: int = 2
    max_actions: int = 5
    gammas: tuple = (0.5, 0.9, 0.99)
    taus: tuple = (0.05, 0.5, 5.0)
    n_policies: int = 5
    seed: int = 7

    def __post_init__(self):
        if self.n_instances < 1 or self.n_policies < 1:
            raise ValueError("need at least one instance and one policy")
        if not (1 <= self.min_states <= self.max_states and 1 <= self.min_actions <= self.max_actions):
            raise ValueError("size bounds out of order")
        if not all(0.0 <= g < 1.0 for g in self.gammas):
            raise ValueError(f"discounts must lie in [0, 1), got {self.gammas}")


@dataclass(frozen=True)
class SweepInstance:
    index: int
    mdp: Mdp
    policies: tuple


def instances(cfg: SweepConfig = SweepConfig()) -> Iterator[SweepInstance]:
    for i in range(cfg.n_instances):
        rng = np.random.default_rng([i, cfg.seed])
        S = int(rng.integers(cfg.min_states, cfg.max_states + 1))
        A = int(rng.integers(cfg.min_actions, cfg.max_actions + 1))
        gamma = cfg.gammas[i % len(cfg.gammas)]
        m = random_mdp(S, A, gamma, int(rng.integers(2**31)))
        pols = [random_policy(S, A, rng) for _ in range(cfg.n_policies - 1)]
        pols.append(Policy.deterministic(rng.integers(A, size=S), A))
        yield SweepInstance(i, m, tuple(pols))
