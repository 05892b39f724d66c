"""Finite discounted MDPs, policies, induced chains and discounted occupancies."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import textio
from .errors import MdpFormatError, NumericalBreakdown, ShapeError, ValidationError

STOCHASTIC_TOL = 1e-12


def _frozen(x) -> np.ndarray:
    a = np.array(x, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mdp:
    """Tabular MDP ``(P, r, rho, gamma)``.

    ``transition[s, a, s2]`` is P(s2 | s, a), ``reward[s, a]`` is r(s, a).
    Arrays are copied and made read-only on construction. No validation is
    done here; see :func:`validate_mdp`.
    """

    transition: np.ndarray
    reward: np.ndarray
    initial_dist: np.ndarray
    discount: float

    def __post_init__(self):
        object.__setattr__(self, "transition", _frozen(self.transition))
        object.__setattr__(self, "reward", _frozen(self.reward))
        object.__setattr__(self, "initial_dist", _frozen(self.initial_dist))
        object.__setattr__(self, "discount", float(self.discount))
        if self.transition.ndim != 3 or self.reward.ndim != 2 or self.initial_dist.ndim != 1:
            raise ShapeError("expected transition[S,A,S], reward[S,A], initial_dist[S]")
        S, A = self.reward.shape
        if self.transition.shape != (S, A, S) or self.initial_dist.shape != (S,):
            raise ShapeError(
                f"inconsistent shapes: transition {self.transition.shape}, "
                f"reward {self.reward.shape}, initial_dist {self.initial_dist.shape}"
            )

    @property
    def n_states(self) -> int:
        return self.reward.shape[0]

    @property
    def n_actions(self) -> int:
        return self.reward.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Mdp):
            return NotImplemented
        return (
            self.discount == other.discount
            and np.array_equal(self.transition, other.transition)
            and np.array_equal(self.reward, other.reward)
            and np.array_equal(self.initial_dist, other.initial_dist)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Policy:
    """Stochastic policy, ``probs[s, a]`` = pi(a | s)."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(self.probs))
        if self.probs.ndim != 2:
            raise ShapeError(f"policy table must be 2-D, got shape {self.probs.shape}")

    @property
    def shape(self):
        return self.probs.shape

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "Policy":
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))

    @classmethod
    def deterministic(cls, actions, n_actions: int) -> "Policy":
        actions = np.asarray(actions, dtype=int)
        return cls(np.eye(n_actions)[actions])

    def __eq__(self, other):
        if not isinstance(other, Policy):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    __hash__ = None


@dataclass(frozen=True)
class Violation:
    kind: str
    index: tuple = ()
    residual: float = 0.0
    message: str = ""


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def raise_if_invalid(self):
        if not self.ok:
            raise ValidationError(self)


def _check_rows(table: np.ndarray, name: str, tol: float) -> list[Violation]:
    out = []
    if not np.all(np.isfinite(table)):
        for idx in zip(*np.nonzero(~np.isfinite(table))):
            idx = tuple(int(i) for i in idx)
            out.append(Violation("non_finite", idx, math.nan, f"{name}{list(idx)} is not finite"))
        return out
    for idx in zip(*np.nonzero(table < 0)):
        idx = tuple(int(i) for i in idx)
        v = float(table[idx])
        out.append(Violation("negative_probability", idx, -v, f"{name}{list(idx)} = {v!r} is negative"))
    sums = np.atleast_1d(table.sum(axis=-1))
    dev = np.abs(sums - 1.0)
    for idx in zip(*np.nonzero(dev > tol)):
        idx = tuple(int(i) for i in idx) if table.ndim > 1 else ()
        r = float(dev[idx or 0])
        out.append(Violation("row_sum", idx, r, f"{name}{list(idx)} sums to {float(sums[idx or 0])!r} (residual {r:.3g})"))
    return out


def validate_mdp(m: Mdp, tol: float = STOCHASTIC_TOL) -> ValidationResult:
    """Check every MDP invariant and return all violations found (never raises)."""
    v: list[Violation] = []
    v += _check_rows(m.transition, "transition", tol)
    v += _check_rows(m.initial_dist, "initial_dist", tol)
    if not (0.0 <= m.discount < 1.0):
        v.append(Violation("discount", (), m.discount, f"discount out of range: {m.discount!r} not in [0, 1)"))
    if not np.all(np.isfinite(m.reward)):
        for idx in zip(*np.nonzero(~np.isfinite(m.reward))):
            idx = tuple(int(i) for i in idx)
            v.append(Violation("non_finite", idx, math.nan, f"reward{list(idx)} is not finite"))
    return ValidationResult(tuple(v))


def validate_policy(pi: Policy, m: Mdp | None = None, tol: float = STOCHASTIC_TOL) -> ValidationResult:
    v = _check_rows(pi.probs, "policy", tol)
    if m is not None and pi.shape != (m.n_states, m.n_actions):
        v.append(Violation("shape", (), math.nan, f"policy shape {pi.shape} != ({m.n_states}, {m.n_actions})"))
    return ValidationResult(tuple(v))


def _check_shapes(m: Mdp, pi: Policy):
    if pi.shape != (m.n_states, m.n_actions):
        raise ShapeError(f"policy shape {pi.shape} does not match MDP ({m.n_states}, {m.n_actions})")


def induced_transition(m: Mdp, pi: Policy) -> np.ndarray:
    """State-to-state matrix ``P_pi[s, s2] = sum_a pi(s, a) P(s2 | s, a)``."""
    _check_shapes(m, pi)
    return np.einsum("sa,sat->st", pi.probs, m.transition)


def stationary_distribution(m: Mdp, pi: Policy) -> np.ndarray:
    """Discounted state occupancy of ``pi`` started from ``rho``.

    Solves ``(I - gamma P_pi^T) mu = (1 - gamma) rho`` with a dense LU
    factorisation.
    """
    p_pi = induced_transition(m, pi)
    g = m.discount
    lhs = np.eye(m.n_states) - g * p_pi.T
    try:
        mu = np.linalg.solve(lhs, (1.0 - g) * m.initial_dist)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown(f"occupancy solve failed (cond ~ {np.linalg.cond(lhs):.3g})") from exc
    if not np.all(np.isfinite(mu)):
        raise NumericalBreakdown(f"occupancy solve produced non-finite values (cond ~ {np.linalg.cond(lhs):.3g})")
    return mu


def random_mdp(n_states: int, n_actions: int, gamma: float, seed: int) -> Mdp:
    """Seeded instance with flat-Dirichlet kernels and initial law, U[0, 1] rewards."""
    if n_states < 1 or n_actions < 1:
        raise ValueError(f"need n_states >= 1 and n_actions >= 1, got {n_states}, {n_actions}")
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"discount out of range: {gamma!r} not in [0, 1)")
    rng = np.random.default_rng(seed)
    # flat Dirichlet == normalized i.i.d. exponentials
    p = rng.exponential(size=(n_states, n_actions, n_states))
    p /= p.sum(axis=-1, keepdims=True)
    r = rng.uniform(0.0, 1.0, size=(n_states, n_actions))
    rho = rng.exponential(size=n_states)
    rho /= rho.sum()
    return Mdp(p, r, rho, gamma)


def random_policy(n_states: int, n_actions: int, rng: np.random.Generator) -> Policy:
    e = rng.exponential(size=(n_states, n_actions))
    return Policy(e / e.sum(axis=1, keepdims=True))


def boundary_mdp(n_states: int, n_actions: int, gamma: float, spread: float, seed: int = 0) -> Mdp:
    """Instance whose optimal action-value gap is exactly ``spread`` in every state.

    Action 0 earns ``spread`` and the others earn 0, and the next-state law
    does not depend on the action, so Q(s, 0) - Q(s, a) = spread for a != 0.
    With the squared-norm regularizer of strength ``tau`` and ``spread >= tau``
    the regularized optimum is the vertex e_0 in every state.
    """
    if n_actions < 2:
        raise ValueError("need at least two actions for a boundary optimum")
    base = random_mdp(n_states, 1, gamma, seed)
    p = np.repeat(base.transition, n_actions, axis=1)
    r = np.zeros((n_states, n_actions))
    r[:, 0] = spread
    return Mdp(p, r, base.initial_dist, gamma)


# --- file format -----------------------------------------------------------

_MDP_FIELDS = ("n_states", "n_actions", "discount", "reward", "transition", "initial_dist")


def mdp_to_dict(m: Mdp) -> dict:
    return {
        "n_states": m.n_states,
        "n_actions": m.n_actions,
        "discount": m.discount,
        "reward": m.reward,
        "transition": m.transition,
        "initial_dist": m.initial_dist,
    }


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise MdpFormatError(f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _table(data, key, shape, path):
    try:
        a = np.array(data[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise MdpFormatError(f"{path}: field {key!r} is not a numeric array") from exc
    if a.shape != shape:
        raise MdpFormatError(f"{path}: field {key!r} has shape {a.shape}, expected {shape}")
    return a


def mdp_from_dict(data, path="<mdp>") -> Mdp:
    if not isinstance(data, dict):
        raise MdpFormatError(f"{path}: top level must be an object")
    for key in _MDP_FIELDS:
        if key not in data:
            raise MdpFormatError(f"{path}: missing field {key!r}")
    S, A = data["n_states"], data["n_actions"]
    for key, val in (("n_states", S), ("n_actions", A)):
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise MdpFormatError(f"{path}: field {key!r} must be a positive integer")
    if not isinstance(data["discount"], (int, float)) or isinstance(data["discount"], bool):
        raise MdpFormatError(f"{path}: field 'discount' must be a number")
    m = Mdp(
        transition=_table(data, "transition", (S, A, S), path),
        reward=_table(data, "reward", (S, A), path),
        initial_dist=_table(data, "initial_dist", (S,), path),
        discount=data["discount"],
    )
    validate_mdp(m).raise_if_invalid()
    return m


def load_mdp(path) -> Mdp:
    """Read and validate an MDP file; raises MdpFormatError or ValidationError."""
    return mdp_from_dict(_read_json(path), path)


def save_mdp(m: Mdp, path) -> None:
    textio.dump(mdp_to_dict(m), path)


def load_policy(path, m: Mdp | None = None) -> Policy:
    data = _read_json(path)
    if not isinstance(data, dict) or "probs" not in data:
        raise MdpFormatError(f"{path}: missing field 'probs'")
    try:
        pi = Policy(np.array(data["probs"], dtype=float))
    except (TypeError, ValueError) as exc:
        raise MdpFormatError(f"{path}: field 'probs' is not a numeric table") from exc
    validate_policy(pi, m).raise_if_invalid()
    return pi


def save_policy(pi: Policy, path) -> None:
    textio.dump({"probs": pi.probs}, path)
