"""Regularized policy evaluation and value iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, NumericalBreakdown, ShapeError
from .mdp import Mdp, Policy, induced_transition
from .regularizers import RELINT_EPS, Regularizer, is_relint, omega, simplex_max

DEFAULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ValueSolution:
    """Q and V tables for a policy (evaluation) or for the regularized optimum.

    ``residual`` is the final sup-norm Bellman residual; ``diffs`` holds the
    successive sup-norm changes of V over the increment-form sweeps of a
    value-iteration run (empty for direct evaluation).
    """

    q: np.ndarray
    v: np.ndarray
    policy: Policy
    iterations: int
    residual: float
    interior_flags: np.ndarray
    diffs: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "v": self.v,
            "policy": self.policy.probs,
            "iterations": self.iterations,
            "residual": self.residual,
            "interior_flags": [bool(b) for b in self.interior_flags],
        }


def q_from_v(m: Mdp, v: np.ndarray) -> np.ndarray:
    """One backup ``r + gamma P v``."""
    return m.reward + m.discount * (m.transition @ v)


def evaluate_policy(m: Mdp, reg: Regularizer, pi: Policy) -> ValueSolution:
    """Exact regularized values of ``pi`` by solving ``(I - gamma P_pi) V = r_pi - Omega_pi``."""
    p_pi = induced_transition(m, pi)
    r_pi = np.sum(pi.probs * m.reward, axis=1)
    om_pi = omega(reg, pi.probs)
    b = r_pi - om_pi
    lhs = np.eye(m.n_states) - m.discount * p_pi
    try:
        v = np.linalg.solve(lhs, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown(f"policy evaluation solve failed (cond ~ {np.linalg.cond(lhs):.3g})") from exc
    if not np.all(np.isfinite(v)):
        raise NumericalBreakdown("policy evaluation produced non-finite values")
    residual = float(np.max(np.abs(v - (b + m.discount * p_pi @ v))))
    return ValueSolution(
        q=q_from_v(m, v),
        v=v,
        policy=pi,
        iterations=1,
        residual=residual,
        interior_flags=np.asarray(is_relint(pi.probs), dtype=bool).reshape(m.n_states),
    )


def bellman_operator(m: Mdp, reg: Regularizer, v: np.ndarray):
    """Apply the regularized optimality operator; returns ``(Tv, q, simplex result)``."""
    q = q_from_v(m, v)
    res = simplex_max(reg, q)
    return res.value, q, res


def bellman_residual(m: Mdp, reg: Regularizer, sol: ValueSolution) -> float:
    """Sup-norm of ``V - T V``."""
    v = np.asarray(sol.v, dtype=float)
    if v.shape != (m.n_states,):
        raise ShapeError(f"value vector shape {v.shape} does not match MDP with {m.n_states} states")
    tv, _, _ = bellman_operator(m, reg, v)
    return float(np.max(np.abs(v - tv)))


def _regularizer_span(reg: Regularizer, n_actions: int) -> float:
    # |Omega| is maximized at a vertex or at the uniform point for separable phi
    vertex = np.eye(n_actions)[0]
    uniform = np.full(n_actions, 1.0 / n_actions)
    return max(abs(omega(reg, vertex)), abs(omega(reg, uniform)))


def default_max_iter(m: Mdp, reg: Regularizer, tol: float) -> int:
    g = m.discount
    if g == 0.0:
        return 65
    scale = float(np.max(np.abs(m.reward))) + _regularizer_span(reg, m.n_actions)
    scale = max(scale, tol)
    if not math.isfinite(scale / (1.0 - g)):
        raise NumericalBreakdown(f"value bound overflows: max|r| + span(Omega) = {scale:.3g}, gamma = {g!r}")
    return math.ceil(math.log(2.0 * scale / ((1.0 - g) * tol)) / math.log(1.0 / g)) + 64


def _increment(reg: Regularizer, q: np.ndarray, dq: np.ndarray, old, new) -> np.ndarray:
    """``value(q + dq) - value(q)`` per state without cancellation against ``|V|``.

    Uses ``<dq, p'> - D(p', p) - <lam, p'>`` where ``lam`` are the KKT
    multipliers of the nonnegativity constraints at ``q``. The subtracted
    term is known to lie in ``[0, <dq, p' - p>]``, so it is clamped there.
    """
    p, p2 = old.argmax, new.argmax
    d0 = reg.dphi_at_zero
    penalty = np.sum(reg.divergence_terms(p2, p), axis=1)
    if np.isfinite(d0):
        lam = np.maximum(reg.tau * d0 + old.multiplier[:, None] - q, 0.0)
        penalty = penalty + np.sum(lam * p2, axis=1)
    upper = np.maximum(np.sum(dq * (p2 - p), axis=1), 0.0)
    penalty = np.clip(np.nan_to_num(penalty, nan=np.inf), 0.0, upper)
    return np.sum(dq * p2, axis=1) - penalty


def solve_optimal(
    m: Mdp,
    reg: Regularizer,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    relint_eps: float = RELINT_EPS,
) -> ValueSolution:
    """Value iteration ``V <- max_p <p, r + gamma P V> - Omega(p)`` from ``V = 0``.

    Sweeps are carried in increment form: each sweep computes
    ``T V_k - T V_{k-1}`` from the change in Q instead of subtracting two
    large value vectors, so the recorded ``diffs`` keep full relative
    precision down to ``tol``. Stops once the sup-norm change of V is at most
    ``tol``. The returned Q is a fresh backup of the returned V and the policy
    is the per-state maximizer for that Q.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter is None:
        max_iter = default_max_iter(m, reg, tol)
    v = np.zeros(m.n_states)
    q = q_from_v(m, v)
    res = simplex_max(reg, q)
    delta = res.value - v
    diffs = []
    for it in range(1, max_iter + 1):
        diff = float(np.max(np.abs(delta)))
        if not math.isfinite(diff):
            raise NumericalBreakdown(f"value iteration produced a non-finite update at sweep {it}")
        diffs.append(diff)
        v = v + delta
        if diff <= tol:
            break
        dq = m.discount * (m.transition @ delta)
        q_next = q + dq
        # the multiplier is monotone and shift-covariant in q
        slack = 1e-9 * reg.tau + 1e-12 * np.abs(res.multiplier)
        bracket = (res.multiplier + dq.min(axis=1) - slack, res.multiplier + dq.max(axis=1) + slack)
        res_next = simplex_max(reg, q_next, relint_eps, bracket=bracket)
        delta = _increment(reg, q, dq, res, res_next)
        q, res = q_next, res_next
    else:
        raise ConvergenceError(
            f"value iteration did not reach tol={tol:g} in {max_iter} sweeps (last change {diffs[-1]:.3g})",
            residual=diffs[-1],
            iterations=max_iter,
        )
    # re-anchor on plain sweeps: accumulated increments drift by a few ulps of |V|
    tv, q, res = bellman_operator(m, reg, v)
    residual = float(np.max(np.abs(tv - v)))
    while residual > tol and it < max_iter:
        it += 1
        v = tv
        tv, q, res = bellman_operator(m, reg, v)
        residual = float(np.max(np.abs(tv - v)))
    if residual > tol:
        raise ConvergenceError(
            f"value iteration residual {residual:.3g} above tol={tol:g} after {it} sweeps",
            residual=residual,
            iterations=it,
        )
    return ValueSolution(
        q=q,
        v=v,
        policy=Policy(res.argmax),
        iterations=it,
        residual=residual,
        interior_flags=np.min(res.argmax, axis=1) > relint_eps,
        diffs=tuple(diffs),
    )
