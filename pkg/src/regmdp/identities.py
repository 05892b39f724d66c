"""Two-sided numerical checks of the regularized-MDP identities.

Each ``check_*`` function evaluates both sides of one identity on a concrete
instance and returns a :class:`VerificationReport`. Conditions quantified over
every policy in the simplex are reduced to its vertices, which is exact
because the conditions are linear in the policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .mdp import Mdp, Policy, induced_transition, random_policy, stationary_distribution
from .regularizers import (
    RELINT_EPS,
    NegEntropy,
    Regularizer,
    bregman,
    grad_omega,
    kl_divergence,
    omega,
    simplex_max,
)
from .solver import ValueSolution, evaluate_policy, solve_optimal

DEFAULT_TOL = 1e-7
KL_CROSS_CHECK_TOL = 1e-12

IDENTITIES = ("pdl", "basic_lemma", "normal_cone", "relint_lemma", "main_theorem", "kl_corollary")


@dataclass(frozen=True)
class VerificationReport:
    """Both sides of one identity on one instance.

    ``passed`` is ``|lhs - rhs| <= tolerance`` for equalities and
    ``lhs <= rhs + tolerance`` for inequalities. For the main theorem
    ``equality`` and ``inequality_holds`` record what was observed and
    ``passed`` additionally requires equality when every optimal row is interior.
    """

    identity: str
    lhs: float
    rhs: float
    residual: float
    tolerance: float
    passed: bool
    per_state: list | None = None
    equality: bool | None = None
    inequality_holds: bool | None = None

    def to_dict(self) -> dict:
        d = {
            "identity": self.identity,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }
        if self.equality is not None:
            d["equality"] = self.equality
        if self.inequality_holds is not None:
            d["inequality_holds"] = self.inequality_holds
        d["per_state"] = self.per_state
        return d


def _equality(identity, lhs, rhs, tol, per_state=None) -> VerificationReport:
    lhs, rhs = float(lhs), float(rhs)
    return VerificationReport(identity, lhs, rhs, lhs - rhs, tol, bool(abs(lhs - rhs) <= tol), per_state)


def check_basic_lemma(m: Mdp, pi: Policy, x, tol: float = DEFAULT_TOL) -> VerificationReport:
    """``mu_pi^T (I - gamma P_pi) x == (1 - gamma) rho^T x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (m.n_states,) or not np.all(np.isfinite(x)):
        raise ValueError(f"x must be a finite vector of length {m.n_states}")
    mu = stationary_distribution(m, pi)
    p_pi = induced_transition(m, pi)
    lhs = mu @ (x - m.discount * (p_pi @ x))
    rhs = (1.0 - m.discount) * (m.initial_dist @ x)
    return _equality("basic_lemma", lhs, rhs, tol)


def check_pdl(m: Mdp, reg: Regularizer, pi: Policy, pi_prime: Policy, tol: float = DEFAULT_TOL) -> VerificationReport:
    """Regularized performance difference between ``pi`` and ``pi_prime``.

    lhs = (1 - gamma) rho . (V_pi - V_pi'), rhs = mu_pi . (q_(pi, pi') - V_pi' - Omega_pi)
    with q_(pi, pi')[s] = sum_a pi(s, a) Q_pi'(s, a).
    """
    ev = evaluate_policy(m, reg, pi)
    ev_prime = evaluate_policy(m, reg, pi_prime)
    mu = stationary_distribution(m, pi)
    cross_q = np.sum(pi.probs * ev_prime.q, axis=1)
    advantage = cross_q - ev_prime.v - omega(reg, pi.probs)
    lhs = (1.0 - m.discount) * (m.initial_dist @ (ev.v - ev_prime.v))
    rhs = mu @ advantage
    per_state = [{"state": s, "mu": mu[s], "advantage": advantage[s]} for s in range(m.n_states)]
    return _equality("pdl", lhs, rhs, tol, per_state)


@dataclass(frozen=True)
class NormalConeCertificate:
    """First-order optimality certificate ``y = q - grad Omega(pi*)`` per row.

    ``y`` lies in the normal cone of the simplex at ``pi*`` iff
    ``max_a y_a <= y . pi*``. ``spread`` is the largest per-row standard
    deviation of ``y`` over rows whose ``pi*`` is interior (``None`` if there
    are none); interior optimality forces ``y`` to be constant there.
    """

    y: np.ndarray
    max_violation: float
    member: bool
    interior: np.ndarray
    spread: float | None
    constant: bool | None


def check_normal_cone(reg: Regularizer, q, pi_star, tol: float = 1e-8, relint_eps: float = RELINT_EPS) -> NormalConeCertificate:
    q = np.asarray(q, dtype=float)
    pi_star = np.asarray(pi_star, dtype=float)
    if q.shape != pi_star.shape:
        raise ValueError(f"shape mismatch {q.shape} vs {pi_star.shape}")
    y = np.atleast_2d(q - grad_omega(reg, pi_star))
    p = np.atleast_2d(pi_star)
    violation = float(np.max(y.max(axis=1) - np.sum(y * p, axis=1)))
    interior = p.min(axis=1) > relint_eps
    spread = float(np.max(np.std(y[interior], axis=1))) if interior.any() else None
    return NormalConeCertificate(
        y=y if q.ndim == 2 else y[0],
        max_violation=violation,
        member=violation <= tol,
        interior=interior,
        spread=spread,
        constant=None if spread is None else spread <= tol,
    )


def normal_cone_report(m: Mdp, reg: Regularizer, optimal: ValueSolution, tol: float = 1e-8) -> VerificationReport:
    """Certificate over all states of a solved instance, as a report.

    Passes when every row is in the normal cone and every interior row has a
    constant certificate.
    """
    cert = check_normal_cone(reg, optimal.q, optimal.policy.probs, tol)
    per_state = [
        {
            "state": s,
            "violation": float(cert.y[s].max() - cert.y[s] @ optimal.policy.probs[s]),
            "stdev": float(np.std(cert.y[s])),
            "interior": bool(cert.interior[s]),
        }
        for s in range(m.n_states)
    ]
    passed = cert.member and cert.constant is not False
    return VerificationReport("normal_cone", cert.max_violation, 0.0, cert.max_violation, tol, passed, per_state)


def check_relint_lemma(reg: Regularizer, q_row, tol: float = DEFAULT_TOL, relint_eps: float = RELINT_EPS) -> VerificationReport:
    """For interior ``pi*``, ``y . (pi - pi*) == 0`` on every simplex vertex ``pi``."""
    res = simplex_max(reg, q_row, relint_eps)
    if np.ndim(res.argmax) != 1:
        raise ValueError("check_relint_lemma takes a single row of q")
    if not res.interior:
        raise PreconditionError("optimal row is on the simplex boundary; the relative-interior lemma does not apply")
    y = np.asarray(q_row, dtype=float) - grad_omega(reg, res.argmax)
    gaps = y - y @ res.argmax  # y . (e_a - pi*)
    worst = float(np.max(np.abs(gaps)))
    return _equality("relint_lemma", worst, 0.0, tol, [{"vertex": a, "gap": gaps[a]} for a in range(len(gaps))])


def check_main_theorem(
    m: Mdp,
    reg: Regularizer,
    pi: Policy,
    tol: float = DEFAULT_TOL,
    optimal: ValueSolution | None = None,
) -> VerificationReport:
    """``E_mu_pi D(pi, pi*) <= (1 - gamma) E_rho (V* - V_pi)``, with equality if pi* is interior.

    ``optimal`` may be passed to reuse one solve across many policies.
    """
    if optimal is None:
        optimal = solve_optimal(m, reg)
    ev = evaluate_policy(m, reg, pi)
    mu = stationary_distribution(m, pi)
    div = bregman(reg, pi.probs, optimal.policy.probs)
    lhs = float(mu @ div)
    rhs = float((1.0 - m.discount) * (m.initial_dist @ (optimal.v - ev.v)))
    all_interior = bool(np.all(optimal.interior_flags))
    equality = abs(lhs - rhs) <= tol
    inequality = lhs <= rhs + tol
    per_state = [
        {"state": s, "mu": mu[s], "bregman": div[s], "interior": bool(optimal.interior_flags[s])}
        for s in range(m.n_states)
    ]
    return VerificationReport(
        "main_theorem",
        lhs,
        rhs,
        lhs - rhs,
        tol,
        bool(inequality and (equality or not all_interior)),
        per_state,
        equality=bool(equality),
        inequality_holds=bool(inequality),
    )


def check_kl_corollary(
    m: Mdp,
    tau: float,
    pi: Policy,
    tol: float = DEFAULT_TOL,
    optimal: ValueSolution | None = None,
) -> VerificationReport:
    """``E_mu_pi KL(pi || pi*) == ((1 - gamma) / tau) E_rho (V* - V_pi)`` for Omega = -tau H.

    Also requires the entropy Bregman divergence divided by ``tau`` to agree
    with the direct KL sum within 1e-12 in every state.
    """
    reg = NegEntropy(tau)
    if optimal is None:
        optimal = solve_optimal(m, reg)
    ev = evaluate_policy(m, reg, pi)
    mu = stationary_distribution(m, pi)
    kl = kl_divergence(pi.probs, optimal.policy.probs)
    via_bregman = bregman(reg, pi.probs, optimal.policy.probs) / tau
    cross = float(np.max(np.abs(via_bregman - kl)))
    lhs = float(mu @ kl)
    rhs = float((1.0 - m.discount) / tau * (m.initial_dist @ (optimal.v - ev.v)))
    per_state = [{"state": s, "mu": mu[s], "kl": kl[s], "bregman_over_tau": via_bregman[s]} for s in range(m.n_states)]
    rep = _equality("kl_corollary", lhs, rhs, tol, per_state)
    if cross > KL_CROSS_CHECK_TOL:
        rep = VerificationReport(rep.identity, rep.lhs, rep.rhs, rep.residual, tol, False, per_state)
    return rep


def verify_instance(
    m: Mdp,
    reg: Regularizer,
    rng: np.random.Generator,
    identities=IDENTITIES,
    tol: float = DEFAULT_TOL,
    normal_cone_tol: float = 1e-8,
    policy: Policy | None = None,
) -> list[VerificationReport]:
    """Run the selected identity checks on one instance.

    Random policies (and the test vector of the basic lemma) are drawn from
    ``rng`` unless ``policy`` is given. The relative-interior lemma is applied
    to every state whose optimal row is interior; ``kl_corollary`` requires a
    negative-entropy regularizer.
    """
    S, A = m.n_states, m.n_actions
    pi = policy if policy is not None else random_policy(S, A, rng)
    pi_prime = random_policy(S, A, rng)
    x = rng.standard_normal(S)
    need_opt = {"normal_cone", "relint_lemma", "main_theorem", "kl_corollary"} & set(identities)
    optimal = solve_optimal(m, reg) if need_opt else None
    out = []
    for name in identities:
        if name == "pdl":
            out.append(check_pdl(m, reg, pi, pi_prime, tol))
        elif name == "basic_lemma":
            out.append(check_basic_lemma(m, pi, x, tol))
        elif name == "normal_cone":
            out.append(normal_cone_report(m, reg, optimal, normal_cone_tol))
        elif name == "relint_lemma":
            rows = [s for s in range(S) if optimal.interior_flags[s]]
            reps = [check_relint_lemma(reg, optimal.q[s], tol) for s in rows]
            worst = max((r.lhs for r in reps), default=0.0)
            per_state = [{"state": s, "gap": r.lhs} for s, r in zip(rows, reps)]
            # boundary rows are outside the lemma's hypothesis and are listed, not failed
            per_state += [{"state": s, "skipped": "boundary"} for s in range(S) if not optimal.interior_flags[s]]
            out.append(_equality("relint_lemma", worst, 0.0, tol, per_state))
        elif name == "main_theorem":
            out.append(check_main_theorem(m, reg, pi, tol, optimal))
        elif name == "kl_corollary":
            if not isinstance(reg, NegEntropy):
                raise ValueError("kl_corollary requires an entropy regularizer")
            out.append(check_kl_corollary(m, reg.tau, pi, tol, optimal))
        else:
            raise ValueError(f"unknown identity {name!r}")
    return out
