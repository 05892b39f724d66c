"""Strictly convex regularizers on the probability simplex.

Every regularizer here is separable, ``Omega(p) = tau * sum_a phi(p_a)`` with
``phi`` strictly convex on [0, inf). All functions accept a single probability
row of shape ``(A,)`` or a table of rows ``(S, A)`` and act along the last axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp, rel_entr, xlogy

from .errors import DomainError, NumericalBreakdown

RELINT_EPS = 1e-9
SIMPLEX_TOL = 1e-9
BISECTION_TOL = 1e-12
_MAX_BISECTION = 400


@dataclass(frozen=True)
class Regularizer:
    tau: float

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"regularization strength must be positive and finite, got {self.tau!r}")

    name = "regularizer"

    # per-coordinate pieces; Omega = tau * sum(phi)
    def phi(self, x):
        raise NotImplementedError

    def dphi(self, x):
        raise NotImplementedError

    def dphi_inv(self, y):
        """Inverse of ``dphi``, only called for ``y > dphi(0)``."""
        raise NotImplementedError

    @property
    def dphi_at_zero(self) -> float:
        return float(self.dphi(np.zeros(1))[0])

    def divergence_terms(self, x, y):
        """Coordinate-wise Bregman terms, ``tau * (phi(x) - phi(y) - phi'(y) (x - y))``."""
        return self.tau * (self.phi(x) - self.phi(y) - self.dphi(y) * (x - y))

    def spec(self) -> str:
        return f"{self.name}:{self.tau!r}"


@dataclass(frozen=True)
class NegEntropy(Regularizer):
    """``Omega(p) = tau * sum p log p`` (0 log 0 = 0), i.e. minus tau times Shannon entropy."""

    name = "entropy"

    def phi(self, x):
        return xlogy(x, x)

    def dphi(self, x):
        with np.errstate(divide="ignore"):
            return np.log(x) + 1.0

    def dphi_inv(self, y):
        return np.exp(y - 1.0)

    def divergence_terms(self, x, y):
        return self.tau * (rel_entr(x, y) - x + y)

    @property
    def dphi_at_zero(self) -> float:
        return -math.inf


@dataclass(frozen=True)
class SquaredNorm(Regularizer):
    """``Omega(p) = (tau / 2) * ||p||^2``."""

    name = "l2"

    def phi(self, x):
        return 0.5 * np.square(x)

    def dphi(self, x):
        return np.asarray(x, dtype=float)

    def dphi_inv(self, y):
        return y

    def divergence_terms(self, x, y):
        return 0.5 * self.tau * np.square(np.asarray(x) - np.asarray(y))

    @property
    def dphi_at_zero(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Separable(Regularizer):
    """User-supplied ``phi`` with its derivative and the derivative's inverse.

    ``phi`` must be strictly convex and C^1 on (0, inf) with ``dphi`` strictly
    increasing; ``dphi_zero`` is ``dphi(0)`` (may be ``-inf``).
    """

    phi_fn: Callable = None
    dphi_fn: Callable = None
    dphi_inv_fn: Callable = None
    dphi_zero: float = 0.0
    label: str = "separable"

    @property
    def name(self):
        return self.label

    def phi(self, x):
        return self.phi_fn(np.asarray(x, dtype=float))

    def dphi(self, x):
        return self.dphi_fn(np.asarray(x, dtype=float))

    def dphi_inv(self, y):
        return self.dphi_inv_fn(np.asarray(y, dtype=float))

    @property
    def dphi_at_zero(self) -> float:
        return self.dphi_zero


def power(tau: float, p: float) -> Separable:
    """``phi(x) = x^p / (p (p - 1))`` for ``p > 1``; ``p = 2`` is the squared norm."""
    if not p > 1:
        raise ValueError("power regularizer needs p > 1")
    k = p - 1.0
    return Separable(
        tau,
        phi_fn=lambda x: np.power(x, p) / (p * k),
        dphi_fn=lambda x: np.power(x, k) / k,
        dphi_inv_fn=lambda y: np.power(k * y, 1.0 / k),
        dphi_zero=0.0,
        label=f"power{p:g}",
    )


def parse_regularizer(text: str) -> Regularizer:
    """Parse ``entropy:TAU`` or ``l2:TAU``."""
    kinds = {"entropy": NegEntropy, "l2": SquaredNorm}
    kind, sep, tau = text.partition(":")
    if kind not in kinds:
        raise ValueError(f"malformed regularizer token {kind!r} in {text!r} (expected 'entropy' or 'l2')")
    if not sep:
        raise ValueError(f"malformed regularizer {text!r}: missing ':TAU'")
    try:
        value = float(tau)
    except ValueError:
        raise ValueError(f"malformed regularizer token {tau!r} in {text!r}: not a number") from None
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"malformed regularizer token {tau!r} in {text!r}: strength must be positive")
    return kinds[kind](value)


def _as_simplex(pi, what="pi") -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if pi.ndim not in (1, 2) or pi.shape[-1] == 0:
        raise DomainError(f"{what} must be a probability row or table, got shape {pi.shape}")
    if not np.all(np.isfinite(pi)) or np.any(pi < 0) or np.any(np.abs(pi.sum(axis=-1) - 1.0) > SIMPLEX_TOL):
        raise DomainError(f"{what} is not in the probability simplex")
    return pi


def omega(reg: Regularizer, pi) -> np.ndarray | float:
    """Regularizer value per row."""
    pi = _as_simplex(pi)
    out = reg.tau * np.sum(reg.phi(pi), axis=-1)
    return float(out) if out.ndim == 0 else out


def grad_omega(reg: Regularizer, pi) -> np.ndarray:
    pi = _as_simplex(pi)
    if isinstance(reg, NegEntropy) and np.any(pi <= 0):
        raise DomainError("entropy gradient is undefined on the simplex boundary")
    g = reg.tau * reg.dphi(pi)
    if not np.all(np.isfinite(g)):
        raise DomainError("regularizer gradient is not finite at this point")
    return g


def bregman(reg: Regularizer, pi, pi_prime) -> np.ndarray | float:
    """``Omega(pi) - Omega(pi') - grad Omega(pi') . (pi - pi')`` per row."""
    pi = _as_simplex(pi)
    g = grad_omega(reg, pi_prime)
    pi_prime = np.asarray(pi_prime, dtype=float)
    if pi.shape != pi_prime.shape:
        raise DomainError(f"shape mismatch {pi.shape} vs {pi_prime.shape}")
    out = omega(reg, pi) - omega(reg, pi_prime) - np.sum(g * (pi - pi_prime), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def kl_divergence(p, q) -> np.ndarray | float:
    """``sum_a p_a log(p_a / q_a)`` per row with 0 log 0 = 0."""
    out = np.sum(rel_entr(np.asarray(p, float), np.asarray(q, float)), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def is_relint(pi, epsilon: float = RELINT_EPS):
    """True where every entry of the row exceeds ``epsilon``."""
    out = np.min(np.asarray(pi, dtype=float), axis=-1) > epsilon
    return bool(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SimplexMaxResult:
    """Solution of ``max_{p in simplex} <q, p> - Omega(p)`` (row-wise).

    ``multiplier`` is the simplex-constraint dual ``nu`` in
    ``p_a = max(dphi^{-1}((q_a - nu) / tau), 0)``.
    """

    argmax: np.ndarray
    value: np.ndarray | float
    interior: np.ndarray | bool
    multiplier: np.ndarray | float


def _entropy_max(reg: NegEntropy, q: np.ndarray):
    z = q / reg.tau
    lse = logsumexp(z, axis=-1)  # max-shifted internally
    p = np.exp(z - lse[..., None])
    value = reg.tau * lse
    return p, value, value - reg.tau


def _bisection_max(reg: Regularizer, q: np.ndarray, bracket=None):
    tau = reg.tau
    n = q.shape[-1]
    d0 = reg.dphi_at_zero

    def primal(nu):
        y = (q - nu[:, None]) / tau
        on = y > d0
        return np.where(on, reg.dphi_inv(np.where(on, y, d0 + 1.0)), 0.0)

    top = q.max(axis=-1)
    d1 = float(reg.dphi(np.ones(1))[0])
    dn = float(reg.dphi(np.full(1, 1.0 / n))[0])
    lo = top - tau * d1
    hi = top - tau * dn
    if bracket is not None:
        # a caller-supplied bracket is only trusted where it is verified
        wlo, whi = np.broadcast_to(bracket[0], lo.shape), np.broadcast_to(bracket[1], hi.shape)
        ok = (primal(wlo).sum(axis=-1) >= 1.0) & (primal(whi).sum(axis=-1) <= 1.0) & (wlo <= whi)
        lo = np.where(ok, np.maximum(lo, wlo), lo)
        hi = np.where(ok, np.minimum(hi, whi), hi)
    f_lo = primal(lo).sum(axis=-1) - 1.0
    f_hi = primal(hi).sum(axis=-1) - 1.0
    if np.any(f_lo < -BISECTION_TOL) or np.any(f_hi > BISECTION_TOL):
        raise NumericalBreakdown("multiplier bisection is not bracketed; regularizer violates the separable contract")

    nu = 0.5 * (lo + hi)
    for _ in range(_MAX_BISECTION):
        s = primal(nu).sum(axis=-1) - 1.0
        if np.all(np.abs(s) <= BISECTION_TOL):
            break
        pos = s > 0
        lo = np.where(pos, nu, lo)
        hi = np.where(pos, hi, nu)
        nu = 0.5 * (lo + hi)
    else:
        raise NumericalBreakdown(f"multiplier bisection stalled with |sum - 1| = {np.abs(s).max():.3g}")
    p = primal(nu)
    p /= p.sum(axis=-1, keepdims=True)
    value = np.sum(q * p, axis=-1) - tau * np.sum(reg.phi(p), axis=-1)
    return p, value, nu


def simplex_max(reg: Regularizer, q, relint_eps: float = RELINT_EPS, bracket=None) -> SimplexMaxResult:
    """Maximize ``<q, p> - Omega(p)`` over the simplex, independently per row.

    Negative entropy uses softmax / log-sum-exp; every other separable
    regularizer solves for the simplex multiplier by bisection. ``bracket``
    is an optional ``(lo, hi)`` warm start for the multiplier; it is checked
    before use and ignored on the entropy path.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim not in (1, 2) or q.shape[-1] == 0:
        raise ValueError(f"q must be a row or a table of rows, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise DomainError("q must be finite")
    single = q.ndim == 1
    q2 = np.atleast_2d(q)
    if isinstance(reg, NegEntropy):
        p, value, nu = _entropy_max(reg, q2)
    else:
        p, value, nu = _bisection_max(reg, q2, bracket)
    interior = np.min(p, axis=-1) > relint_eps
    if single:
        return SimplexMaxResult(p[0], float(value[0]), bool(interior[0]), float(nu[0]))
    return SimplexMaxResult(p, value, interior, nu)
