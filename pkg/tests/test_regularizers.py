import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from oracles import grid_simplex_max_2, neg_entropy, project_simplex_sort, squared_norm, tangent_fd_error
from regmdp.errors import DomainError
from regmdp.regularizers import (
    NegEntropy,
    SquaredNorm,
    bregman,
    grad_omega,
    is_relint,
    kl_divergence,
    omega,
    parse_regularizer,
    power,
    simplex_max,
)

REGS = [NegEntropy(1.0), NegEntropy(0.05), SquaredNorm(1.0), SquaredNorm(3.0), power(0.7, 1.5), power(2.0, 3.0)]
E = math.e


def interior_points(rng, n, A, floor=1e-3):
    p = rng.dirichlet(np.ones(A), size=n)
    p = floor + (1 - A * floor) * p
    return p


# --- values ----------------------------------------------------------------

def test_entropy_uniform():
    assert omega(NegEntropy(1.0), [0.5, 0.5]) == pytest.approx(-math.log(2), abs=1e-15)


def test_entropy_vertex_is_zero():
    assert omega(NegEntropy(1.0), [1.0, 0.0]) == 0.0


def test_squared_norm_value():
    assert omega(SquaredNorm(2.0), [0.5, 0.5]) == pytest.approx(0.5, abs=1e-15)


def test_omega_rejects_non_simplex():
    with pytest.raises(DomainError):
        omega(NegEntropy(1.0), [0.7, 0.7])
    with pytest.raises(DomainError):
        omega(SquaredNorm(1.0), [1.2, -0.2])


def test_omega_row_wise():
    rows = np.array([[0.5, 0.5], [1.0, 0.0]])
    np.testing.assert_allclose(omega(NegEntropy(1.0), rows), [-math.log(2), 0.0], atol=1e-15)


def test_tau_must_be_positive():
    with pytest.raises(ValueError):
        NegEntropy(0.0)
    with pytest.raises(ValueError):
        SquaredNorm(-1.0)


# --- gradients -------------------------------------------------------------

def test_entropy_gradient_uniform():
    np.testing.assert_allclose(grad_omega(NegEntropy(1.0), [0.5, 0.5]), [1 - math.log(2)] * 2, atol=1e-15)


def test_squared_norm_gradient_identity():
    np.testing.assert_allclose(grad_omega(SquaredNorm(1.0), [0.3, 0.7]), [0.3, 0.7], atol=0)


def test_entropy_gradient_boundary_is_domain_error():
    with pytest.raises(DomainError):
        grad_omega(NegEntropy(1.0), [1.0, 0.0])


@pytest.mark.parametrize("reg", REGS, ids=lambda r: f"{r.name}-{r.tau}")
def test_gradient_matches_finite_differences(reg, rng):
    for p in interior_points(rng, 30, 4):
        assert tangent_fd_error(lambda x: omega(reg, x), grad_omega(reg, p), p) <= 1e-5


# --- Bregman ---------------------------------------------------------------

@pytest.mark.parametrize("reg", REGS, ids=lambda r: f"{r.name}-{r.tau}")
def test_bregman_self_is_zero(reg, rng):
    p = interior_points(rng, 1, 5)[0]
    assert abs(bregman(reg, p, p)) <= 1e-15


def test_bregman_entropy_vertex_vs_uniform():
    # direct evaluation: 0 - (-log 2) - (1 - log 2) * 0 = log 2
    d = bregman(NegEntropy(1.0), [1.0, 0.0], [0.5, 0.5])
    assert d == pytest.approx(math.log(2), abs=1e-15)
    assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)


def test_bregman_squared_norm_closed_form():
    assert bregman(SquaredNorm(1.0), [1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("reg", REGS, ids=lambda r: f"{r.name}-{r.tau}")
def test_bregman_nonnegative(reg, rng):
    a = rng.dirichlet(np.ones(4), size=1000)
    b = interior_points(rng, 1000, 4, floor=1e-6)
    assert np.min(bregman(reg, a, b)) >= -1e-12


def test_bregman_entropy_is_scaled_kl(rng):
    a = rng.dirichlet(np.ones(5), size=200)
    b = interior_points(rng, 200, 5, floor=1e-8)
    for tau in (0.05, 1.0, 7.0):
        got = bregman(NegEntropy(tau), a, b)
        ref = tau * np.sum(a * np.log(a / b), axis=1)
        assert np.max(np.abs(got - ref)) <= 1e-12


def test_bregman_squared_norm_is_half_distance(rng):
    a = rng.dirichlet(np.ones(3), size=100)
    b = rng.dirichlet(np.ones(3), size=100)
    np.testing.assert_allclose(bregman(SquaredNorm(2.0), a, b), np.sum((a - b) ** 2, axis=1), atol=1e-14)


# --- simplex maximization --------------------------------------------------

def test_entropy_max_symmetric():
    res = simplex_max(NegEntropy(1.0), [0.0, 0.0])
    np.testing.assert_allclose(res.argmax, [0.5, 0.5], atol=1e-15)
    assert res.value == pytest.approx(math.log(2), abs=1e-15)
    assert res.interior


def test_entropy_max_closed_form_and_grid():
    res = simplex_max(NegEntropy(1.0), [1.0, 0.0])
    np.testing.assert_allclose(res.argmax, [E / (1 + E), 1 / (1 + E)], atol=1e-15)
    assert res.value == pytest.approx(math.log(1 + E), abs=1e-15)
    p_grid, v_grid = grid_simplex_max_2([1.0, 0.0], lambda p: neg_entropy(p, 1.0))
    assert np.max(np.abs(p_grid - res.argmax)) <= 1e-4
    assert v_grid <= res.value + 1e-12
    assert res.value - v_grid <= 1e-7


def test_squared_norm_max_on_boundary():
    res = simplex_max(SquaredNorm(1.0), [10.0, 0.0])
    np.testing.assert_allclose(res.argmax, [1.0, 0.0], atol=1e-12)
    assert not res.interior
    assert res.value == pytest.approx(9.5, abs=1e-10)  # 10 - 1/2
    p_grid, v_grid = grid_simplex_max_2([10.0, 0.0], lambda p: squared_norm(p, 1.0))
    np.testing.assert_allclose(p_grid, [1.0, 0.0], atol=1e-4)
    assert v_grid == pytest.approx(res.value, abs=1e-10)


def test_squared_norm_max_matches_sort_projection(rng):
    for _ in range(200):
        A = int(rng.integers(2, 8))
        tau = float(rng.uniform(0.1, 5))
        q = rng.normal(scale=3, size=A)
        res = simplex_max(SquaredNorm(tau), q)
        np.testing.assert_allclose(res.argmax, project_simplex_sort(q / tau), atol=1e-11)


@pytest.mark.parametrize("reg", REGS, ids=lambda r: f"{r.name}-{r.tau}")
def test_simplex_max_dominates_random_feasible(reg, rng):
    for _ in range(5):
        q = rng.normal(scale=2, size=4)
        res = simplex_max(reg, q)
        assert abs(res.argmax.sum() - 1) <= 1e-12 and np.all(res.argmax >= 0)
        assert res.value == pytest.approx(q @ res.argmax - omega(reg, res.argmax), abs=1e-10)
        others = rng.dirichlet(np.ones(4), size=1000)
        assert np.all(res.value >= others @ q - omega(reg, others) - 1e-10)


@given(hnp.arrays(np.float64, st.integers(1, 6), elements=st.floats(-50, 50)), st.floats(-100, 100), st.sampled_from([0.05, 0.5, 5.0]))
def test_entropy_shift_covariance(q, c, tau):
    reg = NegEntropy(tau)
    a, b = simplex_max(reg, q), simplex_max(reg, q + c)
    assert np.max(np.abs(a.argmax - b.argmax)) <= 1e-12
    assert abs((b.value - a.value) - c) <= 1e-12


def test_entropy_max_large_ratio_is_stable():
    res = simplex_max(NegEntropy(1e-3), [1.0, 0.0, 0.5])
    assert np.all(np.isfinite(res.argmax))
    assert res.value == pytest.approx(1.0, abs=1e-12)


def test_simplex_max_table_rows(rng):
    q = rng.normal(size=(6, 3))
    res = simplex_max(SquaredNorm(0.4), q)
    for s in range(6):
        one = simplex_max(SquaredNorm(0.4), q[s])
        np.testing.assert_allclose(res.argmax[s], one.argmax, atol=1e-15)
        assert res.interior[s] == one.interior


def test_single_action():
    res = simplex_max(SquaredNorm(1.0), [3.0])
    np.testing.assert_allclose(res.argmax, [1.0])
    assert res.value == pytest.approx(2.5)


# --- relint and parsing ----------------------------------------------------

def test_is_relint():
    assert is_relint([0.5, 0.5], 1e-9)
    assert not is_relint([1.0, 0.0], 1e-9)
    assert not is_relint([1 - 1e-12, 1e-12], 1e-9)


def test_parse_regularizer():
    assert parse_regularizer("entropy:0.1") == NegEntropy(0.1)
    assert parse_regularizer("l2:2") == SquaredNorm(2.0)
    with pytest.raises(ValueError, match="'huber'"):
        parse_regularizer("huber:1")
    with pytest.raises(ValueError, match="'abc'"):
        parse_regularizer("l2:abc")
    with pytest.raises(ValueError):
        parse_regularizer("entropy")
