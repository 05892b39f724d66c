import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import evaluate_fixed_point, grid_policy_search_2x2, grid_simplex_max_2, neg_entropy, squared_norm
from regmdp.errors import ConvergenceError
from regmdp.mdp import Mdp, Policy, random_mdp, random_policy
from regmdp.regularizers import NegEntropy, SquaredNorm, power, simplex_max
from regmdp.solver import ValueSolution, bellman_residual, evaluate_policy, solve_optimal

E = math.e


def test_evaluate_single_state_geometric():
    m = Mdp([[[1.0]]], [[1.0]], [1.0], 0.5)
    sol = evaluate_policy(m, NegEntropy(1.0), Policy.uniform(1, 1))
    assert sol.v[0] == pytest.approx(2.0, abs=1e-15)


def test_evaluate_gamma_zero_is_one_step(rng):
    m = random_mdp(4, 3, 0.0, 2)
    pi = random_policy(4, 3, rng)
    sol = evaluate_policy(m, NegEntropy(0.3), pi)
    expected = np.sum(pi.probs * m.reward, axis=1) - neg_entropy(pi.probs, 0.3)
    np.testing.assert_allclose(sol.v, expected, atol=1e-15)


@pytest.mark.parametrize("reg", [NegEntropy(0.2), SquaredNorm(1.0)], ids=["entropy", "l2"])
def test_evaluate_matches_iterated_backups(reg, rng):
    m = random_mdp(6, 3, 0.9, 5)
    pi = random_policy(6, 3, rng)
    om = (lambda p: neg_entropy(p, reg.tau)) if isinstance(reg, NegEntropy) else (lambda p: squared_norm(p, reg.tau))
    ref = evaluate_fixed_point(m.transition, m.reward, m.initial_dist, 0.9, pi.probs, om)
    sol = evaluate_policy(m, reg, pi)
    np.testing.assert_allclose(sol.v, ref, atol=1e-12)
    assert sol.residual <= 1e-11
    np.testing.assert_allclose(sol.q, m.reward + 0.9 * m.transition @ sol.v, atol=1e-14)


def test_solve_one_step_closed_form():
    m = Mdp([[[1.0], [1.0]]], [[1.0, 0.0]], [1.0], 0.0)
    sol = solve_optimal(m, NegEntropy(1.0))
    assert sol.v[0] == pytest.approx(math.log(1 + E), abs=1e-14)
    np.testing.assert_allclose(sol.policy.probs[0], [E / (1 + E), 1 / (1 + E)], atol=1e-15)
    p_grid, v_grid = grid_simplex_max_2([1.0, 0.0], lambda p: neg_entropy(p, 1.0))
    assert abs(v_grid - sol.v[0]) <= 1e-7
    assert np.max(np.abs(p_grid - sol.policy.probs[0])) <= 1e-4


def test_large_tau_equal_rewards_is_uniform():
    m = random_mdp(3, 4, 0.9, 1)
    m = Mdp(m.transition, np.ones((3, 4)), m.initial_dist, 0.9)
    for reg in (NegEntropy(100.0), SquaredNorm(100.0)):
        sol = solve_optimal(m, reg)
        np.testing.assert_allclose(sol.policy.probs, 0.25, atol=1e-3)


@pytest.mark.parametrize("seed", [0, 1])
def test_solve_matches_policy_grid_2x2(seed):
    m = random_mdp(2, 2, 0.9, seed)
    sol = solve_optimal(m, NegEntropy(0.5))
    j_grid, _ = grid_policy_search_2x2(m.transition, m.reward, m.initial_dist, 0.9, 0.5, step=0.005)
    assert abs(m.initial_dist @ sol.v - j_grid) <= 1e-2
    # the grid cannot beat the optimum
    assert j_grid <= m.initial_dist @ sol.v + 1e-9


def test_bellman_residual_exact_gamma_zero():
    m = random_mdp(3, 2, 0.0, 4)
    reg = NegEntropy(0.5)
    v = simplex_max(reg, m.reward).value
    sol = ValueSolution(m.reward, v, Policy.uniform(3, 2), 0, 0.0, np.ones(3, bool))
    assert bellman_residual(m, reg, sol) <= 1e-12


def test_bellman_residual_detects_perturbation():
    m = random_mdp(4, 3, 0.8, 9)
    reg = SquaredNorm(0.5)
    sol = solve_optimal(m, reg, tol=1e-12)
    delta = 1e-3
    v = sol.v.copy()
    v[2] += delta
    bumped = ValueSolution(sol.q, v, sol.policy, 0, 0.0, sol.interior_flags)
    assert bellman_residual(m, reg, bumped) >= (1 - 0.8) * delta - 1e-12


@pytest.mark.parametrize("reg", [NegEntropy(0.1), SquaredNorm(0.3), power(0.5, 1.5)], ids=lambda r: r.name)
@pytest.mark.parametrize("gamma", [0.0, 0.5, 0.9, 0.99])
def test_solver_postconditions(reg, gamma):
    m = random_mdp(5, 3, gamma, 21)
    sol = solve_optimal(m, reg, tol=1e-10)
    assert sol.residual <= 1e-10
    assert bellman_residual(m, reg, sol) <= 1e-10
    np.testing.assert_allclose(sol.q, m.reward + gamma * m.transition @ sol.v, atol=1e-14)
    res = simplex_max(reg, sol.q)
    np.testing.assert_allclose(sol.policy.probs, res.argmax, atol=0)
    assert np.max(np.abs(sol.v - res.value)) <= sol.residual
    np.testing.assert_array_equal(sol.interior_flags, res.interior)


def test_max_iter_exceeded():
    with pytest.raises(ConvergenceError) as info:
        solve_optimal(random_mdp(3, 2, 0.99, 0), NegEntropy(1.0), max_iter=10)
    assert info.value.residual > 1e-10


@given(st.integers(0, 2**31 - 1), st.sampled_from([0.5, 0.9, 0.99]), st.sampled_from(["entropy", "l2"]))
@settings(max_examples=50)
def test_value_iteration_contracts(seed, gamma, kind):
    rng = np.random.default_rng(seed)
    S, A = int(rng.integers(1, 9)), int(rng.integers(1, 5))
    reg = NegEntropy(0.2) if kind == "entropy" else SquaredNorm(0.4)
    d = np.array(solve_optimal(random_mdp(S, A, gamma, seed), reg).diffs)
    assert np.all(d[1:] <= (gamma + 1e-10) * d[:-1])


@pytest.mark.parametrize("gamma", [0.5, 0.9, 0.99])
def test_evaluating_optimal_policy_recovers_optimal_values(gamma):
    tol = 1e-10
    m = random_mdp(6, 4, gamma, 8)
    for reg in (NegEntropy(0.3), SquaredNorm(0.3)):
        sol = solve_optimal(m, reg, tol=tol)
        ev = evaluate_policy(m, reg, sol.policy)
        assert np.max(np.abs(ev.v - sol.v)) <= 10 * tol / (1 - gamma)


@pytest.mark.parametrize("gamma", [0.5, 0.9])
def test_reward_shift(gamma):
    m = random_mdp(5, 3, gamma, 13)
    c = 0.75
    shifted = Mdp(m.transition, m.reward + c, m.initial_dist, gamma)
    reg = NegEntropy(0.4)
    a, b = solve_optimal(m, reg, tol=1e-12), solve_optimal(shifted, reg, tol=1e-12)
    assert np.max(np.abs(b.v - a.v - c / (1 - gamma))) <= 1e-9
    assert np.max(np.abs(b.policy.probs - a.policy.probs)) <= 1e-9


@pytest.mark.parametrize("reg", [NegEntropy(0.25), SquaredNorm(0.25)], ids=["entropy", "l2"])
def test_optimal_dominates_random_policies(reg, rng):
    m = random_mdp(5, 3, 0.9, 17)
    j_star = m.initial_dist @ solve_optimal(m, reg).v
    for _ in range(100):
        pi = random_policy(5, 3, rng)
        assert j_star >= m.initial_dist @ evaluate_policy(m, reg, pi).v - 1e-9


def test_value_solution_serialises():
    sol = solve_optimal(random_mdp(2, 2, 0.5, 0), NegEntropy(1.0))
    d = sol.to_dict()
    assert set(d) == {"q", "v", "policy", "iterations", "residual", "interior_flags"}
    assert d["interior_flags"] == [True, True]
