"""Unit tests for the dense LP solver."""

import itertools

import numpy as np
import pytest

from iwdro.lpsolver import (
    LinearProgram,
    LpInputError,
    LpStatus,
    feasibility_gap,
    solve_lp,
)


def test_single_variable_bound():
    # minimize x subject to x >= 1
    prob = LinearProgram([1.0], lower_bounds=[1.0], upper_bounds=[np.inf])
    sol = solve_lp(prob)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.primal[0] == pytest.approx(1.0, abs=1e-9)
    assert sol.objective_value == pytest.approx(1.0, abs=1e-9)


def test_unbounded_direction():
    prob = LinearProgram([-1.0], lower_bounds=[0.0], upper_bounds=[np.inf])
    sol = solve_lp(prob)
    assert sol.status is LpStatus.UNBOUNDED


def _enumerate_transport_vertices(costs, supply, demand):
    """Brute-force optimum of a balanced transportation problem.

    Enumerates candidate basic solutions (choices of m+n-1 arcs), solves
    each square system, and keeps the feasible ones.
    """
    m, n = costs.shape
    arcs = list(itertools.product(range(m), range(n)))
    rows = []
    for (i, j) in arcs:
        row = np.zeros(m + n)
        row[i] = 1.0
        row[m + j] = 1.0
        rows.append(row)
    A = np.array(rows).T  # (m+n) x arcs incidence
    b = np.concatenate([supply, demand])
    best = np.inf
    for basis in itertools.combinations(range(len(arcs)), m + n - 1):
        B = A[:, basis]
        flow, *_ = np.linalg.lstsq(B, b, rcond=None)
        if np.abs(B @ flow - b).max() > 1e-9 or flow.min() < -1e-9:
            continue
        cost = sum(costs[arcs[k]] * f for k, f in zip(basis, flow))
        best = min(best, cost)
    return best


def test_two_by_two_transportation():
    costs = np.array([[0.0, 1.0], [1.0, 0.0]])
    supply = np.array([0.5, 0.5])
    demand = np.array([0.5, 0.5])
    expected = _enumerate_transport_vertices(costs, supply, demand)
    assert expected == pytest.approx(0.0, abs=1e-12)

    A_eq = np.array([
        [1.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 1.0],
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
    ])
    b_eq = np.array([0.5, 0.5, 0.5, 0.5])
    prob = LinearProgram(costs.ravel(), A_eq, b_eq)
    sol = solve_lp(prob)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective_value == pytest.approx(expected, abs=1e-9)


def _random_feasible_lp(rng, n_max=12):
    n = int(rng.integers(1, n_max + 1))
    m_eq = int(rng.integers(0, 3))
    m_ub = int(rng.integers(0, 6))
    A_eq = rng.standard_normal((m_eq, n))
    A_ub = rng.standard_normal((m_ub, n))
    lb = np.where(rng.random(n) < 0.3, -np.inf, rng.normal(-1.0, 1.0, n))
    width = np.abs(rng.normal(2.0, 1.0, n))
    ub = np.where(rng.random(n) < 0.3, np.inf,
                  np.where(np.isfinite(lb), lb, 0.0) + width)
    x0 = np.where(np.isfinite(lb), lb, 0.0) + rng.random(n) * np.minimum(
        np.where(np.isfinite(ub), ub, 3.0) - np.where(np.isfinite(lb), lb, 0.0), 3.0)
    b_eq = A_eq @ x0
    b_ub = A_ub @ x0 + rng.random(m_ub)
    c = rng.standard_normal(n)
    prob = LinearProgram(c, A_eq, b_eq, A_ub, b_ub, lb, ub)
    return prob, x0


def test_weak_duality_against_feasible_points():
    # the reported minimum never exceeds the objective at a feasible point
    rng = np.random.default_rng(42)
    checked = 0
    for _ in range(60):
        prob, x0 = _random_feasible_lp(rng)
        sol = solve_lp(prob)
        if sol.status is not LpStatus.OPTIMAL:
            assert sol.status is LpStatus.UNBOUNDED
            continue
        assert sol.objective_value <= prob.objective @ x0 + 1e-7
        checked += 1
    assert checked > 20


def test_deterministic_resolve():
    rng = np.random.default_rng(7)
    prob, _ = _random_feasible_lp(rng)
    a = solve_lp(prob)
    b = solve_lp(prob)
    assert a.status == b.status
    assert np.array_equal(a.primal, b.primal)
    assert a.objective_value == b.objective_value


def test_solution_refeasibility():
    rng = np.random.default_rng(11)
    for _ in range(40):
        prob, _ = _random_feasible_lp(rng)
        sol = solve_lp(prob)
        if sol.status is LpStatus.OPTIMAL:
            assert feasibility_gap(prob, sol.primal) <= 1e-7


def test_infeasible_detection():
    # x >= 1 and x <= 0 simultaneously
    prob = LinearProgram([1.0], ub_matrix=[[1.0], [-1.0]], ub_rhs=[0.0, -1.0],
                         lower_bounds=[-np.inf], upper_bounds=[np.inf])
    sol = solve_lp(prob)
    assert sol.status is LpStatus.INFEASIBLE


def test_dimension_mismatch_rejected():
    with pytest.raises(LpInputError):
        LinearProgram([1.0, 2.0], eq_matrix=[[1.0]], eq_rhs=[1.0])
    with pytest.raises(LpInputError):
        LinearProgram([1.0], eq_matrix=[[1.0]], eq_rhs=[1.0, 2.0])
    with pytest.raises(LpInputError):
        LinearProgram([1.0], lower_bounds=[2.0], upper_bounds=[1.0])


def test_degenerate_rhs_problem():
    # all-zero right-hand side apart from one normalization row; this
    # family stalls naive pivoting and must still solve quickly
    rng = np.random.default_rng(5)
    n = 30
    A_ub = np.zeros((n, n + 2))
    for i in range(n):
        A_ub[i, i] = 1.0
        A_ub[i, n] = -1.0
        A_ub[i, n + 1] = rng.standard_normal()
    A_eq = np.zeros((1, n + 2))
    A_eq[0, : n] = 1.0
    c = np.concatenate([rng.random(n), [0.5, 0.2]])
    prob = LinearProgram(c, A_eq, [1.0], A_ub, np.zeros(n),
                         np.full(n + 2, -np.inf), np.full(n + 2, np.inf))
    sol = solve_lp(prob)
    assert sol.status in (LpStatus.OPTIMAL, LpStatus.UNBOUNDED)
