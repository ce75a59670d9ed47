"""Unit tests for the worst-case LP builders and the primal grid oracle."""

import numpy as np
import pytest

from iwdro.dro import (
    CostPiece,
    EmptyIntersectionError,
    PiecewiseLinearCost,
    Polyhedron,
    UnsupportedOrderError,
    build_iwdro_lp,
    oracle_grid,
    solve_iwdro,
    solve_iwdro_apx,
    solve_multi_ball,
    solve_single_ball,
    worst_case_grid_oracle,
)
from iwdro.estimators import mixture_estimate, mixture_radius, mixture_weight
from iwdro.lpsolver import solve_lp
from iwdro.wasserstein import (
    DiscreteDistribution,
    WassersteinBall,
    wasserstein_distance,
)


def random_cost(rng, d_y, n_pieces):
    pieces = []
    for _ in range(n_pieces):
        G = rng.normal(0.0, 1.0, (d_y, d_y))
        g = rng.normal(0.0, 1.0, d_y)
        q = rng.normal(0.0, 1.0, d_y)
        pieces.append(CostPiece(G, g, q, float(rng.normal())))
    return PiecewiseLinearCost(tuple(pieces))


def random_instance(rng, d_y=1, n_pieces=2, n_atoms=4, box=3.0):
    cost = random_cost(rng, d_y, n_pieces)
    dec = Polyhedron.box([-1.0] * d_y, [1.0] * d_y)
    Y = Polyhedron.box([-box] * d_y, [box] * d_y)
    c1 = DiscreteDistribution.uniform(rng.uniform(-0.8 * box, 0.8 * box,
                                                  (int(rng.integers(1, n_atoms + 1)), d_y)))
    c2 = DiscreteDistribution.uniform(rng.uniform(-0.8 * box, 0.8 * box,
                                                  (int(rng.integers(1, n_atoms + 1)), d_y)))
    W = wasserstein_distance(c1, c2, 1)
    s1 = rng.uniform(0.3, 0.7)
    scale = 1.0 + rng.uniform(0.05, 0.4)
    b1 = WassersteinBall(c1, s1 * scale * W + 0.05, 1)
    b2 = WassersteinBall(c2, (1 - s1) * scale * W + 0.05, 1)
    return cost, dec, Y, b1, b2


def test_point_cost_recovered_at_zero_radius():
    # both balls are the same dirac with radius 0: optimum is min_z c(z, y0)
    rng = np.random.default_rng(0)
    cost = random_cost(rng, 1, 2)
    dec = Polyhedron.box([-1.0], [1.0])
    Y = Polyhedron.box([-3.0], [3.0])
    y0 = 0.7
    ball = WassersteinBall(DiscreteDistribution.dirac(y0), 0.0, 1)
    sol = solve_iwdro(cost, dec, Y, ball, ball)
    zs = np.linspace(-1, 1, 4001)
    brute = min(cost.evaluate(np.array([z]), np.array([y0])) for z in zs)
    assert sol.worst_case_value == pytest.approx(brute, abs=1e-6)


def test_identical_balls_match_single_ball():
    rng = np.random.default_rng(1)
    for _ in range(6):
        cost, dec, Y, b1, _ = random_instance(rng)
        both = solve_iwdro(cost, dec, Y, b1, b1)
        single = solve_single_ball(cost, dec, Y, b1)
        assert both.worst_case_value == pytest.approx(single.worst_case_value,
                                                      abs=1e-7, rel=1e-7)


def test_huge_second_ball_is_inactive():
    rng = np.random.default_rng(2)
    for _ in range(6):
        cost, dec, Y, b1, b2 = random_instance(rng)
        loose = WassersteinBall(b2.center, 1e4, 1)
        both = solve_iwdro(cost, dec, Y, b1, loose)
        single = solve_single_ball(cost, dec, Y, b1)
        assert both.worst_case_value == pytest.approx(single.worst_case_value,
                                                      abs=1e-6, rel=1e-6)


def test_zero_radius_single_ball_is_saa():
    rng = np.random.default_rng(3)
    for _ in range(8):
        cost, dec, Y, b1, _ = random_instance(rng, n_atoms=5)
        ball = WassersteinBall(b1.center, 0.0, 1)
        sol = solve_single_ball(cost, dec, Y, ball)
        # the optimum cannot exceed the best point of a fine z grid, and
        # the value must equal the sample average at the returned decision
        zs = np.linspace(-1, 1, 2001)
        brute = min(cost.expected(np.array([z]), b1.center) for z in zs)
        assert sol.worst_case_value <= brute + 1e-9
        assert sol.worst_case_value >= brute - 2e-3
        saa_at_z = cost.expected(sol.decision, b1.center)
        assert sol.worst_case_value == pytest.approx(saa_at_z, abs=1e-8)


def test_value_nondecreasing_in_radius():
    rng = np.random.default_rng(4)
    for _ in range(5):
        cost, dec, Y, b1, _ = random_instance(rng)
        vals = [solve_single_ball(cost, dec, Y,
                                  WassersteinBall(b1.center, eps, 1)).worst_case_value
                for eps in (0.0, 0.1, 0.3, 0.8)]
        for lo, hi in zip(vals, vals[1:]):
            assert hi >= lo - 1e-7


def test_absolute_loss_worked_example():
    cost = PiecewiseLinearCost.absolute_loss()
    dec = Polyhedron.free(1)
    Y = Polyhedron.box([-2.0], [2.0])
    ball = WassersteinBall(DiscreteDistribution.dirac(0.0), 0.5, 1)
    sol = solve_single_ball(cost, dec, Y, ball)
    assert sol.decision[0] == pytest.approx(0.0, abs=1e-7)
    assert sol.worst_case_value == pytest.approx(0.5, abs=1e-7)
    grid = oracle_grid(cost, sol.decision, [ball], [-2.0], [2.0])
    assert worst_case_grid_oracle(sol.decision, cost, grid, [ball]) == \
        pytest.approx(0.5, abs=1e-6)


def test_multi_ball_specializations():
    rng = np.random.default_rng(5)
    for _ in range(4):
        cost, dec, Y, b1, b2 = random_instance(rng)
        one = solve_multi_ball(cost, dec, Y, [b1])
        single = solve_single_ball(cost, dec, Y, b1)
        assert one.worst_case_value == pytest.approx(single.worst_case_value,
                                                     abs=1e-7, rel=1e-7)
        two = solve_multi_ball(cost, dec, Y, [b1, b2])
        built = solve_lp(build_iwdro_lp(cost, dec, Y, b1, b2))
        assert two.worst_case_value == pytest.approx(built.objective_value,
                                                     abs=1e-7, rel=1e-7)


def test_three_identical_centers():
    rng = np.random.default_rng(6)
    cost, dec, Y, b1, _ = random_instance(rng)
    balls = [WassersteinBall(b1.center, 0.25, 1) for _ in range(3)]
    three = solve_multi_ball(cost, dec, Y, balls)
    single = solve_single_ball(cost, dec, Y, balls[0])
    assert three.worst_case_value == pytest.approx(single.worst_case_value,
                                                   abs=1e-7, rel=1e-7)


def test_free_support_matches_growing_boxes():
    # the compact R^d formulation is the wide-box limit of the generic one
    rng = np.random.default_rng(7)
    for _ in range(5):
        cost, dec, _, b1, b2 = random_instance(rng)
        free = solve_iwdro(cost, dec, None, b1, b2).worst_case_value
        gaps = []
        for box in (1e2, 1e4, 1e6):
            Y = Polyhedron.box([-box] * cost.d_y, [box] * cost.d_y)
            val = solve_iwdro(cost, dec, Y, b1, b2).worst_case_value
            gaps.append(free - val)
        assert all(g >= -1e-7 for g in gaps)
        assert gaps[-1] <= gaps[0] + 1e-9
        assert gaps[-1] <= max(1e-6, abs(free) * 1e-6)


def test_intersection_dominance():
    rng = np.random.default_rng(8)
    for _ in range(6):
        cost, dec, Y, b1, b2 = random_instance(rng)
        both = solve_iwdro(cost, dec, Y, b1, b2).worst_case_value
        s1 = solve_single_ball(cost, dec, Y, b1).worst_case_value
        s2 = solve_single_ball(cost, dec, Y, b2).worst_case_value
        assert both <= min(s1, s2) + 1e-7


def test_apx_dominates_intersection():
    rng = np.random.default_rng(9)
    for _ in range(6):
        cost, dec, Y, b1, b2 = random_instance(rng)
        iw = solve_iwdro(cost, dec, Y, b1, b2).worst_case_value
        for kappa in (0.0, 0.35, 1.0):
            apx = solve_iwdro_apx(cost, dec, Y, b1.center, b2.center, kappa,
                                  b1.radius, b2.radius)
            assert iw <= apx.worst_case_value + 1e-7


def test_apx_endpoints_match_single_balls():
    rng = np.random.default_rng(10)
    cost, dec, Y, b1, b2 = random_instance(rng)
    apx1 = solve_iwdro_apx(cost, dec, Y, b1.center, b2.center, 1.0,
                           b1.radius, b2.radius)
    s1 = solve_single_ball(cost, dec, Y, b1)
    assert apx1.worst_case_value == pytest.approx(s1.worst_case_value,
                                                  abs=1e-7, rel=1e-7)
    apx0 = solve_iwdro_apx(cost, dec, Y, b1.center, b2.center, 0.0,
                           b1.radius, b2.radius)
    s2 = solve_single_ball(cost, dec, Y, b2)
    assert apx0.worst_case_value == pytest.approx(s2.worst_case_value,
                                                  abs=1e-7, rel=1e-7)


def test_oracle_lower_bounds_dual():
    rng = np.random.default_rng(11)
    for _ in range(8):
        cost, dec, Y, b1, b2 = random_instance(rng)
        sol = solve_iwdro(cost, dec, Y, b1, b2)
        grid = oracle_grid(cost, sol.decision, [b1, b2], [-3.0], [3.0], per_dim=25)
        val = worst_case_grid_oracle(sol.decision, cost, grid, [b1, b2])
        assert val <= sol.worst_case_value + 1e-6


def test_oracle_zero_radius_grid_is_expectation():
    rng = np.random.default_rng(12)
    cost, dec, Y, b1, _ = random_instance(rng, n_atoms=4)
    z = np.array([0.2])
    ball = WassersteinBall(b1.center, 0.0, 1)
    val = worst_case_grid_oracle(z, cost, b1.center.supports, [ball])
    assert val == pytest.approx(cost.expected(z, b1.center), abs=1e-9)


def test_oracle_infeasible_returns_minus_inf():
    cost = PiecewiseLinearCost.absolute_loss()
    ball = WassersteinBall(DiscreteDistribution.dirac(0.0), 0.1, 1)
    # the grid sits far from the ball center: no feasible distribution
    val = worst_case_grid_oracle(np.array([0.0]), cost,
                                 np.array([[5.0], [6.0]]), [ball])
    assert val == float("-inf")


def test_strong_duality_on_grid():
    rng = np.random.default_rng(13)
    for _ in range(6):
        cost, dec, Y, b1, b2 = random_instance(rng, n_pieces=3)
        sol = solve_iwdro(cost, dec, Y, b1, b2)
        grid = oracle_grid(cost, sol.decision, [b1, b2], [-3.0], [3.0], per_dim=60)
        val = worst_case_grid_oracle(sol.decision, cost, grid, [b1, b2])
        scale = max(1.0, abs(sol.worst_case_value))
        assert (sol.worst_case_value - val) / scale <= 1e-4


def test_empty_intersection_raises():
    cost = PiecewiseLinearCost.absolute_loss()
    dec = Polyhedron.free(1)
    Y = Polyhedron.box([-10.0], [10.0])
    b1 = WassersteinBall(DiscreteDistribution.dirac(0.0), 0.4, 1)
    b2 = WassersteinBall(DiscreteDistribution.dirac(3.0), 0.4, 1)
    with pytest.raises(EmptyIntersectionError):
        build_iwdro_lp(cost, dec, Y, b1, b2)
    with pytest.raises(EmptyIntersectionError):
        solve_iwdro(cost, dec, Y, b1, b2)


def test_unsupported_order_raises():
    cost = PiecewiseLinearCost.absolute_loss()
    dec = Polyhedron.free(1)
    Y = Polyhedron.box([-10.0], [10.0])
    b1 = WassersteinBall(DiscreteDistribution.dirac(0.0), 1.0, 2)
    b2 = WassersteinBall(DiscreteDistribution.dirac(0.5), 1.0, 2)
    with pytest.raises(UnsupportedOrderError):
        build_iwdro_lp(cost, dec, Y, b1, b2)
    with pytest.raises(UnsupportedOrderError):
        worst_case_grid_oracle(np.zeros(1), cost, np.zeros((1, 1)), [b1])


def test_dual_multipliers_nonnegative():
    rng = np.random.default_rng(14)
    cost, dec, Y, b1, b2 = random_instance(rng)
    sol = solve_iwdro(cost, dec, Y, b1, b2)
    assert sol.dual_multipliers.shape == (2,)
    assert sol.dual_multipliers.min() >= -1e-12
    assert dec.contains(sol.decision)


def test_mixture_consistency_with_estimators():
    # the surrogate built through the estimator helpers is the same LP
    rng = np.random.default_rng(15)
    cost, dec, Y, b1, b2 = random_instance(rng)
    kappa = 0.3
    center = mixture_estimate(b1.center, b2.center, kappa)
    radius = mixture_radius(b1.radius, b2.radius, kappa, 1)
    direct = solve_single_ball(cost, dec, Y, WassersteinBall(center, radius, 1))
    viaapi = solve_iwdro_apx(cost, dec, Y, b1.center, b2.center, kappa,
                             b1.radius, b2.radius)
    assert direct.worst_case_value == pytest.approx(viaapi.worst_case_value,
                                                    abs=1e-9)
