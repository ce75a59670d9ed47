"""Worst-case expected-cost problems over intersected Wasserstein balls.

Assembles and solves the dual linear programs of the min-max problem

    min_z  sup { E_mu[c(z, Y)] : W_1(mu, center_m) <= radius_m, m = 1..M }

for piecewise-linear costs ``c(z, y) = max_s a_s(z)' y + b_s(z)`` with
affine ``a_s``, ``b_s``, a polyhedral decision set, and order p = 1.

Two LP shapes are used:

* the generic dual over the full multi-index set, with coupling
  variables against a polyhedral uncertainty region (size Theta(n^M));
* a compact equivalent when the uncertainty region is all of R^d_y: the
  per-atom dual vectors collapse to one vector per ball and piece, and
  the pairwise covering rows decompose through per-ball thresholds
  (size Theta(n)).

A primal grid oracle bounds the same worst-case value from below by
restricting the adversary to a finite support, which is how strong
duality is verified empirically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .lpsolver import LinearProgram, LpInputError, LpStatus, solve_lp
from .wasserstein import (
    DiscreteDistribution,
    WassersteinBall,
    intersection_nonempty,
    wasserstein_distance,
)


class UnsupportedOrderError(LpInputError):
    """Raised for transport orders the LP reformulation does not cover."""


class EmptyIntersectionError(RuntimeError):
    """Raised when the requested ambiguity set is provably empty."""


@dataclass(frozen=True)
class Polyhedron:
    """The set {v : A v <= h}, with optionally flagged equality rows."""

    matrix: np.ndarray
    rhs: np.ndarray
    eq_rows: np.ndarray = None

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=np.float64)
        if A.ndim == 1:
            A = A[None, :]
        h = np.atleast_1d(np.asarray(self.rhs, dtype=np.float64))
        if A.ndim != 2 or A.shape[0] != h.size:
            raise ValueError("matrix and rhs disagree on the number of rows")
        eq = (np.zeros(h.size, dtype=bool) if self.eq_rows is None
              else np.asarray(self.eq_rows, dtype=bool))
        if eq.size != h.size:
            raise ValueError("eq_rows must flag each row")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "rhs", h)
        object.__setattr__(self, "eq_rows", eq)

    @property
    def n_rows(self):
        return self.matrix.shape[0]

    @property
    def dim(self):
        return self.matrix.shape[1]

    @staticmethod
    def free(dim: int) -> "Polyhedron":
        """All of R^dim (zero constraint rows)."""
        return Polyhedron(np.zeros((0, dim)), np.zeros(0))

    @staticmethod
    def box(lows, highs) -> "Polyhedron":
        lows = np.atleast_1d(np.asarray(lows, dtype=np.float64))
        highs = np.atleast_1d(np.asarray(highs, dtype=np.float64))
        if lows.size != highs.size or np.any(lows > highs):
            raise ValueError("invalid box bounds")
        d = lows.size
        A = np.vstack([np.eye(d), -np.eye(d)])
        h = np.concatenate([highs, -lows])
        return Polyhedron(A, h)

    @staticmethod
    def simplex(dim: int) -> "Polyhedron":
        """Probability simplex: sum v = 1, v >= 0."""
        A = np.vstack([np.ones((1, dim)), -np.eye(dim)])
        h = np.concatenate([[1.0], np.zeros(dim)])
        eq = np.zeros(dim + 1, dtype=bool)
        eq[0] = True
        return Polyhedron(A, h, eq)

    def contains(self, v, tol=1e-7) -> bool:
        v = np.atleast_1d(np.asarray(v, dtype=np.float64))
        if self.n_rows == 0:
            return True
        res = self.matrix @ v - self.rhs
        ok_ub = res[~self.eq_rows].max(initial=-np.inf) <= tol
        ok_eq = np.abs(res[self.eq_rows]).max(initial=0.0) <= tol
        return bool(ok_ub and ok_eq)

    def inequality_form(self):
        """(A, h) with flagged equality rows doubled into +- inequalities."""
        if not self.eq_rows.any():
            return self.matrix, self.rhs
        eq = self.eq_rows
        A = np.vstack([self.matrix, -self.matrix[eq]])
        h = np.concatenate([self.rhs, -self.rhs[eq]])
        return A, h


@dataclass(frozen=True)
class CostPiece:
    """One affine piece: (G z + g)' y + q' z + q0."""

    y_coef_matrix: np.ndarray   # G, (d_y, d_z)
    y_coef_offset: np.ndarray   # g, (d_y,)
    z_coef: np.ndarray          # q, (d_z,)
    constant: float = 0.0       # q0

    def __post_init__(self):
        G = np.asarray(self.y_coef_matrix, dtype=np.float64)
        if G.ndim == 1:
            G = G[:, None]
        g = np.atleast_1d(np.asarray(self.y_coef_offset, dtype=np.float64))
        q = np.atleast_1d(np.asarray(self.z_coef, dtype=np.float64))
        if G.shape != (g.size, q.size):
            raise ValueError("piece dimensions disagree")
        object.__setattr__(self, "y_coef_matrix", G)
        object.__setattr__(self, "y_coef_offset", g)
        object.__setattr__(self, "z_coef", q)
        object.__setattr__(self, "constant", float(self.constant))

    def a(self, z) -> np.ndarray:
        return self.y_coef_matrix @ z + self.y_coef_offset

    def b(self, z) -> float:
        return float(self.z_coef @ z + self.constant)


@dataclass(frozen=True)
class PiecewiseLinearCost:
    """max over affine-in-decision pieces c_s(z, y) = a_s(z)'y + b_s(z)."""

    pieces: tuple

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValueError("need at least one piece")
        d_y, d_z = pieces[0].y_coef_matrix.shape
        for pc in pieces:
            if pc.y_coef_matrix.shape != (d_y, d_z):
                raise ValueError("pieces disagree on dimensions")
        object.__setattr__(self, "pieces", pieces)

    @property
    def d_y(self):
        return self.pieces[0].y_coef_matrix.shape[0]

    @property
    def d_z(self):
        return self.pieces[0].y_coef_matrix.shape[1]

    @property
    def n_pieces(self):
        return len(self.pieces)

    def evaluate(self, z, ys) -> np.ndarray:
        """c(z, y) for each row y of ys."""
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        ys = np.asarray(ys, dtype=np.float64)
        single = ys.ndim == 1
        if single:
            ys = ys[None, :]
        vals = np.stack([ys @ pc.a(z) + pc.b(z) for pc in self.pieces])
        out = vals.max(axis=0)
        return float(out[0]) if single else out

    def expected(self, z, dist: DiscreteDistribution) -> float:
        return float(self.evaluate(z, dist.supports) @ dist.weights)

    @staticmethod
    def absolute_loss() -> "PiecewiseLinearCost":
        """|z - y| for scalar decision and outcome."""
        up = CostPiece(np.zeros((1, 1)), [1.0], [-1.0], 0.0)    # y - z
        dn = CostPiece(np.zeros((1, 1)), [-1.0], [1.0], 0.0)    # z - y
        return PiecewiseLinearCost((up, dn))

    @staticmethod
    def mean_cvar(d_y: int, phi: float) -> "PiecewiseLinearCost":
        """Mean-CVaR portfolio loss in decision (z, r), r the VaR level.

        max{-(1 + 1/phi) z'y + (1 - 1/phi) r, -z'y + r}; expectation of
        this piecewise form at the minimizing r equals mean + CVaR_phi of
        the loss -z'y.
        """
        if not 0 < phi < 1:
            raise ValueError("phi must lie in (0, 1)")
        d_z = d_y + 1
        G1 = np.zeros((d_y, d_z))
        G1[:, :d_y] = -(1.0 + 1.0 / phi) * np.eye(d_y)
        q1 = np.zeros(d_z)
        q1[d_y] = 1.0 - 1.0 / phi
        G2 = np.zeros((d_y, d_z))
        G2[:, :d_y] = -np.eye(d_y)
        q2 = np.zeros(d_z)
        q2[d_y] = 1.0
        return PiecewiseLinearCost((
            CostPiece(G1, np.zeros(d_y), q1, 0.0),
            CostPiece(G2, np.zeros(d_y), q2, 0.0),
        ))


@dataclass(frozen=True)
class DroSolution:
    decision: np.ndarray
    worst_case_value: float
    dual_multipliers: np.ndarray


class _Blocks:
    """Contiguous variable blocks of an LP under assembly."""

    def __init__(self):
        self.slices = {}
        self.size = 0

    def add(self, name, k):
        self.slices[name] = slice(self.size, self.size + k)
        self.size += k

    def __getitem__(self, name):
        return self.slices[name]


def _check_problem(cost, decision_set, uncertainty_set, balls):
    if any(b.order != 1 for b in balls):
        raise UnsupportedOrderError(
            "the linear reformulation requires transport order p = 1")
    d_y, d_z = cost.d_y, cost.d_z
    if decision_set.dim != d_z:
        raise LpInputError("decision polyhedron dimension != cost d_z")
    if uncertainty_set is not None and uncertainty_set.dim != d_y:
        raise LpInputError("uncertainty polyhedron dimension != cost d_y")
    for b in balls:
        if b.center.dim != d_y:
            raise LpInputError("ball center dimension != cost d_y")
    for b1, b2 in itertools.combinations(balls, 2):
        if not intersection_nonempty(b1, b2):
            raise EmptyIntersectionError(
                "ball centers are farther apart than the radii allow "
                f"(W_1 = {wasserstein_distance(b1.center, b2.center, 1):.6g} "
                f"> {b1.radius + b2.radius:.6g}); the pairwise transport "
                "test certifies an empty intersection")


def _decision_rows(blocks, decision_set, n_vars, rows_ub, rhs_ub, rows_eq, rhs_eq):
    zsl = blocks["z"]
    for r in range(decision_set.n_rows):
        row = np.zeros(n_vars)
        row[zsl] = decision_set.matrix[r]
        if decision_set.eq_rows[r]:
            rows_eq.append(row)
            rhs_eq.append(decision_set.rhs[r])
        else:
            rows_ub.append(row)
            rhs_ub.append(decision_set.rhs[r])


def _build_multi_ball_lp(cost, decision_set, uncertainty_set, balls):
    """Exact dual LP over the multi-index set.

    Returns (LinearProgram, blocks).  Variable blocks: z, lam, u_m (one
    per ball), alpha (per ball, atom tuple, and piece), gamma (per atom
    tuple and piece, one coupling vector against the uncertainty rows).
    The per-tuple alpha indexing matters: tying a ball's dual vector to
    its own atom only (shared across the other balls' atoms) is weaker
    and leaves a gap against the primal worst case on some instances.
    Pass ``uncertainty_set=None`` for an unconstrained support region.
    """
    M = len(balls)
    S = cost.n_pieces
    d_y, d_z = cost.d_y, cost.d_z
    if uncertainty_set is None:
        A_y = np.zeros((0, d_y))
        h_y = np.zeros(0)
    else:
        A_y, h_y = uncertainty_set.inequality_form()
    d_m = A_y.shape[0]
    ns = [b.center.n_points for b in balls]
    multi = list(itertools.product(*[range(n) for n in ns]))
    T = len(multi)

    blocks = _Blocks()
    blocks.add("z", d_z)
    blocks.add("lam", M)
    for m in range(M):
        blocks.add(f"u{m}", ns[m])
    blocks.add("alpha", M * T * S * d_y)
    blocks.add("gamma", T * S * d_m)
    N = blocks.size

    def alpha_sl(m, t, s):
        base = blocks["alpha"].start + ((m * T + t) * S + s) * d_y
        return slice(base, base + d_y)

    def gamma_sl(t, s):
        base = blocks["gamma"].start + (t * S + s) * d_m
        return slice(base, base + d_m)

    rows_ub, rhs_ub, rows_eq, rhs_eq = [], [], [], []
    for t, idx in enumerate(multi):
        for s, pc in enumerate(cost.pieces):
            # covering row: b_s(z) + gamma'h - sum alpha'y - sum u <= 0
            row = np.zeros(N)
            row[blocks["z"]] = pc.z_coef
            if d_m:
                row[gamma_sl(t, s)] = h_y
            for m, b in enumerate(balls):
                row[blocks[f"u{m}"].start + idx[m]] -= 1.0
                row[alpha_sl(m, t, s)] = -b.center.supports[idx[m]]
            rows_ub.append(row)
            rhs_ub.append(-pc.constant)
            # splitting rows: sum_m alpha - A'gamma + G_s z = -g_s
            for l in range(d_y):
                roweq = np.zeros(N)
                for m in range(M):
                    roweq[alpha_sl(m, t, s).start + l] = 1.0
                if d_m:
                    roweq[gamma_sl(t, s)] = -A_y[:, l]
                roweq[blocks["z"]] = pc.y_coef_matrix[l]
                rows_eq.append(roweq)
                rhs_eq.append(-pc.y_coef_offset[l])
    # sup-norm tie to the ball multipliers: +-alpha <= lam_m
    for m in range(M):
        for t in range(T):
            for s in range(S):
                sl = alpha_sl(m, t, s)
                for l in range(d_y):
                    for sgn in (1.0, -1.0):
                        row = np.zeros(N)
                        row[sl.start + l] = sgn
                        row[blocks["lam"].start + m] = -1.0
                        rows_ub.append(row)
                        rhs_ub.append(0.0)
    _decision_rows(blocks, decision_set, N, rows_ub, rhs_ub, rows_eq, rhs_eq)

    c = np.zeros(N)
    for m, b in enumerate(balls):
        c[blocks["lam"].start + m] = b.radius
        c[blocks[f"u{m}"]] = b.center.weights
    lb = np.full(N, -np.inf)
    ub = np.full(N, np.inf)
    lb[blocks["lam"]] = 0.0
    lb[blocks["gamma"]] = 0.0
    lp = LinearProgram(c, np.array(rows_eq) if rows_eq else None,
                       np.array(rhs_eq) if rhs_eq else None,
                       np.array(rows_ub) if rows_ub else None,
                       np.array(rhs_ub) if rhs_ub else None, lb, ub)
    return lp, blocks


def _build_shared_free_lp(cost, decision_set, balls):
    """Compact dual LP for uncertainty region R^d_y with shared duals.

    Restricts each ball's dual vectors to one vector per piece
    (alpha_{m,i,s} = alpha_{m,s}), after which the covering rows over
    atom tuples decompose through per-ball thresholds t_{m,s}:

        u_{m,i} + alpha_{m,s}' y_{m,i} >= t_{m,s},
        sum_m t_{m,s} >= b_s(z),
        sum_m alpha_{m,s} = -a_s(z),   ||alpha_{m,s}||_inf <= lam_m.

    Exact for a single ball (the splitting constraint pins alpha); for
    two or more balls it upper-bounds the exact worst case, typically
    within a fraction of a percent, at Theta(n) instead of Theta(n^M)
    size.  This is the shape large-sample pipelines solve per covariate.
    """
    M = len(balls)
    S = cost.n_pieces
    d_y, d_z = cost.d_y, cost.d_z
    ns = [b.center.n_points for b in balls]

    blocks = _Blocks()
    blocks.add("z", d_z)
    blocks.add("lam", M)
    for m in range(M):
        blocks.add(f"u{m}", ns[m])
    blocks.add("alpha", M * S * d_y)
    blocks.add("t", M * S)
    N = blocks.size

    def alpha_sl(m, s):
        base = blocks["alpha"].start + (m * S + s) * d_y
        return slice(base, base + d_y)

    def t_at(m, s):
        return blocks["t"].start + m * S + s

    rows_ub, rhs_ub, rows_eq, rhs_eq = [], [], [], []
    for m, b in enumerate(balls):
        pts = b.center.supports
        for s in range(S):
            for i in range(ns[m]):
                row = np.zeros(N)
                row[t_at(m, s)] = 1.0
                row[blocks[f"u{m}"].start + i] = -1.0
                row[alpha_sl(m, s)] = -pts[i]
                rows_ub.append(row)
                rhs_ub.append(0.0)
    for s, pc in enumerate(cost.pieces):
        row = np.zeros(N)
        row[blocks["z"]] = pc.z_coef
        for m in range(M):
            row[t_at(m, s)] = -1.0
        rows_ub.append(row)
        rhs_ub.append(-pc.constant)
        for l in range(d_y):
            roweq = np.zeros(N)
            for m in range(M):
                roweq[alpha_sl(m, s).start + l] = 1.0
            roweq[blocks["z"]] = pc.y_coef_matrix[l]
            rows_eq.append(roweq)
            rhs_eq.append(-pc.y_coef_offset[l])
    for m in range(M):
        for s in range(S):
            sl = alpha_sl(m, s)
            for l in range(d_y):
                for sgn in (1.0, -1.0):
                    row = np.zeros(N)
                    row[sl.start + l] = sgn
                    row[blocks["lam"].start + m] = -1.0
                    rows_ub.append(row)
                    rhs_ub.append(0.0)
    _decision_rows(blocks, decision_set, N, rows_ub, rhs_ub, rows_eq, rhs_eq)

    c = np.zeros(N)
    for m, b in enumerate(balls):
        c[blocks["lam"].start + m] = b.radius
        c[blocks[f"u{m}"]] = b.center.weights
    lb = np.full(N, -np.inf)
    ub = np.full(N, np.inf)
    lb[blocks["lam"]] = 0.0
    lp = LinearProgram(c, np.array(rows_eq), np.array(rhs_eq),
                       np.array(rows_ub), np.array(rhs_ub), lb, ub)
    return lp, blocks


def build_iwdro_lp(cost: PiecewiseLinearCost, decision_set: Polyhedron,
                   uncertainty_set: Polyhedron, ball1: WassersteinBall,
                   ball2: WassersteinBall) -> LinearProgram:
    """Dual LP of the two-ball worst-case problem (polyhedral uncertainty)."""
    balls = [ball1, ball2]
    _check_problem(cost, decision_set, uncertainty_set, balls)
    lp, _ = _build_multi_ball_lp(cost, decision_set, uncertainty_set, balls)
    return lp


def _solve(cost, decision_set, uncertainty_set, balls, shared=False):
    _check_problem(cost, decision_set, uncertainty_set, balls)
    free = uncertainty_set is None or uncertainty_set.n_rows == 0
    if free and (shared or len(balls) == 1):
        lp, blocks = _build_shared_free_lp(cost, decision_set, balls)
    else:
        lp, blocks = _build_multi_ball_lp(
            cost, decision_set, uncertainty_set if not free else None, balls)
    sol = solve_lp(lp)
    if sol.status is LpStatus.INFEASIBLE:
        raise EmptyIntersectionError(
            "dual LP infeasible: the ambiguity set admits no distribution "
            "(pairwise tests are necessary but not sufficient for 3+ balls)")
    if sol.status is LpStatus.UNBOUNDED:
        raise EmptyIntersectionError(
            "dual LP unbounded below, which certifies an empty ambiguity set")
    z = sol.primal[blocks["z"]]
    lam = sol.primal[blocks["lam"]]
    return DroSolution(z, float(sol.objective_value), lam)


def solve_single_ball(cost: PiecewiseLinearCost, decision_set: Polyhedron,
                      uncertainty_set: Polyhedron,
                      ball: WassersteinBall) -> DroSolution:
    """Worst-case problem over one Wasserstein ball."""
    return _solve(cost, decision_set, uncertainty_set, [ball])


def solve_iwdro(cost: PiecewiseLinearCost, decision_set: Polyhedron,
                uncertainty_set: Polyhedron, ball1: WassersteinBall,
                ball2: WassersteinBall) -> DroSolution:
    """Worst-case problem over the intersection of two balls (exact dual)."""
    return _solve(cost, decision_set, uncertainty_set, [ball1, ball2])


def solve_iwdro_shared(cost: PiecewiseLinearCost, decision_set: Polyhedron,
                       ball1: WassersteinBall,
                       ball2: WassersteinBall) -> DroSolution:
    """Two-ball worst case with shared dual vectors and free support.

    Theta(n)-size surrogate for :func:`solve_iwdro`: its value never
    falls below the exact one and usually matches it closely.  Intended
    for pipelines that solve one program per test covariate.
    """
    return _solve(cost, decision_set, None, [ball1, ball2], shared=True)


def solve_multi_ball(cost: PiecewiseLinearCost, decision_set: Polyhedron,
                     uncertainty_set: Polyhedron, balls) -> DroSolution:
    """Worst-case problem over the intersection of M >= 1 balls."""
    balls = list(balls)
    if not balls:
        raise LpInputError("need at least one ball")
    return _solve(cost, decision_set, uncertainty_set, balls)


def solve_iwdro_apx(cost: PiecewiseLinearCost, decision_set: Polyhedron,
                    uncertainty_set: Polyhedron,
                    np_dist: DiscreteDistribution,
                    p_dist: DiscreteDistribution,
                    kappa: float, eps_np: float, eps_p: float) -> DroSolution:
    """Single-ball surrogate around the interpolated center and radius."""
    from .estimators import mixture_estimate, mixture_radius

    center = mixture_estimate(np_dist, p_dist, kappa)
    radius = mixture_radius(eps_np, eps_p, kappa, p=1)
    return solve_single_ball(cost, decision_set, uncertainty_set,
                             WassersteinBall(center, radius, order=1))


def worst_case_grid_oracle(z, cost: PiecewiseLinearCost, grid, balls) -> float:
    """Primal lower bound: worst case over distributions on a finite grid.

    Maximizes the expected cost over probability vectors on the grid
    subject to one transportation constraint per ball.  Returns -inf when
    the grid cannot satisfy the ball constraints.
    """
    balls = list(balls)
    if any(b.order != 1 for b in balls):
        raise UnsupportedOrderError("the grid oracle is stated for p = 1")
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim == 1:
        grid = grid[:, None]
    if grid.shape[0] == 0:
        raise LpInputError("grid must be nonempty")
    G = grid.shape[0]
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    cvals = cost.evaluate(z, grid)

    blocks = _Blocks()
    blocks.add("p", G)
    for m, b in enumerate(balls):
        blocks.add(f"pi{m}", G * b.center.n_points)
    N = blocks.size

    rows_ub, rhs_ub, rows_eq, rhs_eq = [], [], [], []
    for m, b in enumerate(balls):
        nm = b.center.n_points
        base = blocks[f"pi{m}"].start
        # row sums tie the coupling to the grid probabilities
        for k in range(G):
            row = np.zeros(N)
            row[base + k * nm: base + (k + 1) * nm] = 1.0
            row[blocks["p"].start + k] = -1.0
            rows_eq.append(row)
            rhs_eq.append(0.0)
        # column sums reproduce the ball center
        for j in range(nm):
            row = np.zeros(N)
            row[base + j: base + G * nm: nm] = 1.0
            rows_eq.append(row)
            rhs_eq.append(b.center.weights[j])
        # transport budget
        D = np.abs(grid[:, None, :] - b.center.supports[None, :, :]).sum(axis=2)
        row = np.zeros(N)
        row[blocks[f"pi{m}"]] = D.ravel()
        rows_ub.append(row)
        rhs_ub.append(b.radius)
    c = np.zeros(N)
    c[blocks["p"]] = -cvals   # maximize
    lb = np.zeros(N)
    lp = LinearProgram(c, np.array(rows_eq), np.array(rhs_eq),
                       np.array(rows_ub), np.array(rhs_ub),
                       lb, np.full(N, np.inf))
    sol = solve_lp(lp)
    if sol.status is LpStatus.INFEASIBLE:
        return float("-inf")
    if sol.status is not LpStatus.OPTIMAL:
        raise LpInputError(f"grid oracle LP ended with {sol.status}")
    return float(-sol.objective_value)


def oracle_grid(cost: PiecewiseLinearCost, z, balls, box_lows, box_highs,
                per_dim: int = 50) -> np.ndarray:
    """Candidate support for the grid oracle.

    Ball supports, box vertices, a uniform refinement, and (in one
    dimension) the crossing points of the cost pieces at the given
    decision, all clipped to the box.
    """
    lows = np.atleast_1d(np.asarray(box_lows, dtype=np.float64))
    highs = np.atleast_1d(np.asarray(box_highs, dtype=np.float64))
    d = lows.size
    pts = [b.center.supports for b in balls]
    axes_extra = [set() for _ in range(d)]
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if d == 1:
        for p1, p2 in itertools.combinations(cost.pieces, 2):
            a1, a2 = p1.a(z)[0], p2.a(z)[0]
            if abs(a1 - a2) > 1e-12:
                ycross = (p2.b(z) - p1.b(z)) / (a1 - a2)
                if lows[0] <= ycross <= highs[0]:
                    axes_extra[0].add(float(ycross))
    axes = []
    for l in range(d):
        vals = set(np.linspace(lows[l], highs[l], per_dim).tolist())
        vals.add(float(lows[l]))
        vals.add(float(highs[l]))
        for arr in pts:
            vals.update(np.clip(arr[:, l], lows[l], highs[l]).tolist())
        vals.update(axes_extra[l])
        axes.append(np.array(sorted(vals)))
    if d == 1:
        return axes[0][:, None]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([mm.ravel() for mm in mesh], axis=1)
    return grid
