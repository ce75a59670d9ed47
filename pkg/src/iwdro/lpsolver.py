"""Dense linear-program solver (two-phase primal simplex).

Solves

    minimize    c^T x
    subject to  A_eq x  = b_eq
                A_ub x <= b_ub
                lb <= x <= ub   (entries may be -inf / +inf)

Textbook two-phase primal simplex with Dantzig pricing and a Bland's-rule
fallback that kicks in after a run of degenerate pivots.  The pivot loop
is JIT-compiled with numba and maintains the dense tableau; a tiny
deterministic right-hand-side perturbation breaks the heavy degeneracy of
the reformulation LPs this package produces.  The final basis is always
refactorized against the exact data and the solution re-checked, with an
unperturbed Bland-guarded re-solve as the fallback path.

Deterministic: identical input produces a bit-identical solution.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
OPT_TOL = 1e-9
_PERT = 1e-9


class LpError(Exception):
    """Base class for solver failures."""


class LpInputError(LpError, ValueError):
    """Raised when problem dimensions or values are inconsistent."""


class LpNumericalError(LpError, RuntimeError):
    """Raised when the pivot loop exceeds its iteration cap.

    Carries the last visited basis for post-mortem inspection.
    """

    def __init__(self, message, basis=None):
        super().__init__(message)
        self.basis = None if basis is None else np.asarray(basis, dtype=np.int64)


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _as_2d(mat, ncols, name):
    if mat is None:
        return np.zeros((0, ncols))
    arr = np.asarray(mat, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, ncols)
    if arr.ndim != 2:
        raise LpInputError(f"{name} must be a 2-D matrix")
    return arr


def _as_1d(vec, name):
    if vec is None:
        return np.zeros(0)
    arr = np.asarray(vec, dtype=np.float64)
    if arr.ndim != 1:
        raise LpInputError(f"{name} must be a 1-D vector")
    return arr


@dataclass(frozen=True)
class LinearProgram:
    """Standard-form linear program (minimization)."""

    objective: np.ndarray
    eq_matrix: np.ndarray = None
    eq_rhs: np.ndarray = None
    ub_matrix: np.ndarray = None
    ub_rhs: np.ndarray = None
    lower_bounds: np.ndarray = None
    upper_bounds: np.ndarray = None

    def __post_init__(self):
        c = _as_1d(self.objective, "objective")
        n = c.size
        if n == 0:
            raise LpInputError("objective must have at least one variable")
        Aeq = _as_2d(self.eq_matrix, n, "eq_matrix")
        beq = _as_1d(self.eq_rhs, "eq_rhs")
        Aub = _as_2d(self.ub_matrix, n, "ub_matrix")
        bub = _as_1d(self.ub_rhs, "ub_rhs")
        if Aeq.shape[1] != n or Aub.shape[1] != n:
            raise LpInputError("constraint matrices and objective disagree on "
                               "the number of variables")
        if Aeq.shape[0] != beq.size:
            raise LpInputError("eq_matrix row count does not match eq_rhs")
        if Aub.shape[0] != bub.size:
            raise LpInputError("ub_matrix row count does not match ub_rhs")
        lb = (np.zeros(n) if self.lower_bounds is None
              else _as_1d(self.lower_bounds, "lower_bounds"))
        ub = (np.full(n, np.inf) if self.upper_bounds is None
              else _as_1d(self.upper_bounds, "upper_bounds"))
        if lb.size != n or ub.size != n:
            raise LpInputError("bound vectors must match the number of variables")
        if np.any(lb > ub):
            raise LpInputError("lower bound exceeds upper bound")
        for name, val in (("objective", c), ("eq_matrix", Aeq), ("eq_rhs", beq),
                          ("ub_matrix", Aub), ("ub_rhs", bub),
                          ("lower_bounds", lb), ("upper_bounds", ub)):
            object.__setattr__(self, name, val)

    @property
    def n_vars(self):
        return self.objective.size


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    primal: np.ndarray = None
    objective_value: float = float("nan")
    iterations: int = 0


# numba core status codes
_OPTIMAL, _UNBOUNDED, _ITERCAP = 0, 1, 2


@njit(cache=True)
def _pivot_loop(T, bcol, crow, basis, allowed, max_iter, bland_after):
    """Simplex pivots on a maintained dense tableau.

    ``T`` is the m x n tableau body (Fortran order), ``bcol`` the current
    basic solution, ``crow`` the reduced-cost row.  All are updated in
    place.  Returns (code, iterations).
    """
    m, n = T.shape
    in_basis = np.zeros(n, dtype=np.bool_)
    for k in range(m):
        in_basis[basis[k]] = True
    degen = 0
    it = 0
    while it < max_iter:
        it += 1
        use_bland = degen > bland_after
        enter = -1
        if use_bland:
            for j in range(n):
                if allowed[j] and not in_basis[j] and crow[j] < -OPT_TOL:
                    enter = j
                    break
        else:
            best = -OPT_TOL
            for j in range(n):
                if allowed[j] and not in_basis[j] and crow[j] < best:
                    best = crow[j]
                    enter = j
        if enter == -1:
            return _OPTIMAL, it - 1
        # ratio test on the entering column
        leave = -1
        best_ratio = np.inf
        for i in range(m):
            d = T[i, enter]
            if d > PIVOT_TOL:
                r = bcol[i] / d
                if r < 0.0:
                    r = 0.0
                if (leave == -1 or r < best_ratio - 1e-12
                        or (r <= best_ratio + 1e-12 and basis[i] < basis[leave])):
                    best_ratio = r
                    leave = i
        if leave == -1:
            return _UNBOUNDED, it
        if best_ratio < 1e-10:
            degen += 1
        else:
            degen = 0
        # pivot
        piv = T[leave, enter]
        d = T[:, enter].copy()
        inv = 1.0 / piv
        for j in range(n):
            tl = T[leave, j] * inv
            if tl != 0.0:
                T[leave, j] = tl
                for i in range(m):
                    if i != leave:
                        T[i, j] -= d[i] * tl
            else:
                T[leave, j] = 0.0
        bl = bcol[leave] * inv
        bcol[leave] = bl
        for i in range(m):
            if i != leave:
                bcol[i] -= d[i] * bl
                if bcol[i] < 0.0:
                    bcol[i] = 0.0
        ce = crow[enter]
        if ce != 0.0:
            for j in range(n):
                crow[j] -= ce * T[leave, j]
        # keep the entering column numerically exact
        for i in range(m):
            T[i, enter] = 0.0
        T[leave, enter] = 1.0
        crow[enter] = 0.0
        in_basis[basis[leave]] = False
        in_basis[enter] = True
        basis[leave] = enter
    return _ITERCAP, it


class _Standardizer:
    """Maps a LinearProgram onto ``min c x, A x = b, x >= 0``."""

    def __init__(self, prob: LinearProgram):
        n = prob.n_vars
        lb, ub = prob.lower_bounds, prob.upper_bounds
        self.n_orig = n
        # column recipe: shifted nonnegative column (finite lb), mirrored
        # column (lb = -inf, finite ub), or a split pair (both infinite)
        self.shift = np.zeros(n)
        self.mirror = np.zeros(n, dtype=bool)
        self.split = np.zeros(n, dtype=bool)
        extra_rows = []          # finite-range variables get an x <= ub row
        extra_rhs = []
        for j in range(n):
            lo, hi = lb[j], ub[j]
            if np.isfinite(lo):
                self.shift[j] = lo
                if np.isfinite(hi):
                    row = np.zeros(n)
                    row[j] = 1.0
                    extra_rows.append(row)
                    extra_rhs.append(hi)
            elif np.isfinite(hi):
                self.mirror[j] = True
                self.shift[j] = hi
            else:
                self.split[j] = True

        A_ub = prob.ub_matrix
        b_ub = prob.ub_rhs
        if extra_rows:
            A_ub = np.vstack([A_ub, np.array(extra_rows)])
            b_ub = np.concatenate([b_ub, np.array(extra_rhs)])

        def transform(M, rhs):
            if M.shape[0] == 0:
                return M.copy(), rhs.copy()
            M2 = M.copy()
            rhs2 = rhs - M @ self.shift
            if self.mirror.any():
                M2[:, self.mirror] = -M2[:, self.mirror]
            return M2, rhs2

        Aeq, beq = transform(prob.eq_matrix, prob.eq_rhs)
        Aub, bub = transform(A_ub, b_ub)

        split_idx = np.where(self.split)[0]

        def widen(M):
            if split_idx.size == 0:
                return M
            return np.hstack([M, -M[:, split_idx]])

        Aeq = widen(Aeq)
        Aub = widen(Aub)

        c_mirr = prob.objective.copy()
        c_mirr[self.mirror] = -c_mirr[self.mirror]
        c_full = (np.concatenate([c_mirr, -c_mirr[split_idx]])
                  if split_idx.size else c_mirr)

        m_eq, m_ub = Aeq.shape[0], Aub.shape[0]
        n_struct = c_full.size
        m = m_eq + m_ub
        # column layout: [structural | ub slacks | artificials]
        A = np.zeros((m, n_struct + m_ub + m))
        A[:m_eq, :n_struct] = Aeq
        A[m_eq:, :n_struct] = Aub
        A[m_eq:, n_struct:n_struct + m_ub] = np.eye(m_ub)
        b = np.concatenate([beq, bub])
        neg = b < 0
        A[neg] = -A[neg]
        b[neg] = -b[neg]
        # initial basis: plain ub slacks on unflipped rows, artificials
        # everywhere else
        self.basis = np.empty(m, dtype=np.int64)
        self.n_struct = n_struct
        self.n_slack = m_ub
        n_art = 0
        art_col = n_struct + m_ub
        for i in range(m):
            if i >= m_eq and not neg[i]:
                self.basis[i] = n_struct + (i - m_eq)
            else:
                A[i, art_col + n_art] = 1.0
                self.basis[i] = art_col + n_art
                n_art += 1
        self.n_art = n_art
        A = A[:, :art_col + n_art]
        c_all = np.concatenate([c_full, np.zeros(m_ub + n_art)])
        # infinity-norm equilibration; wide coefficient ranges otherwise
        # drown the pivot tolerance
        row_scale = np.abs(A).max(axis=1)
        row_scale[row_scale < 1e-12] = 1.0
        A = A / row_scale[:, None]
        b = b / row_scale
        col_scale = np.abs(A).max(axis=0)
        col_scale[col_scale < 1e-12] = 1.0
        A = A / col_scale
        self.A = A
        self.b = b
        self.c = c_all / col_scale
        self.col_scale = col_scale
        self.split_idx = split_idx

    def recover(self, x_std):
        """Map a standard-form solution back to original variables."""
        x_std = x_std * self.col_scale
        n = self.n_orig
        x = np.empty(n)
        k_split = 0
        for j in range(n):
            v = x_std[j]
            if self.split[j]:
                v = v - x_std[n + k_split]
                k_split += 1
            if self.mirror[j]:
                v = -v
            x[j] = v + self.shift[j]
        return x


def feasibility_gap(problem: LinearProgram, x):
    """Scaled maximum constraint violation of a candidate point."""
    x = np.asarray(x, dtype=np.float64)
    scale = 1.0 + max(
        np.abs(problem.eq_rhs).max() if problem.eq_rhs.size else 0.0,
        np.abs(problem.ub_rhs).max() if problem.ub_rhs.size else 0.0,
    )
    viol = 0.0
    if problem.eq_rhs.size:
        viol = max(viol, np.abs(problem.eq_matrix @ x - problem.eq_rhs).max())
    if problem.ub_rhs.size:
        viol = max(viol, (problem.ub_matrix @ x - problem.ub_rhs).max(initial=0.0))
    lo, hi = problem.lower_bounds, problem.upper_bounds
    viol = max(viol, (lo - x)[np.isfinite(lo)].max(initial=0.0))
    viol = max(viol, (x - hi)[np.isfinite(hi)].max(initial=0.0))
    return viol / scale


def _basis_solution(A, b, basis, n_total):
    """Exact basic solution for a basis (unperturbed data)."""
    B = A[:, basis]
    try:
        xB = np.linalg.solve(B, b)
    except np.linalg.LinAlgError as exc:
        raise LpNumericalError("singular basis during refactorization",
                               basis=basis) from exc
    x = np.zeros(n_total)
    x[basis] = xB
    return x, xB


def _run_phases(std, perturb, max_iter):
    """One full two-phase run; returns (code, basis, iterations).

    ``code`` is _OPTIMAL/_UNBOUNDED, None for infeasible.
    """
    A, b = std.A, std.b
    m, n_total = A.shape
    bscale = 1.0 + np.abs(b).max(initial=0.0)
    bwork = b.copy()
    if perturb:
        bwork = bwork + _PERT * bscale * np.arange(1, m + 1)
    basis = std.basis.copy()
    T = np.array(A, order="F", copy=True)  # asfortranarray may alias A
    # initial tableau: rows with an artificial/slack basis are already in
    # basic form except flipped eq rows handled by construction (basis
    # columns form an identity by layout)
    bcol = bwork.copy()
    allowed = np.ones(n_total, dtype=np.bool_)
    bland_after = 3 * (m + n_total)
    iterations = 0
    art_start = std.n_struct + std.n_slack

    if std.n_art:
        c1 = np.zeros(n_total)
        c1[art_start:] = 1.0
        crow = c1 - c1[basis] @ T
        code, its = _pivot_loop(T, bcol, crow, basis, allowed,
                                max_iter, bland_after)
        iterations += its
        if code == _ITERCAP:
            raise LpNumericalError("phase-1 iteration cap exceeded", basis=basis)
        art_level = float(bcol[np.asarray(basis) >= art_start].sum()) \
            if np.any(np.asarray(basis) >= art_start) else 0.0
        if art_level > FEAS_TOL * bscale:
            return None, basis, iterations
        _drive_out_artificials(T, bcol, basis, art_start)
        allowed[art_start:] = False

    c2 = std.c
    crow = c2 - c2[basis] @ T
    code, its = _pivot_loop(T, bcol, crow, basis, allowed,
                            max_iter, bland_after)
    iterations += its
    if code == _ITERCAP:
        raise LpNumericalError("phase-2 iteration cap exceeded", basis=basis)
    return code, basis, iterations


def solve_lp(problem: LinearProgram, max_iter: int = None) -> LpSolution:
    """Solve a LinearProgram; returns an LpSolution.

    Raises LpInputError on malformed problems and LpNumericalError when
    the pivot loop hits its iteration cap without converging.
    """
    std = _Standardizer(problem)
    m, n_total = std.A.shape
    if max_iter is None:
        max_iter = max(5000, 80 * (m + n_total))

    code, basis, iterations = _run_phases(std, perturb=True, max_iter=max_iter)
    if code == _UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, iterations=iterations)
    if code is None:
        # rule out an artefact of the perturbation before declaring
        code, basis, its2 = _run_phases(std, perturb=False, max_iter=max_iter)
        iterations += its2
        if code is None:
            return LpSolution(LpStatus.INFEASIBLE, iterations=iterations)
        if code == _UNBOUNDED:
            return LpSolution(LpStatus.UNBOUNDED, iterations=iterations)

    try:
        sol = _extract(problem, std, basis, iterations)
    except LpNumericalError:
        sol = None
    if sol is not None:
        return sol
    # perturbed run left an out-of-tolerance or singular basis: re-solve
    # against the exact right-hand side
    code, basis, its2 = _run_phases(std, perturb=False, max_iter=max_iter)
    iterations += its2
    if code == _UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, iterations=iterations)
    if code is None:
        return LpSolution(LpStatus.INFEASIBLE, iterations=iterations)
    sol = _extract(problem, std, basis, iterations)
    if sol is None:
        raise LpNumericalError("solution failed the feasibility re-check",
                               basis=basis)
    return sol


def _extract(problem, std, basis, iterations):
    x_std, _ = _basis_solution(std.A, std.b, basis, std.A.shape[1])
    np.maximum(x_std, 0.0, out=x_std)
    x = std.recover(x_std)
    if feasibility_gap(problem, x) > 10 * FEAS_TOL:
        return None
    obj = float(problem.objective @ x)
    return LpSolution(LpStatus.OPTIMAL, primal=x, objective_value=obj,
                      iterations=iterations)


@njit(cache=True)
def _drive_out_artificials(T, bcol, basis, art_start):
    """Pivot basic artificials (stuck at zero) out of the basis.

    Rows whose structural tableau entries are all zero are redundant;
    their artificials stay basic at level zero, which is harmless.
    """
    m, n = T.shape
    for i in range(m):
        if basis[i] < art_start:
            continue
        enter = -1
        for j in range(art_start):
            if abs(T[i, j]) > 1e-7:
                # skip columns already basic elsewhere
                basic = False
                for k in range(m):
                    if basis[k] == j:
                        basic = True
                        break
                if not basic:
                    enter = j
                    break
        if enter == -1:
            continue
        piv = T[i, enter]
        d = T[:, enter].copy()
        inv = 1.0 / piv
        for j in range(n):
            tl = T[i, j] * inv
            if tl != 0.0:
                T[i, j] = tl
                for k in range(m):
                    if k != i:
                        T[k, j] -= d[k] * tl
            else:
                T[i, j] = 0.0
        bl = bcol[i] * inv
        bcol[i] = bl
        for k in range(m):
            if k != i:
                bcol[k] -= d[k] * bl
                if bcol[k] < 0.0:
                    bcol[k] = 0.0
        for k in range(m):
            T[k, enter] = 0.0
        T[i, enter] = 1.0
        basis[i] = enter
