"""Dense two-phase primal simplex over small linear programs.

Problems are stated as min (or max) c.x subject to G x <= h, A x = b and
box bounds on x. Internally every variable is shifted/split to be
nonnegative and finite upper bounds become rows, after which a standard
tableau simplex runs phase one on artificials and phase two on the true
objective. Pivoting uses Dantzig's rule and falls back to Bland's rule
after a fixed pivot budget, since accumulated near-parallel rows (e.g.
cutting planes) invite degeneracy.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_float_array
from .errors import InvalidArgumentError

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class LinearProgram:
    """Objective plus inequality rows, equality rows and variable bounds.

    Bounds may be +-inf; ``maximize`` flips the optimization sense.
    """

    objective: np.ndarray
    g_ub: np.ndarray | None = None
    h_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    maximize: bool = False

    def __post_init__(self):
        self.objective = as_float_array(self.objective, "objective").ravel()
        n = self.objective.size
        if n < 1:
            raise InvalidArgumentError("objective must be nonempty")
        if (self.g_ub is None) != (self.h_ub is None):
            raise InvalidArgumentError("g_ub and h_ub must be supplied together")
        if self.g_ub is not None:
            self.g_ub = np.atleast_2d(np.asarray(self.g_ub, dtype=float))
            self.h_ub = as_float_array(self.h_ub, "h_ub").ravel()
            if self.g_ub.shape != (self.h_ub.size, n):
                raise InvalidArgumentError("inequality rows have inconsistent dimensions")
            if not np.all(np.isfinite(self.g_ub)):
                raise InvalidArgumentError("g_ub must be finite")
        if (self.a_eq is None) != (self.b_eq is None):
            raise InvalidArgumentError("a_eq and b_eq must be supplied together")
        if self.a_eq is not None:
            self.a_eq = np.atleast_2d(np.asarray(self.a_eq, dtype=float))
            self.b_eq = as_float_array(self.b_eq, "b_eq").ravel()
            if self.a_eq.shape != (self.b_eq.size, n):
                raise InvalidArgumentError("equality rows have inconsistent dimensions")
            if not np.all(np.isfinite(self.a_eq)):
                raise InvalidArgumentError("a_eq must be finite")
        self.lower = self._bound(self.lower, -math.inf, n, "lower")
        self.upper = self._bound(self.upper, math.inf, n, "upper")
        if np.any(self.lower > self.upper):
            raise InvalidArgumentError("lower bounds exceed upper bounds")

    @staticmethod
    def _bound(value, default, n, name):
        if value is None:
            return np.full(n, default)
        arr = np.asarray(value, dtype=float).ravel()
        if arr.size == 1:
            arr = np.full(n, float(arr[0]))
        if arr.size != n:
            raise InvalidArgumentError(f"{name} bounds must have length {n}")
        if np.any(np.isnan(arr)):
            raise InvalidArgumentError(f"{name} bounds contain NaN")
        return arr

    @property
    def n_vars(self) -> int:
        return self.objective.size


@dataclass
class SimplexResult:
    status: LPStatus
    x: np.ndarray | None
    value: float | None
    iterations: int = 0


class _Tableau:
    """Row-reduced simplex tableau with basis bookkeeping."""

    def __init__(self, table: np.ndarray, basis: list[int]):
        self.table = table
        self.basis = basis
        self.pivots = 0

    def pivot(self, row: int, col: int):
        tab = self.table
        tab[row] /= tab[row, col]
        factors = tab[:, col].copy()
        factors[row] = 0.0
        tab -= np.outer(factors, tab[row])
        tab[:, col] = 0.0
        tab[row, col] = 1.0
        self.basis[row] = col

    def run(self, max_pivots: int, bland_after: int) -> LPStatus:
        tab = self.table
        n_rows = tab.shape[0] - 1
        while self.pivots < max_pivots:
            costs = tab[-1, :-1]
            if self.pivots >= bland_after:
                negatives = np.nonzero(costs < -PIVOT_TOL)[0]
                if negatives.size == 0:
                    return LPStatus.OPTIMAL
                col = int(negatives[0])
            else:
                col = int(np.argmin(costs))
                if costs[col] >= -PIVOT_TOL:
                    return LPStatus.OPTIMAL
            column = tab[:n_rows, col]
            positive = column > PIVOT_TOL
            if not np.any(positive):
                return LPStatus.UNBOUNDED
            ratios = np.full(n_rows, np.inf)
            ratios[positive] = tab[:n_rows, -1][positive] / column[positive]
            row = int(np.argmin(ratios))
            if self.pivots >= bland_after:
                # Bland: among tying ratio rows, leave the lowest basis index.
                ties = np.nonzero(ratios <= ratios[row] + PIVOT_TOL)[0]
                row = int(min(ties, key=lambda r: self.basis[r]))
            self.pivot(row, col)
            self.pivots += 1
        return LPStatus.ITERATION_LIMIT


def _standard_form(lp: LinearProgram):
    """Rewrite with nonnegative variables x = T z + offset, z >= 0."""
    n = lp.n_vars
    columns = []  # (original var, sign)
    offset = np.zeros(n)
    extra_ub = []  # (std column, rhs) for finite two-sided bounds
    for i in range(n):
        lo, hi = lp.lower[i], lp.upper[i]
        if math.isfinite(lo):
            offset[i] = lo
            columns.append((i, 1.0))
            if math.isfinite(hi):
                extra_ub.append((len(columns) - 1, hi - lo))
        elif math.isfinite(hi):
            offset[i] = hi
            columns.append((i, -1.0))
        else:
            columns.append((i, 1.0))
            columns.append((i, -1.0))

    n_std = len(columns)
    transform = np.zeros((n, n_std))
    for j, (i, sign) in enumerate(columns):
        transform[i, j] = sign

    a_ub_blocks, b_ub_blocks = [], []
    if lp.g_ub is not None:
        a_ub_blocks.append(lp.g_ub @ transform)
        b_ub_blocks.append(lp.h_ub - lp.g_ub @ offset)
    if extra_ub:
        bound_rows = np.zeros((len(extra_ub), n_std))
        bound_rhs = np.zeros(len(extra_ub))
        for r, (j, rhs) in enumerate(extra_ub):
            bound_rows[r, j] = 1.0
            bound_rhs[r] = rhs
        a_ub_blocks.append(bound_rows)
        b_ub_blocks.append(bound_rhs)
    a_ub = np.vstack(a_ub_blocks) if a_ub_blocks else np.zeros((0, n_std))
    b_ub = np.concatenate(b_ub_blocks) if b_ub_blocks else np.zeros(0)

    if lp.a_eq is not None:
        a_eq = lp.a_eq @ transform
        b_eq = lp.b_eq - lp.a_eq @ offset
    else:
        a_eq = np.zeros((0, n_std))
        b_eq = np.zeros(0)

    sense = -1.0 if lp.maximize else 1.0
    c_std = sense * (lp.objective @ transform)
    return c_std, a_ub, b_ub, a_eq, b_eq, transform, offset


def simplex_solve(lp: LinearProgram, max_pivots: int | None = None) -> SimplexResult:
    """Solve a dense LP; returns a vertex solution when one is optimal.

    Two phases: artificial variables are driven out first (redundant rows are
    dropped), then the true objective is optimized. Dantzig pricing switches
    to Bland's rule after 3 * (rows + cols) pivots to rule out cycling.
    """
    c, a_ub, b_ub, a_eq, b_eq, transform, offset = _standard_form(lp)
    n = c.size
    n_ub, n_eq = a_ub.shape[0], a_eq.shape[0]
    rows = n_ub + n_eq

    if max_pivots is None:
        max_pivots = max(500, 80 * (rows + n))
    bland_after = 3 * (rows + n)

    a_full = np.vstack([a_ub, a_eq]) if rows else np.zeros((0, n))
    b_full = np.concatenate([b_ub, b_eq])
    slack = np.zeros((rows, n_ub))
    slack[:n_ub, :] = np.eye(n_ub)
    flip = b_full < 0
    a_full[flip] *= -1.0
    b_full[flip] *= -1.0
    slack[flip] *= -1.0

    # Unflipped inequality rows start with their slack basic; the rest take
    # an artificial variable.
    basis = [-1] * rows
    needs_artificial = np.ones(rows, dtype=bool)
    for r in range(n_ub):
        if not flip[r]:
            needs_artificial[r] = False
            basis[r] = n + r
    art_rows = np.nonzero(needs_artificial)[0]
    n_art = int(art_rows.size)
    total = n + n_ub + n_art

    table = np.zeros((rows + 1, total + 1))
    if rows:
        table[:rows, :n] = a_full
        table[:rows, n : n + n_ub] = slack
        for j, r in enumerate(art_rows):
            table[r, n + n_ub + j] = 1.0
            basis[r] = n + n_ub + j
        table[:rows, -1] = b_full

    tableau = _Tableau(table, basis)
    iterations = 0

    if n_art:
        table[-1, :] = 0.0
        table[-1, n + n_ub : total] = 1.0
        for r in art_rows:
            table[-1, :] -= table[r, :]
        status = tableau.run(max_pivots, bland_after)
        iterations += tableau.pivots
        if status is LPStatus.ITERATION_LIMIT:
            return SimplexResult(LPStatus.ITERATION_LIMIT, None, None, iterations)
        # Bottom-right holds minus the phase-one objective (sum of artificials).
        if -table[-1, -1] > FEAS_TOL:
            return SimplexResult(LPStatus.INFEASIBLE, None, None, iterations)
        # Pivot lingering artificials out; rows that cannot pivot are redundant.
        keep = np.ones(rows, dtype=bool)
        for r in range(rows):
            if tableau.basis[r] >= n + n_ub:
                candidates = np.nonzero(np.abs(table[r, : n + n_ub]) > PIVOT_TOL)[0]
                if candidates.size:
                    tableau.pivot(r, int(candidates[0]))
                else:
                    keep[r] = False
        if not np.all(keep):
            table = np.vstack([table[:rows][keep], table[-1:]])
            basis = [b for r, b in enumerate(tableau.basis) if keep[r]]
            rows = int(np.sum(keep))
            tableau = _Tableau(table, basis)
        # Remove artificial columns from play.
        table = np.delete(table, np.s_[n + n_ub : n + n_ub + n_art], axis=1)
        tableau.table = table
        total = n + n_ub

    # Phase two: express the true objective in the current basis.
    table[-1, :] = 0.0
    table[-1, :n] = c
    for r in range(rows):
        bc = tableau.basis[r]
        if bc < n and c[bc] != 0.0:
            table[-1, :] -= c[bc] * table[r, :]
    tableau.pivots = 0
    status = tableau.run(max_pivots, bland_after)
    iterations += tableau.pivots
    if status is LPStatus.UNBOUNDED:
        return SimplexResult(LPStatus.UNBOUNDED, None, None, iterations)
    if status is LPStatus.ITERATION_LIMIT:
        return SimplexResult(LPStatus.ITERATION_LIMIT, None, None, iterations)

    x_std = np.zeros(total)
    for r in range(rows):
        x_std[tableau.basis[r]] = table[r, -1]
    x = transform @ x_std[:n] + offset
    return SimplexResult(LPStatus.OPTIMAL, x, float(lp.objective @ x), iterations)
