"""Robust predict-then-optimize over a calibrated envelope.

The worst-case cost of a flow w over the prediction region decomposes into
one convex maximization per tuple of per-predictor samples: maximize c.w
subject to the projected nearest-sample distances staying inside the
envelope. Every constraint touches c only through the vector of distances
to the tuple's anchor samples, so the problem is solved as a cutting-plane
maximization of the concave value function V(r) = max{w.c : |c - a_k| <=
r_k} over the envelope polytope {r >= 0 : U r <= q}: the master LP lives in
K+1 variables, each cut comes from the ball-intersection dual (whose
multipliers are the supergradient of V), and convergence takes tens of cuts
independent of the cost dimension. The outer minimization over the flow
polytope runs Frank-Wolfe with the worst-case cost vector as the Danskin
subgradient, or literal projected subgradient descent when requested.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_float_array, check_positive_int
from .calibration import QuantileEnvelope
from .errors import EmptyRegionError, InvalidArgumentError, UndefinedMetricError
from .flow import FlowProblem, min_cost_flow_lp, shortest_path_lmo
from .lp import FEAS_TOL, PIVOT_TOL, LinearProgram, LPStatus, simplex_solve
from .scores import SampleBank

KELLEY_VIOLATION_TOL = 1e-6
MAX_TUPLES = 10_000
DEFAULT_MAX_CUTS = 500  # budget of new cuts per inner maximization call
DUAL_TOL = 1e-11


@dataclass
class InnerMaxResult:
    feasible: bool
    c_star: np.ndarray | None
    value: float
    status: str  # "optimal", "approximate", or "infeasible"
    violation: float = 0.0
    n_cuts: int = 0


class _KelleyMaster:
    """Incremental LP master: max w.z over a box plus accumulated <= rows.

    The tableau persists across row additions (dual simplex restores
    optimality, typically in a pivot or two) and across objective swaps
    (primal re-solve from the previous basis). Internally variables are
    shifted to x = z - lower >= 0, upper bounds become rows, and min -w.x is
    solved; tableau layout is objective row 0, constraint rows 1..n_rows.
    """

    def __init__(self, lower, upper, capacity: int):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.n = self.lower.size
        max_rows = self.n + capacity
        self.coef = np.zeros((max_rows + 1, self.n + max_rows))
        self.rhs = np.zeros(max_rows + 1)
        self.basis = np.full(max_rows, -1, dtype=int)
        self.n_rows = 0
        self.n_slacks = 0
        self.pivots = 0

        span = self.upper - self.lower
        for i in range(self.n):
            row = np.zeros(self.n)
            row[i] = 1.0
            self._append_row(row, span[i])

    def _ensure_capacity(self):
        if self.n_rows + 1 < self.basis.size:
            return
        extra = self.basis.size
        self.coef = np.pad(self.coef, ((0, extra), (0, extra)))
        self.rhs = np.pad(self.rhs, (0, extra))
        self.basis = np.pad(self.basis, (0, extra), constant_values=-1)

    def _append_row(self, coeffs, rhs) -> int:
        self._ensure_capacity()
        self.n_rows += 1
        r = self.n_rows
        row = self.coef[r]
        row[:] = 0.0
        row[: self.n] = coeffs
        self.rhs[r] = rhs
        col = self.n + self.n_slacks
        row[col] = 1.0
        self.basis[r - 1] = col
        self.n_slacks += 1
        return r

    def _pivot(self, row: int, col: int):
        active = self.n + self.n_slacks
        tab = self.coef[: self.n_rows + 1, :active]
        rhs = self.rhs[: self.n_rows + 1]
        piv = tab[row, col]
        tab[row] /= piv
        rhs[row] /= piv
        factors = tab[:, col].copy()
        factors[row] = 0.0
        tab -= np.outer(factors, tab[row])
        rhs -= factors * rhs[row]
        tab[:, col] = 0.0
        tab[row, col] = 1.0
        self.basis[row - 1] = col
        self.pivots += 1

    def set_objective(self, w_z) -> bool:
        """Install max w.z (as min -w.x) and primal re-solve to optimality."""
        costs = -np.asarray(w_z, dtype=float)
        active = self.n + self.n_slacks
        obj = self.coef[0]
        obj[:] = 0.0
        obj[: self.n] = costs
        self.rhs[0] = 0.0
        # Basis columns are mutually exclusive unit vectors, so one pass
        # reduces the objective row.
        for r in range(1, self.n_rows + 1):
            b = self.basis[r - 1]
            if b < self.n and costs[b] != 0.0:
                obj[:active] -= costs[b] * self.coef[r, :active]
                self.rhs[0] -= costs[b] * self.rhs[r]
        return self._primal()

    def _primal(self) -> bool:
        n_active = self.n + self.n_slacks
        bland_after = 3 * (self.n_rows + n_active)
        for step in range(20_000):
            costs = self.coef[0, :n_active]
            if step >= bland_after:
                neg = np.nonzero(costs < -PIVOT_TOL)[0]
                if neg.size == 0:
                    return True
                col = int(neg[0])
            else:
                col = int(np.argmin(costs))
                if costs[col] >= -PIVOT_TOL:
                    return True
            column = self.coef[1 : self.n_rows + 1, col]
            positive = column > PIVOT_TOL
            if not np.any(positive):
                return False  # unbounded; cannot happen over a box
            rhs = self.rhs[1 : self.n_rows + 1]
            ratios = np.full(self.n_rows, np.inf)
            ratios[positive] = rhs[positive] / column[positive]
            row = int(np.argmin(ratios))
            if step >= bland_after:
                ties = np.nonzero(ratios <= ratios[row] + PIVOT_TOL)[0]
                row = int(min(ties, key=lambda rr: self.basis[rr]))
            self._pivot(row + 1, col)
        return False

    def _dual(self) -> bool:
        n_active = self.n + self.n_slacks
        for _ in range(20_000):
            rhs = self.rhs[1 : self.n_rows + 1]
            row = int(np.argmin(rhs))
            if rhs[row] >= -FEAS_TOL:
                return True
            entries = self.coef[row + 1, :n_active]
            candidates = np.nonzero(entries < -PIVOT_TOL)[0]
            if candidates.size == 0:
                return False  # primal infeasible
            ratios = self.coef[0, candidates] / (-entries[candidates])
            col = int(candidates[np.argmin(ratios)])
            self._pivot(row + 1, col)
        return False

    def add_cut(self, normal_z, rhs_z) -> bool:
        """Append normal.z <= rhs and restore optimality by dual simplex."""
        normal = np.asarray(normal_z, dtype=float)
        rhs = float(rhs_z) - float(normal @ self.lower)
        r = self._append_row(normal, rhs)
        # Express the new row in the current basis; basis columns are unit
        # vectors across rows, so one vectorized elimination pass suffices.
        active = self.n + self.n_slacks
        row = self.coef[r, :active]
        coeffs = row[self.basis[: r - 1]].copy()
        if np.any(coeffs != 0.0):
            row -= coeffs @ self.coef[1:r, :active]
            self.rhs[r] -= coeffs @ self.rhs[1:r]
        return self._dual()

    def solution(self) -> np.ndarray:
        x = np.zeros(self.n)
        for r in range(1, self.n_rows + 1):
            if self.basis[r - 1] < self.n:
                x[self.basis[r - 1]] = self.rhs[r]
        return self.lower + x


def _tuple_anchors(bank: SampleBank, tuple_index) -> np.ndarray:
    idx = tuple(int(j) for j in tuple_index)
    if len(idx) != bank.n_predictors:
        raise InvalidArgumentError("tuple index length must equal the predictor count")
    rows = []
    for k, j in enumerate(idx):
        if not 0 <= j < bank.sizes[k]:
            raise InvalidArgumentError(f"sample index {j} outside predictor {k}'s bank")
        rows.append(bank.samples[k][j])
    return np.vstack(rows)  # (K, D)


def _max_violation(envelope: QuantileEnvelope, anchors: np.ndarray, c: np.ndarray) -> float:
    distances = np.linalg.norm(anchors - c[None, :], axis=1)
    projected = envelope.dirs.directions @ distances
    return float(np.max(projected - envelope.final_thresholds))


def _feasible_candidate(envelope: QuantileEnvelope, anchors: np.ndarray):
    """Search the segments from the anchor centroid toward each anchor for a
    member point; the max constraint violation is convex along each segment."""
    centroid = anchors.mean(axis=0)
    for cand in [centroid, *anchors]:
        if _max_violation(envelope, anchors, cand) <= KELLEY_VIOLATION_TOL:
            return cand
    for k in range(anchors.shape[0]):
        lo_pt, hi_pt = centroid, anchors[k]
        lo, hi = 0.0, 1.0
        for _ in range(60):
            third = (hi - lo) / 3.0
            m1, m2 = lo + third, hi - third
            v1 = _max_violation(envelope, anchors, lo_pt + m1 * (hi_pt - lo_pt))
            v2 = _max_violation(envelope, anchors, lo_pt + m2 * (hi_pt - lo_pt))
            if v1 <= KELLEY_VIOLATION_TOL:
                return lo_pt + m1 * (hi_pt - lo_pt)
            if v2 <= KELLEY_VIOLATION_TOL:
                return lo_pt + m2 * (hi_pt - lo_pt)
            if v1 < v2:
                hi = m2
            else:
                lo = m1
    return None


def _ball_intersection_max(w: np.ndarray, anchors: np.ndarray, radii, max_iter: int = 80):
    """Maximize w.c over the intersection of balls ||c - a_k|| <= r_k.

    Solved through the dual: c(lam) = (w/2 + sum lam_k a_k) / sum lam_k with
    lam >= 0 found by a projected, damped Newton method on the smooth convex
    dual. Returns (value, c, lam); lam doubles as the supergradient source
    for the value's dependence on the radii (dV/dr_k = 2 lam_k r_k).
    A single active ball has a closed form and is tried first. Radii are
    floored at a tiny positive value, which only ever loosens the problem.
    """
    n_balls, dim = anchors.shape
    radii = np.maximum(np.asarray(radii, dtype=float), 1e-9)
    w_norm = float(np.linalg.norm(w))
    if w_norm == 0.0:
        return 0.0, anchors.mean(axis=0), np.zeros(n_balls)
    # Single active ball: c = a_k + r_k w/|w| is optimal when it satisfies
    # the other balls (KKT with one multiplier).
    for k in range(n_balls):
        cand = anchors[k] + (radii[k] / w_norm) * w
        ok = True
        for j in range(n_balls):
            if j != k and np.linalg.norm(cand - anchors[j]) > radii[j] + 1e-12:
                ok = False
                break
        if ok:
            lam = np.zeros(n_balls)
            lam[k] = w_norm / (2.0 * radii[k])
            return float(w @ cand), cand, lam

    lam = np.full(n_balls, w_norm / (2.0 * float(np.mean(radii))))
    r_sq = radii**2

    def dual_parts(lam_vec):
        s = float(np.sum(lam_vec))
        c = (0.5 * w + lam_vec @ anchors) / s
        diffs = c[None, :] - anchors
        dist_sq = np.einsum("kd,kd->k", diffs, diffs)
        g = float(w @ c) - float(lam_vec @ (dist_sq - r_sq))
        return g, c, diffs, dist_sq, s

    g, c, diffs, dist_sq, s = dual_parts(lam)
    for _ in range(max_iter):
        grad = r_sq - dist_sq  # dual gradient
        free = (lam > 0) | (grad < 0)
        kkt = max(float(np.max(np.abs(grad[free]))) if np.any(free) else 0.0, 0.0)
        if kkt <= DUAL_TOL * max(1.0, float(np.max(r_sq))):
            break
        hess = 2.0 * (diffs @ diffs.T) / s
        step = np.zeros(n_balls)
        f_idx = np.nonzero(free)[0]
        h_ff = hess[np.ix_(f_idx, f_idx)] + 1e-12 * np.eye(f_idx.size)
        try:
            step[f_idx] = np.linalg.solve(h_ff, -grad[f_idx])
        except np.linalg.LinAlgError:
            step[f_idx] = -grad[f_idx]
        # Backtracking on the convex dual.
        t = 1.0
        for _ in range(40):
            trial = np.maximum(lam + t * step, 0.0)
            if float(np.sum(trial)) <= 0.0:
                t *= 0.5
                continue
            g_new, c_new, diffs_new, dist_sq_new, s_new = dual_parts(trial)
            if g_new <= g + 1e-14 * abs(g):
                lam, g, c, diffs, dist_sq, s = trial, g_new, c_new, diffs_new, dist_sq_new, s_new
                break
            t *= 0.5
        else:
            break
    return float(w @ c), c, lam


class _TupleSolver:
    """Cutting-plane state for one sample tuple's convex feasible set.

    Feasibility is established once (independent of the objective); every
    maximization builds a fresh hypograph model in distance space, which is
    cheap because the master has only K+1 variables.
    """

    def __init__(self, bank: SampleBank, envelope: QuantileEnvelope, tuple_index):
        if envelope.is_vacuous:
            raise InvalidArgumentError("inner maximization requires a non-vacuous envelope")
        self.envelope = envelope
        self.anchors = _tuple_anchors(bank, tuple_index)
        self.n_anchors, self.dim = self.anchors.shape
        self.feasible_point = _feasible_candidate(envelope, self.anchors)
        # Valid distance bounds: each direction caps its heaviest coordinate
        # by sqrt(K) q_max, and the triangle inequality extends the cap
        # across anchors.
        spread = 0.0
        for k in range(self.n_anchors):
            for j in range(k + 1, self.n_anchors):
                spread = max(spread, float(np.linalg.norm(self.anchors[k] - self.anchors[j])))
        q_max = float(np.max(envelope.final_thresholds))
        self.r_max = q_max * math.sqrt(self.n_anchors) + spread

    def maximize(self, w: np.ndarray, max_cuts: int = DEFAULT_MAX_CUTS,
                 tol: float = KELLEY_VIOLATION_TOL) -> InnerMaxResult:
        if self.feasible_point is None:
            return InnerMaxResult(False, None, -math.inf, "infeasible")
        if not np.any(w):
            return InnerMaxResult(True, np.array(self.feasible_point, copy=True), 0.0,
                                  "optimal")
        if self.n_anchors == 1 and self.envelope.n_directions == 1:
            return self._single_ball(w)
        return self._hypograph_kelley(np.asarray(w, dtype=float), max_cuts, tol)

    def _single_ball(self, w) -> InnerMaxResult:
        radius = float(self.envelope.final_thresholds[0] / self.envelope.dirs.directions[0, 0])
        value, c_star, _ = _ball_intersection_max(w, self.anchors, np.array([radius]))
        return InnerMaxResult(True, c_star, value, "optimal", violation=0.0)

    def _hypograph_kelley(self, w, max_cuts: int, tol: float) -> InnerMaxResult:
        envelope = self.envelope
        k = self.n_anchors
        r_feas = np.linalg.norm(self.anchors - self.feasible_point[None, :], axis=1)
        v_feas, c_feas, lam = _ball_intersection_max(w, self.anchors, r_feas)

        # Master over (theta, r): maximize theta subject to the envelope rows
        # and hypograph cuts theta <= V(r_bar) + 2 (lam*r_bar).(r - r_bar).
        slope = 2.0 * lam * r_feas
        bound = abs(v_feas) + float(slope @ np.full(k, self.r_max)) + float(np.abs(slope) @ r_feas) + 1.0
        master = _KelleyMaster(
            lower=np.concatenate([[-bound], np.zeros(k)]),
            upper=np.concatenate([[bound], np.full(k, self.r_max)]),
            capacity=envelope.n_directions + k * k + max_cuts + 4,
        )
        master.set_objective(np.concatenate([[1.0], np.zeros(k)]))
        ok = True
        for m in range(envelope.n_directions):
            ok = ok and master.add_cut(np.concatenate([[0.0], envelope.dirs.directions[m]]),
                                       float(envelope.final_thresholds[m]))
        # Pairwise intersection rows r_j + r_k >= |a_j - a_k| keep proposals
        # in the value function's domain (exact for two anchors).
        for j in range(k):
            for kk in range(j + 1, k):
                row = np.zeros(k + 1)
                row[1 + j] = -1.0
                row[1 + kk] = -1.0
                ok = ok and master.add_cut(row, -float(np.linalg.norm(self.anchors[j] - self.anchors[kk])))
        if not ok:
            return InnerMaxResult(False, None, -math.inf, "infeasible")

        def add_hypograph_cut(r_bar, value, lam_bar) -> bool:
            slope_bar = 2.0 * lam_bar * np.maximum(r_bar, 1e-9)
            rhs = value - float(slope_bar @ r_bar)
            return master.add_cut(np.concatenate([[1.0], -slope_bar]), rhs)

        def evaluate(r_bar):
            # Uniform inflation fallback for the rare empty-intersection
            # proposal with three or more anchors (two-anchor emptiness is
            # excluded by the pairwise rows); the hypograph cut at inflated
            # radii is still globally valid by concavity.
            value, c_bar, lam_bar = _ball_intersection_max(w, self.anchors, r_bar)
            dist = np.linalg.norm(self.anchors - c_bar[None, :], axis=1)
            if float(np.max(dist - np.maximum(r_bar, 1e-9))) <= 1e-7 * max(1.0, self.r_max):
                return r_bar, value, c_bar, lam_bar, True
            delta = float(np.max(dist - r_bar))
            inflated = r_bar + delta
            value, c_bar, lam_bar = _ball_intersection_max(w, self.anchors, inflated)
            return inflated, value, c_bar, lam_bar, False

        best_value, best_c = v_feas, c_feas
        if not add_hypograph_cut(r_feas, v_feas, lam):
            return InnerMaxResult(False, None, -math.inf, "infeasible")

        gap = math.inf
        for cuts_added in range(1, max_cuts + 1):
            z = master.solution()
            theta_bar, r_bar = float(z[0]), np.maximum(z[1:], 0.0)
            r_eval, value, c_bar, lam_bar, clean = evaluate(r_bar)
            if clean and value > best_value:
                best_value, best_c = value, c_bar
            gap = theta_bar - best_value
            if gap <= max(tol, 1e-9 * max(1.0, abs(best_value))):
                return InnerMaxResult(True, best_c, best_value, "optimal",
                                      violation=self._violation(best_c), n_cuts=cuts_added)
            if not add_hypograph_cut(r_eval, value, lam_bar):
                return InnerMaxResult(False, None, -math.inf, "infeasible")
        return InnerMaxResult(True, best_c, best_value, "approximate",
                              violation=max(self._violation(best_c), gap), n_cuts=max_cuts)

    def _violation(self, c) -> float:
        return max(_max_violation(self.envelope, self.anchors, c), 0.0)


def inner_max(w, bank: SampleBank, envelope: QuantileEnvelope, tuple_index,
              max_cuts: int = DEFAULT_MAX_CUTS) -> InnerMaxResult:
    """Cutting-plane maximization of c.w over one tuple's feasible set.

    The feasible set is {c : U s(c) <= final thresholds} with s(c) the vector
    of distances to the tuple's anchor samples. Kelley-style first-order cuts
    are accumulated on the concave distance-space value function until the
    incumbent is optimal within tolerance; the returned candidate satisfies
    every envelope constraint within 1e-6 slack. Returns infeasible when no
    member point exists along the centroid-to-anchor segments (or the master
    LP collapses); exhausting the cut budget yields an approximate result.
    """
    weights = as_float_array(w, "w").ravel()
    solver = _TupleSolver(bank, envelope, tuple_index)
    if weights.size != solver.dim:
        raise InvalidArgumentError(f"w has dimension {weights.size}, samples have {solver.dim}")
    return solver.maximize(weights, max_cuts=max_cuts)


def robust_value(w, bank: SampleBank, envelope: QuantileEnvelope,
                 solvers: dict | None = None, max_cuts: int = DEFAULT_MAX_CUTS,
                 tol: float = KELLEY_VIOLATION_TOL):
    """Worst-case cost of w over the whole region: max over sample tuples.

    Tuples are enumerated exhaustively over the product of per-predictor
    sample indices (capped), with infeasible tuples skipped; if every tuple
    is infeasible the region excludes all candidates and an error is raised.
    ``solvers`` optionally carries per-tuple solver state across calls.
    """
    weights = as_float_array(w, "w").ravel()
    sizes = bank.sizes
    n_tuples = int(np.prod(sizes))
    if n_tuples > MAX_TUPLES:
        raise InvalidArgumentError(f"{n_tuples} sample tuples exceed the cap of {MAX_TUPLES}")
    best_value = -math.inf
    best_c = None
    any_feasible = False
    for tup in itertools.product(*(range(j) for j in sizes)):
        if solvers is None:
            solver = _TupleSolver(bank, envelope, tup)
        else:
            solver = solvers.get(tup)
            if solver is None:
                solver = solvers[tup] = _TupleSolver(bank, envelope, tup)
        result = solver.maximize(weights, max_cuts=max_cuts, tol=tol)
        if not result.feasible:
            continue
        any_feasible = True
        if result.value > best_value:
            best_value = result.value
            best_c = result.c_star
    if not any_feasible:
        raise EmptyRegionError("every sample tuple is infeasible; the region excludes all candidates")
    return best_value, best_c


@dataclass
class RobustSolution:
    """Flow, robust objective, and convergence diagnostics of the outer loop."""

    flow: np.ndarray
    value: float
    gap: float
    iterations: int
    status: str  # "converged" or "approximate"
    worst_case_trace: list = field(default_factory=list)
    value_trace: list = field(default_factory=list)


def _polytope_lmo(problem: FlowProblem, costs: np.ndarray) -> np.ndarray:
    if np.all(costs >= 0):
        return shortest_path_lmo(problem, costs)
    flow, _ = min_cost_flow_lp(problem, costs)
    return flow


class _PolytopeProjector:
    """Euclidean projection onto {w in [0,1]^E : A w = b} by Dykstra's
    alternating projections between the affine flow constraints (closed form
    through a cached pseudo-inverse) and the box."""

    def __init__(self, problem: FlowProblem):
        a = problem.incidence_matrix()
        self.a = a
        self.b = problem.demand_vector()
        self.gram_pinv = np.linalg.pinv(a @ a.T)

    def _affine(self, point: np.ndarray) -> np.ndarray:
        return point - self.a.T @ (self.gram_pinv @ (self.a @ point - self.b))

    def project(self, point: np.ndarray, iters: int = 500, tol: float = 1e-10) -> np.ndarray:
        x = point
        p = np.zeros_like(point)
        q = np.zeros_like(point)
        for _ in range(iters):
            y = self._affine(x + p)
            p = x + p - y
            x_new = np.clip(y + q, 0.0, 1.0)
            q = y + q - x_new
            if np.max(np.abs(x_new - x)) <= tol and np.max(np.abs(self.a @ x_new - self.b)) <= 1e-9:
                return x_new
            x = x_new
        return x


def robust_route(problem: FlowProblem, bank: SampleBank, envelope: QuantileEnvelope,
                 iters: int = 50, mode: str = "frank_wolfe", eta: float | None = None,
                 gap_tol: float = 1e-3, max_cuts: int = DEFAULT_MAX_CUTS) -> RobustSolution:
    """Minimize the worst-case routing cost over the flow polytope.

    ``frank_wolfe`` (default) uses the worst-case cost vector as the Danskin
    subgradient, a shortest-path linear oracle and step 2/(t+2), reporting
    the Frank-Wolfe gap each iteration and returning the best iterate by
    robust value. ``projected_subgradient`` follows the literal gradient
    recipe and requires a step size ``eta``; the polytope projection is an
    auxiliary LP.
    """
    iters = check_positive_int(iters, "iters")
    if mode not in ("frank_wolfe", "projected_subgradient"):
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    if mode == "projected_subgradient" and (eta is None or eta <= 0):
        raise InvalidArgumentError("projected_subgradient mode requires a positive eta")
    if envelope.is_vacuous:
        raise InvalidArgumentError("robust routing requires a non-vacuous envelope")
    if int(np.prod(bank.sizes)) > MAX_TUPLES:
        raise InvalidArgumentError("sample bank induces too many tuples")
    if bank.dim != problem.n_edges:
        raise InvalidArgumentError("sample dimension must equal the edge count")

    solvers: dict = {}
    projector = _PolytopeProjector(problem) if mode == "projected_subgradient" else None
    w = shortest_path_lmo(problem, problem.nominal_costs)
    best_w, best_value = w, math.inf
    min_gap = math.inf
    trace_c, trace_v = [], []

    for t in range(iters):
        value, c_star = robust_value(w, bank, envelope, solvers=solvers, max_cuts=max_cuts)
        trace_c.append(c_star)
        trace_v.append(value)
        if value < best_value:
            best_value, best_w = value, w.copy()
        vertex = _polytope_lmo(problem, c_star)
        gap = float((w - vertex) @ c_star)
        min_gap = min(min_gap, gap)
        if gap <= gap_tol:
            return RobustSolution(best_w, best_value, min_gap, t + 1, "converged",
                                  trace_c, trace_v)
        if mode == "frank_wolfe":
            w = w + (2.0 / (t + 2.0)) * (vertex - w)
        else:
            w = projector.project(w - eta * c_star)
    status = "converged" if min_gap <= gap_tol else "approximate"
    return RobustSolution(best_w, best_value, min_gap, iters, status, trace_c, trace_v)


def suboptimality_gap(realized_costs, w_robust, problem: FlowProblem) -> float:
    """Relative regret of the robust flow against the hindsight shortest path,
    clamped to [0, 1]."""
    costs = as_float_array(realized_costs, "realized_costs").ravel()
    if np.any(costs < 0):
        raise InvalidArgumentError("realized costs must be nonnegative")
    flow = as_float_array(w_robust, "w_robust").ravel()
    if costs.size != problem.n_edges or flow.size != problem.n_edges:
        raise InvalidArgumentError("vector lengths must match the edge count")
    opt_flow = shortest_path_lmo(problem, costs)
    opt_value = float(costs @ opt_flow)
    if opt_value <= 0.0:
        raise UndefinedMetricError("hindsight optimum is zero; the gap proportion is undefined")
    gap = (float(costs @ flow) - opt_value) / opt_value
    return float(min(max(gap, 0.0), 1.0))
