"""Directed flow problems: incidence structure, LP form, and a shortest-path
linear-minimization oracle over the unit-flow polytope."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_vector
from .errors import InfeasibleProblemError, InvalidArgumentError
from .lp import LinearProgram, LPStatus, simplex_solve


@dataclass(frozen=True)
class FlowProblem:
    """Unit s -> t routing over a directed graph with nominal edge costs.

    Edges are (tail, head) pairs over integer vertex ids 0..n_vertices-1.
    The feasible flows are {w in [0,1]^E : A w = b} with A the incidence
    matrix (+1 at the tail, -1 at the head of each edge) and b the unit
    source/sink vector.
    """

    n_vertices: int
    edges: tuple
    nominal_costs: np.ndarray
    source: int
    target: int

    def __post_init__(self):
        if self.n_vertices < 2:
            raise InvalidArgumentError("flow problem needs at least 2 vertices")
        if self.source == self.target:
            raise InvalidArgumentError("source and target must differ")
        for v in (self.source, self.target):
            if not 0 <= v < self.n_vertices:
                raise InvalidArgumentError(f"vertex {v} outside [0, {self.n_vertices})")
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        if len(edges) < 1:
            raise InvalidArgumentError("flow problem needs at least one edge")
        for a, b in edges:
            if not (0 <= a < self.n_vertices and 0 <= b < self.n_vertices):
                raise InvalidArgumentError(f"edge ({a}, {b}) references an unknown vertex")
            if a == b:
                raise InvalidArgumentError("self-loops are not allowed")
        costs = check_vector(self.nominal_costs, "nominal_costs", nonneg=True)
        if costs.size != len(edges):
            raise InvalidArgumentError("cost vector length must match the edge count")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "nominal_costs", costs)
        if not self._reachable():
            raise InvalidArgumentError("target is not reachable from source")

    def _reachable(self) -> bool:
        adjacency = [[] for _ in range(self.n_vertices)]
        for a, b in self.edges:
            adjacency[a].append(b)
        seen = {self.source}
        stack = [self.source]
        while stack:
            v = stack.pop()
            if v == self.target:
                return True
            for nxt in adjacency[v]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def incidence_matrix(self) -> np.ndarray:
        a = np.zeros((self.n_vertices, self.n_edges))
        for e, (tail, head) in enumerate(self.edges):
            a[tail, e] = 1.0
            a[head, e] = -1.0
        return a

    def demand_vector(self) -> np.ndarray:
        b = np.zeros(self.n_vertices)
        b[self.source] = 1.0
        b[self.target] = -1.0
        return b

    def as_linear_program(self, edge_costs, maximize: bool = False) -> LinearProgram:
        costs = check_vector(edge_costs, "edge_costs")
        if costs.size != self.n_edges:
            raise InvalidArgumentError("edge cost vector has the wrong length")
        return LinearProgram(
            objective=costs,
            a_eq=self.incidence_matrix(),
            b_eq=self.demand_vector(),
            lower=np.zeros(self.n_edges),
            upper=np.ones(self.n_edges),
            maximize=maximize,
        )


def shortest_path_lmo(problem: FlowProblem, edge_costs) -> np.ndarray:
    """Indicator flow of a minimum-cost source->target path under the costs.

    Dijkstra over the directed edge list; requires nonnegative costs. The
    returned vertex of the flow polytope matches the LP optimum in value
    (ties may pick a different path).
    """
    costs = check_vector(edge_costs, "edge_costs", nonneg=True)
    if costs.size != problem.n_edges:
        raise InvalidArgumentError("edge cost vector has the wrong length")
    adjacency = [[] for _ in range(problem.n_vertices)]
    for e, (tail, head) in enumerate(problem.edges):
        adjacency[tail].append((head, e))
    dist = np.full(problem.n_vertices, math.inf)
    parent_edge = np.full(problem.n_vertices, -1, dtype=int)
    dist[problem.source] = 0.0
    heap = [(0.0, problem.source)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        if v == problem.target:
            break
        for head, e in adjacency[v]:
            nd = d + costs[e]
            if nd < dist[head]:
                dist[head] = nd
                parent_edge[head] = e
                heapq.heappush(heap, (nd, head))
    if not math.isfinite(dist[problem.target]):
        raise InfeasibleProblemError("target is not reachable under the given costs")
    flow = np.zeros(problem.n_edges)
    v = problem.target
    while v != problem.source:
        e = int(parent_edge[v])
        flow[e] = 1.0
        v = problem.edges[e][0]
    return flow


def min_cost_flow_lp(problem: FlowProblem, edge_costs) -> tuple[np.ndarray, float]:
    """Solve the routing LP with the simplex backend (handles negative costs)."""
    result = simplex_solve(problem.as_linear_program(edge_costs))
    if result.status is not LPStatus.OPTIMAL:
        raise InfeasibleProblemError(f"routing LP terminated with status {result.status.value}")
    return result.x, result.value
