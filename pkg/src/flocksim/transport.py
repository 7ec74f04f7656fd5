"""Exact distances between discrete probability measures.

Wasserstein-1 is solved as a transportation problem on the complete
bipartite graph with a primal network simplex (north-west-corner start,
Dantzig pricing with a Bland's-rule fallback on degeneracy).  Equal-weight
clouds whose sizes divide route through an assignment fast path.  The
bounded-Lipschitz distance is the dense LP over potentials on the union
support.  Small brute-force oracles are provided for tests.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog
from scipy.sparse import coo_matrix

from .kinetic import EmpiricalMeasure

_WEIGHT_TOL = 1e-9
_BRUTEFORCE_CAP = 64
_BL_CAP = 512
_DENSE_COST_CAP = 10_000_000


class TransportError(RuntimeError):
    """Internal solver failure (cycling guard exceeded)."""


@dataclass(frozen=True)
class GroundMetric:
    """Ground distance between atoms.

    ``euclidean`` is the norm of the full coordinate difference.
    ``sum_of_norms`` splits coordinates into a leading block of ``x_dim``
    entries and the rest, and adds the two block norms.
    """

    kind: str = "euclidean"
    x_dim: int | None = None

    def __post_init__(self):
        if self.kind not in ("euclidean", "sum_of_norms"):
            raise ValueError(f"unknown ground metric {self.kind!r}")
        if self.kind == "sum_of_norms" and (self.x_dim is None or self.x_dim < 1):
            raise ValueError("sum_of_norms needs a positive x_dim block size")

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        diff = a[:, None, :] - b[None, :, :]
        if self.kind == "euclidean":
            return np.linalg.norm(diff, axis=-1)
        k = self.x_dim
        return (np.linalg.norm(diff[:, :, :k], axis=-1)
                + np.linalg.norm(diff[:, :, k:], axis=-1))

    def distance(self, p, q) -> float:
        return float(self.pairwise(np.atleast_2d(p), np.atleast_2d(q))[0, 0])


@dataclass
class DiscreteMeasure:
    """Finitely supported probability measure: points and positive weights.

    Weight sums within floating-point slack of one are renormalized on
    construction.
    """

    points: np.ndarray   # (k, dim)
    weights: np.ndarray  # (k,)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.points.shape[0],):
            raise ValueError("weights must match the number of points")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        if not np.isfinite(self.points).all():
            raise ValueError("points must be finite")
        total = self.weights.sum()
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights sum to {total}, not 1")
        self.weights = self.weights / total

    @classmethod
    def from_empirical(cls, mu: EmpiricalMeasure) -> "DiscreteMeasure":
        return cls(np.concatenate([mu.x, mu.v], axis=1), mu.w.copy())


@dataclass
class TransportPlan:
    """Sparse coupling certificate: (source, target, mass) triples and cost."""

    sources: np.ndarray
    targets: np.ndarray
    masses: np.ndarray
    cost: float

    def marginals(self, m: int, n: int):
        row = np.zeros(m)
        col = np.zeros(n)
        np.add.at(row, self.sources, self.masses)
        np.add.at(col, self.targets, self.masses)
        return row, col

    def recompute_cost(self, cost_matrix: np.ndarray) -> float:
        return float(np.sum(cost_matrix[self.sources, self.targets] * self.masses))


def _northwest_corner(a: np.ndarray, b: np.ndarray):
    """Initial basic feasible solution: exactly m + n - 1 basic arcs."""
    m, n = len(a), len(b)
    ra, rb = a.copy(), b.copy()
    arcs_i = np.empty(m + n - 1, dtype=np.int64)
    arcs_j = np.empty(m + n - 1, dtype=np.int64)
    flow = np.empty(m + n - 1)
    i = j = 0
    for k in range(m + n - 1):
        t = min(ra[i], rb[j])
        arcs_i[k], arcs_j[k], flow[k] = i, j, max(t, 0.0)
        ra[i] -= t
        rb[j] -= t
        if (ra[i] <= rb[j] or j == n - 1) and i < m - 1:
            i += 1
        else:
            j += 1
    return arcs_i, arcs_j, flow


def _solve_network_simplex(a: np.ndarray, b: np.ndarray, cost: np.ndarray):
    """Primal network simplex for the balanced transportation problem."""
    m, n = cost.shape
    bi, bj, flow = _northwest_corner(a, b)
    nb = m + n - 1
    eps = 1e-12 * max(1.0, float(np.max(np.abs(cost))))
    max_pivots = 200 * (m + n) * max(m, n)
    degenerate_streak = 0
    bland = False

    for _ in range(max_pivots):
        # Tree adjacency and duals (u on sources, w on sinks).
        adj = [[] for _ in range(m + n)]
        for k in range(nb):
            adj[bi[k]].append((m + bj[k], k))
            adj[m + bj[k]].append((bi[k], k))
        u = np.zeros(m)
        w = np.zeros(n)
        seen = np.zeros(m + n, dtype=bool)
        parent = np.full(m + n, -1, dtype=np.int64)
        parent_arc = np.full(m + n, -1, dtype=np.int64)
        stack = [0]
        seen[0] = True
        order = []
        while stack:
            node = stack.pop()
            order.append(node)
            for (nbr, k) in adj[node]:
                if not seen[nbr]:
                    seen[nbr] = True
                    parent[nbr] = node
                    parent_arc[nbr] = k
                    if nbr >= m:
                        w[nbr - m] = cost[bi[k], bj[k]] - u[node]
                    else:
                        u[nbr] = cost[bi[k], bj[k]] - w[node - m]
                    stack.append(nbr)
        if not seen.all():
            raise TransportError("basis lost tree connectivity")

        reduced = cost - u[:, None] - w[None, :]
        if bland:
            cand = np.argwhere(reduced < -eps)
            if len(cand) == 0:
                break
            ei, ej = int(cand[0, 0]), int(cand[0, 1])
        else:
            flat = int(np.argmin(reduced))
            ei, ej = flat // n, flat % n
            if reduced[ei, ej] >= -eps:
                break

        # Cycle: entering arc plus the tree path from sink m+ej back to
        # source ei.  Collect the two root-ward arc lists up to the apex.
        na, nb_node = ei, m + ej
        path_a, path_b = [], []
        da, db = _depth(parent, na), _depth(parent, nb_node)
        while da > db:
            path_a.append(parent_arc[na]); na = parent[na]; da -= 1
        while db > da:
            path_b.append(parent_arc[nb_node]); nb_node = parent[nb_node]; db -= 1
        while na != nb_node:
            path_a.append(parent_arc[na]); na = parent[na]
            path_b.append(parent_arc[nb_node]); nb_node = parent[nb_node]

        # Walk the directed cycle from m+ej through the apex down to ei.
        # A basic arc carries flow from its source to its sink: traversing it
        # sink-to-source decreases flow, source-to-sink increases it.
        cycle, signs = [], []
        node = m + ej
        for k in path_b + path_a[::-1]:
            cycle.append(k)
            if node == m + bj[k]:
                signs.append(-1.0)
                node = bi[k]
            else:
                signs.append(+1.0)
                node = m + bj[k]
        if node != ei:
            raise TransportError("cycle walk did not close")

        dec = [k for k, s in zip(cycle, signs) if s < 0]
        if not dec:
            raise TransportError("no leaving arc found (unbounded pivot)")
        theta = min(flow[k] for k in dec)
        # Deterministic anti-cycling tie-break: smallest basis index at theta.
        leave_k = min(k for k in dec if flow[k] <= theta)

        for k, s in zip(cycle, signs):
            flow[k] += s * theta
        flow = np.maximum(flow, 0.0)
        if theta <= eps:
            degenerate_streak += 1
            if degenerate_streak > 50 * (m + n):
                bland = True
        else:
            degenerate_streak = 0
        bi[leave_k], bj[leave_k], flow[leave_k] = ei, ej, theta
    else:
        raise TransportError("pivot limit exceeded")

    total = float(np.sum(cost[bi, bj] * flow))
    return bi, bj, flow, total


def _depth(parent, node):
    depth = 0
    while parent[node] != -1:
        node = parent[node]
        depth += 1
    return depth


def _uniform(wts: np.ndarray) -> bool:
    return bool(np.all(np.abs(wts - 1.0 / len(wts)) <= 1e-12))


def _assignment_path(cost: np.ndarray, m: int, n: int):
    """Equal-weight fast path; the smaller side is replicated so both sides
    have lcm(m, n) unit atoms and the problem becomes an assignment."""
    L = math.lcm(m, n)
    km, kn = L // m, L // n
    big = np.repeat(np.repeat(cost, km, axis=0), kn, axis=1)
    rows, cols = linear_sum_assignment(big)
    mass = 1.0 / L
    src = rows // km
    tgt = cols // kn
    total = float(big[rows, cols].sum() * mass)
    # Merge duplicate (source, target) pairs into one plan entry.
    key = src * n + tgt
    uniq, inv = np.unique(key, return_inverse=True)
    masses = np.zeros(len(uniq))
    np.add.at(masses, inv, mass)
    return uniq // n, uniq % n, masses, total


def w1(mu: DiscreteMeasure, nu: DiscreteMeasure,
       metric: GroundMetric = GroundMetric()) -> tuple[float, TransportPlan]:
    """Exact Wasserstein-1 distance and an optimal coupling certificate."""
    if mu.points.shape[1] != nu.points.shape[1]:
        raise ValueError("point dimensions differ")
    m, n = len(mu.weights), len(nu.weights)
    if m * n > _DENSE_COST_CAP:
        raise ValueError(f"instance too large for the dense cost matrix ({m}x{n})")
    cost = metric.pairwise(mu.points, nu.points)

    if _uniform(mu.weights) and _uniform(nu.weights) and math.lcm(m, n) <= 4 * max(m, n):
        src, tgt, masses, total = _assignment_path(cost, m, n)
    else:
        a = mu.weights.copy()
        b = nu.weights * (a.sum() / nu.weights.sum())
        bi, bj, flow, total = _solve_network_simplex(a, b, cost)
        keep = flow > 1e-15
        src, tgt, masses = bi[keep], bj[keep], flow[keep]
    plan = TransportPlan(np.asarray(src), np.asarray(tgt), np.asarray(masses), total)
    return total, plan


def w1_bruteforce(mu: DiscreteMeasure, nu: DiscreteMeasure,
                  metric: GroundMetric = GroundMetric()) -> float:
    """Independent small-instance oracle for :func:`w1`.

    Equal-weight square instances are solved by exhaustive permutation
    enumeration; everything else by a dense LP over the transportation
    polytope.  Capped at m * n <= 64.
    """
    m, n = len(mu.weights), len(nu.weights)
    if m * n > _BRUTEFORCE_CAP:
        raise ValueError(f"brute-force oracle capped at m*n <= {_BRUTEFORCE_CAP}")
    cost = metric.pairwise(mu.points, nu.points)
    if m == n and _uniform(mu.weights) and _uniform(nu.weights):
        best = math.inf
        for perm in itertools.permutations(range(n)):
            best = min(best, sum(cost[i, perm[i]] for i in range(n)))
        return best / n

    # Dense transportation LP: minimize c.x with exact marginal equalities.
    c = cost.reshape(-1)
    rows, cols, vals = [], [], []
    for i in range(m):
        for j in range(n):
            rows.append(i); cols.append(i * n + j); vals.append(1.0)
            rows.append(m + j); cols.append(i * n + j); vals.append(1.0)
    A = coo_matrix((vals, (rows, cols)), shape=(m + n, m * n))
    rhs = np.concatenate([mu.weights, nu.weights * (mu.weights.sum() / nu.weights.sum())])
    res = linprog(c, A_eq=A, b_eq=rhs, bounds=(0, None), method="highs")
    if not res.success:
        raise TransportError(f"oracle LP failed: {res.message}")
    return float(res.fun)


def bounded_lipschitz(mu: DiscreteMeasure, nu: DiscreteMeasure,
                      metric: GroundMetric = GroundMetric()) -> float:
    """Exact bounded-Lipschitz distance via the potential LP.

    Maximizes the integral gap over test functions bounded by one in sup
    norm with Lipschitz constant at most one under the ground metric,
    discretized exactly on the union support.
    """
    if mu.points.shape[1] != nu.points.shape[1]:
        raise ValueError("point dimensions differ")
    if len(mu.weights) + len(nu.weights) > _BL_CAP:
        raise ValueError(f"bounded-Lipschitz LP capped at {_BL_CAP} atoms")
    pts, signed = _union_support(mu, nu)
    k = len(signed)
    if k == 1:
        return 0.0
    dmat = metric.pairwise(pts, pts)
    iu, ju = np.triu_indices(k, 1)
    nc = len(iu)
    rows = np.concatenate([np.arange(nc), np.arange(nc),
                           nc + np.arange(nc), nc + np.arange(nc)])
    cols = np.concatenate([iu, ju, iu, ju])
    vals = np.concatenate([np.ones(nc), -np.ones(nc), -np.ones(nc), np.ones(nc)])
    A = coo_matrix((vals, (rows, cols)), shape=(2 * nc, k))
    ub = np.concatenate([dmat[iu, ju], dmat[iu, ju]])
    res = linprog(-signed, A_ub=A, b_ub=ub, bounds=(-1.0, 1.0), method="highs")
    if not res.success:
        raise TransportError(f"bounded-Lipschitz LP failed: {res.message}")
    return float(-res.fun)


def _union_support(mu: DiscreteMeasure, nu: DiscreteMeasure):
    """Union points with signed weights mu - nu; exact duplicates merged."""
    pts = np.concatenate([mu.points, nu.points], axis=0)
    signed = np.concatenate([mu.weights, -nu.weights])
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    merged = np.zeros(len(uniq))
    np.add.at(merged, inv, signed)
    return uniq, merged


def bl_flow_oracle(mu: DiscreteMeasure, nu: DiscreteMeasure,
                   metric: GroundMetric = GroundMetric()) -> float:
    """Independent oracle for :func:`bounded_lipschitz`.

    Solves the dual mass-moving formulation: surplus mass flows to deficit
    points at ground cost capped by routing through a slack node at unit
    cost per side.  Cast as a balanced transportation problem and solved
    with the network simplex.
    """
    pts, signed = _union_support(mu, nu)
    pos = signed > 1e-15
    neg = signed < -1e-15
    if not pos.any() or not neg.any():
        return 0.0
    P, M = pts[pos], pts[neg]
    mp, mn = len(P), len(M)
    # Surplus -> deficit at cost min(d, 2); dumping surplus or creating
    # deficit mass through the slack node costs 1 per unit and side.
    cost = np.ones((mp + 1, mn + 1))
    cost[:mp, :mn] = np.minimum(metric.pairwise(P, M), 2.0)
    cost[mp, mn] = 0.0
    supplies = np.append(signed[pos], float(-signed[neg].sum()))
    demands = np.append(-signed[neg], float(signed[pos].sum()))
    demands *= supplies.sum() / demands.sum()
    _, _, _, total = _solve_network_simplex(supplies, demands, cost)
    return total


def dirac_flocking_distance(mu: EmpiricalMeasure, v_ref,
                            metric: GroundMetric = GroundMetric()) -> float:
    """W1 distance from the measure to its position marginal with every
    atom's velocity replaced by ``v_ref``."""
    v_ref = np.asarray(v_ref, dtype=float)
    a = DiscreteMeasure.from_empirical(mu)
    flat_v = np.broadcast_to(v_ref, mu.v.shape)
    b = DiscreteMeasure(np.concatenate([mu.x, flat_v], axis=1), mu.w.copy())
    value, _ = w1(a, b, metric)
    return value
