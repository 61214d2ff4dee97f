"""Weighted graphs, Laplacians, spanning trees, and Gaussian free fields.

The closed form everything rests on: for a connected weighted graph with a
pinned vertex set P, the integral of ``exp(-1/2 sum_e c_e |phi_u - phi_v|^2)``
over planar fields on the free vertices equals
``(2 pi)^(|V| - |P|) / det(L_P)`` where ``L_P`` is the Laplacian with the
pinned rows and columns removed.  For a single pinned vertex the matrix-tree
theorem identifies ``det(L_P)`` with the conductance-weighted spanning-tree
sum, which ``spanning_tree_sum`` recomputes independently by deletion and
contraction.

The planar field contributes the determinant at power -1 (two independent
scalar fields at power -1/2 each).

Graphs here may have several components: pinned operations require every
component to contain a pinned vertex (otherwise the reduced Laplacian is
singular), which strictly generalizes the connected case and is what fixed
boundary Feynman graphs produce for disjoint collision patterns.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import linalg as sla

__all__ = [
    "WeightedGraph",
    "PlanarField",
    "GffClosedForm",
    "laplacian",
    "reduced_log_determinant",
    "reduced_determinant",
    "spanning_tree_sum",
    "tree_count_bound",
    "gff_log_partition",
    "harmonic_extension",
    "dirichlet_energy",
    "graph_ibp_check",
    "pinned_gaussian_integral",
]

TREE_ENUMERATION_GUARD = 14
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class WeightedGraph:
    """Simple undirected graph with positive conductances.

    Parallel edges passed to the constructor are merged by summing their
    conductances; every formula used here is linear in each conductance, so
    the merge is exact.
    """

    vertex_count: int
    edges: tuple[tuple[int, int, float], ...]
    boundary: tuple[int, ...] = ()

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError("graph needs at least one vertex")
        merged: dict[tuple[int, int], float] = {}
        for u, v, c in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValueError(f"edge ({u},{v}) out of range")
            if not (c > 0.0 and math.isfinite(c)):
                raise ValueError(f"conductance {c!r} on edge ({u},{v}) must be positive finite")
            key = (u, v) if u < v else (v, u)
            merged[key] = merged.get(key, 0.0) + float(c)
        object.__setattr__(self, "edges",
                           tuple((u, v, c) for (u, v), c in sorted(merged.items())))
        for b in self.boundary:
            if not (0 <= b < self.vertex_count):
                raise ValueError(f"boundary vertex {b} out of range")

    # -- structure ---------------------------------------------------------

    def adjacency(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.vertex_count)]
        for u, v, c in self.edges:
            adj[u].append((v, c))
            adj[v].append((u, c))
        return adj

    def components(self) -> list[set[int]]:
        adj = self.adjacency()
        seen = [False] * self.vertex_count
        comps = []
        for start in range(self.vertex_count):
            if seen[start]:
                continue
            comp, todo = {start}, [start]
            seen[start] = True
            while todo:
                u = todo.pop()
                for v, _ in adj[u]:
                    if not seen[v]:
                        seen[v] = True
                        comp.add(v)
                        todo.append(v)
            comps.append(comp)
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) == 1

    def degrees(self) -> list[int]:
        deg = [0] * self.vertex_count
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {"n": self.vertex_count,
                "edges": [[u, v, c] for u, v, c in self.edges],
                "boundary": list(self.boundary)}

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "WeightedGraph":
        return cls(int(doc["n"]),
                   tuple((int(u), int(v), float(c)) for u, v, c in doc["edges"]),
                   tuple(int(b) for b in doc.get("boundary", ())))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class PlanarField:
    """One plane point per vertex, stored as an (n, 2) array."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"field must have shape (n, 2), got {arr.shape}")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class GffClosedForm:
    """Closed-form partition data; ``tree_sum`` is filled when the exhaustive
    enumeration guard allows computing it (single pin, small graph)."""

    log_partition: float
    log_reduced_det: float
    reduced_det: float
    tree_sum: float | None = None


def _check_pinned_cover(graph: WeightedGraph, pinned: Sequence[int]) -> list[int]:
    pinned = sorted(set(int(p) for p in pinned))
    if not pinned:
        raise ValueError("pinned set must be nonempty (full Laplacian is singular)")
    for p in pinned:
        if not (0 <= p < graph.vertex_count):
            raise ValueError(f"pinned vertex {p} out of range")
    pset = set(pinned)
    for comp in graph.components():
        if not comp & pset:
            raise ValueError(
                f"component {sorted(comp)} contains no pinned vertex; "
                "its Gaussian integral diverges")
    return pinned


def laplacian(graph: WeightedGraph) -> np.ndarray:
    """Dense weighted Laplacian D - A."""
    n = graph.vertex_count
    lap = np.zeros((n, n))
    for u, v, c in graph.edges:
        lap[u, u] += c
        lap[v, v] += c
        lap[u, v] -= c
        lap[v, u] -= c
    return lap


def reduced_log_determinant(graph: WeightedGraph, pinned: Sequence[int]) -> float:
    """log det of the Laplacian with pinned rows and columns deleted.

    The reduced matrix is positive definite whenever every component contains
    a pinned vertex; Cholesky both checks that and gives the log-determinant
    stably for widely spread conductances.
    """
    pinned = _check_pinned_cover(graph, pinned)
    keep = [v for v in range(graph.vertex_count) if v not in set(pinned)]
    if not keep:
        return 0.0
    sub = laplacian(graph)[np.ix_(keep, keep)]
    try:
        chol = sla.cholesky(sub, lower=True)
    except sla.LinAlgError as exc:
        raise ValueError(f"reduced Laplacian not positive definite: {exc}") from exc
    return float(2.0 * np.sum(np.log(np.diag(chol))))


def reduced_determinant(graph: WeightedGraph, pinned: Sequence[int]) -> float:
    """det of the reduced Laplacian (may overflow for huge graphs; the log
    form is the primitive)."""
    return math.exp(reduced_log_determinant(graph, pinned))


def spanning_tree_sum(graph: WeightedGraph) -> float:
    """Sum over spanning trees of the product of edge conductances, by
    explicit deletion-contraction.  Guarded to |V| <= 14."""
    if graph.vertex_count > TREE_ENUMERATION_GUARD:
        raise ValueError(
            f"|V| = {graph.vertex_count} exceeds the enumeration guard "
            f"{TREE_ENUMERATION_GUARD}; use reduced_determinant")
    if not graph.is_connected():
        return 0.0

    def rec(n: int, edges: dict[tuple[int, int], float]) -> float:
        if n == 1:
            return 1.0
        if len(edges) < n - 1:
            return 0.0
        if len(edges) == n - 1:
            # exactly a tree if connected; connectivity holds inductively
            prod = 1.0
            for c in edges.values():
                prod *= c
            return prod
        (u, v), c = next(iter(edges.items()))
        # delete e
        rest = dict(edges)
        del rest[(u, v)]
        # check deletion keeps the graph connected before recursing
        total = 0.0
        if _connected_edge_dict(n, rest):
            total += rec(n, rest)
        # contract e: relabel v -> u, drop loops, merge parallels
        contracted: dict[tuple[int, int], float] = {}
        for (a, b), w in rest.items():
            a2 = u if a == v else a
            b2 = u if b == v else b
            if a2 == b2:
                continue
            key = (a2, b2) if a2 < b2 else (b2, a2)
            contracted[key] = contracted.get(key, 0.0) + w
        # compact labels to 0..n-2
        labels = sorted({x for ab in contracted for x in ab} | {u})
        remap = {lab: i for i, lab in enumerate(labels)}
        contracted = {(remap[a], remap[b]): w for (a, b), w in contracted.items()}
        total += c * rec(n - 1, contracted)
        return total

    edges = {(u, v): c for u, v, c in graph.edges}
    return rec(graph.vertex_count, edges)


def _connected_edge_dict(n: int, edges: dict[tuple[int, int], float]) -> bool:
    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for (a, b) in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    todo = [0]
    while todo:
        x = todo.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return len(seen) == n


def tree_count_bound(graph: WeightedGraph) -> tuple[int, float]:
    """Exact spanning-tree count and the degree-product bound
    ``min_k prod_i d_i / d_k``; the count never exceeds the bound."""
    unit = WeightedGraph(graph.vertex_count,
                         tuple((u, v, 1.0) for u, v, _ in graph.edges))
    raw = spanning_tree_sum(unit)
    count = int(round(raw))
    if abs(raw - count) > 1e-6 * max(1.0, abs(raw)):
        raise ArithmeticError(f"unit-conductance tree sum {raw} is not an integer")
    deg = unit.degrees()
    if any(d == 0 for d in deg):
        return count, 0.0 if graph.vertex_count > 1 else 1.0
    prod = 1.0
    for d in deg:
        prod *= d
    bound = min(prod / d for d in deg)
    return count, bound


def gff_log_partition(graph: WeightedGraph, pinned: Sequence[int]) -> GffClosedForm:
    """Planar-field Gaussian partition function with the pinned set at zero:
    ``log Z = (|V| - |pinned|) log(2 pi) - log det(L_pinned)``."""
    pinned = _check_pinned_cover(graph, pinned)
    logdet = reduced_log_determinant(graph, pinned)
    n_free = graph.vertex_count - len(pinned)
    tree_sum = None
    if len(pinned) == 1 and graph.vertex_count <= TREE_ENUMERATION_GUARD:
        tree_sum = spanning_tree_sum(graph)
    with np.errstate(over="ignore"):
        det = math.exp(logdet) if logdet < 700 else math.inf
    return GffClosedForm(log_partition=n_free * LOG_2PI - logdet,
                         log_reduced_det=logdet,
                         reduced_det=det,
                         tree_sum=tree_sum)


def harmonic_extension(graph: WeightedGraph,
                       boundary_values: Mapping[int, Iterable[float]]) -> PlanarField:
    """Field matching the boundary data with zero weighted Laplacian at every
    interior vertex."""
    if not boundary_values:
        raise ValueError("boundary data must be nonempty")
    bnd = _check_pinned_cover(graph, list(boundary_values))
    interior = [v for v in range(graph.vertex_count) if v not in set(bnd)]
    values = np.zeros((graph.vertex_count, 2))
    for v in bnd:
        values[v] = np.asarray(boundary_values[v], dtype=float)
    if interior:
        lap = laplacian(graph)
        l_ii = lap[np.ix_(interior, interior)]
        l_ib = lap[np.ix_(interior, bnd)]
        rhs = -l_ib @ values[bnd]
        sol = np.linalg.solve(l_ii, rhs)
        values[interior] = sol
        residual = np.max(np.abs(l_ii @ sol - rhs)) if len(interior) else 0.0
        scale = max(c for _, _, c in graph.edges) * max(1.0, float(np.max(np.abs(values))))
        if residual > 1e-10 * scale:
            raise ArithmeticError(f"interior solve residual {residual:.3e} too large")
    return PlanarField(values)


def dirichlet_energy(graph: WeightedGraph, field: PlanarField) -> float:
    """``sum_e c_e |f_u - f_v|^2``; zero exactly when the field is constant
    per component."""
    vals = field.values
    if vals.shape[0] != graph.vertex_count:
        raise ValueError("field size does not match the graph")
    total = 0.0
    for u, v, c in graph.edges:
        d = vals[u] - vals[v]
        total += c * float(d @ d)
    return total


def graph_ibp_check(graph: WeightedGraph, f: PlanarField, g: PlanarField) -> tuple[float, float]:
    """Both sides of the summation-by-parts identity
    ``sum_e c_e (f_u - f_v).(g_u - g_v) = sum_u f(u).(L g)(u)``."""
    fv, gv = f.values, g.values
    lhs = 0.0
    for u, v, c in graph.edges:
        lhs += c * float((fv[u] - fv[v]) @ (gv[u] - gv[v]))
    lap = laplacian(graph)
    rhs = float(np.sum(fv * (lap @ gv)))
    return lhs, rhs


def pinned_gaussian_integral(graph: WeightedGraph,
                             boundary_values: Mapping[int, Iterable[float]],
                             alpha: float) -> float:
    """log of the Gaussian integral with boundary set to ``alpha`` times the
    given values.

    Shifting by the harmonic extension splits the exponent into the zero
    boundary part plus ``alpha^2/2`` times the extension's Dirichlet energy
    (the cross term vanishes by summation by parts), so the result is the
    zero-boundary log partition minus that quadratic.  Monotone non-increasing
    in ``alpha > 0`` by inspection.
    """
    if not boundary_values:
        raise ValueError("boundary data must be nonempty")
    base = gff_log_partition(graph, list(boundary_values)).log_partition
    if alpha == 0.0:
        return base
    energy = dirichlet_energy(graph, harmonic_extension(graph, boundary_values))
    return base - 0.5 * alpha * alpha * energy
