"""Feynman graphs and truncated moment estimation.

A pattern of ``m`` collision streaks together with interleaved times
``a_1 < b_1 < ... < a_m < b_m`` determines a weighted graph: curly edges
``(a_r, b_r)`` with conductance ``4/(b_r - a_r)`` and, per streak, solid edges
from ``a_r`` to the end of each walker's previous streak (``b_p``, or the
origin/start point when there is none) with conductance ``2/length``; the two
solid edges of a streak whose walkers share the parent merge into one edge of
twice the conductance.  The spatial integral over collision locations is the
Gaussian free field partition function of that graph, which the matrix-tree
closed form evaluates exactly.

The full integrand of the ``m``-streak term, per pattern, is

    (2 pi)^m                                  kernel weight per streak
    * prod_r G_theta(b_r - a_r)               renewal density of each streak
    * prod_r 2 / (pi (b_r - a_r))             curly heat-kernel normalizers
    * prod_{r, both slots} 1/(pi length)      solid heat-kernel normalizers
    * Gaussian spatial integral               (2 pi)^{2m} / det(reduced Laplacian)
                                              [times exp(-energy/2) for fixed
                                              boundary points]

integrated over the ordered time simplex.  With flat terminal data the
``h``-th moment of the field tested against the unit Gaussian is
``2^{-h} (1 + sum over m >= 1 of pattern-summed integrals)`` with times living
on [2, 3] (the Gaussian test function extends each walker's journey by 2 and
the origin sits at time 0); the fixed-points kernel uses times on [0, t] with
the walkers' start points as boundary vertices.

Monte Carlo: start times are sorted uniforms; each gap ``u_r = b_r - a_r`` is
importance-sampled with density proportional to ``1/(u log^2(e/u))`` (inverse
CDF ``u = e^(1 - 1/v)``, ``v`` uniform), which matches the ``G_theta``
singularity and leaves bounded weights.  Everything accumulates in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .diagrams import CollisionPattern, count_patterns, enumerate_patterns, parent_map, sample_pattern
from .graph_gff import (
    WeightedGraph,
    dirichlet_energy,
    gff_log_partition,
    harmonic_extension,
)
from .special_functions import (
    DickmanParams,
    GthetaInterpolant,
    cached_interpolant,
    g_theta,
    g_theta_integral,
    integrate_against_renewal_density,
)
from .streams import stream

__all__ = [
    "TimeGrid",
    "FeynmanGraph",
    "MomentEstimate",
    "build_feynman_graph",
    "spatial_integral_log",
    "integrand_log",
    "moment_gaussian",
    "kernel_at_points",
    "flat_covariance_kernel",
    "covariance_kernel",
    "covariance_contraction",
    "second_moment_gaussian_data",
    "sample_time_grids",
    "kernel_spatial_terms",
]

LOG_2PI = math.log(2.0 * math.pi)
LOG_PI = math.log(math.pi)

# full pattern sweeps are used when the pattern count fits both this cap and
# the sample budget; otherwise patterns are sampled uniformly and reweighted
# by the exact count
PATTERN_EXHAUSTIVE_CAP = 10**5

# keeps gaps above ~3e-60 so conductances 4/u stay far from overflow; the
# integrand ratio has a finite limit along v -> 0, so clamping the ~1% of
# draws below the floor shifts the estimate by O(1e-4) relative, far below
# Monte Carlo resolution
_V_FLOOR = 7.2e-3


@dataclass(frozen=True)
class TimeGrid:
    """Interleaved streak times ``0 <= a_1 < b_1 < ... < a_m < b_m <= t_end``."""

    t_end: float
    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise ValueError("a and b must have equal length")
        seq = [0.0]
        for x, y in zip(self.a, self.b):
            seq.extend((x, y))
        seq.append(self.t_end)
        for lo, hi in zip(seq[1:-1], seq[2:]):
            if not lo < hi:
                raise ValueError(f"times must interleave strictly: {seq}")
        if self.m and not self.a[0] >= 0.0:
            raise ValueError("times must be nonnegative")

    @property
    def m(self) -> int:
        return len(self.a)

    def gaps(self) -> tuple[float, ...]:
        return tuple(y - x for x, y in zip(self.a, self.b))


@dataclass(frozen=True)
class FeynmanGraph:
    """Weighted graph of a (pattern, grid) pair plus bookkeeping.

    ``ell_sorted`` holds the non-curly edge lengths (halved where the two
    parent slots merged), non-increasing.  In augmented mode the origin vertex
    0 sits at time 0 and is the only boundary vertex; otherwise the boundary
    lists one start vertex per walker that collides, in walker order.
    """

    base: WeightedGraph
    augmented: bool
    roles: dict
    curly_edges: tuple[tuple[int, int], ...]
    ell_sorted: tuple[float, ...]
    a_vertex: tuple[int, ...]
    b_vertex: tuple[int, ...]
    z_vertex: dict


def build_feynman_graph(pattern: CollisionPattern, grid: TimeGrid,
                        augmented: bool = True) -> FeynmanGraph:
    """Assemble the weighted graph for one pattern at one time grid."""
    if grid.m != pattern.m:
        raise ValueError(f"grid has m={grid.m} but pattern has m={pattern.m}")
    m = pattern.m
    pm = parent_map(pattern)

    if augmented:
        n_z = 0
        z_vertex = {}
        offset = 1
        roles = {0: "origin"}
        boundary = (0,)
    else:
        walkers = pattern.walkers_used()
        z_vertex = {w: i for i, w in enumerate(walkers)}
        n_z = len(walkers)
        offset = n_z
        roles = {i: f"z({w})" for w, i in z_vertex.items()}
        boundary = tuple(range(n_z))

    n_vertices = max(1, offset + 2 * m)
    a_vertex = tuple(offset + 2 * r for r in range(m))
    b_vertex = tuple(offset + 2 * r + 1 for r in range(m))
    for r in range(m):
        roles[a_vertex[r]] = f"a({r + 1})"
        roles[b_vertex[r]] = f"b({r + 1})"

    def parent_vertex(p: int, walker: int) -> int:
        if p > 0:
            return b_vertex[p - 1]
        return 0 if augmented else z_vertex[walker]

    def parent_time(p: int) -> float:
        return grid.b[p - 1] if p > 0 else 0.0

    edges = []
    curly = []
    ells = []
    for r in range(m):
        u_gap = grid.b[r] - grid.a[r]
        edges.append((a_vertex[r], b_vertex[r], 4.0 / u_gap))
        curly.append((a_vertex[r], b_vertex[r]))
        pi, pj = pm.p_i[r], pm.p_j[r]
        wi, wj = pattern.pairs[r]
        merged = pi == pj and (augmented or pi >= 1)
        if merged:
            ell = (grid.a[r] - parent_time(pi)) / 2.0
            edges.append((a_vertex[r], parent_vertex(pi, wi), 2.0 / ell))
            ells.append(ell)
        else:
            for p, w in ((pi, wi), (pj, wj)):
                ell = grid.a[r] - parent_time(p)
                edges.append((a_vertex[r], parent_vertex(p, w), 2.0 / ell))
                ells.append(ell)

    base = WeightedGraph(n_vertices, tuple(edges), boundary)
    ells.sort(reverse=True)
    return FeynmanGraph(base=base, augmented=augmented, roles=roles,
                        curly_edges=tuple(curly), ell_sorted=tuple(ells),
                        a_vertex=a_vertex, b_vertex=b_vertex, z_vertex=z_vertex)


def spatial_integral_log(fgraph: FeynmanGraph, boundary_values=None) -> float:
    """log of the Gaussian spatial integral of the graph.

    Augmented graphs pin the origin at (0, 0) and take no boundary data.
    Fixed-boundary graphs require one plane point per colliding walker; the
    domain-Markov split contributes ``-energy(harmonic extension)/2`` on top
    of the zero-boundary partition function.
    """
    if fgraph.augmented:
        if boundary_values is not None:
            raise ValueError("augmented graphs take no boundary values")
        return gff_log_partition(fgraph.base, [0]).log_partition
    if boundary_values is None:
        raise ValueError("fixed-boundary graphs need one value per walker")
    bvals = {fgraph.z_vertex[w]: boundary_values[w] for w in fgraph.z_vertex}
    base = gff_log_partition(fgraph.base, list(bvals)).log_partition
    if all(float(np.dot(v, v)) == 0.0 for v in map(np.asarray, bvals.values())):
        return base
    energy = dirichlet_energy(fgraph.base, harmonic_extension(fgraph.base, bvals))
    return base - 0.5 * energy


def _log_prefactor(pattern: CollisionPattern, grid: TimeGrid) -> float:
    """Everything in front of the Gaussian integral except the G factors:
    the (2 pi)^m kernel weight and the heat-kernel normalizers."""
    m = pattern.m
    pm = parent_map(pattern)
    out = m * LOG_2PI
    for r in range(m):
        u_gap = grid.b[r] - grid.a[r]
        out += math.log(2.0) - LOG_PI - math.log(u_gap)
        for p in (pm.p_i[r], pm.p_j[r]):
            length = grid.a[r] - (grid.b[p - 1] if p > 0 else 0.0)
            out += -LOG_PI - math.log(length)
    return out


def integrand_log(pattern: CollisionPattern, grid: TimeGrid, theta: float,
                  boundary=None, params: DickmanParams | None = None) -> float:
    """log of the full m-streak integrand at one (pattern, grid) point.

    Scalar reference path: renewal density by certified quadrature, spatial
    integral through the graph closed form.  Returns ``-inf`` when a streak
    has zero duration (the integrand vanishes there).
    """
    if pattern.m == 0:
        return 0.0
    if any(y <= x for x, y in zip(grid.a, grid.b)):
        return -math.inf
    if params is None:
        params = DickmanParams(theta=theta)
    fgraph = build_feynman_graph(pattern, grid, augmented=boundary is None)
    out = _log_prefactor(pattern, grid)
    for u_gap in grid.gaps():
        out += math.log(g_theta(params, u_gap))
    out += spatial_integral_log(fgraph, boundary)
    return out


def kernel_spatial_terms(pattern: CollisionPattern, grid: TimeGrid, zs) -> tuple[float, float]:
    """(zero-boundary log spatial integral, Dirichlet energy of the harmonic
    extension of ``zs``): the log integral at boundary ``alpha * zs`` equals
    the first minus ``alpha^2/2`` times the second, exactly non-increasing in
    ``alpha > 0``."""
    fgraph = build_feynman_graph(pattern, grid, augmented=False)
    bvals = {fgraph.z_vertex[w]: np.asarray(zs[w - 1], dtype=float)
             for w in fgraph.z_vertex}
    base = gff_log_partition(fgraph.base, list(bvals)).log_partition
    energy = dirichlet_energy(fgraph.base, harmonic_extension(fgraph.base, bvals))
    return base, energy


# ---------------------------------------------------------------------------
# batched evaluation
# ---------------------------------------------------------------------------

class _CompiledPattern:
    """Topology of one pattern, ready for vectorized evaluation over grids.

    Free vertices are indexed ``a_r -> r``, ``b_r -> m + r``; boundary
    vertices (origin or walker start points) never enter the reduced
    Laplacian.  Solid slots carry (streak, parent, walker) so conductances
    are pure array arithmetic in the batch dimension.
    """

    def __init__(self, pattern: CollisionPattern, augmented: bool):
        self.pattern = pattern
        self.augmented = augmented
        self.m = pattern.m
        pm = parent_map(pattern)
        self.parents_i = np.array(pm.p_i, dtype=int)
        self.parents_j = np.array(pm.p_j, dtype=int)
        walkers = pattern.walkers_used()
        self.walkers = walkers
        self.z_index = {w: i for i, w in enumerate(walkers)}
        # edge slots: (a-index r, parent p, conductance numerator, z-index or -1)
        # merged slots (shared parent) have numerator 4 and never touch a
        # walker start vertex; unmerged slots with p = 0 couple to one
        self.solid_slots: list[tuple[int, int, float, int]] = []
        for r in range(self.m):
            pi, pj = pm.p_i[r], pm.p_j[r]
            wi, wj = pattern.pairs[r]
            if pi == pj and (augmented or pi >= 1):
                self.solid_slots.append((r, pi, 4.0, -1))
            else:
                for p, w in ((pi, wi), (pj, wj)):
                    zi = -1 if (augmented or p > 0) else self.z_index[w]
                    self.solid_slots.append((r, p, 2.0, zi))

    def log_integrand(self, a: np.ndarray, u: np.ndarray,
                      log_g_fn, z: np.ndarray | None = None) -> np.ndarray:
        """log integrand for a batch of grids.

        ``a`` and ``u`` have shape (B, m): streak starts and durations.  The
        duration is passed separately because it can sit far below the float
        resolution of ``a + u``.
        """
        m = self.m
        n_batch = a.shape[0]
        tb = np.concatenate([np.zeros((n_batch, 1)), a + u], axis=1)  # tb[:, p]

        log_f = np.full(n_batch, m * LOG_2PI)
        log_f += np.sum(np.log(2.0 / (math.pi * u)), axis=1)
        log_f += np.sum(log_g_fn(u), axis=1)
        valid = np.all(u > 0.0, axis=1)

        n_free = 2 * m
        lap = np.zeros((n_batch, n_free, n_free))

        def add_edge(fu, fv, c):
            lap[:, fu, fu] += c
            lap[:, fv, fv] += c
            lap[:, fu, fv] -= c
            lap[:, fv, fu] -= c

        for r in range(m):
            add_edge(r, m + r, 4.0 / u[:, r])

        # fixed-boundary data: one plane point per colliding walker, taken
        # from the full start-point array by walker label
        if z is not None:
            rhs = np.zeros((n_batch, n_free, 2))
            z_full = np.asarray(z, dtype=float)
            zb = z_full[[w - 1 for w in self.walkers], :]

        with np.errstate(divide="ignore", invalid="ignore"):
            for r, p, num, zi in self.solid_slots:
                length = a[:, r] - tb[:, p]
                valid &= length > 0.0
                length = np.where(length > 0.0, length, 1.0)
                c = num / length
                if p > 0:
                    add_edge(r, m + p - 1, c)
                else:
                    lap[:, r, r] += c
                    if z is not None and zi >= 0:
                        rhs[:, r, :] += c[:, None] * zb[zi][None, :]
                # two heat-kernel normalizers per streak regardless of merging:
                # a merged slot carries both (identical) factors
                n_norms = 2 if num == 4.0 else 1
                log_f += -n_norms * (LOG_PI + np.log(length))

        # float ties (probability ~1e-9 per batch) would poison the linear
        # algebra; they carry zero integrand weight
        if not np.all(valid):
            lap[~valid] = np.eye(2 * m)[None, :, :]
            log_f = np.where(valid, log_f, -np.inf)

        sign, logdet = np.linalg.slogdet(lap)
        if np.any(sign[valid] <= 0):
            raise ArithmeticError("reduced Laplacian lost positive definiteness")
        log_f += np.where(valid, n_free * LOG_2PI - logdet, 0.0)

        if z is not None and len(self.walkers) > 0:
            # harmonic extension on the free vertices, then the Dirichlet
            # energy of the extension including the boundary edges
            h_field = np.linalg.solve(lap, rhs)
            energy = np.zeros(n_batch)
            for r in range(m):
                d = h_field[:, r, :] - h_field[:, m + r, :]
                energy += (4.0 / u[:, r]) * np.sum(d * d, axis=1)
            for r, p, num, zi in self.solid_slots:
                length = a[:, r] - tb[:, p]
                c = num / length
                if p > 0:
                    d = h_field[:, r, :] - h_field[:, m + p - 1, :]
                else:
                    ref = zb[zi][None, :] if zi >= 0 else 0.0
                    d = h_field[:, r, :] - ref
                energy += c * np.sum(d * d, axis=1)
            log_f += -0.5 * energy
        return log_f


def sample_time_grids(rng: np.random.Generator, n: int, m: int,
                      lo: float, hi: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``n`` interleaved time grids on [lo, hi] and their log densities.

    Start times are sorted uniforms; gaps are drawn by inverse CDF from the
    density ``1/(u log^2(e/u))`` normalized to each available window, which
    cancels the renewal-density singularity in the importance weights.
    Requires ``hi - lo <= 1`` so gaps stay in the renewal density's domain.
    """
    if hi - lo > 1.0 + 1e-12:
        raise ValueError("time window wider than 1 leaves the renewal density's domain")
    a = np.sort(rng.uniform(lo, hi, size=(n, m)), axis=1)
    windows = np.empty((n, m))
    if m > 1:
        windows[:, :-1] = np.diff(a, axis=1)
    windows[:, -1] = hi - a[:, -1]
    windows = np.maximum(windows, 1e-300)
    v_max = 1.0 / (1.0 - np.log(windows))
    v = v_max * rng.uniform(size=(n, m))
    u = np.exp(1.0 - 1.0 / np.maximum(v, _V_FLOOR))
    u = np.minimum(u, windows * (1.0 - 1e-12))
    b = a + u
    # density: sorted uniforms have density m! / (hi-lo)^m; each gap has
    # density 1/(u log^2(e/u)) / v_max on its window
    log_q = (math.lgamma(m + 1) - m * math.log(hi - lo)
             - np.sum(np.log(v_max), axis=1)
             + np.sum(-np.log(u) - 2.0 * np.log1p(-np.log(u)), axis=1))
    return a, b, log_q


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo estimate with its per-streak-count breakdown.

    ``value`` is the constant term plus the per-m contributions;
    ``per_m_contributions`` are (m, value, std_error) triples.
    """

    h: int
    theta: float
    m_max: int
    value: float
    std_error: float
    per_m_contributions: tuple[tuple[int, float, float], ...]
    samples: int
    seed: int
    constant_term: float = 1.0

    def __post_init__(self):
        total = self.constant_term + sum(v for _, v, _ in self.per_m_contributions)
        if not math.isclose(total, self.value, rel_tol=1e-12, abs_tol=1e-300):
            raise ValueError("value must equal the constant term plus per-m contributions")


def _estimate_m_term(h: int, m: int, theta: float, samples: int, seed: int,
                     *, lo: float, hi: float, label: str,
                     z: np.ndarray | None = None,
                     interpolant: GthetaInterpolant | None = None,
                     blocks: int = 16, map_fn=None) -> tuple[float, float]:
    """Mean and standard error of the pattern-summed m-streak integral."""
    n_col = count_patterns(h, m)
    if n_col == 0:
        return 0.0, 0.0
    gt = interpolant if interpolant is not None else cached_interpolant(theta)
    exhaustive = n_col <= min(PATTERN_EXHAUSTIVE_CAP, samples)

    tasks = []
    if exhaustive:
        patterns = list(enumerate_patterns(h, m))
        grids_per = max(1, samples // (n_col * blocks))
        for k in range(blocks):
            tasks.append((k, patterns, grids_per, 1.0))
    else:
        n_blocks = max(blocks, 64)
        grids_per = max(1, samples // n_blocks)
        for k in range(n_blocks):
            pat = sample_pattern(h, m, stream(seed, f"{label}-pat-m{m}", k))
            tasks.append((k, [pat], grids_per, float(n_col)))

    def run(task):
        k, patterns, n_grids, weight = task
        rng = stream(seed, f"{label}-grid-m{m}", k)
        total = 0.0
        for pat in patterns:
            cp = _CompiledPattern(pat, augmented=z is None)
            a, b, log_q = sample_time_grids(rng, n_grids, m, lo, hi)
            log_w = cp.log_integrand(a, b, gt.log_g, z=z) - log_q
            total += weight * math.exp(logsumexp(log_w) - math.log(n_grids))
        return total

    results = list((map_fn or map)(run, tasks))
    arr = np.array(results)
    mean = float(np.mean(arr))
    se = float(np.std(arr, ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return mean, se


def moment_gaussian(h: int, theta: float, m_max: int, samples: int, seed: int,
                    *, blocks: int = 16, map_fn=None,
                    interpolant: GthetaInterpolant | None = None) -> MomentEstimate:
    """Truncated h-th moment of the flat-data field tested against the unit
    Gaussian: ``2^{-h} (1 + sum_{m <= m_max} pattern-summed integrals)`` with
    streak times on [2, 3].

    ``h = 1`` and ``m_max = 0`` are exact (no pairs / empty sum).
    """
    if h < 1 or m_max < 0 or samples < 1:
        raise ValueError(f"invalid sizes h={h}, m_max={m_max}, samples={samples}")
    const = 2.0 ** (-h)
    per_m = []
    for m in range(1, m_max + 1):
        if h == 1:
            per_m.append((m, 0.0, 0.0))
            continue
        mean, se = _estimate_m_term(h, m, theta, samples, seed,
                                    lo=2.0, hi=3.0, label="moment",
                                    interpolant=interpolant,
                                    blocks=blocks, map_fn=map_fn)
        per_m.append((m, const * mean, const * se))
    value = const + sum(v for _, v, _ in per_m)
    std_error = math.sqrt(sum(s * s for _, _, s in per_m))
    return MomentEstimate(h=h, theta=theta, m_max=m_max, value=value,
                          std_error=std_error, per_m_contributions=tuple(per_m),
                          samples=samples, seed=seed, constant_term=const)


def kernel_at_points(zs, theta: float, t: float, m_max: int, samples: int, seed: int,
                     *, blocks: int = 16, map_fn=None,
                     interpolant: GthetaInterpolant | None = None) -> MomentEstimate:
    """Truncated estimate of the h-point correlation kernel at fixed start
    points ``zs``.

    Terminal times ``t != 1`` reduce to ``t = 1`` by the scaling covariance:
    the disorder parameter shifts to ``theta + log t`` and the points scale to
    ``z / sqrt(t)``.
    """
    zs = np.asarray(zs, dtype=float).reshape(-1, 2)
    h = zs.shape[0]
    if h < 1 or m_max < 0 or samples < 1:
        raise ValueError(f"invalid sizes h={h}, m_max={m_max}, samples={samples}")
    if not (t > 0.0):
        raise ValueError(f"need t > 0, got {t}")
    theta_eff = theta + math.log(t)
    z_eff = zs / math.sqrt(t)
    gt = interpolant if interpolant is not None else cached_interpolant(theta_eff)
    per_m = []
    for m in range(1, m_max + 1):
        if h == 1:
            per_m.append((m, 0.0, 0.0))
            continue
        mean, se = _estimate_m_term(h, m, theta_eff, samples, seed,
                                    lo=0.0, hi=1.0, label="kernel",
                                    z=z_eff, interpolant=gt,
                                    blocks=blocks, map_fn=map_fn)
        per_m.append((m, mean, se))
    value = 1.0 + sum(v for _, v, _ in per_m)
    std_error = math.sqrt(sum(s * s for _, _, s in per_m))
    return MomentEstimate(h=h, theta=theta, m_max=m_max, value=value,
                          std_error=std_error, per_m_contributions=tuple(per_m),
                          samples=samples, seed=seed, constant_term=1.0)


# ---------------------------------------------------------------------------
# second-moment closed forms (independent of the graph machinery)
# ---------------------------------------------------------------------------

def flat_covariance_kernel(theta: float, x, xprime, t: float,
                           params: DickmanParams | None = None) -> float:
    """Covariance kernel of the flat-data field with both terminal points
    integrated out: ``pi * iint_{0<a<b<t} g_a(x'-x) G_theta(b-a) da db``.

    The inner time integral is the renewal primitive; the outer integral is
    adaptive.  Diverges logarithmically at coincident points (the short-time
    heat kernel factor ``1/(2 pi a)`` is no longer damped), so those are
    rejected.
    """
    if not (t > 0.0):
        raise ValueError(f"need t > 0, got {t}")
    if t > 1.0:
        raise ValueError("flat kernel evaluation is limited to t <= 1")
    if params is None:
        params = DickmanParams(theta=theta)
    d = np.asarray(xprime, dtype=float) - np.asarray(x, dtype=float)
    d2 = float(d @ d)
    if d2 == 0.0:
        raise ValueError(
            "coincident points: the kernel diverges logarithmically as |x - x'| -> 0")
    from scipy import integrate as _integrate

    def outer(a_arr):
        a_arr = np.atleast_1d(np.asarray(a_arr, dtype=float))
        out = np.empty_like(a_arr)
        for i, a_val in enumerate(a_arr):
            g_val = math.exp(-d2 / (2.0 * a_val)) / (2.0 * math.pi * a_val)
            out[i] = g_val * (g_theta_integral(params, t - a_val) if a_val < t else 0.0)
        return out if out.size > 1 else out[0]

    val, err = _integrate.quad(outer, 0.0, t, limit=200)
    if not math.isfinite(val) or (val > 0 and err > 1e-6 * val):
        raise ArithmeticError(f"flat kernel quadrature failed: value={val}, err={err}")
    return math.pi * val


def covariance_kernel(theta: float, x, xprime, y, yprime, t: float,
                      params: DickmanParams | None = None) -> float:
    """Full two-point covariance kernel at fixed start and end points."""
    if not (t > 0.0):
        raise ValueError(f"need t > 0, got {t}")
    if params is None:
        params = DickmanParams(theta=theta)
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xprime, dtype=float)
    y = np.asarray(y, dtype=float)
    yp = np.asarray(yprime, dtype=float)
    from .special_functions import heat_kernel
    from scipy import integrate as _integrate

    mean_factor = math.pi * heat_kernel(t / 4.0, (y + yp) / 2.0 - (x + xp) / 2.0)
    dx = xp - x
    dy = yp - y

    def inner(u):
        if u >= t:
            return 0.0
        val, _ = _integrate.quad(
            lambda a_val: heat_kernel(a_val, dx) * heat_kernel(t - a_val - u, dy)
            if 0 < a_val < t - u else 0.0,
            0.0, t - u, limit=100)
        return val

    total = integrate_against_renewal_density(inner, min(t, 1.0), params)
    return mean_factor * total


def covariance_contraction(theta: float, t: float,
                           params: DickmanParams | None = None,
                           interpolant: GthetaInterpolant | None = None) -> float:
    """Contraction of the flat-data covariance kernel against two unit
    Gaussians: ``(1/2) iint_{0<a<b<t} G_theta(b-a) / (2 + a) da db``.

    The spatial integral of ``g_1 x g_1`` against ``g_a`` of the difference is
    the heat kernel at time ``2 + a`` at the origin, hence the ``1/(2 + a)``.
    """
    if not (0.0 < t <= 1.0):
        raise ValueError(f"need 0 < t <= 1, got {t}")
    if params is None:
        params = DickmanParams(theta=theta)

    def inner(u):
        return math.log((2.0 + t - u) / 2.0)

    return 0.5 * integrate_against_renewal_density(inner, t, params,
                                                   interpolant=interpolant)


def second_moment_gaussian_data(theta: float,
                                params: DickmanParams | None = None) -> float:
    """Exact (quadrature) second moment of the flat-data field tested against
    the unit Gaussian: ``1/4 + covariance contraction / 2`` at t = 1.

    Independent oracle for ``moment_gaussian(h=2, m_max=1)``: the two-walker
    pattern series terminates at one streak, so this is the full value.
    """
    return 0.25 + 0.5 * covariance_contraction(theta, 1.0, params=params)
