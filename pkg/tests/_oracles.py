"""Independent numerical oracles used by the test suite.

Everything here deliberately avoids the closed-form code paths it is used to
check: Gaussian graph integrals are done by tensor-product Gauss-Legendre
quadrature, the renewal density by a fixed-order scheme after an exponential
substitution, and lattice return probabilities by direct kernel convolution.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from shflab.special_functions import EULER_GAMMA


def gauss_legendre(n: int, lo: float, hi: float):
    """Nodes and weights of the n-point Gauss-Legendre rule on [lo, hi]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def quad2d(f, lo: float, hi: float, n: int = 80) -> float:
    """Tensor Gauss-Legendre quadrature of f(x, y) over [lo, hi]^2."""
    x, w = gauss_legendre(n, lo, hi)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    vals = f(xx, yy)
    return float(w @ vals @ w)


def dickman_density_substitution(theta: float, t: float, s_max: float = 256.0,
                                 n: int = 4000) -> float:
    """G_theta(t) by fixed-order quadrature after the substitution s = e^u.

    Independent of the adaptive production scheme: different variable,
    different rule, no tail certification.
    """
    if not (0.0 < t <= 1.0):
        raise ValueError("t must lie in (0, 1]")
    mu = theta - EULER_GAMMA
    u, w = gauss_legendre(n, -45.0, math.log(s_max))
    s = np.exp(u)
    log_f = mu * s + (s - 1.0) * math.log(t) + np.log(s) - gammaln(s + 1.0)
    return float(np.sum(w * np.exp(log_f + u)))


def lattice_return_probabilities(n_max: int) -> np.ndarray:
    """P(S_n = S'_n), n = 1..n_max, for two independent planar simple random
    walks from a common start, via explicit kernel convolution.

    Maintains the one-walk distribution p_n on the square lattice and uses
    P(S_n = S'_n) = sum_x p_n(x)^2.  O(n_max * n_max^2) work and memory,
    intended for small n_max only.
    """
    size = 2 * n_max + 1
    p = np.zeros((size, size))
    p[n_max, n_max] = 1.0
    out = np.empty(n_max)
    for n in range(1, n_max + 1):
        q = np.zeros_like(p)
        q[1:, :] += p[:-1, :]
        q[:-1, :] += p[1:, :]
        q[:, 1:] += p[:, :-1]
        q[:, :-1] += p[:, 1:]
        p = 0.25 * q
        out[n - 1] = float(np.sum(p * p))
    return out


def gff_log_partition_quadrature(n_vertices: int, edges, pinned_values: dict,
                                 n_nodes: int = 320, radius_factor: float = 10.0) -> float:
    """log of int exp(-1/2 sum_e c_e |phi_u - phi_v|^2) over free planar fields.

    Planar components factorize, so the scalar integral is evaluated by a
    tensor-network contraction of per-edge Gauss-Legendre factor matrices and
    squared.  Each free vertex integrates over a box of half-width
    ``radius_factor * sqrt(n_free / c_min) + max |pinned value|``: the marginal
    standard deviation is at most the square root of the effective resistance
    to the pinned set, which is at most ``n_free / c_min`` along any path, and
    the boundary data can shift the mean by at most its own magnitude.  A box
    half-width of 10 such standard deviations leaves a relative tail below
    1e-12.
    """
    free = [v for v in range(n_vertices) if v not in pinned_values]
    if len(free) > 4:
        raise ValueError("quadrature oracle supports at most 4 free vertices")
    index = {v: i for i, v in enumerate(free)}

    touched = {v for v in free if any(v in (u, w) for u, w, _ in edges)}
    if touched != set(free):
        raise ValueError(f"free vertices {set(free) - touched} have no incident edge")
    c_min = min(c for _, _, c in edges)
    offset = max((abs(x) for p in pinned_values.values() for x in p), default=0.0)
    r = radius_factor * math.sqrt(max(len(free), 1) / c_min) + offset
    nodes, weights = {}, {}
    for v in free:
        nodes[v], weights[v] = gauss_legendre(n_nodes, -r, r)

    def scalar_integral(coord: int) -> float:
        operands, subscripts = [], []
        for u, v, c in edges:
            pu = pinned_values.get(u)
            pv = pinned_values.get(v)
            if pu is not None and pv is not None:
                operands.append(np.array(math.exp(-0.5 * c * (pu[coord] - pv[coord]) ** 2)))
                subscripts.append("")
            elif pu is not None:
                operands.append(np.exp(-0.5 * c * (nodes[v] - pu[coord]) ** 2))
                subscripts.append(chr(ord("a") + index[v]))
            elif pv is not None:
                operands.append(np.exp(-0.5 * c * (nodes[u] - pv[coord]) ** 2))
                subscripts.append(chr(ord("a") + index[u]))
            else:
                operands.append(np.exp(-0.5 * c * (nodes[u][:, None] - nodes[v][None, :]) ** 2))
                subscripts.append(chr(ord("a") + index[u]) + chr(ord("a") + index[v]))
        for v in free:
            operands.append(weights[v])
            subscripts.append(chr(ord("a") + index[v]))
        return float(np.einsum(",".join(subscripts) + "->", *operands, optimize=True))

    return math.log(scalar_integral(0)) + math.log(scalar_integral(1))
