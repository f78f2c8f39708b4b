"""Deterministic point lattices on Euclidean unit spheres.

Used both for sampling directions (indicatrix, cones) and as equal-area
quadrature nodes.  All constructions are deterministic given (n, count, seed):

* n == 2: equally spaced angles (exact equal-area / trapezoidal nodes),
* n == 3: golden-spiral (Fibonacci) lattice with the half-offset,
* n >= 4: Kronecker low-discrepancy sequence pushed through the Gaussian
  inverse CDF and normalized.  Near-uniform, not exactly equal-area.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, ndtri


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^(n-1) in R^n."""
    return float(2.0 * math.pi ** (n / 2.0) / math.exp(gammaln(n / 2.0)))


def _kronecker_alphas(d: int) -> np.ndarray:
    # generalized golden ratio: unique positive root of x**(d+1) = x + 1
    x = 1.0
    for _ in range(64):
        x = (1.0 + x) ** (1.0 / (d + 1))
    return np.array([x ** -(i + 1) for i in range(d)])


def sphere_lattice(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Return a (count, n) array of near-uniform points on the unit sphere.

    The seed only rotates/offsets the lattice; the point set is always
    deterministic for fixed arguments.
    """
    if n < 2:
        raise ValueError("sphere lattice needs dimension n >= 2")
    if count < 1:
        raise ValueError("count must be >= 1")
    if n == 2:
        offset = 0.5 * (seed % 8) / 8.0
        theta = 2.0 * math.pi * (np.arange(count) + offset) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if n == 3:
        k = np.arange(count)
        z = 1.0 - 2.0 * (k + 0.5) / count
        phi = k * math.pi * (3.0 - math.sqrt(5.0)) + 2.0 * math.pi * (seed % 16) / 16.0
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    alphas = _kronecker_alphas(n)
    k = np.arange(1, count + 1)[:, None]
    u = np.mod(k * alphas[None, :] + 0.5 + seed * alphas[None, :], 1.0)
    # avoid the exact endpoints of the inverse CDF
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    g = ndtri(u)
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return g / norms


def tangent_basis(u: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the Euclidean tangent space of S^(n-1) at u.

    Returns an (n, n-1) matrix whose columns span the orthogonal complement
    of u.  Built from the Householder reflection that maps e1 to u.
    """
    u = np.asarray(u, dtype=float)
    n = u.size
    e1 = np.zeros(n)
    e1[0] = 1.0
    w = u / np.linalg.norm(u)
    sign = 1.0 if w[0] >= 0 else -1.0
    h = w + sign * e1
    hn = np.linalg.norm(h)
    if hn < 1e-14:  # w == -e1 exactly
        basis = np.eye(n)[:, 1:]
        return basis
    h = h / hn
    H = np.eye(n) - 2.0 * np.outer(h, h)
    # column 0 of H is -sign*w; the remaining columns are orthonormal to w
    return H[:, 1:]
