"""Orthogonal cones to linear subspaces, conical lifting, ratio constancy.

A vector v is F-orthogonal to a subspace W when the fundamental tensor
pairing g_v(v, w) vanishes for every w in W; the set of such vectors is a
cone, parametrized here by the direction of its alpha-orthogonal projection
onto the complement.  Each ray is found by a damped Newton solve for the
vertical components, with the fundamental tensor as exact Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, HypothesisViolated, InputError, NoConvergence, ZeroVector
from .lattice import sphere_lattice
from .minkowski import AlphaBetaNorm, fundamental_tensor, legendre, norm_eval

#: orthogonality residual allowed on F-unit cone vectors
ORTHO_TOL = 1e-8
#: Newton residual target before F-normalization
_SOLVE_TOL = 1e-12


@dataclass
class Subspace:
    """A subspace W given by a list of linearly independent n-vectors."""

    basis: np.ndarray

    def __post_init__(self) -> None:
        self.basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        k, n = self.basis.shape
        if k >= n:
            raise InputError("need dim W < n")
        if np.linalg.matrix_rank(self.basis) != k:
            raise InputError("basis vectors are linearly dependent")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    def onb_pair(self, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(U, H): a-orthonormal bases of W (n x k) and its a-complement (n x (n-k)).

        Built by QR in the Cholesky coordinates of a, so the construction is
        deterministic for fixed inputs.
        """
        k, n = self.basis.shape
        L = np.linalg.cholesky(a)
        Z = L.T @ self.basis.T  # n x k, Euclidean picture of the basis
        Q, _ = np.linalg.qr(np.hstack([Z, np.eye(n)]))
        U = np.linalg.solve(L.T, Q[:, :k])
        H = np.linalg.solve(L.T, Q[:, k:n])
        return U, H

    def contains(self, a: np.ndarray, v: np.ndarray, tol: float = 1e-10) -> bool:
        """Whether v lies in W up to alpha-distance tol (absolute)."""
        U, _ = self.onb_pair(a)
        resid = v - U @ (U.T @ (a @ v))
        return float(np.sqrt(max(0.0, resid @ a @ resid))) <= tol


@dataclass
class ConeSample:
    """F-unit vectors orthogonal to W, with per-ray residuals."""

    vectors: np.ndarray
    residuals: np.ndarray
    dropped: int = 0

    def ratios(self, norm: AlphaBetaNorm) -> np.ndarray:
        return np.array([norm.ratio(v) for v in self.vectors])

    def to_csv_rows(self, norm: AlphaBetaNorm) -> list[list[float]]:
        rows = []
        for v, res in zip(self.vectors, self.residuals):
            rows.append([*map(float, v), norm_eval(norm, v), norm.ratio(v), float(res)])
        return rows


def _solve_ray(
    norm: AlphaBetaNorm,
    U: np.ndarray,
    y: np.ndarray,
    max_iter: int = 60,
) -> tuple[np.ndarray, float]:
    """Solve for the cone vector y + U c with ell_v annihilating the columns of U.

    Returns the unnormalized solution and the final residual norm.
    """
    k = U.shape[1]
    c = np.zeros(k)

    def residual(cv):
        v = y + U @ cv
        return legendre(norm, v).ell @ U, v

    res, v = residual(c)
    for _ in range(max_iter):
        rn = float(np.linalg.norm(res))
        if rn <= _SOLVE_TOL:
            return v, rn
        G = fundamental_tensor(norm, v).G
        J = U.T @ G @ U
        try:
            step = np.linalg.solve(J, res)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular Newton system on cone ray") from exc
        t = 1.0
        for _ in range(30):
            cand = c - t * step
            cand_res, cand_v = residual(cand)
            if np.linalg.norm(cand_res) < rn:
                c, res, v = cand, cand_res, cand_v
                break
            t *= 0.5
        else:
            raise NoConvergence("cone ray line search stalled")
    rn = float(np.linalg.norm(res))
    if rn <= _SOLVE_TOL:
        return v, rn
    raise NoConvergence("cone ray Newton did not converge")


def orthogonal_cone(
    norm: AlphaBetaNorm,
    W: Subspace,
    directions: int,
    seed: int = 0,
) -> ConeSample:
    """Sample the F-orthogonal cone to W with one ray per complement direction.

    Directions run over a sphere lattice in the a-orthogonal complement;
    rays whose Newton solve fails are dropped and counted.
    """
    if W.ambient_dim != norm.dim:
        raise InputError("subspace dimension mismatch")
    U, H = W.onb_pair(norm.a)
    m = H.shape[1]
    if m == 1:
        coeffs = np.array([[1.0], [-1.0]])
    else:
        coeffs = sphere_lattice(m, directions, seed=seed)
    vectors = []
    residuals = []
    dropped = 0
    for cf in coeffs:
        y = H @ cf
        try:
            v, _ = _solve_ray(norm, U, y)
        except NoConvergence:
            dropped += 1
            continue
        v = v / norm_eval(norm, v)
        resid = float(np.max(np.abs(legendre(norm, v).ell @ U)))
        vectors.append(v)
        residuals.append(resid)
    return ConeSample(
        vectors=np.array(vectors), residuals=np.array(residuals), dropped=dropped
    )


def conical_lift(norm: AlphaBetaNorm, W: Subspace, y) -> np.ndarray:
    """The unique cone vector whose a-orthogonal projection onto the complement is y.

    Positively 1-homogeneous in y.  Requires y in the complement of W.
    """
    y = np.asarray(y, dtype=float)
    if not np.any(y != 0.0):
        raise ZeroVector("lift needs a nonzero direction")
    U, H = W.onb_pair(norm.a)
    proj_w = U.T @ (norm.a @ y)
    if np.max(np.abs(proj_w)) > 1e-10 * max(1.0, float(np.linalg.norm(y))):
        raise DomainError("direction must lie in the a-orthogonal complement of W")
    v, _ = _solve_ray(norm, U, y)
    return v


def project_horizontal(norm: AlphaBetaNorm, W: Subspace, v) -> np.ndarray:
    """a-orthogonal projection of v onto the complement of W."""
    U, _ = W.onb_pair(norm.a)
    v = np.asarray(v, dtype=float)
    return v - U @ (U.T @ (norm.a @ v))


def ratio_constancy_check(
    norm: AlphaBetaNorm,
    W: Subspace,
    directions: int = 64,
    seed: int = 0,
    tol: float = 1e-8,
) -> tuple[bool, float, float]:
    """Spread of beta/alpha over the cone to W; requires bvec in W.

    Returns (is_constant, mean value, max-min spread).
    """
    if not W.contains(norm.a, norm.bvec, tol=1e-10):
        raise HypothesisViolated("bvec must lie in W for the constancy check")
    sample = orthogonal_cone(norm, W, directions, seed=seed)
    if len(sample.vectors) == 0:
        raise NoConvergence("no cone rays solved")
    ratios = sample.ratios(norm)
    spread = float(np.max(ratios) - np.min(ratios))
    return spread <= tol, float(np.mean(ratios)), spread
