"""(alpha,beta)-Minkowski norms on a vector space.

A norm is F(v) = alpha(v) * phi(beta(v)/alpha(v)) where alpha is the
Euclidean norm of an SPD matrix `a`, and beta is stored through its
alpha-dual vector `bvec`, i.e. beta(w) = a(bvec, w).

The fundamental tensor at v is the Hessian of half the squared norm and has
the closed form (r = beta(v)/alpha(v), all scalars from phi_derived):

    g_v(u,w) = rho*a(u,w) + rho0*beta(u)*beta(w)
             + rho1*[beta(u)*a(v,w) + beta(w)*a(v,u)]/alpha(v)
             - r*rho1*a(v,u)*a(v,w)/alpha(v)**2

and the Legendre covector is ell_v = a @ (rho*v + F(v)*phi'(r)*bvec).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import phi as phimod
from .errors import (
    InputError,
    NoConvergence,
    ZeroCovector,
    ZeroVector,
)
from .lattice import sphere_lattice
from .phi import PhiSpec

_SYM_TOL = 1e-12


def _as_vector(v, n: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise InputError(f"expected a vector, got shape {v.shape}")
    if n is not None and v.size != n:
        raise InputError(f"expected a vector of length {n}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise InputError("vector has non-finite entries")
    return v


def _require_nonzero(v: np.ndarray) -> np.ndarray:
    if not np.any(v != 0.0):
        raise ZeroVector("nonzero vector required")
    return v


@dataclass
class AlphaBetaNorm:
    """An (alpha,beta)-norm: SPD matrix a, alpha-dual vector bvec, generator phi."""

    dim: int
    a: np.ndarray
    bvec: np.ndarray
    phi: PhiSpec
    # derived, filled by __post_init__
    beta_cov: np.ndarray = field(init=False, repr=False)
    alpha_b: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise InputError("dimension must be >= 2")
        self.a = np.asarray(self.a, dtype=float)
        if self.a.shape != (self.dim, self.dim):
            raise InputError(f"a must be {self.dim}x{self.dim}")
        if np.max(np.abs(self.a - self.a.T)) > _SYM_TOL * max(1.0, np.max(np.abs(self.a))):
            raise InputError("a must be symmetric")
        self.a = 0.5 * (self.a + self.a.T)
        if np.min(np.linalg.eigvalsh(self.a)) <= 0.0:
            raise InputError("a must be positive definite")
        self.bvec = _as_vector(self.bvec, self.dim)
        self.beta_cov = self.a @ self.bvec
        self.alpha_b = float(np.sqrt(self.bvec @ self.beta_cov))
        if not self.alpha_b < self.phi.b0:
            raise InputError(
                f"alpha(bvec)={self.alpha_b:.6g} must be < b0={self.phi.b0:g}"
            )

    # -- basic evaluations ----------------------------------------------------

    def alpha(self, v) -> float:
        v = _as_vector(v, self.dim)
        return float(np.sqrt(max(0.0, v @ self.a @ v)))

    def beta(self, v) -> float:
        v = _as_vector(v, self.dim)
        return float(self.beta_cov @ v)

    def ratio(self, v) -> float:
        """s = beta(v)/alpha(v); bounded by alpha(bvec) via Cauchy-Schwarz."""
        v = _require_nonzero(_as_vector(v, self.dim))
        return self.beta(v) / self.alpha(v)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "a": [float(x) for x in self.a.reshape(-1)],
            "bvec": [float(x) for x in self.bvec],
            "phi": self.phi.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AlphaBetaNorm":
        if not isinstance(data, dict):
            raise InputError("norm must be a JSON object")
        allowed = {"dim", "a", "bvec", "phi"}
        unknown = set(data) - allowed
        if unknown:
            raise InputError(f"unknown norm fields: {sorted(unknown)}")
        for key in allowed:
            if key not in data:
                raise InputError(f"norm field {key!r} is required")
        n = int(data["dim"])
        a = np.asarray(data["a"], dtype=float)
        if a.ndim == 1:
            if a.size != n * n:
                raise InputError(f"'a' must have {n * n} row-major entries")
            a = a.reshape(n, n)
        return cls(dim=n, a=a, bvec=np.asarray(data["bvec"], dtype=float),
                   phi=PhiSpec.from_dict(data["phi"]))


@dataclass
class FundamentalTensorAt:
    """Fundamental tensor G (SPD for valid norms) at base direction v."""

    v: np.ndarray
    G: np.ndarray


@dataclass
class CovectorAt:
    """Component vector of the Legendre covector at base direction v."""

    v: np.ndarray
    ell: np.ndarray


def norm_eval(norm: AlphaBetaNorm, v) -> float:
    """F(v) = alpha(v) * phi(beta(v)/alpha(v)); positively 1-homogeneous."""
    v = _require_nonzero(_as_vector(v, norm.dim))
    al = norm.alpha(v)
    s = norm.beta(v) / al
    val, _, _ = phimod.phi_eval(norm.phi, s)
    return al * val


def fundamental_tensor(norm: AlphaBetaNorm, v) -> FundamentalTensorAt:
    """Closed-form fundamental tensor at v."""
    v = _require_nonzero(_as_vector(v, norm.dim))
    al = norm.alpha(v)
    r = norm.beta(v) / al
    d = phimod.phi_derived(norm.phi, r, norm.alpha_b)
    av = norm.a @ v
    bc = norm.beta_cov
    G = (
        d.rho * norm.a
        + d.rho0 * np.outer(bc, bc)
        + (d.rho1 / al) * (np.outer(bc, av) + np.outer(av, bc))
        - (r * d.rho1 / al**2) * np.outer(av, av)
    )
    return FundamentalTensorAt(v=v, G=0.5 * (G + G.T))


def fundamental_tensor_fd(norm: AlphaBetaNorm, v, h: float | None = None) -> FundamentalTensorAt:
    """Finite-difference Hessian of half F**2 at v (cross-validation oracle)."""
    v = _require_nonzero(_as_vector(v, norm.dim))
    n = norm.dim
    if h is None:
        h = 1e-4 * max(1.0, float(np.linalg.norm(v)))

    def q(x):
        return 0.5 * norm_eval(norm, x) ** 2

    G = np.empty((n, n))
    eye = np.eye(n)
    for i in range(n):
        for j in range(i, n):
            val = (
                q(v + h * eye[i] + h * eye[j])
                - q(v + h * eye[i] - h * eye[j])
                - q(v - h * eye[i] + h * eye[j])
                + q(v - h * eye[i] - h * eye[j])
            ) / (4.0 * h * h)
            G[i, j] = val
            G[j, i] = val
    return FundamentalTensorAt(v=v, G=G)


def legendre(norm: AlphaBetaNorm, v) -> CovectorAt:
    """Legendre covector ell_v = a @ (rho(r) v + F(v) phi'(r) bvec)."""
    v = _require_nonzero(_as_vector(v, norm.dim))
    al = norm.alpha(v)
    r = norm.beta(v) / al
    val, d1, _ = phimod.phi_eval(norm.phi, r)
    lam = val - r * d1
    rho = val * lam
    F = al * val
    return CovectorAt(v=v, ell=norm.a @ (rho * v + F * d1 * norm.bvec))


def legendre_inverse(
    norm: AlphaBetaNorm,
    ell,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> np.ndarray:
    """Invert the Legendre map by damped Newton (Jacobian = fundamental tensor).

    The start point is a**-1 @ ell rescaled so that ell . v0 = F(v0)**2,
    which is exact in the Riemannian case.
    """
    ell = _as_vector(ell, norm.dim)
    if not np.any(ell != 0.0):
        raise ZeroCovector("nonzero covector required")
    v = np.linalg.solve(norm.a, ell)
    c = float(ell @ v) / norm_eval(norm, v) ** 2
    if c <= 0.0:
        c = 1.0 / norm_eval(norm, v)
    v = c * v
    scale = float(np.linalg.norm(ell))
    res = legendre(norm, v).ell - ell
    for _ in range(max_iter):
        rn = float(np.linalg.norm(res))
        if rn <= tol * scale:
            return v
        G = fundamental_tensor(norm, v).G
        step = np.linalg.solve(G, res)
        t = 1.0
        for _ in range(30):
            cand = v - t * step
            if np.any(cand != 0.0):
                cand_res = legendre(norm, cand).ell - ell
                if np.linalg.norm(cand_res) < rn:
                    v, res = cand, cand_res
                    break
            t *= 0.5
        else:
            raise NoConvergence("legendre_inverse: line search stalled")
    if float(np.linalg.norm(res)) <= tol * scale:
        return v
    raise NoConvergence(f"legendre_inverse: no convergence in {max_iter} iterations")


def sample_indicatrix(norm: AlphaBetaNorm, count: int, seed: int = 0) -> np.ndarray:
    """Points u/F(u) for u on the deterministic sphere lattice; F == 1 each."""
    if count < 1:
        raise InputError("count must be >= 1")
    us = sphere_lattice(norm.dim, count, seed=seed)
    return np.array([u / norm_eval(norm, u) for u in us])


def _orthonormal_extension(first: np.ndarray) -> np.ndarray:
    """Orthonormal matrix whose first column is `first` (Euclidean QR)."""
    n = first.size
    M = np.eye(n)
    M[:, 0] = first
    Q, _ = np.linalg.qr(M)
    # fix the sign so the first column is exactly +first
    if Q[:, 0] @ first < 0:
        Q[:, 0] = -Q[:, 0]
        Q[:, 1] = -Q[:, 1]
    return Q


def sample_isometry(norm: AlphaBetaNorm, seed: int = 0) -> np.ndarray:
    """A linear map Q with Q^T a Q = a and Q bvec = bvec.

    Constructed as identity on span{bvec} plus an orthogonal map of the
    a-orthogonal complement; when bvec = 0 the whole a-orthogonal group is
    sampled.  For a 1-dimensional complement the seed picks identity or the
    reflection.
    """
    rng = np.random.default_rng(seed)
    n = norm.dim
    L = np.linalg.cholesky(norm.a)  # a = L L^T, z = L^T x is a-isometric
    bhat = L.T @ norm.bvec
    bn = float(np.linalg.norm(bhat))
    if bn < 1e-14:
        M = _random_orthogonal(rng, n)
    else:
        U = _orthonormal_extension(bhat / bn)
        R = _random_orthogonal(rng, n - 1)
        M = U @ _block_diag1(R) @ U.T
    return np.linalg.solve(L.T, M @ L.T)


def _block_diag1(R: np.ndarray) -> np.ndarray:
    m = R.shape[0] + 1
    B = np.eye(m)
    B[1:, 1:] = R
    return B


def _random_orthogonal(rng: np.random.Generator, m: int) -> np.ndarray:
    if m == 0:
        return np.eye(0)
    if m == 1:
        return np.array([[1.0 if rng.integers(2) == 0 else -1.0]])
    A = rng.standard_normal((m, m))
    Q, R = np.linalg.qr(A)
    return Q * np.sign(np.diag(R))


@dataclass
class NormReport:
    """validate_norm output: per-check booleans plus witnesses."""

    spd_a: bool
    b_in_domain: bool
    phi_valid: bool
    phi_min: float
    phi_argmin: float
    tensor_positive: bool
    min_eigenvalue: float
    witness: list | None
    valid: bool

    def to_dict(self) -> dict:
        return {
            "spd_a": self.spd_a,
            "b_in_domain": self.b_in_domain,
            "phi_valid": self.phi_valid,
            "phi_min": self.phi_min,
            "phi_argmin": self.phi_argmin,
            "tensor_positive": self.tensor_positive,
            "min_eigenvalue": self.min_eigenvalue,
            "witness": self.witness,
            "valid": self.valid,
        }


def validate_norm(norm: AlphaBetaNorm, samples: int = 64, seed: int = 0) -> NormReport:
    """Combined validity report: SPD a, b0 margin, Phi test, tensor eigenvalues.

    The eigenvalue check evaluates the closed-form tensor on indicatrix
    samples; the report never raises, it carries failures.
    """
    eig_a = float(np.min(np.linalg.eigvalsh(norm.a)))
    spd_a = eig_a > 0.0
    b_ok = norm.alpha_b < norm.phi.b0
    vres = phimod.phi_validity(norm.phi, norm.alpha_b)
    min_eig = np.inf
    witness = None
    tensor_ok = True
    try:
        pts = sample_indicatrix(norm, samples, seed=seed)
    except Exception:
        tensor_ok = False
        pts = []
    for p in pts:
        try:
            ev = float(np.min(np.linalg.eigvalsh(fundamental_tensor(norm, p).G)))
        except Exception:
            ev = -np.inf
        if ev < min_eig:
            min_eig = ev
            witness = [float(x) for x in p]
        if ev <= 0.0:
            tensor_ok = False
    return NormReport(
        spd_a=spd_a,
        b_in_domain=b_ok,
        phi_valid=vres.valid,
        phi_min=vres.min_phi,
        phi_argmin=vres.s_min,
        tensor_positive=tensor_ok,
        min_eigenvalue=float(min_eig),
        witness=witness,
        valid=bool(spd_a and b_ok and vres.valid and tensor_ok),
    )
