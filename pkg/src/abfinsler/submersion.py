"""Linear Finsler submersions of Minkowski spaces and the averaged metric.

Given a full-row-rank linear map P and an (alpha,beta)-norm upstairs, the
induced norm downstairs evaluates F on the cone lift over ker P.  The module
also classifies the two structured cases (bvec horizontal / bvec vertical),
reconstructs their closed-form data, and integrates the indicatrix-averaged
Riemannian metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import phi as phimod
from .cones import ConeSample, Subspace, conical_lift, orthogonal_cone, ratio_constancy_check
from .errors import (
    DegenerateAxis,
    HypothesisViolated,
    InputError,
    VerificationFailed,
    ZeroVector,
)
from .lattice import sphere_area, sphere_lattice, tangent_basis
from .minkowski import AlphaBetaNorm, fundamental_tensor, legendre, norm_eval


@dataclass
class LinearSubmersion:
    """A full-row-rank k x n matrix P with its kernel (fiber) basis."""

    P: np.ndarray
    kernel_basis: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        k, n = self.P.shape
        if k >= n:
            raise InputError("P must have fewer rows than columns")
        if np.linalg.matrix_rank(self.P) != k:
            raise InputError("P must have full row rank")
        _, _, vt = np.linalg.svd(self.P)
        self.kernel_basis = vt[k:, :]

    @property
    def k(self) -> int:
        return self.P.shape[0]

    @property
    def n(self) -> int:
        return self.P.shape[1]

    def fiber_subspace(self) -> Subspace:
        return Subspace(self.kernel_basis)


def _horizontal_frame(norm: AlphaBetaNorm, sub: LinearSubmersion):
    """(W, U, H, M): fiber subspace, a-ONBs of fiber/complement, and M = P H."""
    W = sub.fiber_subspace()
    U, H = W.onb_pair(norm.a)
    return W, U, H, sub.P @ H


def horizontal_lift_of_target(norm: AlphaBetaNorm, sub: LinearSubmersion, y) -> np.ndarray:
    """The vector in the a-complement of ker P mapping to y under P."""
    y = np.asarray(y, dtype=float)
    _, _, H, M = _horizontal_frame(norm, sub)
    return H @ np.linalg.solve(M, y)


def induced_norm(norm: AlphaBetaNorm, sub: LinearSubmersion, y) -> float:
    """Norm induced on the target: F at the cone lift over ker P with P v = y."""
    y = np.asarray(y, dtype=float)
    if y.size != sub.k:
        raise InputError(f"expected a target vector of length {sub.k}")
    if not np.any(y != 0.0):
        raise ZeroVector("induced norm needs a nonzero target vector")
    W = sub.fiber_subspace()
    yh = horizontal_lift_of_target(norm, sub, y)
    v = conical_lift(norm, W, yh)
    return norm_eval(norm, v)


def horizontality_check(
    norm: AlphaBetaNorm, sub: LinearSubmersion, v, tol: float = 1e-8
) -> bool:
    """True when F2(P v) matches F1(v) to relative tol (v attains the fiber inf)."""
    v = np.asarray(v, dtype=float)
    if not np.any(v != 0.0):
        raise ZeroVector("nonzero vector required")
    y = sub.P @ v
    if not np.any(np.abs(y) > 1e-15 * max(1.0, float(np.linalg.norm(v)))):
        return False  # strictly vertical
    f1 = norm_eval(norm, v)
    f2 = induced_norm(norm, sub, y)
    return abs(f2 - f1) <= tol * f1


def _bh_split(norm: AlphaBetaNorm, sub: LinearSubmersion):
    """bvec split into fiber-tangent and a-orthogonal (horizontal) parts."""
    _, U, H, _ = _horizontal_frame(norm, sub)
    bv = U @ (U.T @ (norm.a @ norm.bvec))
    return norm.bvec - bv, bv, U, H


def vartheta(norm: AlphaBetaNorm, sub: LinearSubmersion, y) -> float:
    """Zero-homogeneous horizontal profile of the induced norm.

    For y in the a-complement of ker P, with v the conical lift of y and
    r = beta(v)/alpha(v):

        vartheta(y) = lam(r) * alpha(y)/alpha(v) + phi'(r) * bh_pairing(y)/alpha(y)

    where bh_pairing is the a-product against the horizontal part of bvec.
    """
    y = np.asarray(y, dtype=float)
    if not np.any(y != 0.0):
        raise ZeroVector("nonzero horizontal vector required")
    bh, _, _, _ = _bh_split(norm, sub)
    W = sub.fiber_subspace()
    v = conical_lift(norm, W, y)
    al_v = norm.alpha(v)
    r = norm.beta(v) / al_v
    val, d1, _ = phimod.phi_eval(norm.phi, r)
    lam = val - r * d1
    al_y = norm.alpha(y)
    beta2 = float(bh @ norm.a @ y)
    return lam * al_y / al_v + d1 * beta2 / al_y


def horizontal_b_frame(norm: AlphaBetaNorm, sub: LinearSubmersion) -> np.ndarray:
    """Deterministic a-orthonormal frame of the complement with bvec^h last.

    Gram-Schmidt over the canonical basis (lowest index first), seeded with
    the normalized horizontal part of bvec, which is then moved to the last
    slot.
    """
    bh, _, _, H = _bh_split(norm, sub)
    m = H.shape[1]
    nb = float(np.sqrt(bh @ norm.a @ bh))
    if nb < 1e-14:
        raise DegenerateAxis("bvec has no horizontal part")
    frame = [bh / nb]
    n = norm.dim
    UH = H @ H.T @ norm.a  # a-orthogonal projector onto the complement
    for i in range(n):
        if len(frame) == m:
            break
        cand = UH @ np.eye(n)[i]
        for f in frame:
            cand = cand - (f @ norm.a @ cand) * f
        cn = float(np.sqrt(max(0.0, cand @ norm.a @ cand)))
        if cn > 1e-10:
            frame.append(cand / cn)
    if len(frame) != m:
        raise VerificationFailed("could not complete the horizontal frame")
    return np.array(frame[1:] + frame[:1]).T  # columns, bvec^h direction last


def phi_tilde(norm: AlphaBetaNorm, sub: LinearSubmersion, s: float) -> float:
    """Induced generator profile, evaluated at argument alpha(bvec^h) * s.

    Computed from the horizontal profile on the a-unit vector with
    coordinates (0, ..., 0, sqrt(1-s**2), s) in the frame that puts the
    horizontal part of bvec last.  Requires |s| <= 1 and bvec^h != 0.
    """
    s = float(s)
    if not abs(s) <= 1.0:
        raise InputError("phi_tilde parameter must satisfy |s| <= 1")
    F = horizontal_b_frame(norm, sub)
    m = F.shape[1]
    if m < 2 and abs(s) < 1.0:
        raise DegenerateAxis("need a complement of dimension >= 2 for |s| < 1")
    y = s * F[:, -1]
    if abs(s) < 1.0:
        y = y + math.sqrt(1.0 - s * s) * F[:, -2]
    return vartheta(norm, sub, y)


def induced_alpha_beta(
    norm: AlphaBetaNorm,
    sub: LinearSubmersion,
    check_samples: int = 64,
    tol: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form (a2, b2) of the induced norm when bvec is horizontal.

    a2 is the pushforward of a through P restricted to the a-complement of
    the fiber (the Riemannian-submersion metric) and b2 = P @ bvec.  The
    reconstruction F2 = alpha2 * phi(beta2/alpha2) is verified on sphere
    samples before returning.
    """
    _, U, H, M = _horizontal_frame(norm, sub)
    if np.max(np.abs(U.T @ (norm.a @ norm.bvec))) > 1e-10 * max(1.0, norm.alpha_b):
        raise HypothesisViolated("bvec must be a-orthogonal to the fiber")
    if not phimod.phi_derivative_nowhere_zero(norm.phi, norm.alpha_b):
        raise HypothesisViolated("generator derivative must be nowhere zero")
    Minv = np.linalg.inv(M)
    a2 = Minv.T @ Minv  # H is a-orthonormal, so a|complement pushes to M^-T M^-1
    b2 = sub.P @ norm.bvec
    count = max(check_samples, 2)
    ys = sphere_lattice(sub.k, count) if sub.k >= 2 else np.array([[1.0], [-1.0]])
    b2cov = a2 @ b2
    worst = 0.0
    for y in ys:
        f2 = induced_norm(norm, sub, y)
        al2 = math.sqrt(max(0.0, y @ a2 @ y))
        val, _, _ = phimod.phi_eval(norm.phi, float(b2cov @ y) / al2)
        worst = max(worst, abs(f2 - al2 * val) / max(1.0, f2))
    if worst > tol:
        raise VerificationFailed(f"induced-norm reconstruction error {worst:.3e} > {tol:g}")
    return a2, b2


def kappa_and_h(
    norm: AlphaBetaNorm,
    sub: LinearSubmersion,
    check_samples: int = 32,
    tol: float = 1e-8,
) -> tuple[float, float]:
    """Cone ratio h and conformal factor kappa = rho(h) for vertical bvec.

    Requires bvec nonzero inside ker P.  h is read off one cone sample after
    asserting constancy over the cone; the identity F2(P y)**2 = kappa *
    alpha(y)**2 is verified on horizontal samples.
    """
    W = sub.fiber_subspace()
    if not np.any(norm.bvec != 0.0):
        raise HypothesisViolated("bvec must be nonzero")
    if not W.contains(norm.a, norm.bvec, tol=1e-10):
        raise HypothesisViolated("bvec must lie in ker P")
    is_const, h, spread = ratio_constancy_check(norm, W, directions=check_samples)
    if not is_const:
        raise VerificationFailed(f"cone ratio spread {spread:.3e} exceeds tolerance")
    val, d1, _ = phimod.phi_eval(norm.phi, h)
    kappa = val * (val - h * d1)
    _, _, H, _ = _horizontal_frame(norm, sub)
    m = H.shape[1]
    coeffs = sphere_lattice(m, max(check_samples, 2)) if m >= 2 else np.array([[1.0], [-1.0]])
    worst = 0.0
    for cf in coeffs:
        y = H @ cf
        f2 = induced_norm(norm, sub, sub.P @ y)
        al = norm.alpha(y)
        worst = max(worst, abs(f2 * f2 - kappa * al * al) / max(1.0, f2 * f2))
    if worst > tol:
        raise VerificationFailed(f"kappa identity error {worst:.3e} > {tol:g}")
    return h, kappa


@dataclass
class InducedNormTable:
    """Sampled induced norm with the case classification and recovered data."""

    case_tag: str
    samples: list
    recovered: dict | None

    def to_dict(self) -> dict:
        return {
            "case_tag": self.case_tag,
            "recovered": self.recovered,
            "samples": [{"y": list(map(float, y)), "F2": float(f)} for y, f in self.samples],
        }


def classify_submersion(norm: AlphaBetaNorm, sub: LinearSubmersion) -> str:
    """'b_horizontal', 'b_vertical', or 'general' from the position of bvec."""
    W = sub.fiber_subspace()
    scale = max(1.0, norm.alpha_b)
    if norm.alpha_b < 1e-14:
        return "b_horizontal"
    _, U, _, _ = _horizontal_frame(norm, sub)
    vert_part = float(np.max(np.abs(U.T @ (norm.a @ norm.bvec))))
    if vert_part <= 1e-10 * scale:
        return "b_horizontal"
    if W.contains(norm.a, norm.bvec, tol=1e-10 * scale):
        return "b_vertical"
    return "general"


def induced_norm_table(
    norm: AlphaBetaNorm,
    sub: LinearSubmersion,
    count: int = 64,
    seed: int = 0,
) -> InducedNormTable:
    """Tabulate the induced norm on a sphere sample and recover case data."""
    ys = sphere_lattice(sub.k, count, seed=seed) if sub.k >= 2 else np.array([[1.0], [-1.0]])
    samples = [(y, induced_norm(norm, sub, y)) for y in ys]
    tag = classify_submersion(norm, sub)
    recovered = None
    if tag == "b_horizontal" and phimod.phi_derivative_nowhere_zero(norm.phi, norm.alpha_b):
        a2, b2 = induced_alpha_beta(norm, sub)
        recovered = {"a2": [float(x) for x in a2.reshape(-1)], "b2vec": list(map(float, b2))}
    elif tag == "b_vertical":
        h, kappa = kappa_and_h(norm, sub)
        recovered = {"h": h, "kappa": kappa}
    return InducedNormTable(case_tag=tag, samples=samples, recovered=recovered)


def average_metric(
    norm: AlphaBetaNorm,
    quadrature: int = 10000,
    normalize: bool = False,
    seed: int = 0,
) -> np.ndarray:
    """Indicatrix average of the fundamental tensor.

    Parametrizes the indicatrix by ray scaling of an equal-area sphere
    lattice and weights each node by the Gram volume factor of the induced
    metric on the indicatrix tangent.  Unnormalized by default; with
    normalize=True the result is divided by the indicatrix volume.
    """
    n = norm.dim
    us = sphere_lattice(n, quadrature, seed=seed)
    w = sphere_area(n) / quadrature
    acc = np.zeros((n, n))
    vol = 0.0
    for u in us:
        F = norm_eval(norm, u)
        x = u / F
        ell = legendre(norm, x).ell  # gradient of half F^2 at x; F(x) = 1
        T = tangent_basis(u)
        # differential of u -> u/F(u) applied to the sphere tangent basis
        M = T / F - np.outer(u, ell @ T) / F**2
        G = fundamental_tensor(norm, x).G
        gram = M.T @ G @ M
        dv = math.sqrt(max(0.0, float(np.linalg.det(gram)))) * w
        acc += dv * G
        vol += dv
    if normalize and vol > 0.0:
        acc /= vol
    return 0.5 * (acc + acc.T)
