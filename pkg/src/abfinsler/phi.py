"""Generating functions for (alpha,beta)-norms and their validity analysis.

The norm family F = alpha * phi(beta/alpha) is driven by a scalar generator
phi on (-b0, b0).  This module keeps a closed registry of generators with
hand-coded first and second derivatives, the derived scalars

    lam(s)  = phi(s) - s*phi'(s)
    rho(s)  = phi(s) * lam(s)
    rho0(s) = phi(s)*phi''(s) + phi'(s)**2
    rho1(s) = phi(s)*phi'(s) - s*rho0(s)
    Phi(s,b) = lam(s) + (b**2 - s**2)*phi''(s)

and the strong-convexity test: F is a Minkowski norm for all unit 1-forms of
alpha-length <= b exactly when Phi(s, b') > 0 on |s| <= b' <= b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError, InputError, NonPositive

FAMILIES = ("constant", "randers", "matsumoto", "quadratic", "polynomial")

#: validity margin: the Phi minimum must exceed this to count as positive
EPS_PHI = 1e-10

_DEFAULT_B0 = {"constant": 1.0, "randers": 1.0, "matsumoto": 1.0, "quadratic": 1.0}


@dataclass(frozen=True)
class PhiSpec:
    """A generator phi from the closed family registry.

    family       one of 'constant', 'randers', 'matsumoto', 'quadratic',
                 'polynomial'
    coefficients ascending-power coefficients, polynomial family only
    scale        the constant value c, constant family only
    b0           radius of the open domain (-b0, b0); must be positive
    """

    family: str
    b0: float
    coefficients: tuple[float, ...] = field(default=())
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise InputError(f"unknown phi family {self.family!r}")
        if not (self.b0 > 0.0 and math.isfinite(self.b0)):
            raise InputError("b0 must be a positive finite real")
        if self.family == "constant" and not self.scale > 0.0:
            raise NonPositive("constant generator needs scale > 0")
        if self.family == "polynomial":
            if len(self.coefficients) == 0:
                raise InputError("polynomial generator needs coefficients")
            _check_polynomial_positivity(self.coefficients, self.b0)

    # -- registry constructors ------------------------------------------------

    @classmethod
    def constant(cls, scale: float = 1.0, b0: float = 1.0) -> "PhiSpec":
        """Riemannian case: phi == scale."""
        return cls(family="constant", b0=b0, scale=scale)

    @classmethod
    def randers(cls, b0: float = 1.0) -> "PhiSpec":
        """phi(s) = 1 + s."""
        return cls(family="randers", b0=b0)

    @classmethod
    def matsumoto(cls, b0: float = 1.0) -> "PhiSpec":
        """Slope metric, phi(s) = 1/(1 - s); b0 sits at the pole."""
        return cls(family="matsumoto", b0=b0)

    @classmethod
    def quadratic(cls, b0: float = 1.0) -> "PhiSpec":
        """phi(s) = 1 + s**2 (reversible)."""
        return cls(family="quadratic", b0=b0)

    @classmethod
    def polynomial(cls, coefficients, b0: float) -> "PhiSpec":
        """phi(s) = sum c_k s**k with positivity sampled on (-b0, b0)."""
        return cls(family="polynomial", b0=b0, coefficients=tuple(float(c) for c in coefficients))

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "coefficients": list(self.coefficients),
            "scale": self.scale,
            "b0": self.b0,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PhiSpec":
        if not isinstance(data, dict):
            raise InputError("phi spec must be a JSON object")
        allowed = {"family", "coefficients", "scale", "b0"}
        unknown = set(data) - allowed
        if unknown:
            raise InputError(f"unknown phi spec fields: {sorted(unknown)}")
        if "family" not in data:
            raise InputError("phi spec field 'family' is required")
        family = data["family"]
        if family == "polynomial" and "b0" not in data:
            raise InputError("polynomial phi spec requires explicit b0")
        b0 = float(data.get("b0", _DEFAULT_B0.get(family, 1.0)))
        return cls(
            family=family,
            b0=b0,
            coefficients=tuple(float(c) for c in data.get("coefficients", ())),
            scale=float(data.get("scale", 1.0)),
        )


class PhiDerived(NamedTuple):
    """Derived scalars of a generator at (s, b)."""

    lam: float
    rho: float
    rho0: float
    rho1: float
    Phi: float

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "rho": self.rho,
            "rho0": self.rho0,
            "rho1": self.rho1,
            "Phi": self.Phi,
        }


class ValidityResult(NamedTuple):
    valid: bool
    min_phi: float
    s_min: float


def _check_polynomial_positivity(coeffs, b0: float) -> None:
    # heuristic: 401 interior samples plus the continuous endpoint values
    s = np.linspace(-b0, b0, 401)
    vals = P.polyval(s, np.asarray(coeffs, dtype=float))
    if np.min(vals) <= 0.0:
        k = int(np.argmin(vals))
        raise NonPositive(f"polynomial generator is not positive near s={s[k]:.6g}")


def phi_eval(spec: PhiSpec, s: float) -> tuple[float, float, float]:
    """Evaluate (phi, phi', phi'') at s from the family closed forms.

    Raises DomainError when |s| >= b0, and NonPositive when a polynomial
    generator evaluates to <= 0.
    """
    s = float(s)
    if not abs(s) < spec.b0:
        raise DomainError(f"|s|={abs(s):.6g} outside the open domain (-{spec.b0:g}, {spec.b0:g})")
    if spec.family == "constant":
        return spec.scale, 0.0, 0.0
    if spec.family == "randers":
        return 1.0 + s, 1.0, 0.0
    if spec.family == "matsumoto":
        t = 1.0 - s
        return 1.0 / t, 1.0 / t**2, 2.0 / t**3
    if spec.family == "quadratic":
        return 1.0 + s * s, 2.0 * s, 2.0
    c = np.asarray(spec.coefficients, dtype=float)
    v = float(P.polyval(s, c))
    if v <= 0.0:
        raise NonPositive(f"polynomial generator <= 0 at s={s:.6g}")
    d1 = float(P.polyval(s, P.polyder(c))) if c.size > 1 else 0.0
    d2 = float(P.polyval(s, P.polyder(c, 2))) if c.size > 2 else 0.0
    return v, d1, d2


def phi_derived(spec: PhiSpec, s: float, b: float) -> PhiDerived:
    """Derived scalars at (s, b).  Requires |s| <= b < b0."""
    s, b = float(s), float(b)
    if not (abs(s) <= b < spec.b0):
        raise DomainError(f"need |s| <= b < b0, got s={s:g}, b={b:g}, b0={spec.b0:g}")
    v, d1, d2 = phi_eval(spec, s)
    lam = v - s * d1
    rho = v * lam
    rho0 = v * d2 + d1 * d1
    rho1 = v * d1 - s * rho0
    Phi = lam + (b * b - s * s) * d2
    return PhiDerived(lam=lam, rho=rho, rho0=rho0, rho1=rho1, Phi=Phi)


def _validity_profile(spec: PhiSpec, s: float, b: float) -> float:
    # min over b' in [|s|, b] of Phi(s, b'): Phi is affine in b'**2, so the
    # minimum sits at an endpoint; b' = |s| gives lam(s)
    v, d1, d2 = phi_eval(spec, s)
    lam = v - s * d1
    return min(lam, lam + (b * b - s * s) * d2)


def _golden_min(f, lo: float, hi: float, iters: int = 80) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def phi_validity(spec: PhiSpec, b: float, eps: float = EPS_PHI) -> ValidityResult:
    """Strong-convexity test for alpha-length of the 1-form up to b.

    Minimizes Phi(s, b') over |s| <= b' <= b with a 201-point grid in s
    followed by golden-section refinement; valid means the minimum exceeds
    eps.  Raises DomainError when b >= b0.
    """
    b = float(b)
    if not (0.0 <= b < spec.b0):
        raise DomainError(f"need 0 <= b < b0={spec.b0:g}, got b={b:g}")
    if b == 0.0:
        m = _validity_profile(spec, 0.0, 0.0)
        return ValidityResult(valid=m > eps, min_phi=m, s_min=0.0)
    grid = np.linspace(-b, b, 201)
    vals = np.array([_validity_profile(spec, s, b) for s in grid])
    k = int(np.argmin(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    s_min, m = _golden_min(lambda s: _validity_profile(spec, s, b), lo, hi)
    if vals[k] < m:
        s_min, m = float(grid[k]), float(vals[k])
    return ValidityResult(valid=m > eps, min_phi=float(m), s_min=float(s_min))


def max_admissible_b(spec: PhiSpec, tol: float = 1e-8) -> float:
    """Largest b < b0 that passes phi_validity, by bisection to abs tol.

    Returns 0.0 when validity already fails arbitrarily close to zero, and
    b0 when validity holds all the way up to the domain edge.
    """
    if not phi_validity(spec, 0.0).valid:
        return 0.0
    probe = spec.b0 * (1.0 - 1e-12)
    if phi_validity(spec, probe).valid:
        return spec.b0
    lo, hi = 0.0, probe
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if phi_validity(spec, mid).valid:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def phi_derivative_nowhere_zero(spec: PhiSpec, b: float) -> bool:
    """Whether phi' has no zero on [-b, b] (family flag; sampled for polynomials)."""
    if spec.family in ("randers", "matsumoto"):
        return True
    if spec.family in ("constant", "quadratic"):
        return False  # phi' == 0 (constant) or phi'(0) == 0 (quadratic)
    s = np.linspace(-b, b, 401)
    d1 = np.array([phi_eval(spec, float(x))[1] for x in s])
    return bool(np.min(np.abs(d1)) > 1e-12)
