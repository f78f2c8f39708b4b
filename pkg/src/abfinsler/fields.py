"""(alpha,beta)-metric fields on box domains, geodesics, and distances.

A field assigns to each chart point p a norm (a(p), bvec(p), phi).  The
geodesic spray comes from the energy Lagrangian L = F**2/2 through

    G(x,v) a = dL/dx - (d ell/dx) v

where the x-derivatives are central differences on the field and G, ell are
the closed-form tensor and Legendre covector of the pointwise norm.
Constant fields short-circuit to straight lines and to exact straight-ray
distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    InputError,
    NotFound,
    OutOfDomain,
    SingularTensor,
    ZeroVector,
)
from .lattice import sphere_lattice
from .minkowski import AlphaBetaNorm, fundamental_tensor, legendre, norm_eval, validate_norm
from .phi import PhiSpec

_GRAD_H = 1e-6


@dataclass
class Box:
    """Axis-aligned chart domain."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.lo.shape != self.hi.shape or np.any(self.lo >= self.hi):
            raise InputError("box needs lo < hi componentwise")

    def contains(self, p: np.ndarray) -> bool:
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))

    def to_dict(self) -> dict:
        return {"lo": list(map(float, self.lo)), "hi": list(map(float, self.hi))}


@dataclass
class AField:
    """Riemannian part of the field: constant matrix or conformal scaling.

    conformal: a(p) = exp(2 * coeff * |p - center|^2) * a0.
    """

    family: str
    a0: np.ndarray
    coeff: float = 0.0
    center: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.family not in ("constant", "conformal"):
            raise InputError(f"unknown a-field family {self.family!r}")
        self.a0 = np.asarray(self.a0, dtype=float)
        if self.center is not None:
            self.center = np.asarray(self.center, dtype=float)

    def __call__(self, p: np.ndarray) -> np.ndarray:
        if self.family == "constant":
            return self.a0
        c = self.center if self.center is not None else np.zeros(self.a0.shape[0])
        d = p - c
        return math.exp(2.0 * self.coeff * float(d @ d)) * self.a0

    @property
    def is_constant(self) -> bool:
        return self.family == "constant" or self.coeff == 0.0


@dataclass
class BField:
    """1-form part of the field via its dual vector.

    radial: bvec(p) = amplitude * exp(-|p|^2/scale^2) * p, smooth at the
    origin and decaying at the cutoff scale.
    """

    family: str
    bvec0: np.ndarray | None = None
    amplitude: float = 0.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in ("constant", "radial", "zero"):
            raise InputError(f"unknown b-field family {self.family!r}")
        if self.family == "constant":
            if self.bvec0 is None:
                raise InputError("constant b-field needs bvec0")
            self.bvec0 = np.asarray(self.bvec0, dtype=float)
        if self.family == "radial" and not self.scale > 0.0:
            raise InputError("radial b-field needs scale > 0")

    def __call__(self, p: np.ndarray) -> np.ndarray:
        if self.family == "zero":
            return np.zeros_like(p)
        if self.family == "constant":
            return self.bvec0
        return self.amplitude * math.exp(-float(p @ p) / self.scale**2) * p

    @property
    def is_constant(self) -> bool:
        return self.family in ("constant", "zero") or self.amplitude == 0.0

    def negated(self) -> "BField":
        if self.family == "zero":
            return self
        if self.family == "constant":
            return BField(family="constant", bvec0=-self.bvec0)
        return replace(self, amplitude=-self.amplitude)


@dataclass
class MetricField:
    """Chart-domain assignment p -> (a(p), bvec(p), phi)."""

    dim: int
    domain: Box
    a_field: AField
    b_field: BField
    phi: PhiSpec

    def norm_at(self, p) -> AlphaBetaNorm:
        p = np.asarray(p, dtype=float)
        if not self.domain.contains(p):
            raise OutOfDomain(f"point {p.tolist()} outside the chart box")
        return AlphaBetaNorm(dim=self.dim, a=self.a_field(p), bvec=self.b_field(p), phi=self.phi)

    @property
    def is_constant(self) -> bool:
        return self.a_field.is_constant and self.b_field.is_constant

    def reversed(self) -> "MetricField":
        """Field of the reverse norm F~(v) = F(-v): the dual vector flips sign."""
        return MetricField(
            dim=self.dim,
            domain=self.domain,
            a_field=self.a_field,
            b_field=self.b_field.negated(),
            phi=self.phi,
        )

    def riemannian_shadow(self, scale: float = 1.0) -> "MetricField":
        """Pure-alpha field (generator replaced by 1), optionally scaled."""
        a0 = scale * self.a_field.a0
        af = replace(self.a_field, a0=a0)
        return MetricField(
            dim=self.dim,
            domain=self.domain,
            a_field=af,
            b_field=BField(family="zero"),
            phi=PhiSpec.constant(1.0, b0=self.phi.b0),
        )

    def validate(self, points) -> bool:
        return all(validate_norm(self.norm_at(p)).valid for p in points)

    def to_dict(self) -> dict:
        bf: dict = {"family": self.b_field.family}
        if self.b_field.family == "constant":
            bf["bvec"] = list(map(float, self.b_field.bvec0))
        elif self.b_field.family == "radial":
            bf["amplitude"] = self.b_field.amplitude
            bf["scale"] = self.b_field.scale
        af: dict = {"family": self.a_field.family,
                    "a0": [float(x) for x in self.a_field.a0.reshape(-1)]}
        if self.a_field.family == "conformal":
            af["coeff"] = self.a_field.coeff
            if self.a_field.center is not None:
                af["center"] = list(map(float, self.a_field.center))
        return {
            "dim": self.dim,
            "domain": self.domain.to_dict(),
            "a_field": af,
            "b_field": bf,
            "phi": self.phi.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricField":
        if not isinstance(data, dict):
            raise InputError("field must be a JSON object")
        allowed = {"dim", "domain", "a_field", "b_field", "phi"}
        unknown = set(data) - allowed
        if unknown:
            raise InputError(f"unknown field keys: {sorted(unknown)}")
        for key in allowed:
            if key not in data:
                raise InputError(f"field key {key!r} is required")
        n = int(data["dim"])
        dom = Box(lo=np.asarray(data["domain"]["lo"], float),
                  hi=np.asarray(data["domain"]["hi"], float))
        afd = data["a_field"]
        a0 = np.asarray(afd["a0"], dtype=float)
        if a0.ndim == 1:
            a0 = a0.reshape(n, n)
        af = AField(family=afd["family"], a0=a0, coeff=float(afd.get("coeff", 0.0)),
                    center=np.asarray(afd["center"], float) if "center" in afd else None)
        bfd = data["b_field"]
        fam = bfd["family"]
        if fam == "constant":
            bf = BField(family="constant", bvec0=np.asarray(bfd["bvec"], float))
        elif fam == "radial":
            bf = BField(family="radial", amplitude=float(bfd["amplitude"]),
                        scale=float(bfd.get("scale", 1.0)))
        else:
            bf = BField(family="zero")
        return cls(dim=n, domain=dom, a_field=af, b_field=bf,
                   phi=PhiSpec.from_dict(data["phi"]))


@dataclass
class GeodesicState:
    x: np.ndarray
    v: np.ndarray


@dataclass
class IntegrationResult:
    state: GeodesicState
    t: float
    left_domain: bool
    trajectory: list | None = None


def spray_accel(fld: MetricField, x, v) -> np.ndarray:
    """Geodesic acceleration at (x, v) from the energy Lagrangian.

    Constant fields return exactly zero.  Raises SingularTensor if the
    fundamental-tensor solve fails (cannot happen for valid norms).
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if not np.any(v != 0.0):
        raise ZeroVector("spray needs a nonzero velocity")
    if not fld.domain.contains(x):
        raise OutOfDomain(f"point {x.tolist()} outside the chart box")
    if fld.is_constant:
        return np.zeros_like(v)
    n = fld.dim
    h = _GRAD_H * max(1.0, float(np.linalg.norm(x)))
    norm = fld.norm_at(x)
    G = fundamental_tensor(norm, v).G

    def L(p):
        return 0.5 * norm_eval(fld.norm_at(p), v) ** 2

    def ell(p):
        return legendre(fld.norm_at(p), v).ell

    dLdx = np.empty(n)
    B = np.empty((n, n))  # B[i, j] = d ell_i / d x_j
    eye = np.eye(n)
    for j in range(n):
        dLdx[j] = (L(x + h * eye[j]) - L(x - h * eye[j])) / (2.0 * h)
        B[:, j] = (ell(x + h * eye[j]) - ell(x - h * eye[j])) / (2.0 * h)
    rhs = dLdx - B @ v
    try:
        return np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularTensor("fundamental tensor is singular at the state") from exc


def exp_map(
    fld: MetricField,
    x,
    v,
    t: float,
    step: float = 1e-3,
    record: bool = False,
) -> IntegrationResult:
    """Fixed-step RK4 integration of the spray up to time t.

    Leaving the domain stops the integration at the last in-domain state and
    sets the left_domain flag; nothing is extrapolated.  Constant fields use
    the exact straight-line solution.
    """
    x = np.asarray(x, dtype=float).copy()
    v = np.asarray(v, dtype=float).copy()
    if not np.any(v != 0.0):
        raise ZeroVector("exp map needs a nonzero velocity")
    if t < 0.0:
        raise InputError("t must be >= 0")
    if not fld.domain.contains(x):
        raise OutOfDomain(f"point {x.tolist()} outside the chart box")
    traj = [(0.0, x.copy(), v.copy())] if record else None
    if fld.is_constant:
        target = x + t * v
        if fld.domain.contains(target):
            if record:
                traj.append((t, target.copy(), v.copy()))
            return IntegrationResult(GeodesicState(target, v), t, False, traj)
        # walk to the boundary along the ray
        lo, hi = 0.0, t
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if fld.domain.contains(x + mid * v):
                lo = mid
            else:
                hi = mid
        state = GeodesicState(x + lo * v, v)
        if record:
            traj.append((lo, state.x.copy(), v.copy()))
        return IntegrationResult(state, lo, True, traj)

    def rhs(xc, vc):
        return vc, spray_accel(fld, xc, vc)

    t_now = 0.0
    while t_now < t - 1e-15:
        dt = min(step, t - t_now)
        try:
            k1x, k1v = rhs(x, v)
            k2x, k2v = rhs(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v)
            k3x, k3v = rhs(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v)
            k4x, k4v = rhs(x + dt * k3x, v + dt * k3v)
        except OutOfDomain:
            return IntegrationResult(GeodesicState(x, v), t_now, True, traj)
        x_new = x + (dt / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        v_new = v + (dt / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not fld.domain.contains(x_new):
            return IntegrationResult(GeodesicState(x, v), t_now, True, traj)
        x, v = x_new, v_new
        t_now += dt
        if record:
            traj.append((t_now, x.copy(), v.copy()))
    return IntegrationResult(GeodesicState(x, v), t_now, False, traj)


def trajectory_rows(fld: MetricField, result: IntegrationResult) -> list[list[float]]:
    """CSV rows (t, x, v, F(v)) for a recorded integration."""
    if result.trajectory is None:
        raise InputError("integration was not recorded")
    rows = []
    for (tt, xx, vv) in result.trajectory:
        rows.append([tt, *map(float, xx), *map(float, vv),
                     norm_eval(fld.norm_at(xx), vv)])
    return rows


# -- submanifolds -------------------------------------------------------------


@dataclass
class SubmanifoldDescriptor:
    """A level-set or affine submanifold with samplers and tangent spaces.

    kind 'level_set': function id in {'f_level', 'alpha_level', 'affine_level'}
    with a level value; 'affine': point + tangent basis with a sampling
    window half-width.
    """

    kind: str
    function: str = ""
    level: float = 0.0
    center: np.ndarray | None = None
    normal: np.ndarray | None = None
    point: np.ndarray | None = None
    tangent: np.ndarray | None = None
    halfwidth: float = 4.0

    def __post_init__(self) -> None:
        if self.kind not in ("level_set", "affine"):
            raise InputError(f"unknown submanifold kind {self.kind!r}")
        for name in ("center", "normal", "point"):
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, np.asarray(val, dtype=float))
        if self.tangent is not None:
            self.tangent = np.atleast_2d(np.asarray(self.tangent, dtype=float))
        if self.kind == "level_set":
            if self.function not in ("f_level", "alpha_level", "affine_level"):
                raise InputError(f"unknown level function {self.function!r}")
            if self.function in ("f_level", "alpha_level") and self.center is None:
                raise InputError("radial level sets need a center")
            if self.function == "affine_level" and self.normal is None:
                raise InputError("affine level sets need a normal covector")
        if self.kind == "affine" and (self.point is None or self.tangent is None):
            raise InputError("affine submanifolds need point and tangent")

    # level-function machinery (level_set kind)

    def value(self, fld: MetricField, q: np.ndarray) -> float:
        if self.kind != "level_set":
            raise InputError("value() needs a level-set submanifold")
        if self.function == "affine_level":
            return float(self.normal @ q)
        d = q - self.center
        if not np.any(d != 0.0):
            return 0.0
        norm = fld.norm_at(self.center if fld.is_constant else q)
        if self.function == "f_level":
            return norm_eval(norm, d)
        return norm.alpha(d)

    def param_dim(self, n: int) -> int:
        if self.kind == "affine":
            return self.tangent.shape[0]
        return n - 1

    def point_at(self, fld: MetricField, params: np.ndarray) -> np.ndarray:
        """Chart point for parameter values (angles for radial kinds)."""
        n = fld.dim
        if self.kind == "affine":
            return self.point + self.tangent.T @ params
        if self.function == "affine_level":
            # offset point + tangent window of the hyperplane
            nrm = self.normal / np.linalg.norm(self.normal)
            base = self.level / float(self.normal @ nrm) * nrm
            T = _hyperplane_tangent(self.normal)
            return base + T.T @ params
        if n != 2:
            raise InputError("angle parametrization of radial leaves needs n == 2")
        theta = params[0]
        u = np.array([math.cos(theta), math.sin(theta)])
        norm = fld.norm_at(self.center)
        if self.function == "f_level":
            return self.center + self.level * u / norm_eval(norm, u)
        return self.center + self.level * u / norm.alpha(u)

    def param_grid(self, fld: MetricField, count: int) -> np.ndarray:
        m = self.param_dim(fld.dim)
        if self.kind == "affine" or self.function == "affine_level":
            axes = [np.linspace(-self.halfwidth, self.halfwidth, count) for _ in range(m)]
        else:
            axes = [np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([mm.reshape(-1) for mm in mesh], axis=-1)

    def sample(self, fld: MetricField, count: int) -> np.ndarray:
        return np.array([self.point_at(fld, prm) for prm in self.param_grid(fld, count)])

    def tangent_at(self, fld: MetricField, q: np.ndarray) -> np.ndarray:
        """Rows span the tangent space at an on-manifold point q."""
        if self.kind == "affine":
            return self.tangent
        if self.function == "affine_level":
            return _hyperplane_tangent(self.normal)
        d = q - self.center
        norm = fld.norm_at(self.center if fld.is_constant else q)
        if self.function == "f_level":
            grad = legendre(norm, d).ell / norm_eval(norm, d)
        else:
            grad = (norm.a @ d) / norm.alpha(d)
        return _hyperplane_tangent(grad)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "level_set":
            out["function"] = self.function
            out["level"] = self.level
            if self.center is not None:
                out["center"] = list(map(float, self.center))
            if self.normal is not None:
                out["normal"] = list(map(float, self.normal))
        else:
            out["point"] = list(map(float, self.point))
            out["tangent"] = [list(map(float, row)) for row in self.tangent]
            out["halfwidth"] = self.halfwidth
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SubmanifoldDescriptor":
        allowed = {"kind", "function", "level", "center", "normal", "point",
                   "tangent", "halfwidth"}
        unknown = set(data) - allowed
        if unknown:
            raise InputError(f"unknown submanifold keys: {sorted(unknown)}")
        return cls(**data)


def _hyperplane_tangent(grad: np.ndarray) -> np.ndarray:
    """Euclidean-orthonormal basis of the orthogonal complement of grad (rows)."""
    n = grad.size
    M = np.eye(n)
    g = grad / np.linalg.norm(grad)
    M[:, 0] = g
    Q, _ = np.linalg.qr(M)
    return Q[:, 1:].T


# -- distances ----------------------------------------------------------------


def _golden_refine(f, lo: float, hi: float, iters: int = 70) -> tuple[float, float]:
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


def _min_over_manifold(fld: MetricField, P: SubmanifoldDescriptor, f, grid: int = 128):
    """Grid-then-golden minimization of f(q) over P; returns (q*, f*, params*)."""
    params = P.param_grid(fld, grid)
    m = params.shape[1]
    vals = np.array([f(P.point_at(fld, prm)) for prm in params])
    k = int(np.argmin(vals))
    best_p = params[k].copy()
    if m == 1:
        axis = params[:, 0]
        spacing = axis[1] - axis[0] if grid > 1 else 1.0
        t0 = best_p[0]
        t, val = _golden_refine(lambda tt: f(P.point_at(fld, np.array([tt]))),
                                t0 - spacing, t0 + spacing)
        best_p = np.array([t])
        best_val = val
    else:
        # coordinate golden refinement, a few sweeps
        spacing = (2.0 * P.halfwidth) / max(grid - 1, 1)
        best_val = vals[k]
        for _ in range(6):
            for j in range(m):
                def along(tt):
                    prm = best_p.copy()
                    prm[j] = tt
                    return f(P.point_at(fld, prm))
                t, val = _golden_refine(along, best_p[j] - spacing, best_p[j] + spacing)
                best_p[j] = t
                best_val = val
            spacing *= 0.25
    q = P.point_at(fld, best_p)
    return q, float(best_val), best_p


def _straight_line_distance(fld: MetricField, P: SubmanifoldDescriptor, x: np.ndarray,
                            grid: int = 128):
    """Exact Minkowski-mode distances (future, past) with their foot points."""
    norm = fld.norm_at(x)
    qf, df, _ = _min_over_manifold(fld, P, lambda q: norm_eval(norm, x - q), grid)
    qp, dp, _ = _min_over_manifold(fld, P, lambda q: norm_eval(norm, q - x), grid)
    return (df, qf), (dp, qp)


def distance_to_submanifold(
    fld: MetricField,
    P: SubmanifoldDescriptor,
    x,
    grid: int = 128,
    mode: str = "auto",
    shoot_step: float = 1e-3,
    land_tol: float = 1e-6,
) -> tuple[float, float]:
    """(future, past) distances from the submanifold P to the point x.

    Future = travel cost P -> x, past = travel cost x -> P.  Constant fields
    use the exact straight-ray formulation; otherwise orthogonal geodesics
    are shot from candidate foot points and refined by damped Gauss-Newton
    on (foot parameters, time).  mode forces 'straight' or 'shooting'.
    """
    x = np.asarray(x, dtype=float)
    if mode == "auto":
        mode = "straight" if fld.is_constant else "shooting"
    if mode == "straight":
        if not fld.is_constant:
            raise InputError("straight-line distances need a constant field")
        (df, _), (dp, _) = _straight_line_distance(fld, P, x, grid)
        return df, dp
    dfut = _shooting_distance(fld, P, x, grid, shoot_step, land_tol)
    dpast = _shooting_distance(fld.reversed(), P, x, grid, shoot_step, land_tol)
    return dfut, dpast


def _cone_directions_at(fld: MetricField, P: SubmanifoldDescriptor, q: np.ndarray):
    from .cones import Subspace, orthogonal_cone

    norm = fld.norm_at(q)
    W = Subspace(P.tangent_at(fld, q))
    sample = orthogonal_cone(norm, W, directions=max(2, 2 * (fld.dim - W.dim)))
    return sample.vectors


def _shooting_distance(fld, P, x, grid, step, land_tol):
    # stage 1: straight-ray surrogate picks foot-point and branch candidates
    norm_x = fld.norm_at(x)
    qf, df_est, prm = _min_over_manifold(fld, P, lambda q: norm_eval(fld.norm_at(q), x - q),
                                         grid)
    best = None
    for xi in _cone_directions_at(fld, P, qf):
        if xi @ (x - qf) <= 0.0:
            continue  # wrong side
        cand = _refine_shot(fld, P, x, prm, xi, df_est, step, land_tol)
        if cand is not None and (best is None or cand < best):
            best = cand
    if best is None:
        raise NotFound("no orthogonal geodesic lands on the target point")
    return best


def _refine_shot(fld, P, x, prm0, xi0, t0, step, land_tol):
    """Gauss-Newton on (foot parameters, time); returns the landing time or None."""
    m = prm0.size
    z = np.concatenate([prm0, [max(t0, 1e-6)]])
    xi_ref = xi0

    def residual(zz):
        prm, tt = zz[:m], abs(zz[m])
        q = P.point_at(fld, prm)
        xi = _continue_branch(fld, P, q, xi_ref)
        res = exp_map(fld, q, xi, tt, step=step)
        if res.left_domain:
            return None
        return res.state.x - x

    r = residual(z)
    if r is None:
        return None
    for _ in range(30):
        rn = float(np.linalg.norm(r))
        if rn <= 1e-8:
            break
        J = np.empty((x.size, m + 1))
        h = 1e-6
        for j in range(m + 1):
            zp = z.copy()
            zp[j] += h
            rp = residual(zp)
            if rp is None:
                return None
            J[:, j] = (rp - r) / h
        try:
            dz, *_ = np.linalg.lstsq(J, -r, rcond=None)
        except np.linalg.LinAlgError:
            return None
        tfac = 1.0
        improved = False
        for _ in range(20):
            z_new = z + tfac * dz
            r_new = residual(z_new)
            if r_new is not None and np.linalg.norm(r_new) < rn:
                z, r = z_new, r_new
                improved = True
                break
            tfac *= 0.5
        if not improved:
            break
    if float(np.linalg.norm(r)) <= land_tol:
        return float(abs(z[m]))
    return None


def _continue_branch(fld, P, q, xi_ref):
    """Cone ray at q closest in direction to the reference ray."""
    rays = _cone_directions_at(fld, P, q)
    scores = [float(rr @ xi_ref) / (np.linalg.norm(rr) * np.linalg.norm(xi_ref))
              for rr in rays]
    return rays[int(np.argmax(scores))]


def foot_point(fld: MetricField, P: SubmanifoldDescriptor, x, grid: int = 128,
               past: bool = False):
    """Optimal foot point of the straight-ray distance (constant fields)."""
    x = np.asarray(x, dtype=float)
    (df, qf), (dp, qp) = _straight_line_distance(fld, P, x, grid)
    return (qp, dp) if past else (qf, df)
