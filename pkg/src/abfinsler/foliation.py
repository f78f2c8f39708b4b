"""Numerical checks of foliation properties: equidistance, homothety, rank.

Foliations are described by leaf-level maps on a chart domain with an
explicit singular set.  Leaves are identified by level values; a plaque is
the sampled window of one leaf.  All checks reduce to geodesic distances and
endpoint maps computed by the fields module.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cones import Subspace, orthogonal_cone
from .errors import HypothesisViolated, InputError
from .fields import (
    MetricField,
    SubmanifoldDescriptor,
    distance_to_submanifold,
    exp_map,
)
from .minkowski import norm_eval
from .phi import phi_derivative_nowhere_zero
from .submersion import LinearSubmersion, kappa_and_h

_LEVEL_TOL = 1e-6


@dataclass
class FoliationDescriptor:
    """Partition of the chart domain into level sets of one scalar map.

    kinds
      indicatrix        leaves F(q - center) = r, singular leaf at the center
      concentric_alpha  leaves alpha(q - center) = r, singular at the center
      parallel_affine   leaves normal . q = const, no singular set
    """

    kind: str
    center: np.ndarray | None = None
    normal: np.ndarray | None = None
    window: float = 4.0
    singular_set: list = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.kind not in ("indicatrix", "parallel_affine", "concentric_alpha"):
            raise InputError(f"unknown foliation kind {self.kind!r}")
        if self.kind == "parallel_affine":
            if self.normal is None:
                raise InputError("parallel_affine needs a normal covector")
            self.normal = np.asarray(self.normal, dtype=float)
        else:
            if self.center is None:
                raise InputError("radial foliations need a center")
            self.center = np.asarray(self.center, dtype=float)
            if not self.singular_set:
                self.singular_set = [self.center.copy()]

    # -- leaf machinery -------------------------------------------------------

    def level(self, fld: MetricField, q) -> float:
        q = np.asarray(q, dtype=float)
        return self.leaf_function(fld).value(fld, q)

    def leaf_function(self, fld: MetricField) -> SubmanifoldDescriptor:
        if self.kind == "parallel_affine":
            return SubmanifoldDescriptor(kind="level_set", function="affine_level",
                                         level=0.0, normal=self.normal,
                                         halfwidth=self.window)
        fn = "f_level" if self.kind == "indicatrix" else "alpha_level"
        return SubmanifoldDescriptor(kind="level_set", function=fn, level=0.0,
                                     center=self.center, halfwidth=self.window)

    def leaf(self, fld: MetricField, level: float) -> SubmanifoldDescriptor:
        desc = self.leaf_function(fld)
        desc.level = float(level)
        return desc

    def sample_leaf(self, fld: MetricField, level: float, count: int) -> np.ndarray:
        return self.leaf(fld, level).sample(fld, count)

    def retract(self, fld: MetricField, level: float, q: np.ndarray) -> np.ndarray:
        """Exact projection of a near-leaf point back onto the leaf."""
        if self.kind == "parallel_affine":
            nrm = self.normal / float(self.normal @ self.normal)
            return q + (level - float(self.normal @ q)) * nrm
        d = q - self.center
        cur = self.level(fld, q)
        return self.center + d * (level / cur)

    def is_regular(self, fld: MetricField, level: float, tol: float = _LEVEL_TOL) -> bool:
        if self.kind == "parallel_affine":
            return True
        return level > tol

    def sff_flag(self, fld: MetricField, samples: int = 16, tol: float = 1e-10) -> bool:
        """Reversibility gate: radial foliations qualify only for reversible F."""
        if self.kind == "parallel_affine":
            return True
        if self.kind == "concentric_alpha":
            return fld.b_field.family == "zero" or fld.phi.family == "constant"
        pts = self.sample_leaf(fld, 1.0, samples)
        for q in pts:
            v = q - self.center
            norm = fld.norm_at(q)
            if abs(norm_eval(norm, v) - norm_eval(norm, -v)) > tol * norm_eval(norm, v):
                return False
        return True

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind, "window": self.window,
                     "singular_set": [list(map(float, p)) for p in self.singular_set]}
        if self.center is not None:
            out["center"] = list(map(float, self.center))
        if self.normal is not None:
            out["normal"] = list(map(float, self.normal))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FoliationDescriptor":
        allowed = {"kind", "center", "normal", "window", "singular_set"}
        unknown = set(data) - allowed
        if unknown:
            raise InputError(f"unknown foliation keys: {sorted(unknown)}")
        return cls(**data)


def unit_orthogonal_field(
    fld: MetricField,
    fol: FoliationDescriptor,
    q: np.ndarray,
    seed_direction="outward",
) -> np.ndarray:
    """F-unit cone ray at q orthogonal to the leaf through q.

    The branch is the cone ray with maximal inner product against the seed:
    a constant vector, or 'outward'/'inward' radial seeds for the radial
    foliation kinds.
    """
    norm = fld.norm_at(q)
    leaf = fol.leaf(fld, fol.level(fld, q))
    W = Subspace(leaf.tangent_at(fld, q))
    sample = orthogonal_cone(norm, W, directions=max(2, 2 * (fld.dim - W.dim)))
    if isinstance(seed_direction, str):
        if fol.kind == "parallel_affine":
            seed = fol.normal.astype(float)
            if seed_direction == "inward":
                seed = -seed
        else:
            seed = q - fol.center
            if seed_direction == "inward":
                seed = -seed
    else:
        seed = np.asarray(seed_direction, dtype=float)
    scores = [float(v @ seed) / np.linalg.norm(v) for v in sample.vectors]
    return sample.vectors[int(np.argmax(scores))]


@dataclass
class TargetReport:
    level: float
    d_future: list
    d_past: list

    @property
    def future_spread(self) -> float:
        return float(np.max(self.d_future) - np.min(self.d_future))

    @property
    def past_spread(self) -> float:
        return float(np.max(self.d_past) - np.min(self.d_past))

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "future": {"min": float(np.min(self.d_future)),
                       "max": float(np.max(self.d_future)),
                       "spread": self.future_spread},
            "past": {"min": float(np.min(self.d_past)),
                     "max": float(np.max(self.d_past)),
                     "spread": self.past_spread},
        }


@dataclass
class EquidistanceReport:
    base_level: float
    targets: list[TargetReport]
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "base_level": self.base_level,
            "tol": self.tol,
            "pass": self.passed,
            "targets": [t.to_dict() for t in self.targets],
        }


def equidistance_check(
    fld: MetricField,
    fol: FoliationDescriptor,
    base_level: float,
    target_levels,
    samples: int = 32,
    tol: float = _LEVEL_TOL,
    threads: int | None = None,
    grid: int = 128,
) -> EquidistanceReport:
    """Future/past distance spreads from the base leaf to each target leaf."""
    for lv in [base_level, *target_levels]:
        if not fol.is_regular(fld, lv, tol):
            raise InputError(f"level {lv:g} is not regular within tolerance")
    base = fol.leaf(fld, base_level)
    reports = []
    for lv in target_levels:
        pts = fol.sample_leaf(fld, lv, samples)

        def dist(x):
            return distance_to_submanifold(fld, base, x, grid=grid)

        if threads and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                pairs = list(ex.map(dist, pts))
        else:
            pairs = [dist(x) for x in pts]
        reports.append(TargetReport(
            level=float(lv),
            d_future=[p[0] for p in pairs],
            d_past=[p[1] for p in pairs],
        ))
    passed = all(t.future_spread <= tol and t.past_spread <= tol for t in reports)
    return EquidistanceReport(base_level=float(base_level), targets=reports,
                              tol=tol, passed=passed)


@dataclass
class SrfCrossReport:
    finsler_pass: bool
    alpha_pass: bool
    hypothesis_ok: bool
    finsler: EquidistanceReport
    alpha: EquidistanceReport
    kappa: float | None = None

    def __iter__(self):
        return iter((self.finsler_pass, self.alpha_pass))

    def to_dict(self) -> dict:
        return {
            "finsler_pass": self.finsler_pass,
            "alpha_pass": self.alpha_pass,
            "hypothesis_ok": self.hypothesis_ok,
            "kappa": self.kappa,
            "finsler": self.finsler.to_dict(),
            "alpha": self.alpha.to_dict(),
        }


def _b_orthogonal_to_leaves(fld, fol, level, samples) -> bool:
    pts = fol.sample_leaf(fld, level, samples)
    for q in pts:
        norm = fld.norm_at(q)
        if norm.alpha_b < 1e-14:
            continue
        T = fol.leaf(fld, level).tangent_at(fld, q)
        resid = np.max(np.abs(T @ (norm.a @ norm.bvec)))
        if resid > 1e-10 * max(1.0, norm.alpha_b):
            return False
    return True


def _b_tangent_to_leaves(fld, fol, level, samples) -> bool:
    pts = fol.sample_leaf(fld, level, samples)
    for q in pts:
        norm = fld.norm_at(q)
        if norm.alpha_b < 1e-12:
            return False  # must be nonvanishing
        T = fol.leaf(fld, level).tangent_at(fld, q)
        W = Subspace(T)
        if not W.contains(norm.a, norm.bvec, tol=1e-10 * max(1.0, norm.alpha_b)):
            return False
    return True


def srf_cross_check(
    fld: MetricField,
    fol: FoliationDescriptor,
    base_level: float,
    target_levels,
    samples: int = 32,
    tol: float = _LEVEL_TOL,
    mode: str = "horizontal",
    strict: bool = True,
    threads: int | None = None,
) -> SrfCrossReport:
    """Equidistance under F and under the Riemannian part, side by side.

    mode 'horizontal' expects the dual vector a-orthogonal to the leaves and
    a nowhere-critical generator; mode 'vertical' expects it tangent and
    nonvanishing, and rescales the Riemannian field by the conformal factor.
    With strict=True a failed hypothesis raises; otherwise both checks still
    run and the report records the violation.
    """
    kappa = None
    if mode == "horizontal":
        hyp = _b_orthogonal_to_leaves(fld, fol, base_level, samples)
        norm0 = fld.norm_at(fol.sample_leaf(fld, base_level, 1)[0])
        hyp = hyp and phi_derivative_nowhere_zero(fld.phi, norm0.alpha_b)
        shadow_scale = 1.0
    elif mode == "vertical":
        hyp = _b_tangent_to_leaves(fld, fol, base_level, samples)
        if hyp and fol.kind == "parallel_affine":
            q0 = fol.sample_leaf(fld, base_level, 1)[0]
            sub = LinearSubmersion(fol.normal.reshape(1, -1))
            _, kappa = kappa_and_h(fld.norm_at(q0), sub)
            shadow_scale = kappa
        else:
            shadow_scale = 1.0
    else:
        raise InputError(f"unknown srf_cross_check mode {mode!r}")
    if strict and not hyp:
        raise HypothesisViolated(f"{mode} hypothesis fails at the sampled points")
    frep = equidistance_check(fld, fol, base_level, target_levels, samples, tol,
                              threads=threads)
    shadow = fld.riemannian_shadow(scale=shadow_scale)
    # the alpha leaves are the same point sets; rebuild the descriptor on the
    # shadow field but keep the original leaf geometry for indicatrix kinds
    arep = _alpha_equidistance(fld, shadow, fol, base_level, target_levels, samples,
                               tol, threads)
    return SrfCrossReport(
        finsler_pass=frep.passed,
        alpha_pass=arep.passed,
        hypothesis_ok=bool(hyp),
        finsler=frep,
        alpha=arep,
        kappa=kappa,
    )


def _alpha_equidistance(fld, shadow, fol, base_level, target_levels, samples, tol,
                        threads) -> EquidistanceReport:
    """Equidistance of the original leaves measured in the shadow metric."""
    base = fol.leaf(fld, base_level)
    reports = []
    for lv in target_levels:
        pts = fol.sample_leaf(fld, lv, samples)

        def dist(x):
            # distance in the shadow field to the original leaf point set
            return distance_to_submanifold(shadow, _pin_leaf(fld, base), x)

        if threads and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                pairs = list(ex.map(dist, pts))
        else:
            pairs = [dist(x) for x in pts]
        reports.append(TargetReport(level=float(lv),
                                    d_future=[p[0] for p in pairs],
                                    d_past=[p[1] for p in pairs]))
    passed = all(t.future_spread <= tol and t.past_spread <= tol for t in reports)
    return EquidistanceReport(base_level=float(base_level), targets=reports,
                              tol=tol, passed=passed)


class _PinnedLeaf(SubmanifoldDescriptor):
    """Leaf of one field evaluated while measuring with another field."""

    def __init__(self, owner_field: MetricField, desc: SubmanifoldDescriptor):
        self.__dict__.update(desc.__dict__)
        self._owner = owner_field

    def point_at(self, fld, params):
        return super().point_at(self._owner, params)

    def value(self, fld, q):
        return super().value(self._owner, q)

    def tangent_at(self, fld, q):
        return super().tangent_at(self._owner, q)

    def param_grid(self, fld, count):
        return super().param_grid(self._owner, count)


def _pin_leaf(owner_field: MetricField, desc: SubmanifoldDescriptor):
    return _PinnedLeaf(owner_field, desc)


def homothety_check(
    fld: MetricField,
    fol: FoliationDescriptor,
    base_level: float,
    lam: float,
    samples: int = 32,
    tol: float = _LEVEL_TOL,
    r: float = 1.0,
    seed_direction="outward",
    step: float = 1e-3,
) -> bool:
    """Rescaled orthogonal-geodesic endpoints must share one leaf level.

    Shoots the F-unit orthogonal field from base samples, evaluates the
    geodesics at lam * r, and checks the level-value spread.
    """
    if not (0.0 < lam <= 1.0):
        raise InputError("lambda must lie in (0, 1]")
    pts = fol.sample_leaf(fld, base_level, samples)
    levels = []
    for q in pts:
        xi = unit_orthogonal_field(fld, fol, q, seed_direction)
        res = exp_map(fld, q, xi, lam * r, step=step)
        if res.left_domain:
            raise InputError("homothety geodesic left the chart domain")
        levels.append(fol.level(fld, res.state.x))
    spread = float(np.max(levels) - np.min(levels))
    return spread <= tol


@dataclass
class RankReport:
    r: float
    ranks: list[int]
    constant: bool
    level_spread: float
    singular_crossings: int = 0

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "ranks": self.ranks,
            "constant": self.constant,
            "level_spread": self.level_spread,
            "singular_crossings": self.singular_crossings,
        }


def endpoint_rank(
    fld: MetricField,
    fol: FoliationDescriptor,
    base_level: float,
    r: float,
    samples: int = 16,
    svd_tol: float = 1e-6,
    seed_direction="outward",
    fd_step: float = 1e-5,
    step: float = 1e-3,
) -> RankReport:
    """Rank of the endpoint map along leaf-tangent directions, per base point.

    The Jacobian is a central difference through the exact leaf retraction;
    singular values below svd_tol * max(sigma_max, 1) are treated as zero so
    that a collapsed map reports rank zero.
    """
    if not fol.is_regular(fld, base_level):
        raise InputError("base level must be regular")
    pts = fol.sample_leaf(fld, base_level, samples)
    crossings = 0

    def eta(x):
        xi = unit_orthogonal_field(fld, fol, x, seed_direction)
        res = exp_map(fld, x, xi, r, step=step)
        if res.left_domain:
            raise InputError("endpoint geodesic left the chart domain")
        return res.state.x

    ranks = []
    levels = []
    for q in pts:
        endpoint = eta(q)
        levels.append(fol.level(fld, endpoint))
        for s in fol.singular_set:
            if not fld.is_constant and np.linalg.norm(endpoint - np.asarray(s)) < 10 * _LEVEL_TOL:
                crossings += 1
        T = fol.leaf(fld, base_level).tangent_at(fld, q)
        cols = []
        for w in T:
            qp = fol.retract(fld, base_level, q + fd_step * w)
            qm = fol.retract(fld, base_level, q - fd_step * w)
            cols.append((eta(qp) - eta(qm)) / (2.0 * fd_step))
        J = np.column_stack(cols)
        sigma = np.linalg.svd(J, compute_uv=False)
        thresh = svd_tol * max(float(sigma[0]) if sigma.size else 0.0, 1.0)
        ranks.append(int(np.sum(sigma > thresh)))
    return RankReport(
        r=float(r),
        ranks=ranks,
        constant=bool(len(set(ranks)) <= 1),
        level_spread=float(np.max(levels) - np.min(levels)),
        singular_crossings=crossings,
    )
