"""Sampling parameters, protection audits, and genericity certificates.

The sampling radius of a finite set is the largest distance from the set
reachable inside its eroded convex hull, where the erosion margin is the
radius itself; it is measured here as a verified fixed point. On top of that
sit the protection audit of the double star around a chosen deep interior
region, the thickness certificate implied by positive relative protection,
and an audit of the individual geometric consequences (edge separation,
altitude floor, circumradius bound, secure flags).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .complexes import SimplicialComplex
from .delaunay import DelaunayResult, PointSet, as_point_set, delaunay_lifted
from .errors import NonGenericError, PreconditionError
from .hull import HullFacets, eroded_boundary_samples, hull_facets
from .simplex import Simplex, simplex_metrics

THICKNESS_SLACK = 1e-9


@dataclass(frozen=True)
class SamplingReport:
    """Measured sampling radius, sparsity, and their ratio."""

    epsilon: float
    sparsity: float
    mu0: float

    def __post_init__(self) -> None:
        if not (self.epsilon > 0 and self.sparsity > 0):
            raise PreconditionError("sampling parameters must be positive")


@dataclass(frozen=True)
class ProtectionReport:
    """Protection margins of the audited top simplices."""

    per_simplex: dict[tuple[int, ...], float]
    delta_global: float
    nu_tilde: float
    generic: bool


@dataclass(frozen=True)
class SafeInteriorClassification:
    """Deep interior vertices and the simplex sets their choice induces."""

    deep_ids: tuple[int, ...]
    region: tuple[int, ...]
    safe: SimplicialComplex
    audited: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class ThicknessCertificate:
    """Certified thickness floor for the safe simplices."""

    upsilon0: float
    witnesses: tuple[tuple[tuple[int, ...], float, bool], ...]
    min_thickness: float
    margin: float
    valid: bool


@dataclass(frozen=True)
class GenericityAnalysis:
    """Everything the audits share: sampling data, the complex, the stars."""

    sampling: SamplingReport
    base: DelaunayResult
    facets: HullFacets
    protection: ProtectionReport
    classification: SafeInteriorClassification
    tolerance: float


# -- sampling radius -------------------------------------------------------


def _coverage_radius(ps: PointSet, facets: HullFacets, centers: np.ndarray,
                     radii: np.ndarray, tree: cKDTree, eps: float,
                     pitch: float) -> float:
    """Largest distance to P over the hull eroded by eps.

    Interior maxima of the distance function sit at empty ball centres, so
    the candidates are the Delaunay circumcentres inside the eroded body plus
    a sweep of its boundary at the given pitch.
    """
    best = 0.0
    if centers.size:
        inside = facets.depth(centers) >= eps - 1e-12 * max(1.0, eps)
        if inside.any():
            best = float(radii[inside].max())
    boundary = eroded_boundary_samples(facets, eps, pitch)
    if boundary.size:
        d, _ = tree.query(boundary)
        best = max(best, float(np.max(d)))
    return best


def sampling_parameters(points) -> SamplingReport:
    """Measure the sampling radius, the sparsity, and their ratio.

    The sampling radius solves eps = sup over the eps-eroded hull of the
    distance to the set; the sup shrinks as the erosion grows, so the
    equation has a unique fixed point, found by two rounds of fixed point
    iteration and then bisection down to 1e-9 of the diameter.
    """
    ps = as_point_set(points)
    if ps.n < ps.dim + 1:
        raise PreconditionError("need at least dim + 1 points")
    facets = hull_facets(ps.points)
    sparsity = ps.min_gap()
    pitch = sparsity / 16.0
    tree = cKDTree(ps.points)
    base = delaunay_lifted(ps)
    balls = list(base.balls.values())
    centers = np.array([b.center for b in balls]) if balls else np.empty((0, ps.dim))
    radii = np.array([b.radius for b in balls]) if balls else np.empty(0)

    def g(eps: float) -> float:
        return _coverage_radius(ps, facets, centers, radii, tree, eps, pitch)

    eps = g(0.0)
    if eps <= 0:
        raise PreconditionError("degenerate hull, no interior to cover")
    for _ in range(2):
        eps = g(eps)
    tol = 1e-9 * ps.diameter()
    if abs(g(eps) - eps) > tol:
        # g decreases in eps, so g(x) - x brackets its root on [0, g(0)].
        lo, hi = 0.0, g(0.0)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if g(mid) - mid > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= tol:
                break
        eps = 0.5 * (lo + hi)
    return SamplingReport(epsilon=eps, sparsity=sparsity, mu0=sparsity / eps)


def deep_interior(points, eps: float) -> set[int]:
    """Vertices whose distance to the hull boundary is at least 4 eps."""
    ps = as_point_set(points)
    facets = hull_facets(ps.points)
    depth = facets.depth(ps.points)
    slack = 1e-12 * max(1.0, ps.diameter())
    return {int(i) for i in np.nonzero(depth >= 4.0 * eps - slack)[0]}


# -- protection classification ---------------------------------------------


def analyze_genericity(points, region) -> GenericityAnalysis:
    """Shared workhorse behind the classification and certification calls."""
    ps = as_point_set(points)
    region = tuple(sorted({int(v) for v in region}))
    if not region:
        raise PreconditionError("region must be nonempty")
    sampling = sampling_parameters(ps)
    facets = hull_facets(ps.points)
    deep = deep_interior(ps, sampling.epsilon)
    outside = [v for v in region if v not in deep]
    if outside:
        raise PreconditionError(
            f"region vertices {outside} are not deep interior points"
        )
    base = delaunay_lifted(ps)
    m = ps.dim
    cx = base.complex
    safe = cx.vertex_star(region)
    audited = tuple(
        s for s in cx.star(region).simplices(m) if s in base.balls
    )
    if not audited:
        raise PreconditionError("audited star contains no top simplices")
    per = {s: base.balls[s].protection for s in audited}
    delta = min(per.values())
    eps = sampling.epsilon
    tol = ps.tolerance()
    nu = max(min(delta, eps), 0.0) / eps
    report = ProtectionReport(
        per_simplex=per,
        delta_global=delta,
        nu_tilde=nu,
        generic=delta > tol,
    )
    classification = SafeInteriorClassification(
        deep_ids=tuple(sorted(deep)),
        region=region,
        safe=safe,
        audited=audited,
    )
    return GenericityAnalysis(
        sampling=sampling, base=base, facets=facets, protection=report,
        classification=classification, tolerance=tol,
    )


def classify_generic(points, region):
    """Protection audit of the double star around the chosen deep vertices.

    Returns the protection report (per simplex margins, their minimum, the
    relative protection, and the genericity flag) together with the safe
    interior classification (deep vertices, the safe star, the audited top
    simplices).
    """
    a = analyze_genericity(points, region)
    return a.protection, a.classification


def thickness_certificate(points, region, *, analysis: GenericityAnalysis | None = None
                          ) -> ThicknessCertificate:
    """Certify the thickness floor sqrt(3) nu^2 / 4 on the safe simplices."""
    a = analysis if analysis is not None else analyze_genericity(points, region)
    if not a.protection.generic:
        raise NonGenericError(
            f"protection {a.protection.delta_global:.3e} is within tolerance of zero"
        )
    nu = a.protection.nu_tilde
    upsilon0 = np.sqrt(3.0) * nu * nu / 4.0
    pts = a.base.complex.points
    witnesses = []
    worst = np.inf
    for dim in range(1, a.base.complex.dimension + 1):
        for s in a.classification.safe.simplices(dim):
            met = simplex_metrics(Simplex(pts[list(s)]))
            worst = min(worst, met.thickness)
            witnesses.append((s, met.thickness, met.thickness >= upsilon0 - THICKNESS_SLACK))
    valid = all(w[2] for w in witnesses)
    return ThicknessCertificate(
        upsilon0=float(upsilon0),
        witnesses=tuple(witnesses),
        min_thickness=float(worst),
        margin=float(worst - upsilon0),
        valid=valid,
    )


# -- lemma audit -----------------------------------------------------------


@dataclass(frozen=True)
class SimplexAudit:
    """One audited top simplex with its measured quantities."""

    vertices: tuple[int, ...]
    radius: float
    protection: float
    thickness: float
    secure: bool


@dataclass(frozen=True)
class AuditRecord:
    """Joint audit of the geometric consequences of positive protection.

    ``checks`` maps each consequence to (pass, fail) counts: edge separation
    above the protection margin, altitude floors, the circumradius bound for
    simplices with a doubly deep vertex, and the thickness floor. When the
    data is not generic no per simplex claims are made.
    """

    epsilon: float
    sparsity: float
    mu0: float
    delta: float
    nu_tilde: float
    upsilon0: float
    generic: bool
    simplices: tuple[SimplexAudit, ...]
    checks: dict[str, tuple[int, int]]

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "sparsity": self.sparsity,
            "mu0": self.mu0,
            "delta": self.delta,
            "nu_tilde": self.nu_tilde,
            "upsilon0": self.upsilon0,
            "generic": self.generic,
            "simplices": [
                {
                    "vertices": list(s.vertices),
                    "radius": s.radius,
                    "protection": s.protection,
                    "thickness": s.thickness,
                    "secure": s.secure,
                }
                for s in self.simplices
            ],
            "checks": {
                name: {"pass": p, "fail": f}
                for name, (p, f) in sorted(self.checks.items())
            },
        }


def lemma_audit(points, region, *, analysis: GenericityAnalysis | None = None) -> AuditRecord:
    """Audit the geometric consequences of the measured protection.

    Per safe simplex: shortest edge above the protection margin and every
    altitude above sqrt(3) delta^2 / (2 eps). Per audited top simplex with a
    vertex at depth 2 eps or more: circumradius below eps. Thickness floor
    per the certificate. Secure flags combine protection, thickness, radius,
    and shortest edge thresholds with the consolidated parameters.
    """
    a = analysis if analysis is not None else analyze_genericity(points, region)
    s0 = a.sampling
    delta = a.protection.delta_global
    nu = a.protection.nu_tilde
    upsilon0 = float(np.sqrt(3.0) * nu * nu / 4.0)
    if not a.protection.generic:
        return AuditRecord(
            epsilon=s0.epsilon, sparsity=s0.sparsity, mu0=s0.mu0,
            delta=delta, nu_tilde=nu, upsilon0=upsilon0, generic=False,
            simplices=(), checks={name: (0, 0) for name in
                                  ("separation", "altitude", "circumradius", "thickness")},
        )
    eps = s0.epsilon
    tol = a.tolerance
    pts = a.base.complex.points
    m = a.base.complex.dimension
    counts = {name: [0, 0] for name in ("separation", "altitude", "circumradius", "thickness")}

    def tally(name: str, ok: bool) -> None:
        counts[name][0 if ok else 1] += 1

    altitude_floor = np.sqrt(3.0) * delta * delta / (2.0 * eps)
    for dim in range(1, m + 1):
        for s in a.classification.safe.simplices(dim):
            met = simplex_metrics(Simplex(pts[list(s)]))
            tally("separation", met.shortest_edge > delta - tol)
            tally("altitude", bool(np.all(met.altitudes > altitude_floor - tol)))
            tally("thickness", met.thickness >= upsilon0 - THICKNESS_SLACK)

    depth = a.facets.depth(pts)
    audits = []
    for s in a.classification.audited:
        ball = a.base.balls[s]
        met = simplex_metrics(Simplex(pts[list(s)]))
        if np.max(depth[list(s)]) >= 2.0 * eps:
            tally("circumradius", ball.radius < eps + tol)
        secure = (
            ball.protection >= delta - tol
            and met.thickness >= upsilon0 - THICKNESS_SLACK
            and ball.radius < eps + tol
            and met.shortest_edge >= nu * eps - tol
        )
        audits.append(SimplexAudit(
            vertices=s, radius=float(ball.radius), protection=float(ball.protection),
            thickness=float(met.thickness), secure=secure,
        ))
    return AuditRecord(
        epsilon=eps, sparsity=s0.sparsity, mu0=s0.mu0, delta=delta,
        nu_tilde=nu, upsilon0=upsilon0, generic=True,
        simplices=tuple(audits),
        checks={name: (p, f) for name, (p, f) in counts.items()},
    )
