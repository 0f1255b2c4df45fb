"""Geometry of a single simplex.

A j-simplex is given by j+1 vertices in R^m (j <= m for the non-degenerate
operations). Everything here is built around the edge matrix P whose columns
are p_i - p_0: circumcentres come from the Gram system, altitudes from
orthogonal projections onto facet hulls, and the quality measure is the
thickness

    thickness(sigma) = 1                                     if j = 0,
    thickness(sigma) = min_i altitude_i / (j * longest_edge) otherwise,

which controls the smallest singular value of P, the stability of the
circumcentre, and the angle between the simplex and nearby flats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSimplexError, PreconditionError

# A simplex counts as degenerate when the edge matrix loses rank at this
# relative level; chosen to sit far above double roundoff and far below any
# honest geometric margin at desk scale.
DEGENERACY_RTOL = 1e-12

# Default slack for the inequality checks below: the bounds are strict
# theorems, so this only has to absorb evaluation roundoff.
CHECK_TOL = 1e-9

_RESIDUAL_RTOL = 1e-10


class Simplex:
    """Geometric simplex, an ordered tuple of vertices in R^m."""

    __slots__ = ("vertices",)

    def __init__(self, vertices) -> None:
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2:
            raise PreconditionError("simplex vertices must form a 2-d array")
        if v.shape[0] < 1:
            raise PreconditionError("simplex needs at least one vertex")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("simplex vertices must be finite")
        self.vertices = v

    @property
    def dim(self) -> int:
        """Combinatorial dimension j (number of vertices minus one)."""
        return self.vertices.shape[0] - 1

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    def edge_matrix(self) -> np.ndarray:
        """Matrix with columns p_i - p_0, shape (m, j)."""
        return (self.vertices[1:] - self.vertices[0]).T

    def face(self, drop: int) -> "Simplex":
        """Facet opposite vertex ``drop``."""
        keep = [i for i in range(self.dim + 1) if i != drop]
        return Simplex(self.vertices[keep])

    def __repr__(self) -> str:  # pragma: no cover
        return f"Simplex(j={self.dim}, m={self.ambient_dim})"


def _as_simplex(s) -> Simplex:
    return s if isinstance(s, Simplex) else Simplex(s)


def _pairwise_distances(v: np.ndarray) -> np.ndarray:
    diff = v[:, None, :] - v[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def _singular_values(p: np.ndarray, j: int) -> np.ndarray:
    """Singular values of the edge matrix, padded with zeros up to j."""
    if j == 0:
        return np.zeros(0)
    s = np.linalg.svd(p, compute_uv=False)
    if s.size < j:
        s = np.concatenate([s, np.zeros(j - s.size)])
    return s


def is_degenerate(simplex) -> bool:
    """True when the vertices are affinely dependent at DEGENERACY_RTOL."""
    s = _as_simplex(simplex)
    if s.dim == 0:
        return False
    sv = _singular_values(s.edge_matrix(), s.dim)
    return bool(sv[0] == 0.0 or sv[-1] < DEGENERACY_RTOL * sv[0])


def circumcenter(simplex):
    """Circumcentre and circumradius of a simplex.

    For a non-degenerate j-simplex the centre is the unique point of the
    affine hull equidistant from all vertices; it is found by solving the
    Gram system P^T P y = (|p_i - p_0|^2 / 2)_i with c = p_0 + P y. For a
    degenerate simplex the same equations are solved by least squares: when
    they are consistent (vertices on a common sphere) the smallest
    circumscribing ball centre is returned, otherwise ``None``.

    Returns ``(centre, radius)`` or ``None``.
    """
    s = _as_simplex(simplex)
    v = s.vertices
    j = s.dim
    if j == 0:
        return v[0].copy(), 0.0
    p = s.edge_matrix()
    b = 0.5 * (p**2).sum(axis=0)
    sv = _singular_values(p, j)
    longest = _pairwise_distances(v).max()
    if sv[-1] >= DEGENERACY_RTOL * sv[0] and sv[0] > 0.0:
        y = np.linalg.solve(p.T @ p, b)
        offset = p @ y
        c = v[0] + offset
        r = float(np.linalg.norm(offset))
    else:
        # Least squares on (p_i - p_0) . x = b_i; the minimum norm solution
        # stays in the affine hull direction space. Consistency means the
        # vertices are concyclic on some sphere.
        x, *_ = np.linalg.lstsq(p.T, b, rcond=None)
        residual = p.T @ x - b
        if np.abs(residual).max() > 1e-9 * max(longest**2, 1e-300):
            return None
        c = v[0] + x
        r = float(np.linalg.norm(v - c, axis=1).max())
    dists = np.linalg.norm(v - c, axis=1)
    if np.abs(dists - r).max() > _RESIDUAL_RTOL * max(longest, 1e-300) + 1e-14:
        return None
    return c, r


def _altitudes(v: np.ndarray) -> np.ndarray:
    """Distance from each vertex to the affine hull of the opposite facet."""
    k = v.shape[0]
    out = np.zeros(k)
    for i in range(k):
        others = np.delete(v, i, axis=0)
        base = others[0]
        rel = v[i] - base
        if others.shape[0] == 1:
            out[i] = float(np.linalg.norm(rel))
            continue
        span = others[1:] - base
        # Orthonormal basis of the facet direction space, rank revealed.
        u, sv, _ = np.linalg.svd(span.T, full_matrices=False)
        if sv.size and sv[0] > 0.0:
            rank = int(np.sum(sv >= DEGENERACY_RTOL * sv[0]))
        else:
            rank = 0
        basis = u[:, :rank]
        proj = basis @ (basis.T @ rel)
        out[i] = float(np.linalg.norm(rel - proj))
    return out


@dataclass(frozen=True)
class SimplexMetrics:
    """Size and quality numbers for one simplex."""

    dim: int
    longest_edge: float
    shortest_edge: float
    circumcenter: np.ndarray | None
    circumradius: float | None
    altitudes: np.ndarray
    thickness: float
    singular_values: np.ndarray
    degenerate: bool


def simplex_metrics(simplex) -> SimplexMetrics:
    """Compute edge extremes, circumball, altitudes, thickness and spectrum.

    Thickness is 1 for a vertex, 0 for a degenerate simplex and
    ``min(altitudes) / (j * longest_edge)`` otherwise. The singular values are
    those of the edge matrix, padded with zeros when rank is lost, so
    ``degenerate`` is equivalent to ``s_j < DEGENERACY_RTOL * s_1``.
    """
    s = _as_simplex(simplex)
    v = s.vertices
    j = s.dim
    if j == 0:
        return SimplexMetrics(
            dim=0,
            longest_edge=0.0,
            shortest_edge=0.0,
            circumcenter=v[0].copy(),
            circumradius=0.0,
            altitudes=np.zeros(1),
            thickness=1.0,
            singular_values=np.zeros(0),
            degenerate=False,
        )
    dists = _pairwise_distances(v)
    iu = np.triu_indices(j + 1, k=1)
    longest = float(dists[iu].max())
    shortest = float(dists[iu].min())
    sv = _singular_values(s.edge_matrix(), j)
    degenerate = bool(sv[0] == 0.0 or sv[-1] < DEGENERACY_RTOL * sv[0])
    alts = _altitudes(v)
    if degenerate or longest == 0.0:
        thickness = 0.0
    else:
        thickness = float(alts.min() / (j * longest))
    ball = circumcenter(s)
    center, radius = ball if ball is not None else (None, None)
    return SimplexMetrics(
        dim=j,
        longest_edge=longest,
        shortest_edge=shortest,
        circumcenter=center,
        circumradius=radius,
        altitudes=alts,
        thickness=thickness,
        singular_values=sv,
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of one inequality check: measured value, bound, verdict."""

    value: float
    bound: float
    holds: bool
    detail: dict = field(default_factory=dict)


def singular_value_floor(simplex) -> BoundCheck:
    """Check s_j(P) >= sqrt(j) * thickness * longest_edge.

    The smallest singular value of the edge matrix of a thick simplex cannot
    collapse; this is the quantitative version used everywhere downstream.
    """
    s = _as_simplex(simplex)
    met = simplex_metrics(s)
    if met.degenerate or s.dim == 0:
        raise DegenerateSimplexError("singular value floor needs a non-degenerate simplex of dim >= 1")
    j = s.dim
    value = float(met.singular_values[-1])
    bound = np.sqrt(j) * met.thickness * met.longest_edge
    holds = value >= bound - CHECK_TOL * met.longest_edge
    return BoundCheck(value=value, bound=float(bound), holds=bool(holds))


class Flat:
    """Affine flat given by a base point and an orthonormal direction basis."""

    __slots__ = ("point", "basis")

    def __init__(self, point, basis) -> None:
        self.point = np.asarray(point, dtype=float)
        b = np.asarray(basis, dtype=float)
        if b.ndim != 2 or b.shape[1] != self.point.shape[0]:
            raise PreconditionError("flat basis must be rows in the ambient space")
        gram = b @ b.T
        if b.shape[0] and np.abs(gram - np.eye(b.shape[0])).max() > 1e-10:
            raise PreconditionError("flat basis must be orthonormal")
        self.basis = b

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def from_span(cls, point, vectors) -> "Flat":
        """Flat through ``point`` spanned by ``vectors`` (rows, any rank)."""
        point = np.asarray(point, dtype=float)
        vec = np.atleast_2d(np.asarray(vectors, dtype=float))
        if vec.size == 0:
            return cls(point, np.zeros((0, point.shape[0])))
        u, sv, _ = np.linalg.svd(vec.T, full_matrices=False)
        rank = int(np.sum(sv >= DEGENERACY_RTOL * sv[0])) if sv.size and sv[0] > 0 else 0
        return cls(point, u[:, :rank].T)

    @classmethod
    def from_points(cls, points) -> "Flat":
        """Affine hull of a set of points."""
        pts = np.asarray(points, dtype=float)
        return cls.from_span(pts[0], pts[1:] - pts[0])

    def distance(self, x) -> float:
        rel = np.asarray(x, dtype=float) - self.point
        proj = self.basis.T @ (self.basis @ rel)
        return float(np.linalg.norm(rel - proj))


def subspace_angle(u: Flat, v: Flat) -> float:
    """Largest principal angle between the direction spaces of two flats.

    Requires dim(u) <= dim(v). The sine of the returned angle equals
    ``sup { dist(x, v) : x unit vector in u }``.
    """
    if u.dim > v.dim:
        raise PreconditionError("subspace_angle expects dim(u) <= dim(v)")
    if u.dim == 0:
        return 0.0
    if v.dim == 0:
        return float(np.pi / 2)
    m = v.basis @ u.basis.T
    sv = np.linalg.svd(m, compute_uv=False)
    smin = float(sv[-1]) if sv.size == u.dim else 0.0
    smin = min(max(smin, 0.0), 1.0)
    # arccos alone loses half the precision near zero angle; pair the cosine
    # with the residual-based sine, which is exact there.
    res = u.basis - (u.basis @ v.basis.T) @ v.basis
    sine = float(np.linalg.svd(res, compute_uv=False)[0])
    sine = min(max(sine, 0.0), 1.0)
    return float(np.arctan2(sine, smin))


def whitney_angle_check(simplex, flat: Flat) -> BoundCheck:
    """Angle between a simplex and a nearby flat of at least its dimension.

    If every vertex lies within eta of the flat, then
    ``sin(angle(aff(simplex), flat)) <= 2 * eta / (thickness * longest_edge)``.
    """
    s = _as_simplex(simplex)
    met = simplex_metrics(s)
    if met.degenerate or s.dim == 0:
        raise DegenerateSimplexError("angle bound needs a non-degenerate simplex of dim >= 1")
    if flat.dim < s.dim:
        raise PreconditionError("flat must have dimension at least that of the simplex")
    eta = max(flat.distance(p) for p in s.vertices)
    aff = Flat.from_points(s.vertices)
    sine = float(np.sin(subspace_angle(aff, flat)))
    bound = 2.0 * eta / (met.thickness * met.longest_edge)
    holds = sine <= bound + CHECK_TOL
    return BoundCheck(value=sine, bound=float(bound), holds=bool(holds), detail={"eta": float(eta)})


def almost_center_gap(simplex, x) -> BoundCheck:
    """Distance from a near-equidistant point to the centre space.

    The centre space of a simplex is the affine space of centres of all its
    circumscribing balls (the translate of the orthogonal complement of the
    edge matrix column space through the circumcentre). Two bounds apply to a
    point x whose vertex distances almost agree:

    * squared spread: with xi2 the largest difference of squared vertex
      distances, ``dist <= xi2 / (2 * thickness * longest_edge)``;
    * plain spread: with xi the largest difference of vertex distances and
      eps_max the largest vertex distance,
      ``dist <= eps_max * xi / (thickness * longest_edge)``.

    Returns the exact distance together with both bounds; ``holds`` says the
    distance is below their minimum plus slack.
    """
    s = _as_simplex(simplex)
    met = simplex_metrics(s)
    if met.degenerate or s.dim == 0:
        raise DegenerateSimplexError("centre gap needs a non-degenerate simplex of dim >= 1")
    x = np.asarray(x, dtype=float)
    c, _ = circumcenter(s)
    p = s.edge_matrix()
    u, sv, _ = np.linalg.svd(p, full_matrices=False)
    basis = u[:, : s.dim]
    dist = float(np.linalg.norm(basis.T @ (x - c)))
    d = np.linalg.norm(s.vertices - x, axis=1)
    d2 = d**2
    xi2 = float(d2.max() - d2.min())
    xi = float(d.max() - d.min())
    eps_max = float(d.max())
    denom = met.thickness * met.longest_edge
    bound_sq = xi2 / (2.0 * denom)
    bound_centre = eps_max * xi / denom
    bound = min(bound_sq, bound_centre)
    holds = dist <= bound + CHECK_TOL
    return BoundCheck(
        value=dist,
        bound=float(bound),
        holds=bool(holds),
        detail={"bound_sq": float(bound_sq), "bound_centre": float(bound_centre)},
    )


def munkres_thickness_check(simplex) -> BoundCheck:
    """Barycentric inradius ratio against its closed form.

    r(sigma) is the radius of the largest ball centred at the barycentre and
    contained in the simplex; within the affine hull that is the least
    distance from the barycentre to a facet hull. The ratio
    ``r / longest_edge`` equals ``j / (j + 1) * thickness`` exactly.
    """
    s = _as_simplex(simplex)
    met = simplex_metrics(s)
    if met.degenerate or s.dim == 0:
        raise DegenerateSimplexError("inradius ratio needs a non-degenerate simplex of dim >= 1")
    v = s.vertices
    j = s.dim
    bary = v.mean(axis=0)
    r = np.inf
    for i in range(j + 1):
        others = np.delete(v, i, axis=0)
        r = min(r, Flat.from_points(others).distance(bary))
    value = float(r / met.longest_edge)
    expected = j / (j + 1) * met.thickness
    holds = abs(value - expected) <= CHECK_TOL * max(1.0, expected)
    return BoundCheck(value=value, bound=float(expected), holds=bool(holds))
