"""Perturbed metrics and the Delaunay complexes they induce.

A metric model is a symmetric distance on a box domain that deviates from the
Euclidean one by at most ``rho_bound``. Three kinds are provided:

* ``euclidean``: the identity deviation, useful as a control;
* ``pullback``: d(x, y) = |phi(x) - phi(y)| for a smooth bijection phi built
  from a bounded sinusoidal displacement field (a genuine metric, and it
  admits an exact fast route through the Euclidean complex of phi(P));
* ``additive_noise``: Euclidean distance plus a bounded smooth symmetric
  term. This is only a pseudo metric (triangle inequality unchecked) and is
  meant for exercising the relaxed machinery.

Metric circumcentres are found by damped Newton iteration on the vertex
distance differences, seeded at the Euclidean circumcentre with a small
multistart grid; metric Delaunay complexes are built either by that generic
route, by the exact pullback route, or by both with a hard comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np
from scipy.spatial.distance import pdist

from .complexes import SimplicialComplex
from .delaunay import Ball, DelaunayResult, as_point_set, delaunay_lifted
from .errors import PathMismatchError, PreconditionError
from .simplex import Simplex, circumcenter, simplex_metrics


@dataclass(frozen=True)
class Box:
    """Axis aligned box domain."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def around(cls, points: np.ndarray, pad: float) -> "Box":
        pts = np.asarray(points, dtype=float)
        return cls(lo=pts.min(axis=0) - pad, hi=pts.max(axis=0) + pad)

    def boundary_gap(self, x: np.ndarray) -> np.ndarray:
        """Distance from rows of x to the box boundary (negative outside)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.minimum((x - self.lo).min(axis=1), (self.hi - x).min(axis=1))


class DisplacementField:
    """Smooth bounded displacement x -> x + disp(x) with small Lipschitz norm.

    Each displacement coordinate is a mean of ``terms`` sinusoids; the field
    satisfies |disp(x)| <= amplitude everywhere and its Lipschitz constant is
    certified below 1/2, which makes phi = id + disp a bijection and the
    pullback distance a genuine metric with deviation at most 2 * amplitude.
    """

    def __init__(self, dim: int, amplitude: float, seed: int, *,
                 wavelength: float = 2.0, terms: int = 3) -> None:
        if amplitude < 0:
            raise PreconditionError("amplitude must be nonnegative")
        if wavelength <= 0:
            raise PreconditionError("wavelength must be positive")
        rng = np.random.default_rng(seed)
        w = rng.normal(size=(dim, terms, dim))
        norms = np.linalg.norm(w, axis=2, keepdims=True)
        norms[norms == 0] = 1.0
        scale = (2.0 * np.pi / wavelength) * rng.uniform(0.5, 1.5, size=(dim, terms, 1))
        w = w / norms * scale
        self.phases = rng.uniform(0.0, 2.0 * np.pi, size=(dim, terms))
        self.dim = int(dim)
        self.amplitude = float(amplitude)
        self.terms = int(terms)
        gain = amplitude / np.sqrt(dim) if dim else 0.0
        m_abs = np.abs(w).mean(axis=1)
        lip = gain * float(np.linalg.norm(m_abs, 2)) if dim else 0.0
        if lip >= 0.5:
            shrink = 0.45 / lip
            w = w * shrink
            lip = lip * shrink
        self.waves = w
        self.lipschitz = lip

    def displacement(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        args = np.einsum("nj,ikj->nik", x, self.waves) + self.phases[None, :, :]
        gain = self.amplitude / np.sqrt(self.dim)
        return gain * np.sin(args).mean(axis=2)

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return x + self.displacement(x)

    def inverse(self, y: np.ndarray) -> np.ndarray:
        """Invert phi by contraction; converges since Lipschitz < 1/2."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        x = y.copy()
        for _ in range(200):
            step = y - self.displacement(x) - x
            x = x + step
            if np.abs(step).max() <= 1e-15 * max(1.0, np.abs(y).max()):
                break
        return x


class MetricModel:
    """Distance function on a box with a certified Euclidean deviation bound."""

    def __init__(self, kind: str, *, rho_bound: float, domain: Box | None,
                 field: DisplacementField | None = None,
                 noise=None, center_lipschitz: float = 1.0,
                 pseudo_metric: bool = False) -> None:
        self.kind = kind
        self.rho_bound = float(rho_bound)
        self.domain = domain
        self.field = field
        self._noise = noise
        self.center_lipschitz = float(center_lipschitz)
        self.pseudo_metric = bool(pseudo_metric)

    @classmethod
    def euclidean(cls, domain: Box | None = None) -> "MetricModel":
        return cls("euclidean", rho_bound=0.0, domain=domain)

    @classmethod
    def pullback(cls, field: DisplacementField, domain: Box | None = None) -> "MetricModel":
        return cls(
            "pullback",
            rho_bound=2.0 * field.amplitude,
            domain=domain,
            field=field,
            center_lipschitz=1.0 + field.lipschitz,
        )

    @classmethod
    def additive_noise(cls, dim: int, amplitude: float, seed: int,
                       domain: Box | None = None, wavelength: float = 2.0) -> "MetricModel":
        """Pseudo metric d = d_E + bounded smooth symmetric noise.

        Provided for relaxed membership experiments only; the triangle
        inequality is not checked.
        """
        rng = np.random.default_rng(seed)
        w = rng.normal(size=dim)
        w *= (2.0 * np.pi / wavelength) / max(np.linalg.norm(w), 1e-12)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        gap = max(wavelength / 4.0, 1e-9)

        def noise(x, y):
            sx = np.sin(x @ w + phase)
            sy = np.sin(y @ w + phase)
            d = np.linalg.norm(x - y, axis=-1)
            window = np.minimum(1.0, (d / gap) ** 2)
            return amplitude * sx * sy * window

        lip = 1.0 + amplitude * (np.linalg.norm(w) + 2.0 / gap)
        return cls(
            "additive_noise",
            rho_bound=float(amplitude),
            domain=domain,
            noise=noise,
            center_lipschitz=lip,
            pseudo_metric=True,
        )

    # -- evaluation --------------------------------------------------------

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Rowwise distance between matching rows of x and y."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if self.kind == "pullback":
            return np.linalg.norm(self.field.forward(x) - self.field.forward(y), axis=1)
        d = np.linalg.norm(x - y, axis=1)
        if self.kind == "additive_noise":
            d = d + self._noise(x, y)
        return d

    def distances_to(self, c: np.ndarray, pts: np.ndarray,
                     image_pts: np.ndarray | None = None) -> np.ndarray:
        """Distances from a single centre to every row of pts."""
        c = np.asarray(c, dtype=float)
        if self.kind == "pullback":
            img = image_pts if image_pts is not None else self.field.forward(pts)
            return np.linalg.norm(img - self.field.forward(c[None, :])[0], axis=1)
        d = np.linalg.norm(pts - c, axis=1)
        if self.kind == "additive_noise":
            d = d + self._noise(np.broadcast_to(c, pts.shape), pts)
        return d


# -- metric circumcentres --------------------------------------------------


def _spread(dists: np.ndarray) -> np.ndarray:
    return dists.max(axis=-1) - dists.min(axis=-1)


def metric_circumcenter(simplex, model: MetricModel, *,
                        upsilon0: float | None = None, mu0: float | None = None,
                        search_radius: float | None = None):
    """Equidistant centre of a full dimensional simplex under a metric model.

    Runs damped Newton on f(c) = (d(c, p_i) - d(c, p_0))_i from the Euclidean
    circumcentre, then from a 3^m multistart grid inside the search ball. The
    default search radius follows the circumcentre displacement bound
    8 rho / (upsilon0 mu0) when those certified parameters are supplied, and
    a conservative variant derived from the simplex itself otherwise.

    Returns ``(centre, radius)`` with vertex distance spread below
    1e-9 * circumradius, or ``None`` when no start converges.
    """
    s = simplex if isinstance(simplex, Simplex) else Simplex(simplex)
    m = s.ambient_dim
    if s.dim != m:
        raise PreconditionError("metric circumcentre needs a full dimensional simplex")
    met = simplex_metrics(s)
    if met.degenerate or met.circumradius is None:
        raise PreconditionError("metric circumcentre needs a non-degenerate simplex")
    r0 = met.circumradius
    if search_radius is None:
        rho = model.rho_bound
        if upsilon0 and mu0:
            search_radius = 8.0 * rho / (upsilon0 * mu0) + 0.05 * r0
        else:
            # Fall back to the same bound with eps read off as 2 R and the
            # sparsity taken from the simplex itself.
            search_radius = 16.0 * rho * r0 / max(met.thickness * met.shortest_edge, 1e-300)
            search_radius += 0.05 * r0
    seeds = [np.zeros(m)]
    if search_radius > 0:
        step = search_radius / np.sqrt(m) * 0.75
        for offs in product((-1.0, 0.0, 1.0), repeat=m):
            if any(offs):
                seeds.append(np.array(offs) * step)
    c0, _ = circumcenter(s)
    tol = 1e-9 * r0
    for off in seeds:
        result = _newton_single(c0 + off, s.vertices, model, tol, r0, c0, search_radius)
        if result is not None:
            return result
    return None


def _newton_single(c, verts, model, tol, r0, seed_center, search_radius):
    c = c.copy()
    m = verts.shape[1]
    h = max(1e-7 * r0, 1e-12)
    for _ in range(60):
        d = model.distances_to(c, verts)
        if _spread(d) < tol:
            return c, float(d.mean())
        f = d[1:] - d[0]
        jac = np.empty((m, m))
        for jdx in range(m):
            e = np.zeros(m)
            e[jdx] = h
            dp = model.distances_to(c + e, verts)
            dm = model.distances_to(c - e, verts)
            jac[:, jdx] = ((dp[1:] - dp[0]) - (dm[1:] - dm[0])) / (2.0 * h)
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        base = np.abs(f).max()
        t = 1.0
        while t > 1e-4:
            trial = c + t * step
            dt = model.distances_to(trial, verts)
            if np.abs(dt[1:] - dt[0]).max() < base or _spread(dt) < tol:
                c = trial
                break
            t *= 0.5
        else:
            return None
        if np.linalg.norm(c - seed_center) > max(4.0 * search_radius, 10.0 * r0):
            return None
    d = model.distances_to(c, verts)
    if _spread(d) < tol:
        return c, float(d.mean())
    return None


# -- metric Delaunay -------------------------------------------------------


@dataclass(frozen=True)
class MetricDelaunayResult:
    """Metric Delaunay star of a region with certification data."""

    complex: SimplicialComplex
    balls: dict[tuple[int, ...], Ball]
    path: str
    agreement: bool | None = None
    not_found: tuple[tuple[int, ...], ...] = ()
    undecided: tuple[tuple[int, ...], ...] = ()
    degeneracy_groups: tuple[tuple[int, ...], ...] = ()

    @property
    def certified(self) -> bool:
        return not self.undecided


def _restrict_to_region_star(result: DelaunayResult, region, pts) -> tuple[SimplicialComplex, dict]:
    keep = [s for s in result.complex.simplices(pts.shape[1]) if set(s) & set(region)]
    cx = SimplicialComplex(keep + [(v,) for v in region], pts)
    balls = {s: result.balls[s] for s in keep}
    return cx, balls


def _pullback_path(ps, model, region) -> MetricDelaunayResult:
    pts = ps.points
    if model.kind == "euclidean":
        base = delaunay_lifted(ps)
        cx, balls = _restrict_to_region_star(base, region, pts)
        return MetricDelaunayResult(
            complex=cx, balls=balls, path="pullback",
            degeneracy_groups=base.degeneracy_groups,
        )
    image = model.field.forward(pts)
    base = delaunay_lifted(image)
    keep = [s for s in base.complex.simplices(pts.shape[1]) if set(s) & set(region)]
    cx = SimplicialComplex(keep + [(v,) for v in region], pts)
    balls = {}
    for s in keep:
        ball = base.balls[s]
        center = model.field.inverse(ball.center[None, :])[0]
        balls[s] = Ball(simplex=s, center=center, radius=ball.radius,
                        protection=ball.protection)
    return MetricDelaunayResult(
        complex=cx, balls=balls, path="pullback",
        degeneracy_groups=base.degeneracy_groups,
    )


def _metric_gap_bnb(model, member_pts, pts, image_pts, seed, radius, tol, max_nodes=20000):
    """Branch and bound on the metric gap over a centre search ball.

    The gap g(c) = max member distance - min point distance is nonpositive
    exactly at centres of empty balls through all members, and it is
    Lipschitz in c; cells whose centre value cannot reach the threshold are
    pruned. Returns ``(True, witness)``, ``(False, None)`` for a certified
    non-member, or ``(None, None)`` when the node budget runs out.
    """
    m = pts.shape[1]
    lipschitz = 2.0 * model.center_lipschitz * np.sqrt(m)
    centers = seed[None, :].copy()
    halves = np.array([radius])
    nodes = 0
    while centers.shape[0]:
        vals = np.array([
            model.distances_to(c, member_pts).max()
            - model.distances_to(c, pts, image_pts).min()
            for c in centers
        ])
        hit = vals <= tol
        if hit.any():
            return True, centers[int(np.argmax(hit))]
        alive = vals - lipschitz * halves <= tol
        centers, halves = centers[alive], halves[alive]
        nodes += centers.shape[0]
        if nodes > max_nodes:
            return None, None
        if centers.shape[0] == 0:
            break
        offs = np.array(
            [[(1 if bit & (1 << k) else -1) for k in range(m)] for bit in range(2**m)],
            dtype=float,
        )
        new_halves = halves / 2.0
        centers = (centers[:, None, :] + offs[None, :, :] * new_halves[:, None, None]).reshape(-1, m)
        halves = np.repeat(new_halves, offs.shape[0])
    return False, None


def _generic_path(ps, model, region, eps, params) -> MetricDelaunayResult:
    pts = ps.points
    m = ps.dim
    tol = ps.tolerance()
    reach = 2.0 * eps + 4.0 * model.rho_bound
    image_pts = model.field.forward(pts) if model.kind == "pullback" else None
    upsilon0 = mu0 = None
    if params is not None:
        upsilon0, mu0 = params
    candidates: set[tuple[int, ...]] = set()
    from scipy.spatial import cKDTree

    tree = cKDTree(pts)
    for v in region:
        near = [q for q in tree.query_ball_point(pts[v], reach + tol) if q != v]
        for combo in combinations(sorted(near), m):
            cand = tuple(sorted((v, *combo)))
            if cand in candidates:
                continue
            if pdist(pts[list(cand)]).max() <= reach + tol:
                candidates.add(cand)
    accepted: list[tuple[int, ...]] = []
    balls: dict[tuple[int, ...], Ball] = {}
    not_found: list[tuple[int, ...]] = []
    undecided: list[tuple[int, ...]] = []
    groups: set[tuple[int, ...]] = set()
    for cand in sorted(candidates):
        member_pts = pts[list(cand)]
        try:
            found = metric_circumcenter(
                Simplex(member_pts), model, upsilon0=upsilon0, mu0=mu0
            )
        except PreconditionError:
            found = None
        if found is None:
            not_found.append(cand)
            ball = circumcenter(Simplex(member_pts))
            seed = ball[0] if ball is not None else member_pts.mean(axis=0)
            verdict, witness = _metric_gap_bnb(
                model, member_pts, pts, image_pts, seed, 4.0 * eps, tol
            )
            if verdict is None:
                undecided.append(cand)
            elif verdict:
                # Equidistance search missed it but an empty ball exists:
                # record the witness ball instead of dropping the simplex.
                d = model.distances_to(witness, pts, image_pts)
                accepted.append(cand)
                balls[cand] = Ball(simplex=cand, center=np.asarray(witness),
                                   radius=float(d[list(cand)].max()),
                                   protection=0.0)
            continue
        c, r = found
        d = model.distances_to(c, pts, image_pts)
        margins = d - r
        margins[list(cand)] = np.inf
        protection = float(margins.min())
        if protection <= -tol:
            continue
        accepted.append(cand)
        balls[cand] = Ball(simplex=cand, center=np.asarray(c), radius=float(r),
                           protection=protection)
        near = np.abs(d - r) <= tol
        if near.sum() > m + 1:
            groups.add(tuple(int(i) for i in np.nonzero(near)[0]))
    cx = SimplicialComplex(accepted + [(v,) for v in region], pts)
    return MetricDelaunayResult(
        complex=cx, balls=balls, path="newton",
        not_found=tuple(not_found), undecided=tuple(undecided),
        degeneracy_groups=tuple(sorted(groups)),
    )


def metric_delaunay(points, model: MetricModel, region, *, eps: float | None = None,
                    params=None, path: str = "auto") -> MetricDelaunayResult:
    """Star of ``region`` in the Delaunay complex of a metric model.

    ``path`` selects the route: ``"newton"`` runs the generic equidistance
    search over candidate simplices (any metric), ``"pullback"`` runs the
    exact route through the Euclidean complex of the displaced points
    (pullback and euclidean kinds only), ``"both"`` runs the two and raises
    :class:`PathMismatchError` if their top simplex sets differ, and
    ``"auto"`` picks the fast route when available.

    ``params`` may carry certified ``(upsilon0, mu0)`` to size the centre
    search ball; ``eps`` is the sampling radius used to window candidates
    (measured from the data when omitted).
    """
    ps = as_point_set(points)
    region = sorted({int(v) for v in region})
    if not region:
        raise PreconditionError("region must be nonempty")
    if any(v < 0 or v >= ps.n for v in region):
        raise PreconditionError("region vertex outside point set")
    fast_ok = model.kind in ("euclidean", "pullback")
    if path == "auto":
        path = "pullback" if fast_ok else "newton"
    if path in ("pullback", "both") and not fast_ok:
        raise PreconditionError(f"no exact route for metric kind {model.kind!r}")
    if path == "pullback":
        return _pullback_path(ps, model, region)
    if eps is None:
        from .genericity import sampling_parameters

        eps = sampling_parameters(ps).epsilon
    generic = _generic_path(ps, model, region, eps, params)
    if path == "newton":
        return generic
    fast = _pullback_path(ps, model, region)
    m = ps.dim
    a = set(generic.complex.simplices(m))
    b = set(fast.complex.simplices(m))
    if a != b:
        raise PathMismatchError(
            f"metric Delaunay routes disagree: newton-only {sorted(a - b)}, "
            f"pullback-only {sorted(b - a)}"
        )
    return MetricDelaunayResult(
        complex=generic.complex, balls=generic.balls, path="both", agreement=True,
        not_found=generic.not_found, undecided=generic.undecided,
        degeneracy_groups=generic.degeneracy_groups,
    )
