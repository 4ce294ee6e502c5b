"""2D contrail boundary extraction and shape characteristics.

The boundary is the alpha-shape of the (filtered) ice-particle positions:
Delaunay triangles whose circumradius exceeds 1/alpha are discarded and the
edges bordering exactly one surviving triangle are chained into a closed
cycle. Larger alpha means a tighter (more concave) shape; alpha -> 0+
recovers the convex hull.

Stray particles are removed beforehand by a regression-band rule: a least
squares line is fit to the upper-half (y >= 0) points and points more than
five vertical standard deviations above it are dropped; the mirrored rule
with its own fit applies to the lower half.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, QhullError, cKDTree

from .errors import DegenerateInput, DisconnectedBoundaryWarning

NOISE_SIGMA_FACTOR = 5.0
AUTO_ALPHA_KNN = 3


@dataclass
class NoiseFilterReport:
    regression: tuple[float, float] | None  # (slope, intercept) upper half
    regression_lower: tuple[float, float] | None
    threshold: float
    removed_ids: list[int] = field(default_factory=list)

    @property
    def slope(self) -> float:
        return self.regression[0] if self.regression else 0.0


@dataclass
class ContrailShape:
    boundary: np.ndarray  # (m, 2) closed cycle, first vertex not repeated
    alpha: float
    characteristics: dict[str, float]
    component_count: int = 1

    def to_json_dict(self) -> dict:
        return {
            "alpha": float(self.alpha),
            "boundary": [[float(x), float(y)] for x, y in self.boundary],
            "characteristics": {k: float(v) for k, v in self.characteristics.items()},
            "component_count": int(self.component_count),
        }


def _circumradii(points: np.ndarray, simplices: np.ndarray) -> np.ndarray:
    t = points[simplices]
    a = np.linalg.norm(t[:, 0] - t[:, 1], axis=1)
    b = np.linalg.norm(t[:, 1] - t[:, 2], axis=1)
    c = np.linalg.norm(t[:, 2] - t[:, 0], axis=1)
    s = (a + b + c) / 2.0
    area_sq = np.maximum(s * (s - a) * (s - b) * (s - c), 0.0)
    area = np.sqrt(area_sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = a * b * c / (4.0 * area)
    r[~np.isfinite(r)] = np.inf  # degenerate slivers: treat as unbounded
    return r


def _sorted_edges(simplices: np.ndarray) -> np.ndarray:
    """(3n, 2) edge list with each edge's endpoints sorted."""
    e = np.concatenate((simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [2, 0]]))
    return np.sort(e, axis=1)


def _triangle_components(simplices: np.ndarray) -> np.ndarray:
    """Component label per triangle; triangles sharing an edge are connected."""
    n = len(simplices)
    edges = _sorted_edges(simplices)
    owner = np.tile(np.arange(n), 3)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    edges, owner = edges[order], owner[order]
    same = np.all(edges[1:] == edges[:-1], axis=1)
    a, b = owner[:-1][same], owner[1:][same]
    graph = coo_matrix((np.ones(len(a)), (a, b)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return labels


def _boundary_edges(simplices: np.ndarray) -> np.ndarray:
    """Edges that belong to exactly one triangle, as an (m, 2) array."""
    edges = _sorted_edges(simplices)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    return uniq[counts == 1]


def _chain_cycles(edges: np.ndarray) -> list[list[int]]:
    """Order boundary edges into vertex cycles by edge-chaining. A component
    with interior holes yields several cycles (outer border + hole borders)."""
    adj: dict[int, list[int]] = {}
    for u, v in edges:
        u, v = int(u), int(v)
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    unused = {(int(u), int(v)) if u < v else (int(v), int(u)) for u, v in edges}
    cycles = []
    while unused:
        start = min(u for e in unused for u in e)
        cycle = [start]
        node = start
        while True:
            step = None
            for w in sorted(adj[node]):
                key = (node, w) if node < w else (w, node)
                if key in unused:
                    step = w
                    unused.discard(key)
                    break
            if step is None or step == start:
                break
            cycle.append(step)
            node = step
        if len(cycle) >= 3:
            cycles.append(cycle)
    return cycles


def _orient_cycle(points: np.ndarray, cycle: list[int]) -> list[int]:
    """Start at the min-x (tie: min-y) vertex, counterclockwise orientation."""
    coords = points[cycle]
    start_pos = min(range(len(cycle)), key=lambda i: (coords[i, 0], coords[i, 1]))
    cycle = cycle[start_pos:] + cycle[:start_pos]
    coords = points[cycle]
    x, y = coords[:, 0], coords[:, 1]
    signed = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if signed < 0:
        cycle = [cycle[0]] + cycle[1:][::-1]
    return cycle


def _survivors(radii: np.ndarray, alpha: float) -> np.ndarray:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return radii <= 1.0 / alpha


@dataclass
class _AlphaComplex:
    points: np.ndarray
    simplices: np.ndarray
    radii: np.ndarray

    def shape_at(self, alpha: float) -> tuple[list[int], int]:
        """Boundary cycle (vertex indices) of the largest surviving component
        plus the component count."""
        keep = _survivors(self.radii, alpha)
        kept = self.simplices[keep]
        if len(kept) == 0:
            raise DegenerateInput(f"alpha={alpha} discards every triangle")
        labels = _triangle_components(kept)
        n_comp = int(labels.max()) + 1
        if n_comp > 1:
            pts = self.points
            u = pts[kept[:, 1]] - pts[kept[:, 0]]
            v = pts[kept[:, 2]] - pts[kept[:, 0]]
            areas = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]) / 2.0
            best = int(np.argmax(np.bincount(labels, weights=areas)))
            kept = kept[labels == best]
        cycles = _chain_cycles(_boundary_edges(kept))
        outer = max(cycles, key=lambda c: polygon_area(self.points[c]))
        return _orient_cycle(self.points, outer), n_comp


def _connectivity_radius(complex_: _AlphaComplex) -> float:
    """Smallest circumradius cutoff at which the surviving triangles form one
    edge-connected component covering every input point, by a sorted sweep
    (they always do at the full-Delaunay cutoff, so the sweep terminates)."""
    radii = complex_.radii
    simplices = complex_.simplices
    n_tri = len(simplices)
    n_pts = len(complex_.points)

    # cutoff needed to cover each point: min radius over incident triangles
    point_r = np.full(n_pts, np.inf)
    for col in range(3):
        np.minimum.at(point_r, simplices[:, col], radii)
    cover_r = float(point_r.max())

    # triangle adjacency pairs activate at max(radius_a, radius_b)
    edges = _sorted_edges(simplices)
    owner = np.tile(np.arange(n_tri), 3)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    edges, owner = edges[order], owner[order]
    same = np.all(edges[1:] == edges[:-1], axis=1)
    pair_a, pair_b = owner[:-1][same], owner[1:][same]
    activation = np.maximum(radii[pair_a], radii[pair_b])
    pair_order = np.argsort(activation, kind="stable")
    pair_a, pair_b = pair_a[pair_order].tolist(), pair_b[pair_order].tolist()
    activation = activation[pair_order]

    tri_order = np.argsort(radii, kind="stable")
    tri_radii = radii[tri_order]
    cover_counts = np.searchsorted(np.sort(point_r), tri_radii, side="right")

    parent = list(range(n_tri))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    merges = 0
    p = 0
    n_pairs = len(activation)
    for rank in range(n_tri):
        r = tri_radii[rank]
        if rank + 1 < n_tri and tri_radii[rank + 1] == r:
            continue  # evaluate only at distinct radius values (tie blocks)
        while p < n_pairs and activation[p] <= r:
            ra, rb = find(pair_a[p]), find(pair_b[p])
            if ra != rb:
                parent[rb] = ra
                merges += 1
            p += 1
        if cover_counts[rank] == n_pts and (rank + 1) - merges == 1:
            return float(r)
    return float(tri_radii[-1])


def _auto_alpha(complex_: _AlphaComplex) -> float:
    """Density-tied default alpha (half the inverse mean 3-NN spacing),
    loosened to the exact largest value whose shape is one component covering
    every input point."""
    tree = cKDTree(complex_.points)
    k = min(AUTO_ALPHA_KNN + 1, len(complex_.points))
    dists, _ = tree.query(complex_.points, k=k)
    mean_kdist = float(np.mean(dists[:, -1]))
    if mean_kdist <= 0:
        raise DegenerateInput("duplicate points only")
    alpha = 1.0 / (2.0 * mean_kdist)
    r_star = _connectivity_radius(complex_)
    if not np.isfinite(r_star):
        finite = complex_.radii[np.isfinite(complex_.radii)]
        r_star = float(finite.max()) if len(finite) else 1.0 / alpha
    if r_star > 1.0 / alpha:
        alpha = 1.0 / r_star
    return alpha


def alpha_shape(points, alpha: float | str = "auto",
                upper_regression: tuple[float, float] | None = None) -> ContrailShape:
    """Alpha-shape boundary of a 2D point set.

    alpha="auto" ties the scale to the local 3-NN spacing and loosens until
    the boundary is a single component. An explicit alpha that leaves several
    components returns the largest one and warns DisconnectedBoundaryWarning.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DegenerateInput("expected an (n, 2) point array")
    if len(pts) < 3:
        raise DegenerateInput("need at least 3 points")
    try:
        tri = Delaunay(pts)
    except QhullError as exc:
        raise DegenerateInput(f"degenerate point set: {exc}") from exc
    if len(tri.simplices) == 0:
        raise DegenerateInput("collinear points")

    complex_ = _AlphaComplex(pts, tri.simplices, _circumradii(pts, tri.simplices))
    a = _auto_alpha(complex_) if alpha == "auto" else float(alpha)
    cycle, n_comp = complex_.shape_at(a)
    if n_comp > 1:
        warnings.warn(
            f"alpha shape split into {n_comp} components; returning the largest",
            DisconnectedBoundaryWarning,
        )
    boundary = pts[cycle]
    return ContrailShape(
        boundary=boundary,
        alpha=a,
        characteristics=shape_characteristics(boundary, upper_regression),
        component_count=n_comp,
    )


def _fit_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float] | None:
    if len(x) < 2 or np.ptp(x) == 0:
        return None
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def filter_noise(points, particle_ids=None, sigma_y: float | None = None,
                 iterations: int = 1) -> tuple[np.ndarray, NoiseFilterReport]:
    """Drop stray ice particles outside the 5-sigma regression band.

    sigma_y defaults to the vertical standard deviation of all given points
    (the snapshot's ice particles); pass it explicitly to hold it fixed, e.g.
    when re-filtering. iterations > 1 repeats the rule on the survivors with
    sigma recomputed each pass (single-pass is the default behaviour).
    """
    pts = np.asarray(points, dtype=float)
    ids = np.arange(len(pts)) if particle_ids is None else np.asarray(particle_ids)
    if len(pts) == 0:
        return pts, NoiseFilterReport(None, None, 0.0, [])

    sigma = float(np.std(pts[:, 1])) if sigma_y is None else float(sigma_y)
    threshold = NOISE_SIGMA_FACTOR * sigma

    upper = pts[:, 1] >= 0
    fit_up = _fit_line(pts[upper, 0], pts[upper, 1])
    fit_lo = _fit_line(pts[~upper, 0], pts[~upper, 1])
    if fit_up is None and fit_lo is None:
        return pts, NoiseFilterReport(None, None, threshold, [])

    keep = np.ones(len(pts), dtype=bool)
    if fit_up is not None:
        m, b = fit_up
        residual = pts[:, 1] - (m * pts[:, 0] + b)
        keep &= ~(upper & (residual > threshold))
    if fit_lo is not None:
        m, b = fit_lo
        residual = pts[:, 1] - (m * pts[:, 0] + b)
        keep &= ~(~upper & (residual < -threshold))

    removed = [int(i) for i in ids[~keep]]
    report = NoiseFilterReport(fit_up, fit_lo, threshold, removed)

    if iterations > 1 and removed:
        kept_pts, sub = filter_noise(pts[keep], ids[keep], sigma_y=None, iterations=iterations - 1)
        report.removed_ids.extend(sub.removed_ids)
        report.regression = sub.regression or report.regression
        report.regression_lower = sub.regression_lower or report.regression_lower
        return kept_pts, report
    return pts[keep], report


def polygon_area(boundary) -> float:
    """Absolute shoelace area of a closed polyline (first vertex not repeated)."""
    b = np.asarray(boundary, dtype=float)
    x, y = b[:, 0], b[:, 1]
    return float(abs(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def shape_characteristics(boundary, upper_regression: tuple[float, float] | None = None) -> dict:
    """Area (shoelace), x-extent length, y-extent height, and the slope of
    the upper-half noise-filter regression line."""
    b = np.asarray(boundary, dtype=float)
    return {
        "area": polygon_area(b),
        "length": float(np.ptp(b[:, 0])),
        "height": float(np.ptp(b[:, 1])),
        "slope": float(upper_regression[0]) if upper_regression else 0.0,
    }
