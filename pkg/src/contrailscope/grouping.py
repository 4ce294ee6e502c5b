"""Per-timestep contrail group detection: DBSCAN over ice-particle positions
with the neighborhood radius picked from the k-nearest-neighbor distance
curve at its knee (point of maximum curvature).

The k-dist curve of a clustered point cloud is flat over the dense regime and
shoots up for stragglers; after normalizing the sorted curve to the unit
square the knee is the index maximizing x_norm - y_norm (the elbow of an
ascending convex curve), i.e. the last distance before the jump.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import attributes
from .ingest import ParticleSnapshot

KNN_K = 3
MIN_PTS = 4  # k + 1; the classic 2D heuristic

# Pairwise k-dist extraction above this size works on a subsample (flagged).
EPS_SUBSAMPLE_CAP = 50_000


@dataclass
class EpsSelection:
    k: int
    sorted_kdist: np.ndarray
    knee_index: int
    eps: float
    no_knee: bool = False
    subsampled: bool = False


@dataclass
class ContrailGroup:
    id: int
    particle_ids: np.ndarray
    centroid: np.ndarray
    count: int
    mean_temperature: float
    mass: float
    length: float

    def to_json_dict(self) -> dict:
        return {
            "id": int(self.id),
            "count": int(self.count),
            "centroid": [float(c) for c in self.centroid],
            "mean_temperature": float(self.mean_temperature),
            "mass": float(self.mass),
            "length": float(self.length),
        }


@dataclass
class GroupAssignment:
    time: float
    ice_particle_ids: np.ndarray
    labels: np.ndarray  # per ice particle, -1 = noise
    groups: list[ContrailGroup]
    eps: float
    min_pts: int
    noise_count: int = 0
    bounds: tuple[np.ndarray, np.ndarray] | None = None  # snapshot bbox (lo, hi)
    centroids_by_group: dict[int, np.ndarray] = field(default_factory=dict)


_KNEE_TOL = 1e-9  # below this the difference curve is float dust, not a knee


def knee_index(sorted_values) -> int | None:
    """Knee of an ascending curve: argmax of the normalized difference
    x_norm - y_norm; None when the difference has no positive maximum
    (near-linear curve)."""
    v = np.asarray(sorted_values, dtype=float)
    n = len(v)
    if n < 3:
        return None
    span = v[-1] - v[0]
    if span <= 0:
        return None
    x = np.arange(n) / (n - 1)
    y = (v - v[0]) / span
    diff = x - y
    best = int(np.argmax(diff))
    if diff[best] <= _KNEE_TOL:
        return None
    return best


def select_eps(points, k: int = KNN_K, rng_seed: int = 0) -> EpsSelection:
    """DBSCAN radius from the sorted k-th-neighbor distance curve."""
    pts = np.asarray(points, dtype=float)
    if len(pts) <= k:
        raise ValueError(f"need more than k={k} points")

    subsampled = False
    sample = pts
    if len(pts) > EPS_SUBSAMPLE_CAP:
        rng = np.random.default_rng(rng_seed)
        idx = rng.choice(len(pts), EPS_SUBSAMPLE_CAP, replace=False)
        sample = pts[np.sort(idx)]
        subsampled = True

    tree = cKDTree(sample)
    dists, _ = tree.query(sample, k=k + 1)  # column 0 is the point itself
    kdist = np.sort(dists[:, k])

    knee = knee_index(kdist)
    if knee is None:
        knee = (len(kdist) - 1) // 2  # element median, so eps stays on the curve
        eps = float(kdist[knee])
        no_knee = True
    else:
        eps = float(kdist[knee])
        no_knee = False
    if eps <= 0:  # duplicate-heavy data: fall back to the smallest positive k-dist
        positive = kdist[kdist > 0]
        eps = float(positive[0]) if len(positive) else 1.0
        no_knee = True
    return EpsSelection(k=k, sorted_kdist=kdist, knee_index=knee, eps=eps,
                        no_knee=no_knee, subsampled=subsampled)


def dbscan(points, eps: float, min_pts: int, particle_ids=None) -> np.ndarray:
    """Standard DBSCAN labels (-1 noise), deterministic and independent of
    input order: clusters are connected components of core points (a point's
    eps-neighborhood includes itself), border points join the reachable
    cluster with the smallest id, and final ids are numbered by the minimal
    contained particle_id.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    ids = np.arange(n) if particle_ids is None else np.asarray(particle_ids)
    labels = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels

    tree = cKDTree(pts)
    neighbor_counts = np.array(tree.query_ball_point(pts, eps, return_length=True))
    core = neighbor_counts >= min_pts
    core_idx = np.flatnonzero(core)
    if len(core_idx) == 0:
        return labels

    core_tree = cKDTree(pts[core_idx])
    pairs = core_tree.query_pairs(eps, output_type="ndarray")
    m = len(core_idx)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m))
    _, roots = connected_components(graph, directed=False)

    # Preliminary cluster numbering by the minimal core particle_id.
    comp_ids = {}
    for root in np.unique(roots):
        members = core_idx[roots == root]
        comp_ids[root] = ids[members].min()
    order = sorted(comp_ids, key=lambda r: comp_ids[r])
    prelim = {root: rank for rank, root in enumerate(order)}
    labels[core_idx] = np.array([prelim[r] for r in roots])

    # Border points: non-core with a core neighbor; ties go to the lower id.
    non_core = np.flatnonzero(~core)
    if len(non_core):
        hits = core_tree.query_ball_point(pts[non_core], eps)
        for point, near in zip(non_core, hits):
            if near:
                labels[point] = min(labels[core_idx[j]] for j in near)

    # Final numbering by minimal contained particle_id (borders included).
    present = np.unique(labels[labels >= 0])
    min_contained = {g: ids[labels == g].min() for g in present}
    final_order = sorted(present, key=lambda g: min_contained[g])
    remap = {g: rank for rank, g in enumerate(final_order)}
    out = labels.copy()
    for g, rank in remap.items():
        out[labels == g] = rank
    return out


def group_timestep(snapshot: ParticleSnapshot, k: int = KNN_K, min_pts: int = MIN_PTS,
                   eps: float | None = None) -> GroupAssignment:
    """Cluster the ice particles of one snapshot in native dimensionality
    (replication would create artificial ring densities in rotated runs)."""
    ice = snapshot.ice_flag
    ice_pos = snapshot.positions()[ice]
    ice_ids = snapshot.particle_id[ice]
    all_pos = snapshot.positions()
    bounds = None
    if snapshot.n:
        bounds = (all_pos.min(axis=0), all_pos.max(axis=0))

    if len(ice_ids) == 0:
        return GroupAssignment(
            time=snapshot.time, ice_particle_ids=ice_ids, labels=np.array([], dtype=np.int64),
            groups=[], eps=0.0, min_pts=min_pts, noise_count=0, bounds=bounds,
        )

    if eps is None:
        if len(ice_ids) <= k:
            eps_val = 1.0  # too few points for a curve; everything is noise anyway
        else:
            eps_val = select_eps(ice_pos, k=k).eps
    else:
        eps_val = float(eps)

    labels = dbscan(ice_pos, eps_val, min_pts, particle_ids=ice_ids)

    groups = []
    centroids = {}
    temps = snapshot.temperature[ice]
    diams = snapshot.diameter[ice]
    for g in np.unique(labels[labels >= 0]):
        member = labels == g
        centroid = ice_pos[member].mean(axis=0)
        centroids[int(g)] = centroid
        groups.append(ContrailGroup(
            id=int(g),
            particle_ids=ice_ids[member],
            centroid=centroid,
            count=int(member.sum()),
            mean_temperature=float(np.mean(temps[member])),
            mass=attributes.ice_mass(diams[member]),
            length=attributes.contrail_length(ice_pos[member]),
        ))

    return GroupAssignment(
        time=snapshot.time,
        ice_particle_ids=ice_ids,
        labels=labels,
        groups=groups,
        eps=eps_val,
        min_pts=min_pts,
        noise_count=int(np.count_nonzero(labels == -1)),
        bounds=bounds,
        centroids_by_group=centroids,
    )
