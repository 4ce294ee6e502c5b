"""Ensemble member similarity: Gower distance over mixed parameters,
standardized shape-feature distance, and the Hausdorff baseline, each feeding
a k-nearest-neighbor index (k=5 by default).

Gower similarity averages per-attribute partial similarities: numeric
attributes contribute 1 - |vx - vy| / range, categorical attributes 1 for a
match and 0 otherwise. The reported distance is one minus that average, a
true dissimilarity in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySet, SchemaMismatch, TooFewMembers

KNN_K = 5

SHAPE_FEATURE_NAMES = ("area", "length", "height", "slope",
                       "total_particles", "total_mass", "mean_temperature")


@dataclass
class ParameterVector:
    run_id: str
    categorical: dict[str, str]
    numerical: dict[str, float]
    ranges: dict[str, tuple[float, float]]  # observed ensemble (min, max) per numeric attr


@dataclass
class ShapeFeatureVector:
    run_id: str
    features: dict[str, float]


@dataclass
class NeighborIndex:
    mode: str
    k: int
    neighbors: dict[str, list[tuple[str, float]]]
    excluded: list[str] = field(default_factory=list)
    dropped_features: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "k": self.k,
            "neighbors": {rid: [[nid, float(d)] for nid, d in lst]
                          for rid, lst in self.neighbors.items()},
            "excluded": list(self.excluded),
            "dropped_features": list(self.dropped_features),
        }


def gower_partials(x: ParameterVector, y: ParameterVector, strict: bool = True):
    """Per-attribute partial similarities, plus the attributes skipped because
    only one member carries them (strict=False)."""
    cat_x, cat_y = set(x.categorical), set(y.categorical)
    num_x, num_y = set(x.numerical), set(y.numerical)
    if strict and (cat_x != cat_y or num_x != num_y):
        raise SchemaMismatch(f"attribute sets differ between {x.run_id} and {y.run_id}")

    partials: dict[str, float] = {}
    zero_range: list[str] = []
    for name in sorted(cat_x & cat_y):
        partials[name] = 1.0 if x.categorical[name] == y.categorical[name] else 0.0
    for name in sorted(num_x & num_y):
        vx, vy = x.numerical[name], y.numerical[name]
        lo, hi = x.ranges.get(name, y.ranges.get(name, (vx, vy)))
        span = hi - lo
        if span <= 0:
            partials[name] = 1.0  # equal by construction within a zero-width range
            zero_range.append(name)
        else:
            partials[name] = 1.0 - abs(vx - vy) / span
    excluded = (cat_x ^ cat_y) | (num_x ^ num_y)
    return partials, zero_range, sorted(excluded)


def gower_similarity(x: ParameterVector, y: ParameterVector, strict: bool = True) -> float:
    partials, _, _ = gower_partials(x, y, strict=strict)
    if not partials:
        raise SchemaMismatch("no shared attributes")
    return float(np.mean(list(partials.values())))


def gower_distance(x: ParameterVector, y: ParameterVector, strict: bool = True) -> float:
    """1 - mean partial similarity; 0 iff all shared attributes are equal."""
    return 1.0 - gower_similarity(x, y, strict=strict)


def hausdorff_distance(a, b) -> float:
    """Exact symmetric Hausdorff distance between two point sets."""
    pa = np.asarray(a, dtype=float)
    pb = np.asarray(b, dtype=float)
    if pa.ndim == 1:
        pa = pa.reshape(1, -1)
    if pb.ndim == 1:
        pb = pb.reshape(1, -1)
    if len(pa) == 0 or len(pb) == 0:
        raise EmptySet("hausdorff distance needs two non-empty point sets")

    def directed(u, v, block=1024):
        worst = 0.0
        for i in range(0, len(u), block):
            diff = u[i:i + block, None, :] - v[None, :, :]
            d = np.sqrt(np.sum(diff * diff, axis=-1))
            worst = max(worst, float(np.max(np.min(d, axis=1))))
        return worst

    return max(directed(pa, pb), directed(pb, pa))


def standardize_features(vectors: list[ShapeFeatureVector]):
    """Z-score the shape features over the ensemble; zero-variance features
    are dropped (recorded) since they carry no distance information."""
    names = [n for n in SHAPE_FEATURE_NAMES if all(n in v.features for v in vectors)]
    mat = np.array([[v.features[n] for n in names] for v in vectors], dtype=float)
    mean = mat.mean(axis=0)
    std = mat.std(axis=0)
    usable = std > 0
    dropped = [n for n, u in zip(names, usable) if not u]
    z = (mat[:, usable] - mean[usable]) / std[usable]
    kept = [n for n, u in zip(names, usable) if u]
    return z, kept, dropped


def _rank_neighbors(ids: list[str], dist_row: np.ndarray, self_idx: int, k: int):
    order = sorted((float(dist_row[j]), ids[j]) for j in range(len(ids)) if j != self_idx)
    return [(rid, d) for d, rid in order[:k]]


def knn_index(vectors, mode: str, k: int = KNN_K) -> NeighborIndex:
    """Nearest-neighbor lists per member.

    mode="parameters" expects ParameterVectors (Gower distance over the
    shared attribute set), mode="shape" expects ShapeFeatureVectors
    (Euclidean over z-scored features), mode="hausdorff" expects
    (run_id, points) pairs of filtered boundary points.
    """
    if len(vectors) < 2:
        raise TooFewMembers("need at least 2 members")
    dropped: list[str] = []

    if mode == "parameters":
        ids = [v.run_id for v in vectors]
        n = len(ids)
        dist = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                d = gower_distance(vectors[i], vectors[j], strict=False)
                dist[i, j] = dist[j, i] = d
    elif mode == "shape":
        ids = [v.run_id for v in vectors]
        z, _, dropped = standardize_features(list(vectors))
        diff = z[:, None, :] - z[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
    elif mode == "hausdorff":
        ids = [rid for rid, _ in vectors]
        n = len(ids)
        dist = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                d = hausdorff_distance(vectors[i][1], vectors[j][1])
                dist[i, j] = dist[j, i] = d
    else:
        raise ValueError(f"unknown mode {mode!r}")

    neighbors = {rid: _rank_neighbors(ids, dist[i], i, k) for i, rid in enumerate(ids)}
    return NeighborIndex(mode=mode, k=k, neighbors=neighbors, dropped_features=dropped)
