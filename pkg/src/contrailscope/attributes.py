"""Per-timestep contrail characteristics: mean temperature, ice count,
total ice mass, and contrail length (point-set diameter).

Total mass sums (1/6) pi d^3 rho_ice over the ice particles. Length is the
maximum pairwise Euclidean distance among ice-particle positions; above a
size threshold the search runs over convex-hull vertices only, which attains
the identical value (the diameter of a point set is realized on its hull).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .ingest import ParticleSnapshot

ICE_DENSITY = 917.0  # kg/m^3

# Above this count the diameter search switches to hull vertices. The two
# branches return the same value; the size is the honest discriminator.
HULL_THRESHOLD = 1000


@dataclass
class ContrailSummary:
    time: float
    mean_temperature: float | None  # over ice particles; all particles when no ice
    mean_temperature_all: float | None
    ice_count: int
    total_mass: float
    length: float
    no_ice: bool
    length_2d: float | None = None
    length_3d: float | None = None

    def to_json_dict(self) -> dict:
        def num(v):
            return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else float(v)

        return {
            "time": self.time,
            "mean_temperature": num(self.mean_temperature),
            "mean_temperature_all": num(self.mean_temperature_all),
            "ice_count": int(self.ice_count),
            "total_mass": float(self.total_mass),
            "length": float(self.length),
            "no_ice": bool(self.no_ice),
            "length_2d": num(self.length_2d),
            "length_3d": num(self.length_3d),
        }


def ice_mass(diameters: np.ndarray) -> float:
    """Total mass of ice particles with the given diameters, kg."""
    d = np.asarray(diameters, dtype=float)
    return float(np.sum((math.pi / 6.0) * d ** 3 * ICE_DENSITY))


def _pairwise_max(points: np.ndarray, block: int = 512) -> float:
    best = 0.0
    for i in range(0, len(points), block):
        diff = points[i:i + block, None, :] - points[None, :, :]
        d = np.sqrt(np.sum(diff * diff, axis=-1))
        best = max(best, float(np.max(d)))
    return best


def contrail_length(points, method: str = "auto") -> float:
    """Diameter of a point set: the maximum pairwise Euclidean distance.

    method: "auto" picks hull above HULL_THRESHOLD points, "hull" and
    "brute" force one branch (both compute distances with the same kernel,
    so the results are identical).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    n = len(pts)
    if n == 0:
        raise ValueError("need at least one point")
    if n == 1:
        return 0.0

    if method not in ("auto", "hull", "brute"):
        raise ValueError(f"unknown method {method!r}")
    use_hull = method == "hull" or (method == "auto" and n > HULL_THRESHOLD)
    if use_hull:
        try:
            hull = ConvexHull(pts)
            pts = pts[hull.vertices]
        except QhullError:
            pass  # degenerate (collinear/coplanar) input: fall through to all pairs
    return _pairwise_max(pts)


def revolved_diameter(points_2d) -> float:
    """Diameter of the solid of revolution generated by rotating a 2D
    (x, y) profile about the x axis.

    The farthest pair on the solid realizes sqrt(dx^2 + (r1 + r2)^2), which
    is the planar distance between (x1, r1) and (x2, -r2); so the diameter
    equals the 2D diameter of the sign-symmetrized profile.
    """
    pts = np.asarray(points_2d, dtype=float)
    r = np.abs(pts[:, 1])
    profile = np.column_stack((np.concatenate((pts[:, 0], pts[:, 0])),
                               np.concatenate((r, -r))))
    return contrail_length(profile)


def summarize_timestep(snapshot: ParticleSnapshot) -> ContrailSummary:
    """Contrail characteristics of one snapshot.

    Length is measured in the snapshot's native dimensionality and mirrored
    to length_2d/length_3d accordingly; for planar runs the pipeline fills
    length_3d from the replicated cloud separately (rotation replicas would
    otherwise double-count the radial extent).
    """
    ice = snapshot.ice_flag
    ice_count = int(np.count_nonzero(ice))
    no_ice = ice_count == 0

    mean_all = float(np.mean(snapshot.temperature)) if snapshot.n else None
    if no_ice:
        mean_temp = mean_all
        total_mass = 0.0
        length = 0.0
    else:
        mean_temp = float(np.mean(snapshot.temperature[ice]))
        total_mass = ice_mass(snapshot.diameter[ice])
        length = contrail_length(snapshot.positions()[ice])

    return ContrailSummary(
        time=snapshot.time,
        mean_temperature=mean_temp,
        mean_temperature_all=mean_all,
        ice_count=ice_count,
        total_mass=total_mass,
        length=length,
        no_ice=no_ice,
        length_2d=None if snapshot.is_3d else length,
        length_3d=length if snapshot.is_3d else None,
    )
