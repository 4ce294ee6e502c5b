"""On-disk ensemble data model: manifests, snapshot CSVs, 2D-to-3D reconstruction.

A run lives in a directory holding ``manifest.json`` plus one snapshot CSV per
timestep. Manifest schema::

    {"run_id": str, "grid_kind": "planar2d"|"volumetric3d",
     "input_params": {str: str}, "boundary_conditions": {str: str},
     "timesteps": [number]}

Snapshot CSVs carry the fixed header
``particle_id,x,y[,z],temperature,diameter,ice_flag,pressure`` with ice_flag
serialized as 0/1. Loaded structures are immutable by convention and safe to
share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import (
    DimensionError,
    DuplicateRunId,
    EmptyEnsemble,
    MissingSnapshot,
    MonotonicityError,
    SchemaError,
)

GRID_KINDS = ("planar2d", "volumetric3d")

# Quality-diagnostic threshold: plume ice crystals are micron scale, anything
# above a decimetre is a data bug worth surfacing (but not a load failure).
DIAMETER_SANITY_LIMIT = 0.1

_BASE_COLUMNS = ["particle_id", "x", "y", "temperature", "diameter", "ice_flag", "pressure"]


def time_token(time: float) -> str:
    """Stable filename token for a timestep label (exact float repr)."""
    return repr(float(time))


def snapshot_filename(time: float) -> str:
    return f"t_{time_token(time)}.csv"


@dataclass
class RunManifest:
    run_id: str
    grid_kind: str
    input_params: dict[str, str]
    boundary_conditions: dict[str, str]
    timestep_labels: list[float]

    def validate(self):
        if not self.run_id:
            raise SchemaError("run_id", "empty")
        if self.grid_kind not in GRID_KINDS:
            raise SchemaError("grid_kind", f"must be one of {GRID_KINDS}")
        if not self.input_params:
            raise SchemaError("input_params", "empty parameter map")
        if not self.boundary_conditions:
            raise SchemaError("boundary_conditions", "empty parameter map")
        labels = self.timestep_labels
        if any(b <= a for a, b in zip(labels, labels[1:])):
            raise MonotonicityError(f"timestep labels not strictly increasing: {labels}")

    def all_params(self) -> dict[str, str]:
        """Input/model parameters and boundary conditions as one categorical map."""
        merged = dict(self.input_params)
        merged.update(self.boundary_conditions)
        return merged

    def to_json_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "grid_kind": self.grid_kind,
            "input_params": dict(self.input_params),
            "boundary_conditions": dict(self.boundary_conditions),
            "timesteps": list(self.timestep_labels),
        }


@dataclass
class ParticleSnapshot:
    """Columnar per-timestep particle data. 2D snapshots have z=None."""

    time: float
    particle_id: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray | None
    temperature: np.ndarray
    diameter: np.ndarray
    ice_flag: np.ndarray
    pressure: np.ndarray

    @property
    def is_3d(self) -> bool:
        return self.z is not None

    @property
    def n(self) -> int:
        return len(self.particle_id)

    def positions(self) -> np.ndarray:
        """(n, 2) or (n, 3) coordinate array in native dimensionality."""
        cols = (self.x, self.y) if self.z is None else (self.x, self.y, self.z)
        return np.column_stack(cols)

    def positions_2d(self) -> np.ndarray:
        """(x, y) projection; the plume is axisymmetric so z is dropped."""
        return np.column_stack((self.x, self.y))

    def validate(self):
        n = self.n
        arrays = {
            "x": self.x, "y": self.y, "temperature": self.temperature,
            "diameter": self.diameter, "ice_flag": self.ice_flag, "pressure": self.pressure,
        }
        if self.z is not None:
            arrays["z"] = self.z
        for name, arr in arrays.items():
            if len(arr) != n:
                raise SchemaError(name, f"length {len(arr)} != {n}")
        if len(np.unique(self.particle_id)) != n:
            raise SchemaError("particle_id", "duplicate ids within snapshot")
        if n:
            if np.min(self.diameter) <= 0:
                raise SchemaError("diameter", "non-positive value")
            if np.min(self.temperature) <= 0:
                raise SchemaError("temperature", "non-positive value")
            if np.min(self.pressure) <= 0:
                raise SchemaError("pressure", "non-positive value")


@dataclass
class SimulationRun:
    manifest: RunManifest
    snapshots: list[ParticleSnapshot]
    diagnostics: dict = field(default_factory=dict)

    @property
    def run_id(self) -> str:
        return self.manifest.run_id


@dataclass
class Ensemble:
    runs: list[SimulationRun]
    parameter_schema: dict[str, list[str]]
    diagnostics: dict[str, dict] = field(default_factory=dict)

    def run_ids(self) -> list[str]:
        return [r.run_id for r in self.runs]


def load_manifest(manifest_path) -> RunManifest:
    with open(manifest_path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        manifest = RunManifest(
            run_id=str(raw["run_id"]),
            grid_kind=str(raw["grid_kind"]),
            input_params={str(k): str(v) for k, v in raw["input_params"].items()},
            boundary_conditions={str(k): str(v) for k, v in raw["boundary_conditions"].items()},
            timestep_labels=[float(t) for t in raw["timesteps"]],
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise SchemaError("manifest", str(exc)) from exc
    manifest.validate()
    return manifest


def _read_snapshot_csv(path, time: float, is_3d: bool) -> tuple[ParticleSnapshot, int]:
    """Parse one snapshot CSV; returns (snapshot, dropped_nonfinite_rows)."""
    expected = list(_BASE_COLUMNS)
    if is_3d:
        expected.insert(3, "z")
    try:
        df = pd.read_csv(path)
    except Exception as exc:
        raise SchemaError("csv", f"{path}: {exc}") from exc
    missing = [c for c in expected if c not in df.columns]
    if missing:
        raise SchemaError(missing[0], f"column missing in {path}")
    if not is_3d and "z" in df.columns:
        raise DimensionError(f"{path}: planar2d snapshot carries a z column")
    df = df[expected]
    try:
        df = df.astype(
            {c: np.float64 for c in expected if c not in ("particle_id", "ice_flag")}
            | {"particle_id": np.int64, "ice_flag": np.int64}
        )
    except (ValueError, TypeError) as exc:
        raise SchemaError("csv", f"{path}: ill-typed column ({exc})") from exc

    float_cols = [c for c in expected if c not in ("particle_id", "ice_flag")]
    finite = np.isfinite(df[float_cols].to_numpy()).all(axis=1)
    dropped = int((~finite).sum())
    if dropped:
        df = df[finite]

    snap = ParticleSnapshot(
        time=float(time),
        particle_id=df["particle_id"].to_numpy(),
        x=df["x"].to_numpy(),
        y=df["y"].to_numpy(),
        z=df["z"].to_numpy() if is_3d else None,
        temperature=df["temperature"].to_numpy(),
        diameter=df["diameter"].to_numpy(),
        ice_flag=df["ice_flag"].to_numpy().astype(bool),
        pressure=df["pressure"].to_numpy(),
    )
    snap.validate()
    return snap, dropped


def load_run(manifest_path, snapshot_dir) -> SimulationRun:
    """Load and validate one run; snapshots come back sorted by time.

    Rows with non-finite values in any required column are dropped and
    counted in ``run.diagnostics`` rather than failing the load.
    """
    manifest = load_manifest(manifest_path)
    snapshot_dir = Path(snapshot_dir)
    is_3d = manifest.grid_kind == "volumetric3d"

    snapshots = []
    dropped_total = 0
    for t in manifest.timestep_labels:
        path = snapshot_dir / snapshot_filename(t)
        if not path.exists():
            raise MissingSnapshot(t, str(path))
        snap, dropped = _read_snapshot_csv(path, t, is_3d)
        dropped_total += dropped
        snapshots.append(snap)
    snapshots.sort(key=lambda s: s.time)

    oversized = sum(int(np.count_nonzero(s.diameter > DIAMETER_SANITY_LIMIT)) for s in snapshots)
    diagnostics = {"nonfinite_rows_dropped": dropped_total, "oversized_diameters": oversized}
    return SimulationRun(manifest=manifest, snapshots=snapshots, diagnostics=diagnostics)


def save_run(run: SimulationRun, run_dir) -> Path:
    """Write a run back to the on-disk layout (manifest.json + snapshots/)."""
    run_dir = Path(run_dir)
    snap_dir = run_dir / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(run.manifest.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for snap in run.snapshots:
        cols = {"particle_id": snap.particle_id, "x": snap.x, "y": snap.y}
        if snap.z is not None:
            cols["z"] = snap.z
        cols.update(
            temperature=snap.temperature,
            diameter=snap.diameter,
            ice_flag=snap.ice_flag.astype(int),
            pressure=snap.pressure,
        )
        pd.DataFrame(cols).to_csv(snap_dir / snapshot_filename(snap.time), index=False)
    return run_dir


def _hash_u64(values: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer; decorrelates consecutive integer keys."""
    v = values.astype(np.uint64, copy=True)
    with np.errstate(over="ignore"):
        v += np.uint64(0x9E3779B97F4A7C15)
        v = (v ^ (v >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        v = (v ^ (v >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        v = v ^ (v >> np.uint64(31))
    return v


def _replica_angles(particle_id: np.ndarray, replica: np.ndarray, rng_seed: int) -> np.ndarray:
    """Uniform [0, 2pi) angles keyed by (seed, source id, replica index).

    Hash-based so the angle stream is reproducible per seed and stable per
    particle across timesteps (replicated clouds do not flicker over time).
    """
    key = _hash_u64(particle_id.astype(np.uint64))
    with np.errstate(over="ignore"):
        key ^= _hash_u64(replica.astype(np.uint64) + np.uint64(0x51ED2701))
        key ^= _hash_u64(np.full(len(particle_id), np.uint64(rng_seed & 0xFFFFFFFFFFFFFFFF)))
    unit = (_hash_u64(key) >> np.uint64(11)).astype(np.float64) / float(1 << 53)
    return unit * (2.0 * math.pi)


def reconstruct_3d(snapshot_2d: ParticleSnapshot, replication_count: int = 8,
                   rng_seed: int = 0, angles: np.ndarray | None = None) -> ParticleSnapshot:
    """Rotate a planar snapshot about the jet (x) axis into a 3D cloud.

    Each source particle yields ``replication_count`` replicas at
    (x, r cos(theta), r sin(theta)) with r = |y| and theta drawn uniformly on
    [0, 2pi) from ``rng_seed``; scalar attributes are copied unchanged. New
    particle ids encode (source_id, replica_index) as
    ``source_id * replication_count + replica_index``.

    ``angles`` overrides the random draw with explicit per-replica angles
    (flattened source-major), for tests and custom sampling schemes.
    """
    if snapshot_2d.is_3d:
        raise DimensionError("snapshot is already 3D")
    if replication_count < 1:
        raise ValueError("replication_count must be >= 1")

    n = snapshot_2d.n
    rep = int(replication_count)
    src = np.repeat(np.arange(n), rep)
    replica = np.tile(np.arange(rep), n)
    ids = snapshot_2d.particle_id[src] * rep + replica

    if angles is None:
        angles = _replica_angles(snapshot_2d.particle_id[src], replica, rng_seed)
    else:
        angles = np.asarray(angles, dtype=np.float64)
        if angles.shape != (n * rep,):
            raise ValueError(f"angles must have shape ({n * rep},)")

    r = np.abs(snapshot_2d.y)[src]
    out = ParticleSnapshot(
        time=snapshot_2d.time,
        particle_id=ids,
        x=snapshot_2d.x[src].copy(),
        y=r * np.cos(angles),
        z=r * np.sin(angles),
        temperature=snapshot_2d.temperature[src].copy(),
        diameter=snapshot_2d.diameter[src].copy(),
        ice_flag=snapshot_2d.ice_flag[src].copy(),
        pressure=snapshot_2d.pressure[src].copy(),
    )
    return out


def validate_ensemble(runs: list[SimulationRun]) -> Ensemble:
    """Build the ensemble-wide categorical parameter schema and collect
    per-run quality diagnostics without mutating any run."""
    if not runs:
        raise EmptyEnsemble("ensemble has no runs")
    seen = set()
    for run in runs:
        if run.run_id in seen:
            raise DuplicateRunId(run.run_id)
        seen.add(run.run_id)

    schema: dict[str, set[str]] = {}
    diagnostics = {}
    for run in runs:
        for name, value in run.manifest.all_params().items():
            schema.setdefault(name, set()).add(value)
        diagnostics[run.run_id] = dict(run.diagnostics)
    ordered = {name: sorted(values) for name, values in sorted(schema.items())}
    return Ensemble(runs=list(runs), parameter_schema=ordered, diagnostics=diagnostics)


def load_ensemble(ensemble_dir) -> Ensemble:
    """Load every run directory (containing manifest.json) under a root."""
    ensemble_dir = Path(ensemble_dir)
    runs = []
    for manifest_path in sorted(ensemble_dir.glob("*/manifest.json")):
        run_dir = manifest_path.parent
        runs.append(load_run(manifest_path, run_dir / "snapshots"))
    return validate_ensemble(runs)
