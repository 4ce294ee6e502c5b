"""Offline per-run precompute: ingest, formation criterion, summaries,
shapes, groups, tracking, density grids, then the ensemble-level artifacts
(schema, glyph diffs, filaments, neighbor indexes).

Runs are processed in a bounded process pool with per-run failure isolation;
one corrupt run never blocks the rest. All artifacts are JSON (UTF-8, sorted
keys) or the raw grid format, with sha256 checksums recorded in bundle.json,
and re-running on unchanged inputs reproduces byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from . import attributes, grouping, shape, similarity, thermo, tracking, volume
from .ingest import load_run, reconstruct_3d, validate_ensemble, time_token

ENV_ARTIFACT_ROOT = "CONTRAILSCOPE_ARTIFACT_ROOT"

FILAMENT_ATTRIBUTES = ("mean_temperature", "ice_count", "total_mass", "length")
NUMERIC_OUTPUT_ATTRIBUTES = ("mean_temperature", "ice_count", "total_mass", "length")
RELATIVE_CHANGE_EPS = 1e-12

_CRITERION_KEYS = ("exhaust_temperature_k", "exhaust_vapor_pressure_pa",
                   "ambient_temperature_k", "ambient_vapor_pressure_pa")


@dataclass
class PipelineConfig:
    alpha: float | str = "auto"
    k: int = 3
    min_pts: int = 4
    replication: int = 8
    grid_dims: tuple[int, int, int] = (64, 32, 32)
    kernel_sigma: float | str = "auto"
    knn_k: int = 5
    seed: int = 0
    workers: int | None = None
    feature_timestep: str = "final"  # or "aggregate": mean over all timesteps

    @classmethod
    def from_json_dict(cls, raw: dict) -> "PipelineConfig":
        cfg = cls()
        for key, value in raw.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown pipeline config key {key!r}")
            setattr(cfg, key, tuple(value) if key == "grid_dims" else value)
        return cfg

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["grid_dims"] = list(self.grid_dims)
        return d


@dataclass
class ArtifactBundle:
    root: Path
    pipeline_version: str
    run_status: dict[str, dict]
    checksums: dict[str, str]
    config: PipelineConfig

    def ok_runs(self) -> list[str]:
        return sorted(rid for rid, st in self.run_status.items() if st["status"] == "ok")


def _dump_json(obj, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _run_seed(seed: int, run_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{run_id}".encode()).hexdigest()
    return int(digest[:12], 16)


def _criterion_artifact(manifest) -> dict | None:
    bc = manifest.boundary_conditions
    if not all(k in bc for k in _CRITERION_KEYS):
        return None
    try:
        ex_t, ex_p, am_t, am_p = (float(bc[k]) for k in _CRITERION_KEYS)
    except ValueError:
        return None
    model = thermo.SaturationModel()
    line = thermo.MixingLine((ex_t, ex_p), (am_t, am_p))
    return thermo.criterion_payload(model, line)


def process_run(run_dir: str, out_dir: str, config_dict: dict) -> dict:
    """Full precompute for one run directory; returns the status record.

    Module-level so process pools can pickle it.
    """
    config = PipelineConfig.from_json_dict(config_dict)
    run_dir = Path(run_dir)
    out = Path(out_dir)
    try:
        run = load_run(run_dir / "manifest.json", run_dir / "snapshots")
        rid = run.run_id
        run_out = out / "runs" / rid
        run_out.mkdir(parents=True, exist_ok=True)

        _dump_json(run.manifest.to_json_dict(), run_out / "manifest.json")

        criterion = _criterion_artifact(run.manifest)
        if criterion is not None:
            _dump_json(criterion, run_out / "criterion.json")

        replication_seed = _run_seed(config.seed, rid)
        summaries = []
        shapes = []
        group_records = []
        label_rows = []
        assignments = []
        for snap in run.snapshots:
            summary = attributes.summarize_timestep(snap)

            snap3 = snap if snap.is_3d else reconstruct_3d(snap, config.replication, replication_seed)
            if not snap.is_3d and summary.ice_count:
                summary.length_3d = attributes.revolved_diameter(snap.positions_2d()[snap.ice_flag])
            summaries.append(summary.to_json_dict())

            ga = grouping.group_timestep(snap, k=config.k, min_pts=config.min_pts)
            assignments.append(ga)
            group_records.append({
                "time": snap.time,
                "eps": ga.eps,
                "min_pts": ga.min_pts,
                "noise_count": ga.noise_count,
                "groups": [g.to_json_dict() for g in ga.groups],
            })
            for pid, label in zip(ga.ice_particle_ids, ga.labels):
                label_rows.append((snap.time, int(pid), int(label)))

            shapes.append(_shape_record(snap, config))

            sigma = ga.eps if config.kernel_sigma == "auto" else float(config.kernel_sigma)
            if sigma <= 0:
                sigma = max((snap3.x.max() - snap3.x.min()) / config.grid_dims[0], 1e-6) if snap3.n else 1.0
            rep = 1 if snap.is_3d else config.replication
            grid_labels = np.repeat(ga.labels, rep)
            grids = volume.rasterize_many(
                snap3, list(volume.ATTRIBUTES), dims=config.grid_dims,
                kernel_sigma=sigma, group_labels=grid_labels,
            )
            for attr, grid in grids.items():
                volume.export_grid(grid, run_out / "grids" / f"t_{time_token(snap.time)}_{attr}.grid")

        _dump_json(summaries, run_out / "summaries.json")
        _dump_json(shapes, run_out / "shapes.json")
        _dump_json(group_records, run_out / "groups.json")
        pd.DataFrame(label_rows, columns=["time", "particle_id", "label"]).to_csv(
            run_out / "group_labels.csv", index=False)

        graph = tracking.build_tracking_graph(assignments)
        _dump_json(graph.to_json_dict(), run_out / "tracking.json")

        final_summary = summaries[-1] if summaries else None
        final_shape = next((s for s in reversed(shapes) if not s.get("no_shape")), None)
        return {
            "status": "ok",
            "run_id": rid,
            "manifest": run.manifest.to_json_dict(),
            "diagnostics": run.diagnostics,
            "final_summary": final_summary,
            "all_summaries": summaries,
            "final_shape": final_shape,
        }
    except Exception as exc:  # per-run isolation: record, do not propagate
        return {"status": "failed", "run_id": run_dir.name, "error": f"{type(exc).__name__}: {exc}"}


def _shape_record(snap, config: PipelineConfig) -> dict:
    ice = snap.ice_flag
    pts = snap.positions_2d()[ice]
    ids = snap.particle_id[ice]
    record: dict = {"time": snap.time}
    if len(pts) < 3:
        record.update(no_shape="fewer than 3 ice particles", removed_ids=[])
        return record
    kept, report = shape.filter_noise(pts, ids)
    record["removed_ids"] = sorted(report.removed_ids)
    if len(kept) < 3:
        record.update(no_shape="fewer than 3 ice particles after noise filtering")
        return record
    try:
        result = shape.alpha_shape(kept, config.alpha, upper_regression=report.regression)
    except shape.DegenerateInput as exc:
        record.update(no_shape=str(exc))
        return record
    payload = result.to_json_dict()
    record.update(payload)
    return record


def compute_filaments(summaries_by_run: dict[str, list[dict]], attrs=FILAMENT_ATTRIBUTES) -> dict:
    """Per (attribute, run) series of (time, value, relative change from the
    previous value); the first change is 0 and a tiny epsilon guards v=0."""
    out: dict[str, dict[str, list[list[float]]]] = {}
    for attr in attrs:
        per_run = {}
        for rid, summaries in sorted(summaries_by_run.items()):
            series = []
            prev = None
            for row in summaries:
                value = row.get(attr)
                value = 0.0 if value is None else float(value)
                if prev is None:
                    change = 0.0
                else:
                    change = (value - prev) / max(abs(prev), RELATIVE_CHANGE_EPS)
                series.append([row["time"], value, change])
                prev = value
            per_run[rid] = series
        out[attr] = per_run
    return out


def compute_glyph_diff(manifests: dict[str, dict], schema: dict[str, list[str]]) -> dict:
    """Group runs by full parameter-map equality; the diff attributes are the
    schema attributes observed with more than one value."""
    groups: dict[tuple, list[str]] = {}
    for rid, manifest in sorted(manifests.items()):
        params = dict(manifest["input_params"])
        params.update(manifest["boundary_conditions"])
        key = tuple(sorted(params.items()))
        groups.setdefault(key, []).append(rid)
    diff_attributes = sorted(name for name, values in schema.items() if len(values) > 1)
    records = []
    for key, rids in sorted(groups.items(), key=lambda kv: kv[1][0]):
        params = dict(key)
        records.append({
            "run_ids": sorted(rids),
            "representative": {name: params[name] for name in diff_attributes if name in params},
        })
    return {"groups": records, "diff_attributes": diff_attributes}


def _numeric_vector(summary: dict) -> dict[str, float]:
    return {name: float(summary[name] if summary[name] is not None else 0.0)
            for name in NUMERIC_OUTPUT_ATTRIBUTES}


def _aggregate_vector(summaries: list[dict]) -> dict[str, float]:
    acc = {name: [] for name in NUMERIC_OUTPUT_ATTRIBUTES}
    for row in summaries:
        for name in NUMERIC_OUTPUT_ATTRIBUTES:
            v = row.get(name)
            acc[name].append(0.0 if v is None else float(v))
    return {name: float(np.mean(vals)) for name, vals in acc.items()}


def _build_ensemble_artifacts(out: Path, ok_results: list[dict], config: PipelineConfig):
    manifests = {r["run_id"]: r["manifest"] for r in ok_results}
    schema: dict[str, set[str]] = {}
    for manifest in manifests.values():
        for name, value in {**manifest["input_params"], **manifest["boundary_conditions"]}.items():
            schema.setdefault(name, set()).add(value)
    cat_schema = {name: sorted(values) for name, values in sorted(schema.items())}

    numeric_vectors = {}
    for r in ok_results:
        if config.feature_timestep == "aggregate":
            numeric_vectors[r["run_id"]] = _aggregate_vector(r["all_summaries"])
        else:
            numeric_vectors[r["run_id"]] = _numeric_vector(r["final_summary"])
    ranges = {}
    for name in NUMERIC_OUTPUT_ATTRIBUTES:
        vals = [vec[name] for vec in numeric_vectors.values()]
        ranges[name] = (min(vals), max(vals)) if vals else (0.0, 0.0)

    _dump_json({
        "categorical": cat_schema,
        "numeric_ranges": {k: list(v) for k, v in sorted(ranges.items())},
        "numeric_attributes": list(NUMERIC_OUTPUT_ATTRIBUTES),
    }, out / "ensemble" / "schema.json")

    _dump_json(compute_glyph_diff(manifests, cat_schema), out / "ensemble" / "glyphs.json")

    summaries_by_run = {r["run_id"]: r["all_summaries"] for r in ok_results}
    _dump_json(compute_filaments(summaries_by_run), out / "ensemble" / "filaments.json")

    # Parameter-mode neighbors: Gower over categoricals + final numeric outputs.
    param_vectors = []
    for rid in sorted(manifests):
        manifest = manifests[rid]
        param_vectors.append(similarity.ParameterVector(
            run_id=rid,
            categorical={**manifest["input_params"], **manifest["boundary_conditions"]},
            numerical=numeric_vectors[rid],
            ranges=ranges,
        ))
    indexes = {}
    if len(param_vectors) >= 2:
        indexes["parameters"] = similarity.knn_index(param_vectors, "parameters", config.knn_k)

    shape_vectors = []
    boundary_sets = []
    excluded = []
    for r in ok_results:
        fs = r.get("final_shape")
        if not fs:
            excluded.append(r["run_id"])
            continue
        chars = fs["characteristics"]
        summary = r["final_summary"]
        shape_vectors.append(similarity.ShapeFeatureVector(
            run_id=r["run_id"],
            features={
                "area": chars["area"], "length": chars["length"], "height": chars["height"],
                "slope": chars["slope"], "total_particles": float(summary["ice_count"]),
                "total_mass": summary["total_mass"],
                "mean_temperature": summary["mean_temperature"] or 0.0,
            },
        ))
        boundary_sets.append((r["run_id"], np.asarray(fs["boundary"], dtype=float)))
    if len(shape_vectors) >= 2:
        idx = similarity.knn_index(shape_vectors, "shape", config.knn_k)
        idx.excluded = sorted(excluded)
        indexes["shape"] = idx
    if len(boundary_sets) >= 2:
        idx = similarity.knn_index(boundary_sets, "hausdorff", config.knn_k)
        idx.excluded = sorted(excluded)
        indexes["hausdorff"] = idx

    for mode, index in indexes.items():
        _dump_json(index.to_json_dict(), out / "ensemble" / f"neighbors_{mode}.json")


def run_pipeline(ensemble_dir, out_dir=None, config: PipelineConfig | None = None) -> ArtifactBundle:
    """Precompute the full artifact bundle for an ensemble directory."""
    config = config or PipelineConfig()
    ensemble_dir = Path(ensemble_dir)
    env_root = os.environ.get(ENV_ARTIFACT_ROOT)
    out = Path(env_root) if env_root else Path(out_dir if out_dir is not None else ensemble_dir / "bundle")
    out.mkdir(parents=True, exist_ok=True)

    run_dirs = sorted(p.parent for p in ensemble_dir.glob("*/manifest.json"))
    if not run_dirs:
        raise FileNotFoundError(f"no run directories under {ensemble_dir}")

    cfg_dict = config.to_json_dict()
    workers = config.workers or os.cpu_count() or 1
    workers = min(workers, len(run_dirs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(process_run, [str(d) for d in run_dirs],
                                    [str(out)] * len(run_dirs), [cfg_dict] * len(run_dirs)))
    else:
        results = [process_run(str(d), str(out), cfg_dict) for d in run_dirs]

    ok_results = [r for r in results if r["status"] == "ok"]
    if ok_results:
        # cross-checks the loaded manifests (duplicate run ids) on the cheap
        validate_ensemble(_stub_runs(ok_results))
        _build_ensemble_artifacts(out, ok_results, config)

    run_status = {}
    for r in results:
        record = {"status": r["status"]}
        if r["status"] == "ok":
            record["diagnostics"] = r["diagnostics"]
        else:
            record["error"] = r["error"]
        run_status[r["run_id"]] = record

    checksums = {}
    for path in sorted(out.rglob("*")):
        if path.is_file() and path.name != "bundle.json":
            checksums[str(path.relative_to(out))] = _sha256(path)

    bundle_doc = {
        "pipeline_version": __version__,
        "config": cfg_dict,
        "runs": run_status,
        "checksums": checksums,
    }
    _dump_json(bundle_doc, out / "bundle.json")
    return ArtifactBundle(root=out, pipeline_version=__version__,
                          run_status=run_status, checksums=checksums, config=config)


def _stub_runs(ok_results: list[dict]):
    """Minimal SimulationRun stand-ins for duplicate-id validation."""
    from .ingest import RunManifest, SimulationRun

    runs = []
    for r in ok_results:
        m = r["manifest"]
        runs.append(SimulationRun(
            manifest=RunManifest(
                run_id=m["run_id"], grid_kind=m["grid_kind"],
                input_params=m["input_params"], boundary_conditions=m["boundary_conditions"],
                timestep_labels=[float(t) for t in m["timesteps"]],
            ),
            snapshots=[],
        ))
    return runs


def verify_bundle(bundle_root) -> dict[str, bool]:
    """Re-hash every artifact against bundle.json; True = intact."""
    root = Path(bundle_root)
    with open(root / "bundle.json", "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return {rel: (_sha256(root / rel) == digest if (root / rel).exists() else False)
            for rel, digest in doc["checksums"].items()}
