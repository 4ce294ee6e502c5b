"""Synthetic plume ensemble generator: a desk-scale stand-in for HPC output.

Physics is qualitative only (hot exit with exponential axial temperature
decay, soot near the nozzle, ice beyond an onset distance); what matters is
the ground truth emitted next to the data: planted group memberships, a
merge/split/exit event script, shape-family assignments, temperature
classes, and filter-match sets.

Ice particles are planted as rectangular lattice blobs with dyadic spacing
(LATTICE_H = 2^-5 m) on dyadic centers, so every coordinate is exact in
float: each point's 3rd-neighbor distance is exactly LATTICE_H (corner and
ragged-edge points see LATTICE_H*sqrt(2)), the k-dist knee lands exactly on
the lattice spacing, and DBSCAN recovers the planted blobs verbatim.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ingest import RunManifest, ParticleSnapshot, SimulationRun, save_run, time_token

LATTICE_H = 0.03125  # 2^-5, exact in float

FAMILY_GEOMETRY = {
    # blob rows (height in lattice steps), y slot positions (multiples of H),
    # ice crystal diameter scale (family-separated shape features)
    "narrow": {"rows": 20, "slots": [-28, 28], "ice_diameter": 1.8e-6},
    "wide": {"rows": 40, "slots": [-96, 0, 96], "ice_diameter": 2.6e-6},
    "standard": {"rows": 24, "slots": [-96, -32, 32, 96], "ice_diameter": 2.0e-6},
}

_INPUT_PARAM_DEFAULTS = {
    "engine_streams": "two-stream",
    "grid_resolution": "coarse",
    "geometry": "axisymmetric",
    "scope": "jet-regime",
    "solver": "lagrangian",
    "turbulence_model": "les",
    "fuel_type": "kerosene",
    "nozzle_profile": "round",
    "combustor_model": "rql",
    "chemistry_scheme": "reduced",
    "particle_seeding": "uniform",
    "advection_scheme": "upwind2",
    "time_integrator": "rk3",
    "wall_model": "adiabatic",
    "mixing_model": "equal-diffusivity",
    "soot_model": "two-equation",
    "breakup_model": "off",
    "coalescence_model": "off",
    "radiation_model": "off",
}

_BOUNDARY_DEFAULTS = {
    "ambient_pressure_pa": "23842.0",
    "altitude_band": "11km",
    "humidity_class": "supersaturated",
    "wind_shear": "none",
    "domain_length_m": "24.0",
    "inflow_turbulence": "synthetic",
    "outflow_condition": "convective",
    "symmetry_plane": "y0",
}


@dataclass
class RunScript:
    run_id: str
    params: dict[str, str]
    exhaust: tuple[float, float]
    ambient: tuple[float, float]
    timesteps: int = 10
    dt: float = 0.05
    particles_per_step: int = 20_000
    ice_fraction: float = 0.6
    ice_onset_distance: float = 8.0
    shape_family: str = "standard"
    temperature_class: str = "high"
    n_blobs: int = 3
    events: list[dict] = field(default_factory=list)
    extra_boundary: dict[str, str] = field(default_factory=dict)


@dataclass
class SynthConfig:
    seed: int
    runs: list[RunScript]
    filter_cases: list[dict] = field(default_factory=list)

    @classmethod
    def from_json_dict(cls, raw: dict) -> "SynthConfig":
        runs = []
        for r in raw["runs"]:
            runs.append(RunScript(
                run_id=r["run_id"],
                params=dict(r.get("params", {})),
                exhaust=tuple(r["exhaust"]),
                ambient=tuple(r["ambient"]),
                timesteps=int(r.get("timesteps", 10)),
                dt=float(r.get("dt", 0.05)),
                particles_per_step=int(r.get("particles_per_step", 20_000)),
                ice_fraction=float(r.get("ice_fraction", 0.6)),
                ice_onset_distance=float(r.get("ice_onset_distance", 8.0)),
                shape_family=r.get("shape_family", "standard"),
                temperature_class=r.get("temperature_class", "high"),
                n_blobs=int(r.get("n_blobs", 3)),
                events=list(r.get("events", [])),
                extra_boundary=dict(r.get("extra_boundary", {})),
            ))
        return cls(seed=int(raw["seed"]), runs=runs,
                   filter_cases=list(raw.get("filter_cases", [])))


def _ranges_from_sorted(ids: np.ndarray) -> list[list[int]]:
    """Compress a sorted id array into [lo, hi) ranges for compact JSON."""
    if len(ids) == 0:
        return []
    breaks = np.flatnonzero(np.diff(ids) != 1)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [len(ids) - 1]))
    return [[int(ids[s]), int(ids[e]) + 1] for s, e in zip(starts, ends)]


def expand_ranges(ranges) -> np.ndarray:
    if not ranges:
        return np.array([], dtype=np.int64)
    return np.concatenate([np.arange(lo, hi, dtype=np.int64) for lo, hi in ranges])


def _simulate_membership(script: RunScript, n_soot: int, n_ice: int):
    """Blob membership per timestep from the event script; ids are conserved.

    Returns (per-timestep dict blob_id -> sorted id array, next_free_id).
    """
    base = {f"b{i}": None for i in range(script.n_blobs)}
    splits = np.array_split(np.arange(n_soot, n_soot + n_ice, dtype=np.int64), script.n_blobs)
    for i, chunk in enumerate(splits):
        base[f"b{i}"] = chunk
    next_id = n_soot + n_ice

    by_time = {}
    for ev in script.events:
        t = int(ev["time_index"])
        if not (0 < t < script.timesteps):
            raise ConfigError(f"event time_index {t} outside (0, {script.timesteps})")
        by_time.setdefault(t, []).append(ev)

    timeline = []
    current = {k: v.copy() for k, v in base.items()}
    for t in range(script.timesteps):
        for ev in by_time.get(t, []):
            kind = ev["type"]
            if kind == "merge":
                srcs = ev["sources"]
                target = ev["target"]
                if target not in srcs:
                    raise ConfigError("merge target must be one of its sources")
                missing = [s for s in srcs if s not in current]
                if missing:
                    raise ConfigError(f"merge references absent blobs {missing}")
                merged = np.sort(np.concatenate([current.pop(s) for s in srcs]))
                current[target] = merged
            elif kind == "split":
                src = ev["source"]
                if src not in current:
                    raise ConfigError(f"split references absent blob {src}")
                if ev["new"] in current:
                    raise ConfigError(f"split target {ev['new']} already exists")
                members = current.pop(src)
                half = len(members) // 2
                current[src] = members[:half]
                current[ev["new"]] = members[half:]
            elif kind == "exit":
                if ev["blob"] not in current:
                    raise ConfigError(f"exit references absent blob {ev['blob']}")
                current.pop(ev["blob"])
            elif kind == "appear":
                if ev["blob"] in current:
                    raise ConfigError(f"appear blob {ev['blob']} already exists")
                count = int(ev.get("count", 500))
                current[ev["blob"]] = np.arange(next_id, next_id + count, dtype=np.int64)
                next_id += count
            else:
                raise ConfigError(f"unknown event type {kind!r}")
        if not current:
            raise ConfigError("event script removed every blob")
        timeline.append({k: v.copy() for k, v in sorted(current.items())})
    return timeline, next_id


def _lattice(count: int, rows: int, center_x_steps: int, center_y_steps: int) -> np.ndarray:
    """count points on a rows-tall lattice, all coordinates exact dyadics."""
    rows = min(rows, count)
    cols = int(np.ceil(count / rows))
    idx = np.arange(count)
    r = idx % rows
    c = idx // rows
    # offsets in half-steps so centering stays dyadic
    y = (center_y_steps * 2 + (2 * r - (rows - 1))) * (LATTICE_H / 2.0)
    x = (center_x_steps * 2 + (2 * c - (cols - 1))) * (LATTICE_H / 2.0)
    return np.column_stack((x, y))


def _derive_events(timeline, labels_time):
    """Ground-truth events in the tracker's semantics, from planted blobs."""
    events = []
    n = len(timeline)
    for col in range(n):
        t = labels_time[col]
        prev = timeline[col - 1] if col > 0 else {}
        nxt = timeline[col + 1] if col < n - 1 else {}
        for blob, members in timeline[col].items():
            mset = set(int(i) for i in members)
            into = sorted(b for b, m in prev.items() if mset & set(int(i) for i in m))
            out = sorted(b for b, m in nxt.items() if mset & set(int(i) for i in m))
            if len(into) >= 2:
                nodes = [_ranges_from_sorted(prev[b]) for b in into] + [_ranges_from_sorted(members)]
                events.append({"type": "merge", "time": t, "nodes": nodes})
            if len(out) >= 2:
                nodes = [_ranges_from_sorted(members)] + [_ranges_from_sorted(nxt[b]) for b in out]
                events.append({"type": "split", "time": t, "nodes": nodes})
            if col > 0 and not into:
                events.append({"type": "appear", "time": t, "nodes": [_ranges_from_sorted(members)]})
            if col < n - 1 and not out:
                events.append({"type": "exit", "time": t, "nodes": [_ranges_from_sorted(members)]})
    return events


def _axial_temperature(x, exhaust_t, ambient_t, onset):
    lam = onset / 3.0
    return ambient_t + (exhaust_t - ambient_t) * np.exp(-np.asarray(x) / lam)


def _synthesize_run(script: RunScript, rng: np.random.Generator):
    """Build snapshots + per-run ground truth for one scripted run."""
    geom = FAMILY_GEOMETRY[script.shape_family]
    n_ice = int(script.particles_per_step * script.ice_fraction)
    n_soot = script.particles_per_step - n_ice
    timeline, _ = _simulate_membership(script, n_soot, n_ice)

    onset_steps = int(round(script.ice_onset_distance / LATTICE_H))
    drift_steps = 20  # 0.625 m per timestep, stays dyadic
    labels = [round(script.dt * (i + 1), 10) for i in range(script.timesteps)]

    snapshots = []
    blob_truth = {}
    for col, t in enumerate(labels):
        blobs = timeline[col]
        slots = geom["slots"]
        if len(blobs) > len(slots):
            raise ConfigError(
                f"{script.run_id}: {len(blobs)} active blobs at t={t} exceed the "
                f"{len(slots)} {script.shape_family!r} layout slots"
            )
        names = list(blobs)
        positions = []
        ids_order = []
        truth_entries = []
        base_x = onset_steps + 64 + drift_steps * col
        for i, name in enumerate(names):
            members = blobs[name]
            slot = slots[i % len(slots)]
            pts = _lattice(len(members), geom["rows"], base_x, slot)
            positions.append(pts)
            ids_order.append(members)
            truth_entries.append({
                "id": name,
                "members": _ranges_from_sorted(members),
                "center": [float(base_x * LATTICE_H), float(slot * LATTICE_H)],
            })
        blob_truth[time_token(t)] = truth_entries

        ice_ids = np.concatenate(ids_order)
        ice_pos = np.vstack(positions)

        soot_ids = np.arange(n_soot, dtype=np.int64)
        # Noisy columns are rounded to short decimals: CSV cells stay compact
        # under repr formatting (lattice coordinates are exact dyadics and
        # must not be rounded).
        soot_x = np.round(rng.uniform(0.5, script.ice_onset_distance * 0.9, n_soot), 5)
        soot_y = np.round(rng.normal(0.0, 0.2 + 0.04 * soot_x), 5)

        pid = np.concatenate((soot_ids, ice_ids))
        x = np.concatenate((soot_x, ice_pos[:, 0]))
        y = np.concatenate((soot_y, ice_pos[:, 1]))
        ice_flag = np.concatenate((np.zeros(n_soot, dtype=bool), np.ones(len(ice_ids), dtype=bool)))

        temperature = _axial_temperature(x, script.exhaust[0], script.ambient[0],
                                         script.ice_onset_distance)
        temperature = np.round(temperature + rng.normal(0.0, 0.3, len(x)), 4)
        diameter = np.where(
            ice_flag,
            rng.lognormal(np.log(geom["ice_diameter"]), 0.2, len(x)),
            rng.lognormal(np.log(5.0e-8), 0.2, len(x)),
        )
        diameter = (np.round(diameter * 1e9) + 1.0) / 1e9  # keeps strictly positive
        pressure = np.round(rng.normal(23842.0, 5.0, len(x)), 3)

        order = np.argsort(pid)
        snapshots.append(ParticleSnapshot(
            time=float(t),
            particle_id=pid[order], x=x[order], y=y[order], z=None,
            temperature=temperature[order], diameter=diameter[order],
            ice_flag=ice_flag[order], pressure=pressure[order],
        ))

    boundary = dict(_BOUNDARY_DEFAULTS)
    boundary.update({
        "exhaust_temperature_k": repr(float(script.exhaust[0])),
        "exhaust_vapor_pressure_pa": repr(float(script.exhaust[1])),
        "ambient_temperature_k": repr(float(script.ambient[0])),
        "ambient_vapor_pressure_pa": repr(float(script.ambient[1])),
    })
    boundary.update(script.extra_boundary)

    manifest = RunManifest(
        run_id=script.run_id,
        grid_kind="planar2d",
        input_params=dict(script.params),
        boundary_conditions=boundary,
        timestep_labels=labels,
    )
    run = SimulationRun(manifest=manifest, snapshots=snapshots)

    truth = {
        "n_soot": n_soot,
        "n_ice": n_ice,
        "exhaust": list(script.exhaust),
        "ambient": list(script.ambient),
        "shape_family": script.shape_family,
        "temperature_class": script.temperature_class,
        "blobs": blob_truth,
        "events": _derive_events(timeline, labels),
    }
    return run, truth


def generate_synthetic(config: SynthConfig, out_dir) -> Path:
    """Emit an ingest-format ensemble plus ground_truth.json; deterministic
    per seed (fixed rng streams, fixed float formatting)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    seen = set()
    truth_runs = {}
    param_names: set[str] = set()
    for idx, script in enumerate(config.runs):
        if script.run_id in seen:
            raise ConfigError(f"duplicate run_id {script.run_id}")
        seen.add(script.run_id)
        if script.shape_family not in FAMILY_GEOMETRY:
            raise ConfigError(f"unknown shape_family {script.shape_family!r}")
        rng = np.random.default_rng([config.seed, idx])
        run, truth = _synthesize_run(script, rng)
        save_run(run, out_dir / script.run_id)
        truth_runs[script.run_id] = truth
        param_names.update(run.manifest.all_params())

    families: dict[str, list[str]] = {}
    classes: dict[str, list[str]] = {}
    for script in config.runs:
        families.setdefault(script.shape_family, []).append(script.run_id)
        classes.setdefault(script.temperature_class, []).append(script.run_id)

    truth = {
        "seed": config.seed,
        "parameter_names": sorted(param_names),
        "shape_families": families,
        "temperature_classes": classes,
        "filter_cases": config.filter_cases,
        "runs": truth_runs,
    }
    with open(out_dir / "ground_truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir


def _tracking_events_script() -> list[dict]:
    return [
        {"type": "merge", "time_index": 2, "sources": ["b0", "b1"], "target": "b0"},
        {"type": "split", "time_index": 4, "source": "b2", "new": "b4"},
        {"type": "merge", "time_index": 6, "sources": ["b2", "b3"], "target": "b2"},
        {"type": "exit", "time_index": 8, "blob": "b4"},
    ]


def default_ensemble_config(seed: int = 2029, particles_per_step: int = 20_000,
                            timesteps: int = 10) -> SynthConfig:
    """29 runs mirroring the reference composition: 19 share the two-stream +
    coarse-grid settings (one glyph group, the planted filter subset, the
    high-temperature class) and 10 varied runs form the low-temperature class
    with narrow/wide plume families."""
    runs = []
    shared = dict(_INPUT_PARAM_DEFAULTS)
    merge_t = max(1, min(5, timesteps - 1))
    for i in range(19):
        if i == 0 and timesteps >= 10:
            events = _tracking_events_script()  # the canonical scripted run
        elif i % 2 and timesteps >= 2:
            events = [{"type": "merge", "time_index": merge_t,
                       "sources": ["b0", "b1"], "target": "b0"}]
        else:
            events = []
        runs.append(RunScript(
            run_id=f"R{i + 1:03d}",
            params=dict(shared),
            exhaust=(580.0, 1300.0),
            ambient=(230.0, 12.0),
            timesteps=timesteps,
            particles_per_step=particles_per_step,
            shape_family="standard",
            temperature_class="high",
            n_blobs=4 if (i == 0 and timesteps >= 10) else 3,
            events=events,
        ))
    for j in range(10):
        family = "narrow" if j < 5 else "wide"
        params = dict(shared)
        params["engine_streams"] = "single-stream" if j % 2 == 0 else "three-stream"
        params["grid_resolution"] = "fine"
        params["nozzle_profile"] = "round" if family == "narrow" else "annular"
        params["fuel_type"] = "kerosene" if j % 2 == 0 else "biofuel"
        runs.append(RunScript(
            run_id=f"R{j + 101:03d}",
            params=params,
            exhaust=(580.0, 1300.0),
            ambient=(215.0, 2.0),
            timesteps=timesteps,
            particles_per_step=particles_per_step,
            shape_family=family,
            temperature_class="low",
            n_blobs=2 if family == "narrow" else 3,
        ))
    filter_cases = [{
        "categorical": {"engine_streams": "two-stream", "grid_resolution": "coarse"},
        "run_ids": [f"R{i + 1:03d}" for i in range(19)],
    }]
    return SynthConfig(seed=seed, runs=runs, filter_cases=filter_cases)


def two_family_config(seed: int = 4711, particles_per_step: int = 4000,
                      timesteps: int = 4) -> SynthConfig:
    """10 runs, 5 narrow + 5 wide, for the shape-similarity criterion.

    The families are separated in every shape feature by construction: blob
    geometry (area/length/height), ice diameter scale (mass), particle count,
    and ambient temperature; within-family variety comes from the count."""
    runs = []
    for j in range(10):
        family = "narrow" if j < 5 else "wide"
        params = dict(_INPUT_PARAM_DEFAULTS)
        params["nozzle_profile"] = "round" if family == "narrow" else "annular"
        runs.append(RunScript(
            run_id=f"F{j + 1:03d}",
            params=params,
            exhaust=(580.0, 1300.0),
            ambient=(215.0, 2.0) if family == "narrow" else (218.0, 2.5),
            timesteps=timesteps,
            particles_per_step=particles_per_step + 100 * (j % 5)
            + (1400 if family == "wide" else 0),
            shape_family=family,
            temperature_class="low",
            n_blobs=2 if family == "narrow" else 3,
        ))
    return SynthConfig(seed=seed, runs=runs)


def tracking_scenario_config(seed: int = 99, particles_per_step: int = 3000) -> SynthConfig:
    """One 10-timestep run with the full merge/split/exit event script."""
    return SynthConfig(seed=seed, runs=[RunScript(
        run_id="T001",
        params=dict(_INPUT_PARAM_DEFAULTS),
        exhaust=(580.0, 1300.0),
        ambient=(230.0, 12.0),
        timesteps=10,
        particles_per_step=particles_per_step,
        shape_family="standard",
        n_blobs=4,
        events=_tracking_events_script(),
    )])


PRESETS = {
    "ensemble29": default_ensemble_config,
    "two-family": two_family_config,
    "tracking": tracking_scenario_config,
}
