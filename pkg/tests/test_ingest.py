import json

import numpy as np
import pytest

from contrailscope import ingest
from contrailscope.errors import (
    DimensionError,
    DuplicateRunId,
    EmptyEnsemble,
    MissingSnapshot,
    MonotonicityError,
    SchemaError,
)
from contrailscope.ingest import (
    load_run,
    reconstruct_3d,
    save_run,
    snapshot_filename,
    validate_ensemble,
)

from conftest import make_snapshot


def write_manifest(path, run_id="R1", timesteps=(0.05, 0.1, 0.15), grid_kind="planar2d",
                   input_params=None, boundary=None):
    doc = {
        "run_id": run_id,
        "grid_kind": grid_kind,
        "input_params": input_params or {"engine": "two-stream"},
        "boundary_conditions": boundary or {"ambient": "230"},
        "timesteps": list(timesteps),
    }
    path.write_text(json.dumps(doc))
    return path


def write_snapshot_csv(snap_dir, time, rows, header="particle_id,x,y,temperature,diameter,ice_flag,pressure"):
    snap_dir.mkdir(parents=True, exist_ok=True)
    lines = [header] + [",".join(str(v) for v in row) for row in rows]
    path = snap_dir / snapshot_filename(time)
    path.write_text("\n".join(lines) + "\n")
    return path


def default_rows(n=4):
    return [[i, 1.0 + i, 0.5 * i, 230.0, 2e-6, i % 2, 23842.0] for i in range(n)]


class TestLoadRun:
    def test_loads_three_timesteps_in_order(self, tmp_path):
        manifest = write_manifest(tmp_path / "manifest.json")
        snap_dir = tmp_path / "snapshots"
        for t in (0.15, 0.05, 0.1):  # written out of order on purpose
            write_snapshot_csv(snap_dir, t, default_rows())
        run = load_run(manifest, snap_dir)
        assert [s.time for s in run.snapshots] == [0.05, 0.1, 0.15]
        assert run.snapshots[0].n == 4
        assert run.diagnostics["nonfinite_rows_dropped"] == 0

    def test_missing_snapshot(self, tmp_path):
        manifest = write_manifest(tmp_path / "manifest.json", timesteps=(0.05, 0.1))
        snap_dir = tmp_path / "snapshots"
        write_snapshot_csv(snap_dir, 0.05, default_rows())
        with pytest.raises(MissingSnapshot) as err:
            load_run(manifest, snap_dir)
        assert err.value.time == 0.1

    def test_negative_diameter_is_schema_error(self, tmp_path):
        manifest = write_manifest(tmp_path / "manifest.json", timesteps=(0.05,))
        rows = default_rows()
        rows[2][4] = -2e-6
        write_snapshot_csv(tmp_path / "snapshots", 0.05, rows)
        with pytest.raises(SchemaError) as err:
            load_run(manifest, tmp_path / "snapshots")
        assert err.value.column == "diameter"

    def test_missing_column(self, tmp_path):
        manifest = write_manifest(tmp_path / "manifest.json", timesteps=(0.05,))
        rows = [[0, 1.0, 2.0, 230.0, 0, 23842.0]]
        write_snapshot_csv(tmp_path / "snapshots", 0.05, rows,
                           header="particle_id,x,y,temperature,ice_flag,pressure")
        with pytest.raises(SchemaError) as err:
            load_run(manifest, tmp_path / "snapshots")
        assert err.value.column == "diameter"

    def test_non_monotonic_timesteps(self, tmp_path):
        manifest = write_manifest(tmp_path / "manifest.json", timesteps=(0.1, 0.05))
        with pytest.raises(MonotonicityError):
            load_run(manifest, tmp_path / "snapshots")

    def test_duplicate_particle_ids(self, tmp_path):
        manifest = write_manifest(tmp_path / "manifest.json", timesteps=(0.05,))
        rows = default_rows()
        rows[1][0] = 0
        write_snapshot_csv(tmp_path / "snapshots", 0.05, rows)
        with pytest.raises(SchemaError) as err:
            load_run(manifest, tmp_path / "snapshots")
        assert err.value.column == "particle_id"

    def test_nonfinite_rows_dropped_and_counted(self, tmp_path):
        manifest = write_manifest(tmp_path / "manifest.json", timesteps=(0.05,))
        rows = default_rows()
        rows[1][1] = float("nan")
        rows[3][6] = float("inf")
        write_snapshot_csv(tmp_path / "snapshots", 0.05, rows)
        run = load_run(manifest, tmp_path / "snapshots")
        assert run.snapshots[0].n == 2
        assert run.diagnostics["nonfinite_rows_dropped"] == 2

    def test_planar_run_with_z_column_rejected(self, tmp_path):
        manifest = write_manifest(tmp_path / "manifest.json", timesteps=(0.05,))
        rows = [[0, 1.0, 2.0, 0.0, 230.0, 2e-6, 1, 23842.0]]
        write_snapshot_csv(tmp_path / "snapshots", 0.05, rows,
                           header="particle_id,x,y,z,temperature,diameter,ice_flag,pressure")
        with pytest.raises(DimensionError):
            load_run(manifest, tmp_path / "snapshots")

    def test_round_trip_identical(self, tmp_path):
        manifest = write_manifest(tmp_path / "manifest.json")
        snap_dir = tmp_path / "snapshots"
        for t in (0.05, 0.1, 0.15):
            write_snapshot_csv(snap_dir, t, default_rows())
        run1 = load_run(manifest, snap_dir)
        save_run(run1, tmp_path / "copy")
        run2 = load_run(tmp_path / "copy" / "manifest.json", tmp_path / "copy" / "snapshots")
        assert run1.manifest == run2.manifest
        for a, b in zip(run1.snapshots, run2.snapshots):
            assert a.time == b.time
            np.testing.assert_array_equal(a.particle_id, b.particle_id)
            for col in ("x", "y", "temperature", "diameter", "pressure"):
                np.testing.assert_array_equal(getattr(a, col), getattr(b, col))
            np.testing.assert_array_equal(a.ice_flag, b.ice_flag)


class TestReconstruct3d:
    def test_quarter_rotation(self):
        snap = make_snapshot(0.1, [[5.0, 2.0]])
        out = reconstruct_3d(snap, replication_count=1, rng_seed=0,
                             angles=np.array([np.pi / 2]))
        assert out.x[0] == 5.0
        assert out.y[0] == pytest.approx(0.0, abs=1e-12)
        assert out.z[0] == pytest.approx(2.0, rel=1e-12)
        assert out.temperature[0] == snap.temperature[0]
        assert out.diameter[0] == snap.diameter[0]

    def test_on_axis_fixed_point(self):
        snap = make_snapshot(0.1, [[5.0, 0.0]])
        out = reconstruct_3d(snap, replication_count=6, rng_seed=3)
        np.testing.assert_allclose(out.x, 5.0)
        np.testing.assert_allclose(out.y, 0.0)
        np.testing.assert_allclose(out.z, 0.0)

    def test_radial_distance_preserved_10k(self, rng):
        pts = rng.uniform(-10, 10, size=(10_000, 2))
        snap = make_snapshot(0.1, pts)
        out = reconstruct_3d(snap, replication_count=2, rng_seed=7)
        r_out = np.sqrt(out.y ** 2 + out.z ** 2)
        r_in = np.abs(np.repeat(pts[:, 1], 2))
        assert np.max(np.abs(r_out - r_in)) < 1e-12
        np.testing.assert_array_equal(out.x, np.repeat(pts[:, 0], 2))

    def test_axial_multiset_preserved(self, rng):
        pts = rng.uniform(-5, 5, size=(100, 2))
        snap = make_snapshot(0.1, pts)
        out = reconstruct_3d(snap, replication_count=3, rng_seed=1)
        assert sorted(out.x.tolist()) == sorted(np.repeat(pts[:, 0], 3).tolist())

    def test_bit_reproducible(self, rng):
        snap = make_snapshot(0.1, rng.uniform(-5, 5, size=(50, 2)))
        a = reconstruct_3d(snap, 8, rng_seed=42)
        b = reconstruct_3d(snap, 8, rng_seed=42)
        np.testing.assert_array_equal(a.y, b.y)
        np.testing.assert_array_equal(a.z, b.z)
        c = reconstruct_3d(snap, 8, rng_seed=43)
        assert not np.array_equal(a.y, c.y)

    def test_replica_ids_encode_source_and_index(self):
        snap = make_snapshot(0.1, [[1.0, 1.0], [2.0, 2.0]], particle_ids=[3, 7])
        out = reconstruct_3d(snap, replication_count=4, rng_seed=0)
        assert out.particle_id.tolist() == [12, 13, 14, 15, 28, 29, 30, 31]

    def test_already_3d_rejected(self):
        snap = make_snapshot(0.1, [[1.0, 1.0, 0.0]])
        with pytest.raises(DimensionError):
            reconstruct_3d(snap, 2, 0)

    def test_zero_replication_rejected(self):
        snap = make_snapshot(0.1, [[1.0, 1.0]])
        with pytest.raises(ValueError):
            reconstruct_3d(snap, 0, 0)


class TestValidateEnsemble:
    def _run(self, run_id, params):
        manifest = ingest.RunManifest(
            run_id=run_id, grid_kind="planar2d",
            input_params=params, boundary_conditions={"ambient": "230"},
            timestep_labels=[0.05],
        )
        return ingest.SimulationRun(manifest=manifest, snapshots=[])

    def test_schema_union(self):
        ens = validate_ensemble([
            self._run("A", {"grid": "coarse"}),
            self._run("B", {"grid": "fine"}),
        ])
        assert ens.parameter_schema["grid"] == ["coarse", "fine"]
        assert ens.parameter_schema["ambient"] == ["230"]

    def test_duplicate_run_id(self):
        with pytest.raises(DuplicateRunId):
            validate_ensemble([self._run("A", {"g": "1"}), self._run("A", {"g": "2"})])

    def test_empty_ensemble(self):
        with pytest.raises(EmptyEnsemble):
            validate_ensemble([])
