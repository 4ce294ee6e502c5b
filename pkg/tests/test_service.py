import json
import struct

import numpy as np
import pytest
from fastapi.testclient import TestClient

from contrailscope.pipeline import PipelineConfig, run_pipeline
from contrailscope.service import create_app
from contrailscope.synth import (
    RunScript,
    SynthConfig,
    _INPUT_PARAM_DEFAULTS,
    generate_synthetic,
)
from contrailscope.volume import parse_grid_payload


@pytest.fixture(scope="module")
def served(tmp_path_factory):
    base = tmp_path_factory.mktemp("svc")
    runs = []
    for i in range(4):
        params = dict(_INPUT_PARAM_DEFAULTS)
        if i >= 2:
            params["engine_streams"] = "single-stream"
        runs.append(RunScript(
            run_id=f"S{i + 1}", params=params, exhaust=(580.0, 1300.0),
            ambient=(230.0, 12.0) if i < 2 else (215.0, 2.0),
            timesteps=3, particles_per_step=700, n_blobs=2,
            shape_family="narrow" if i < 2 else "wide",
            temperature_class="high" if i < 2 else "low",
        ))
    ens = generate_synthetic(SynthConfig(seed=21, runs=runs), base / "ens")
    bundle = run_pipeline(ens, base / "bundle", PipelineConfig(workers=1))
    client = TestClient(create_app(bundle.root))
    return ens, bundle, client


def file_doc(bundle, rel):
    return json.loads((bundle.root / rel).read_text())


class TestRunEndpoints:
    def test_runs_lists_descriptors(self, served):
        _, _, client = served
        r = client.get("/api/v1/runs")
        assert r.status_code == 200
        body = r.json()
        assert [d["run_id"] for d in body] == ["S1", "S2", "S3", "S4"]
        assert all(d["status"] == "ok" for d in body)
        assert body[0]["timesteps"] == [0.05, 0.1, 0.15]

    def test_manifest_passthrough_byte_identical(self, served):
        _, bundle, client = served
        r = client.get("/api/v1/runs/S1/manifest")
        assert r.content == (bundle.root / "runs/S1/manifest.json").read_bytes()

    def test_summaries(self, served):
        _, bundle, client = served
        r = client.get("/api/v1/runs/S1/summaries")
        assert r.json() == file_doc(bundle, "runs/S1/summaries.json")

    def test_shape_at_timestep(self, served):
        _, bundle, client = served
        r = client.get("/api/v1/runs/S1/shape/0.1")
        assert r.status_code == 200
        doc = r.json()
        assert doc["time"] == 0.1
        assert len(doc["boundary"]) >= 3

    def test_groups_at_timestep(self, served):
        _, _, client = served
        r = client.get("/api/v1/runs/S2/groups/0.15")
        assert r.status_code == 200
        assert r.json()["groups"]

    def test_tracking(self, served):
        _, bundle, client = served
        assert client.get("/api/v1/runs/S1/tracking").json() == \
            file_doc(bundle, "runs/S1/tracking.json")

    def test_volume_streams_grid_format(self, served):
        _, bundle, client = served
        r = client.get("/api/v1/runs/S1/volume/0.05", params={"attr": "temperature"})
        assert r.status_code == 200
        assert r.headers["content-type"] == "application/octet-stream"
        grid = parse_grid_payload(r.content)
        assert grid.attribute == "temperature"
        assert r.content == (bundle.root / "runs/S1/grids/t_0.05_temperature.grid").read_bytes()

    def test_unknowns_404(self, served):
        _, _, client = served
        assert client.get("/api/v1/runs/NOPE/manifest").status_code == 404
        assert client.get("/api/v1/runs/S1/shape/0.42").status_code == 404
        assert client.get("/api/v1/runs/S1/volume/0.05", params={"attr": "spin"}).status_code == 404
        assert client.get("/api/v1/ensemble/similar/S1", params={"mode": "psychic"}).status_code == 404

    def test_etag_and_304(self, served):
        _, _, client = served
        r1 = client.get("/api/v1/runs/S1/summaries")
        etag = r1.headers["etag"]
        r2 = client.get("/api/v1/runs/S1/summaries", headers={"If-None-Match": etag})
        assert r2.status_code == 304
        r3 = client.get("/api/v1/runs/S1/summaries")
        assert r3.headers["etag"] == etag
        assert r3.content == r1.content


class TestEnsembleEndpoints:
    def test_schema(self, served):
        _, _, client = served
        doc = client.get("/api/v1/ensemble/schema").json()
        assert "engine_streams" in doc["categorical"]
        assert set(doc["numeric_attributes"]) == {"mean_temperature", "ice_count",
                                                  "total_mass", "length"}
        for lo, hi in doc["numeric_ranges"].values():
            assert lo <= hi

    def test_glyphs(self, served):
        _, _, client = served
        doc = client.get("/api/v1/ensemble/glyphs").json()
        seen = sorted(rid for g in doc["groups"] for rid in g["run_ids"])
        assert seen == ["S1", "S2", "S3", "S4"]

    def test_filaments_full_and_sliced(self, served):
        _, bundle, client = served
        full = client.get("/api/v1/ensemble/filaments").json()
        sliced = client.get("/api/v1/ensemble/filaments", params={"attr": "ice_count"}).json()
        assert sliced == full["ice_count"]
        assert client.get("/api/v1/ensemble/filaments", params={"attr": "nope"}).status_code == 404

    def test_similar_passthrough_order(self, served):
        _, bundle, client = served
        doc = client.get("/api/v1/ensemble/similar/S1", params={"mode": "shape"}).json()
        persisted = file_doc(bundle, "ensemble/neighbors_shape.json")
        assert doc["neighbors"] == persisted["neighbors"]["S1"]
        assert doc["mode"] == "shape"

    def test_criterion_endpoint(self, served):
        _, _, client = served
        r = client.post("/api/v1/criterion",
                        json={"exhaust": [580.0, 1300.0], "ambient": [215.0, 1.5]})
        assert r.status_code == 200
        assert r.json()["verdict"]["outcome"] == "persistent"
        bad = client.post("/api/v1/criterion",
                          json={"exhaust": [215.0, 1300.0], "ambient": [215.0, 1.5]})
        assert bad.status_code == 400


class TestFilter:
    def oracle(self, ens, bundle, spec):
        """Brute-force predicate evaluation straight over the artifacts."""
        hits = []
        for rid in sorted(bundle.run_status):
            manifest = file_doc(bundle, f"runs/{rid}/manifest.json")
            params = {**manifest["input_params"], **manifest["boundary_conditions"]}
            if any(params.get(k) != v for k, v in spec.get("categorical", {}).items()):
                continue
            final = file_doc(bundle, f"runs/{rid}/summaries.json")[-1]
            ok = True
            for name, bounds in spec.get("numeric", {}).items():
                val = final[name] or 0.0
                if bounds.get("lo") is not None and val < bounds["lo"]:
                    ok = False
                if bounds.get("hi") is not None and val > bounds["hi"]:
                    ok = False
            if ok:
                hits.append(rid)
        return hits

    def test_categorical_filter_matches_oracle(self, served):
        ens, bundle, client = served
        spec = {"categorical": {"engine_streams": "two-stream"}}
        r = client.post("/api/v1/ensemble/filter", json=spec)
        assert r.status_code == 200
        assert r.json()["run_ids"] == self.oracle(ens, bundle, spec) == ["S1", "S2"]

    def test_numeric_filter_matches_oracle(self, served):
        ens, bundle, client = served
        schema = client.get("/api/v1/ensemble/schema").json()
        lo, hi = schema["numeric_ranges"]["mean_temperature"]
        cut = (lo + hi) / 2
        spec = {"numeric": {"mean_temperature": {"hi": cut}}}
        r = client.post("/api/v1/ensemble/filter", json=spec)
        assert r.json()["run_ids"] == self.oracle(ens, bundle, spec)
        assert r.json()["run_ids"]  # the low-ambient runs qualify

    def test_combined_filter(self, served):
        ens, bundle, client = served
        spec = {"categorical": {"engine_streams": "single-stream"},
                "numeric": {"ice_count": {"lo": 1.0}}}
        r = client.post("/api/v1/ensemble/filter", json=spec)
        assert r.json()["run_ids"] == self.oracle(ens, bundle, spec) == ["S3", "S4"]

    def test_malformed_is_400(self, served):
        _, _, client = served
        r = client.post("/api/v1/ensemble/filter",
                        json={"numeric": {"mean_temperature": {"lo": 5.0, "hi": 1.0}}})
        assert r.status_code == 400
        r = client.post("/api/v1/ensemble/filter", json={"categorical": "nope"})
        assert r.status_code == 400
        r = client.post("/api/v1/ensemble/filter",
                        content=b"{not json", headers={"content-type": "application/json"})
        assert r.status_code == 400

    def test_unknown_attribute_is_422(self, served):
        _, _, client = served
        r = client.post("/api/v1/ensemble/filter", json={"categorical": {"warp_drive": "on"}})
        assert r.status_code == 422
        r = client.post("/api/v1/ensemble/filter", json={"numeric": {"charisma": {"lo": 1.0}}})
        assert r.status_code == 422


class TestReadOnly:
    def test_no_writes_under_bundle_root(self, served, tmp_path_factory):
        _, bundle, client = served
        def snapshot():
            return {p: p.stat().st_mtime_ns for p in sorted(bundle.root.rglob("*")) if p.is_file()}
        before = snapshot()
        client.get("/api/v1/runs")
        client.get("/api/v1/runs/S1/volume/0.05", params={"attr": "group"})
        client.post("/api/v1/ensemble/filter", json={"categorical": {}})
        client.post("/api/v1/criterion", json={"exhaust": [580, 1300], "ambient": [215, 1.5]})
        assert snapshot() == before
