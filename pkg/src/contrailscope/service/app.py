"""Read-only HTTP service over a precomputed artifact bundle.

Artifact-backed GET endpoints return the persisted JSON bytes verbatim with a
strong ETag derived from the artifact checksum; the process never writes
under the bundle root. Volume grids stream in the package's grid format
(length-prefixed JSON header + float32 blocks) as application/octet-stream.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.middleware.gzip import GZipMiddleware
from fastapi.responses import FileResponse, JSONResponse, Response
from pydantic import ValidationError

from .. import thermo
from ..errors import DegenerateLine
from ..ingest import time_token
from ..pipeline import NUMERIC_OUTPUT_ATTRIBUTES
from ..volume import ATTRIBUTES as GRID_ATTRIBUTES
from .models import CriterionRequest, FilterResult, FilterSpec, RunDescriptor

API_PREFIX = "/api/v1"


class BundleIndex:
    """In-memory index over the immutable bundle; raw bytes are kept for
    byte-identical pass-through responses."""

    def __init__(self, root):
        self.root = Path(root)
        with open(self.root / "bundle.json", "rb") as fh:
            raw = fh.read()
        self.bundle_etag = hashlib.sha256(raw).hexdigest()
        doc = json.loads(raw)
        self.checksums: dict[str, str] = doc["checksums"]
        self.run_status: dict[str, dict] = doc["runs"]

        self._raw: dict[str, bytes] = {}
        self._parsed: dict[str, object] = {}
        for rel in self.checksums:
            if rel.endswith(".json"):
                with open(self.root / rel, "rb") as fh:
                    blob = fh.read()
                self._raw[rel] = blob
                self._parsed[rel] = json.loads(blob)

    def has(self, rel: str) -> bool:
        return rel in self._raw

    def raw(self, rel: str) -> bytes:
        return self._raw[rel]

    def parsed(self, rel: str):
        return self._parsed[rel]

    def etag(self, rel: str) -> str:
        return self.checksums[rel]

    def ok_run_ids(self) -> list[str]:
        return sorted(r for r, st in self.run_status.items() if st["status"] == "ok")

    def timesteps(self, run_id: str) -> list[float]:
        manifest = self.parsed(f"runs/{run_id}/manifest.json")
        return [float(t) for t in manifest["timesteps"]]


def _match_time(index: BundleIndex, run_id: str, t: str) -> float:
    try:
        wanted = float(t)
    except ValueError:
        raise HTTPException(404, f"bad timestep {t!r}")
    for label in index.timesteps(run_id):
        if label == wanted:
            return label
    raise HTTPException(404, f"run {run_id} has no timestep {t}")


def _require_run(index: BundleIndex, run_id: str):
    if run_id not in index.run_status:
        raise HTTPException(404, f"unknown run {run_id}")
    if index.run_status[run_id]["status"] != "ok":
        raise HTTPException(404, f"run {run_id} has no artifacts (status: "
                                 f"{index.run_status[run_id]['status']})")


def _etag_or_304(request: Request, etag: str) -> Response | None:
    if request.headers.get("if-none-match") == f'"{etag}"':
        return Response(status_code=304, headers={"ETag": f'"{etag}"'})
    return None


def _raw_json(index: BundleIndex, rel: str, request: Request) -> Response:
    if not index.has(rel):
        raise HTTPException(404, f"missing artifact {rel}")
    etag = index.etag(rel)
    hit = _etag_or_304(request, etag)
    if hit is not None:
        return hit
    return Response(content=index.raw(rel), media_type="application/json",
                    headers={"ETag": f'"{etag}"'})


def _sliced_json(index: BundleIndex, rel: str, payload, request: Request, slice_key: str) -> Response:
    etag = f"{index.etag(rel)}:{slice_key}"
    hit = _etag_or_304(request, etag)
    if hit is not None:
        return hit
    return Response(content=json.dumps(payload, sort_keys=True).encode(),
                    media_type="application/json", headers={"ETag": f'"{etag}"'})


def evaluate_filter(index: BundleIndex, spec: FilterSpec) -> list[str]:
    schema = index.parsed("ensemble/schema.json")
    known_cat = set(schema["categorical"])
    known_num = set(schema["numeric_attributes"])
    unknown = [a for a in spec.categorical if a not in known_cat]
    unknown += [a for a in spec.numeric if a not in known_num]
    if unknown:
        raise HTTPException(422, f"unknown filter attributes: {sorted(unknown)}")

    matches = []
    for rid in index.ok_run_ids():
        manifest = index.parsed(f"runs/{rid}/manifest.json")
        params = {**manifest["input_params"], **manifest["boundary_conditions"]}
        if any(params.get(name) != value for name, value in spec.categorical.items()):
            continue
        summaries = index.parsed(f"runs/{rid}/summaries.json")
        if not summaries:
            continue
        final = summaries[-1]
        ok = True
        for name, bounds in spec.numeric.items():
            value = final.get(name)
            value = 0.0 if value is None else float(value)
            if bounds.lo is not None and value < bounds.lo:
                ok = False
            if bounds.hi is not None and value > bounds.hi:
                ok = False
        if ok:
            matches.append(rid)
    return matches


def create_app(bundle_root, cors_origins: list[str] | None = None) -> FastAPI:
    index = BundleIndex(bundle_root)
    app = FastAPI(title="contrailscope")
    app.state.index = index
    app.add_middleware(GZipMiddleware, minimum_size=1024)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )

    @app.get(API_PREFIX + "/runs", response_model=list[RunDescriptor])
    def runs(request: Request):
        hit = _etag_or_304(request, index.bundle_etag)
        if hit is not None:
            return hit
        descriptors = []
        for rid, status in sorted(index.run_status.items()):
            desc = {"run_id": rid, "status": status["status"]}
            if status["status"] == "ok":
                manifest = index.parsed(f"runs/{rid}/manifest.json")
                desc["grid_kind"] = manifest["grid_kind"]
                desc["timesteps"] = manifest["timesteps"]
            else:
                desc["error"] = status.get("error")
            descriptors.append(desc)
        return JSONResponse(descriptors, headers={"ETag": f'"{index.bundle_etag}"'})

    @app.get(API_PREFIX + "/runs/{run_id}/manifest")
    def manifest(run_id: str, request: Request):
        _require_run(index, run_id)
        return _raw_json(index, f"runs/{run_id}/manifest.json", request)

    @app.get(API_PREFIX + "/runs/{run_id}/summaries")
    def summaries(run_id: str, request: Request):
        _require_run(index, run_id)
        return _raw_json(index, f"runs/{run_id}/summaries.json", request)

    @app.get(API_PREFIX + "/runs/{run_id}/tracking")
    def tracking_view(run_id: str, request: Request):
        _require_run(index, run_id)
        return _raw_json(index, f"runs/{run_id}/tracking.json", request)

    @app.get(API_PREFIX + "/runs/{run_id}/criterion")
    def run_criterion(run_id: str, request: Request):
        _require_run(index, run_id)
        return _raw_json(index, f"runs/{run_id}/criterion.json", request)

    @app.get(API_PREFIX + "/runs/{run_id}/shape/{t}")
    def shape_at(run_id: str, t: str, request: Request):
        _require_run(index, run_id)
        label = _match_time(index, run_id, t)
        rel = f"runs/{run_id}/shapes.json"
        for record in index.parsed(rel):
            if record["time"] == label:
                return _sliced_json(index, rel, record, request, time_token(label))
        raise HTTPException(404, f"no shape at t={t}")

    @app.get(API_PREFIX + "/runs/{run_id}/groups/{t}")
    def groups_at(run_id: str, t: str, request: Request):
        _require_run(index, run_id)
        label = _match_time(index, run_id, t)
        rel = f"runs/{run_id}/groups.json"
        for record in index.parsed(rel):
            if record["time"] == label:
                return _sliced_json(index, rel, record, request, time_token(label))
        raise HTTPException(404, f"no groups at t={t}")

    @app.get(API_PREFIX + "/runs/{run_id}/volume/{t}")
    def volume_at(run_id: str, t: str, attr: str, request: Request):
        _require_run(index, run_id)
        if attr not in GRID_ATTRIBUTES:
            raise HTTPException(404, f"unknown volume attribute {attr!r}")
        label = _match_time(index, run_id, t)
        rel = f"runs/{run_id}/grids/t_{time_token(label)}_{attr}.grid"
        path = index.root / rel
        if rel not in index.checksums or not path.exists():
            raise HTTPException(404, f"missing grid {rel}")
        etag = index.etag(rel)
        hit = _etag_or_304(request, etag)
        if hit is not None:
            return hit
        return FileResponse(path, media_type="application/octet-stream",
                            headers={"ETag": f'"{etag}"'})

    @app.get(API_PREFIX + "/ensemble/schema")
    def schema(request: Request):
        return _raw_json(index, "ensemble/schema.json", request)

    @app.get(API_PREFIX + "/ensemble/glyphs")
    def glyphs(request: Request):
        return _raw_json(index, "ensemble/glyphs.json", request)

    @app.get(API_PREFIX + "/ensemble/filaments")
    def filaments(request: Request, attr: str | None = None):
        rel = "ensemble/filaments.json"
        if attr is None:
            return _raw_json(index, rel, request)
        doc = index.parsed(rel)
        if attr not in doc:
            raise HTTPException(404, f"unknown filament attribute {attr!r}")
        return _sliced_json(index, rel, doc[attr], request, attr)

    @app.get(API_PREFIX + "/ensemble/similar/{run_id}")
    def similar(run_id: str, mode: str, request: Request):
        if mode not in ("parameters", "shape", "hausdorff"):
            raise HTTPException(404, f"unknown similarity mode {mode!r}")
        rel = f"ensemble/neighbors_{mode}.json"
        if not index.has(rel):
            raise HTTPException(404, f"no {mode} index in this bundle")
        doc = index.parsed(rel)
        if run_id not in doc["neighbors"]:
            raise HTTPException(404, f"run {run_id} not in the {mode} index")
        payload = {"mode": mode, "k": doc["k"], "run_id": run_id,
                   "neighbors": doc["neighbors"][run_id]}
        return _sliced_json(index, rel, payload, request, run_id)

    @app.post(API_PREFIX + "/ensemble/filter", response_model=FilterResult)
    async def ensemble_filter(request: Request):
        try:
            body = await request.json()
        except Exception:
            raise HTTPException(400, "filter body is not valid JSON")
        try:
            spec = FilterSpec.model_validate(body)
        except ValidationError as exc:
            raise HTTPException(400, f"malformed FilterSpec: {exc.errors()[:3]}")
        return FilterResult(run_ids=evaluate_filter(index, spec))

    @app.post(API_PREFIX + "/criterion")
    def criterion(req: CriterionRequest):
        model = thermo.SaturationModel()
        try:
            line = thermo.MixingLine(tuple(req.exhaust), tuple(req.ambient))
            return thermo.criterion_payload(model, line, req.samples)
        except (DegenerateLine, ValueError) as exc:
            raise HTTPException(400, str(exc))

    return app


def serve(bundle_root, bind_address: str = "127.0.0.1:8000"):
    """Run the service with uvicorn (blocking)."""
    import uvicorn

    host, _, port = bind_address.rpartition(":")
    uvicorn.run(create_app(bundle_root), host=host or "127.0.0.1", port=int(port))
