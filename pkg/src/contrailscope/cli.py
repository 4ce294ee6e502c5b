"""Command-line entry points: synthetic data generation, the preprocess
pipeline, one-off analyses on raw runs, bundle queries, and the service.

Every subcommand prints JSON on stdout (or writes files) and exits 0 on
success; failures print one machine-readable JSON error line on stderr and
exit 1. Usage errors exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import attributes, grouping, shape, thermo, tracking, volume
from .ingest import load_run, reconstruct_3d, time_token
from .pipeline import PipelineConfig, run_pipeline
from .synth import PRESETS, SynthConfig, generate_synthetic


def _emit(payload):
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _load_run_dir(run_dir: str):
    run_dir = Path(run_dir)
    return load_run(run_dir / "manifest.json", run_dir / "snapshots")


def _snapshot_at(run, t: float):
    for snap in run.snapshots:
        if snap.time == t:
            return snap
    raise SystemExit(f"run {run.run_id} has no timestep {t}")


def cmd_generate(args):
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = SynthConfig.from_json_dict(json.load(fh))
        if args.seed is not None:
            config.seed = args.seed
    else:
        builder = PRESETS[args.preset]
        kwargs = {}
        if args.seed is not None:
            kwargs["seed"] = args.seed
        if args.particles is not None:
            kwargs["particles_per_step"] = args.particles
        if args.timesteps is not None and args.preset != "tracking":
            kwargs["timesteps"] = args.timesteps
        config = builder(**kwargs)
    out = generate_synthetic(config, args.out)
    _emit({"out_dir": str(out), "seed": config.seed, "runs": len(config.runs)})


def cmd_preprocess(args):
    config = PipelineConfig()
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = PipelineConfig.from_json_dict(json.load(fh))
    if args.workers is not None:
        config.workers = args.workers
    if args.grid_dims:
        config.grid_dims = tuple(int(d) for d in args.grid_dims.split(","))
    bundle = run_pipeline(args.ensemble, args.out, config)
    _emit({
        "bundle_root": str(bundle.root),
        "pipeline_version": bundle.pipeline_version,
        "runs": bundle.run_status,
    })


def cmd_criterion(args):
    with open(args.input, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    model = thermo.SaturationModel()
    line = thermo.MixingLine(tuple(raw["exhaust"]), tuple(raw["ambient"]))
    _emit(thermo.criterion_payload(model, line, samples=args.samples))


def cmd_summarize(args):
    run = _load_run_dir(args.run_dir)
    _emit([attributes.summarize_timestep(s).to_json_dict() for s in run.snapshots])


def cmd_shape(args):
    run = _load_run_dir(args.run_dir)
    snap = _snapshot_at(run, args.time)
    pts = snap.positions_2d()[snap.ice_flag]
    ids = snap.particle_id[snap.ice_flag]
    kept, report = shape.filter_noise(pts, ids)
    alpha = "auto" if args.alpha == "auto" else float(args.alpha)
    result = shape.alpha_shape(kept, alpha, upper_regression=report.regression)
    payload = result.to_json_dict()
    payload["time"] = snap.time
    payload["removed_ids"] = sorted(report.removed_ids)
    _emit(payload)


def cmd_groups(args):
    run = _load_run_dir(args.run_dir)
    snap = _snapshot_at(run, args.time)
    ga = grouping.group_timestep(snap, k=args.k, min_pts=args.min_pts)
    _emit({
        "time": snap.time,
        "eps": ga.eps,
        "min_pts": ga.min_pts,
        "noise_count": ga.noise_count,
        "groups": [g.to_json_dict() for g in ga.groups],
    })


def cmd_track(args):
    run = _load_run_dir(args.run_dir)
    assignments = [grouping.group_timestep(s, k=args.k, min_pts=args.min_pts)
                   for s in run.snapshots]
    _emit(tracking.build_tracking_graph(assignments).to_json_dict())


def cmd_similar(args):
    path = Path(args.bundle) / "ensemble" / f"neighbors_{args.mode}.json"
    if not path.exists():
        raise SystemExit(f"bundle has no {args.mode} neighbor index")
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if args.id not in doc["neighbors"]:
        raise SystemExit(f"run {args.id} not in the {args.mode} index")
    _emit({"mode": args.mode, "k": doc["k"], "run_id": args.id,
           "neighbors": doc["neighbors"][args.id]})


def cmd_rasterize(args):
    run = _load_run_dir(args.run_dir)
    snap = _snapshot_at(run, args.time)
    ga = grouping.group_timestep(snap)
    rep = 1
    if not snap.is_3d:
        rep = args.replication
        snap = reconstruct_3d(snap, rep, args.seed)
    sigma = ga.eps if args.sigma == "auto" else float(args.sigma)
    if sigma <= 0:
        sigma = 1.0
    dims = tuple(int(d) for d in args.dims.split(","))
    grid = volume.rasterize(snap, args.attr, dims=dims, kernel_sigma=sigma,
                            group_labels=np.repeat(ga.labels, rep))
    out = volume.export_grid(grid, args.out)
    _emit({"out": str(out), "attribute": grid.attribute, "dims": list(grid.dims),
           "value_range": list(grid.value_range)})


def cmd_serve(args):
    from .service import serve

    serve(args.bundle, args.bind)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contrailscope",
        description="Contrail simulation ensemble post-processing toolchain",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a synthetic ensemble + ground truth")
    p.add_argument("--config", help="SynthConfig JSON path")
    p.add_argument("--preset", choices=sorted(PRESETS), default="ensemble29")
    p.add_argument("--seed", type=int)
    p.add_argument("--particles", type=int, help="particles per timestep override")
    p.add_argument("--timesteps", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("preprocess", help="run the artifact pipeline over an ensemble")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="PipelineConfig JSON path")
    p.add_argument("--workers", type=int)
    p.add_argument("--grid-dims", dest="grid_dims", help="e.g. 64,32,32")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("criterion", help="classify a mixing line from a JSON input")
    p.add_argument("--input", required=True, help='JSON {"exhaust": [T,P], "ambient": [T,P]}')
    p.add_argument("--samples", type=int, default=512)
    p.set_defaults(func=cmd_criterion)

    p = sub.add_parser("summarize", help="per-timestep contrail summaries for one run")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("shape", help="contrail shape at one timestep")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--alpha", default="auto")
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("groups", help="contrail groups at one timestep")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--min-pts", dest="min_pts", type=int, default=4)
    p.set_defaults(func=cmd_groups)

    p = sub.add_parser("track", help="tracking graph for one run")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--min-pts", dest="min_pts", type=int, default=4)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("similar", help="neighbors of a run from a bundle index")
    p.add_argument("--bundle", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--mode", choices=["parameters", "shape", "hausdorff"], default="parameters")
    p.set_defaults(func=cmd_similar)

    p = sub.add_parser("rasterize", help="rasterize one attribute grid at one timestep")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--attr", choices=sorted(volume.ATTRIBUTES), default="ice_label")
    p.add_argument("--dims", default="128,64,64")
    p.add_argument("--sigma", default="auto")
    p.add_argument("--replication", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rasterize)

    p = sub.add_parser("serve", help="serve a bundle over HTTP")
    p.add_argument("--bundle", required=True)
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(json.dumps({"error": exc.code}), file=sys.stderr)
            return 1
        raise
    except Exception as exc:
        print(json.dumps({"error": f"{type(exc).__name__}: {exc}"}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
