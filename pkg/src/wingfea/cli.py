"""Command-line entry point: ``wingfea {plan,geom,run,sweep,analyze}``.

Every flag can also come from an environment variable named ``WINGFEA_``
plus the flag in upper case with dashes as underscores (for example
``WINGFEA_KB_PATH``). Exit codes: 0 success, 1 validation error,
2 runtime failure, 3 partial sweep.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .errors import (
    CapacityError,
    CodeError,
    GeometryError,
    NoMatchError,
    ParseError,
    RangeError,
    SchemaError,
    UnitError,
    UnknownLocationError,
    WingFeaError,
)

ENV_PREFIX = "WINGFEA_"
EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_PARTIAL = 0, 1, 2, 3
VALIDATION_ERRORS = (SchemaError, UnitError, ParseError, RangeError, CapacityError, CodeError, GeometryError,
                     UnknownLocationError, NoMatchError, ValueError, FileNotFoundError, json.JSONDecodeError)
logger = logging.getLogger("wingfea")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _env(name: str, default=None, kind=str):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return default
    if kind is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return kind(raw)


def _add(p, flag, kind=str, default=None, **kw):
    name = flag.lstrip("-")
    if kind is bool:
        p.add_argument(flag, action="store_true", default=_env(name, False, bool), **kw)
    else:
        p.add_argument(flag, type=kind, default=_env(name, default, kind), **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wingfea", description="Parametric wing FEA pipeline")
    parser.add_argument("--version", action="version", version=f"wingfea {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("plan", help="turn a plain-language request into a spec document")
    p.add_argument("request", help="request text, or @file to read it from a file")
    _add(p, "--out", help="write the spec here instead of stdout")
    _add(p, "--kb-path")

    p = sub.add_parser("geom", help="build the geometry and export its surface")
    _add(p, "--spec")
    _add(p, "--out", default="out")
    _add(p, "--kb-path")

    p = sub.add_parser("run", help="run one configuration end to end")
    _add(p, "--spec")
    _add(p, "--out", default="out")
    _add(p, "--deck-only", bool)
    _add(p, "--calculix-bin")
    _add(p, "--kb-path")

    p = sub.add_parser("sweep", help="expand the sweep and run every configuration")
    _add(p, "--spec")
    _add(p, "--out", default="out")
    _add(p, "--workers", int)
    _add(p, "--batch-max", int, 16)
    _add(p, "--mem-per-case", float, help="bytes per case; measured on the first case when omitted")
    _add(p, "--limit", int)
    _add(p, "--resume", bool)
    _add(p, "--follow", bool)
    _add(p, "--calculix-bin")
    _add(p, "--kb-path")

    p = sub.add_parser("analyze", help="Pareto, sensitivity and fatigue report for a dataset")
    p.add_argument("dataset", nargs="?", default=_env("dataset"))
    _add(p, "--spec", help="spec for material and objectives (default: spec.json beside the dataset)")
    _add(p, "--out")
    p.add_argument("--objective", action="append", default=None,
                   help="'minimize mass' style objective; repeat for more")
    _add(p, "--kb-path")
    return parser


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _kb(path):
    from .knowledge import KnowledgeBase

    return KnowledgeBase.open(path) if path else KnowledgeBase.seeded()


def _load_spec(path, kb):
    from .spec import parse_spec

    if not path:
        raise UsageError("--spec is required")
    text = Path(path).read_text(encoding="utf-8")
    return parse_spec(text, kb)


def _validate(spec):
    from .spec import validate_spec

    report = validate_spec(spec)
    for w in report.warnings:
        logger.warning("%s", w)
    if not report.ok:
        raise SchemaError("; ".join(report.errors))


def write_run_manifest(out_dir: Path, command: str, spec_path, spec) -> Path:
    """Provenance record written once, before any case starts."""
    from .pipeline import write_json
    from .spec import spec_hash

    path = out_dir / "run_manifest.json"
    doc = {
        "command": command,
        "spec_path": str(spec_path),
        "spec_hash": spec_hash(spec),
        "output_directory": str(out_dir),
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "tool_version": __version__,
    }
    if path.exists():
        path.unlink()
    return write_json(path, doc)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_plan(args) -> int:
    from .planner import plan_request

    text = args.request
    if text.startswith("@"):
        text = Path(text[1:]).read_text(encoding="utf-8")
    doc = plan_request(text, _kb(args.kb_path))
    out = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    return EXIT_OK


def cmd_geom(args) -> int:
    from .geometry import build_model, write_stl
    from .pipeline import write_json
    from .spec import spec_to_document

    spec = _load_spec(args.spec, _kb(args.kb_path))
    model = build_model(spec.geometry)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_stl(model, out / "surface.stl")
    summary = model.summary()
    write_json(out / "geometry.json", {"model": summary, "geometry": spec_to_document(spec)["geometry"]})
    print(json.dumps({"surface": str(out / "surface.stl"), "sha256": _sha256(out / "surface.stl"), **summary},
                     indent=2, default=str))
    return EXIT_OK


def cmd_run(args) -> int:
    from .pipeline import run_case

    kb = _kb(args.kb_path)
    spec = _load_spec(args.spec, kb)
    _validate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_run_manifest(out, "run", args.spec, spec)
    metrics = run_case(spec, out, deck_only=args.deck_only, calculix_bin=args.calculix_bin, write_surface=True)
    if args.deck_only:
        print(json.dumps({"deck": str(out / "case.inp")}))
        return EXIT_OK
    print(json.dumps(metrics, indent=2))
    if metrics.get("converged") and args.kb_path:
        kb.record_success(spec, metrics)
    return EXIT_OK if metrics.get("converged") else EXIT_RUNTIME


def cmd_sweep(args) -> int:
    from .orchestrator import ResourceEnvelope, default_envelope, estimate_case_memory, plan_batch, run_sweep, sweep_id
    from .spec import document_json, expand_parameter_space

    kb = _kb(args.kb_path)
    spec = _load_spec(args.spec, kb)
    _validate(spec)
    configs = expand_parameter_space(spec.sweep)
    if args.limit is not None:
        configs = configs[: max(args.limit, 0)]
    if not configs:
        raise UsageError("--limit leaves no configurations")
    root = Path(args.out) / sweep_id(spec, configs)
    root.mkdir(parents=True, exist_ok=True)
    write_run_manifest(root, "sweep", args.spec, spec)
    (root / "spec.json").write_text(document_json(spec), encoding="utf-8")
    print(json.dumps({"sweep_dir": str(root), "configurations": len(configs)}), flush=True)

    def follow(o):
        if args.follow:
            print(json.dumps({"index": o.index, "status": o.status, "attempts": o.attempts,
                              "wall_time": round(o.wall_time, 3), "reason": o.reason}), flush=True)

    common = dict(on_outcome=follow, options={"calculix_bin": args.calculix_bin},
                  kb=kb if args.kb_path else None)
    resume = args.resume
    mem = args.mem_per_case
    if mem is None:
        # measure on the first case, run alone, then size the pool
        first = run_sweep(spec, configs[:1], root, batch_size=1, resume=resume, **common)
        resume = True
        nodes = _first_case_nodes(root, configs[0].index)
        mem = estimate_case_memory(nodes) if nodes else 2**30
        if len(configs) == 1:
            return _sweep_exit(first)
    workers = args.workers or os.cpu_count() or 1
    env = default_envelope(mem, args.batch_max, workers) if args.workers is None else ResourceEnvelope(
        default_envelope(mem).m_available, mem, workers, args.batch_max)
    batch = plan_batch(env)
    logger.info("batch size %d (memory per case %.3g bytes)", batch, mem)
    ds = run_sweep(spec, configs, root, batch_size=batch, resume=resume, **common)
    print(json.dumps({"dataset": str(root / "dataset.json"), **ds.stats}, indent=2))
    return _sweep_exit(ds)


def _first_case_nodes(root: Path, index: int) -> int | None:
    path = root / f"case_{index}" / "mesh.json"
    if not path.exists():
        return None
    return int(json.loads(path.read_text())["summary"]["nodes"])


def _sweep_exit(ds) -> int:
    failed = ds.stats.get("failed", 0)
    if ds.stats.get("converged", 0) == 0:
        return EXIT_RUNTIME
    return EXIT_PARTIAL if failed or ds.meta.get("terminated_early") else EXIT_OK


def cmd_analyze(args) -> int:
    from .analysis import DEFAULT_OBJECTIVES, analyze, write_report
    from .knowledge import AL7075_T6
    from .orchestrator import SweepDataset
    from .plotting import render_report
    from .spec import parse_objective

    if not args.dataset:
        raise UsageError("a dataset path is required")
    path = Path(args.dataset)
    if path.is_dir():
        path = path / "dataset.json"
    if not path.exists():
        raise UsageError(f"dataset {path} does not exist")
    ds = SweepDataset.load(path)
    spec_path = Path(args.spec) if args.spec else path.parent / "spec.json"
    material, objectives = AL7075_T6, list(DEFAULT_OBJECTIVES)
    if spec_path.exists():
        spec = _load_spec(spec_path, _kb(args.kb_path))
        material = spec.material
        if len(spec.data_analysis.objectives) >= 2:
            objectives = list(spec.data_analysis.objectives)
    if args.objective:
        objectives = [parse_objective(o) for o in args.objective]
    report = analyze(ds, material, objectives)
    out = Path(args.out) if args.out else path.parent
    paths = write_report(report, out)
    paths.update(render_report(report, ds.records(), out))
    print(json.dumps({"front_size": len(report.front), "census": report.census,
                      "files": {k: str(v) for k, v in sorted(paths.items())}}, indent=2))
    return EXIT_OK


COMMANDS = {"plan": cmd_plan, "geom": cmd_geom, "run": cmd_run, "sweep": cmd_sweep, "analyze": cmd_analyze}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_VALIDATION
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except VALIDATION_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (WingFeaError, OSError, RuntimeError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
