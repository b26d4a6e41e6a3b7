"""Single-case chain: geometry, mesh, deck, load spectrum and metrics."""
from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from .errors import MeshQualityError, SchemaError
from .geometry import build_model, write_stl
from .inp import calculix_binary, frd_displacements, run_calculix, write_inp
from .mesher import generate_mesh, validate_mesh
from .solver import extract_results, load_vector, run_load_spectrum
from .spec import AnalysisSpec, document_json, validate_spec

CROSSCHECK_TOLERANCE = 0.05


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n", encoding="utf-8")
    return path


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def ensure_valid(spec: AnalysisSpec) -> None:
    report = validate_spec(spec)
    if not report.ok:
        raise SchemaError("; ".join(report.errors))


def build_case_mesh(spec: AnalysisSpec, level: str | None = None):
    model = build_model(spec.geometry)
    mesh = generate_mesh(model, spec.mesh, level)
    quality = validate_mesh(mesh)
    if not quality.valid:
        raise MeshQualityError(f"mesh failed validity checks: {quality.as_dict()}")
    return model, mesh, quality


def run_case(spec: AnalysisSpec, workdir, *, case_index: int = 0, params: dict | None = None,
             level: str | None = None, tol: float | None = None, deck_only: bool = False,
             calculix_bin: str | None = None, write_surface: bool = False) -> dict:
    """Run one configuration inside ``workdir`` and return its metrics record.

    Files written: spec.json, case.inp, mesh.json, and (unless ``deck_only``)
    metrics.json and solve.json. Errors propagate to the caller.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    ensure_valid(spec)
    (workdir / "spec.json").write_text(document_json(spec), encoding="utf-8")
    t0 = time.perf_counter()
    model, mesh, quality = build_case_mesh(spec, level)
    if write_surface:
        write_stl(model, workdir / "surface.stl")
    t_mesh = time.perf_counter() - t0
    forces = load_vector(mesh, spec.loads, spec.material.density)
    deck = write_inp(mesh, spec.material, forces, spec.boundary_conditions, element_type=spec.mesh.element_type)
    (workdir / "case.inp").write_text(deck, encoding="ascii")
    write_json(workdir / "mesh.json", {"summary": mesh.summary(), "quality": quality.as_dict(),
                                       "model": model.summary(), "seconds": t_mesh})
    if deck_only:
        return {"case_index": int(case_index), "params": dict(params or {}), "converged": False, "deck_only": True}

    tolerance = spec.analysis.tolerance if tol is None else tol
    t1 = time.perf_counter()
    result = run_load_spectrum(mesh, spec.material, forces, spec.boundary_conditions,
                               tolerance, spec.analysis.max_iterations)
    t_solve = time.perf_counter() - t1
    metrics = extract_results(result, mesh, spec.material, spec.data_analysis.metrics, case_index, params, True)
    solve = {
        "iterations": result.baseline.iterations,
        "residual": result.baseline.residual,
        "tolerance": tolerance,
        "verification_step": result.verification_step,
        "verification_rel_error": result.verification_rel_error,
        "per_step_max_disp_m": result.per_step_max_disp,
        "seconds": t_solve,
        "level": mesh.level,
    }
    binary = calculix_binary(calculix_bin)
    if binary:
        solve["external"] = crosscheck_external(deck, workdir / "ccx", binary, result.baseline, mesh.n_nodes)
    write_json(workdir / "solve.json", solve)
    write_json(workdir / "metrics.json", metrics)
    return metrics


def crosscheck_external(deck: str, workdir, binary: str, baseline, n_nodes: int) -> dict:
    """Compare the external solver's step-1 displacements with the internal solution."""
    steps = run_calculix(deck, workdir, binary)
    u_ext = frd_displacements(steps[0]["DISP"], n_nodes)
    ref = float(np.linalg.norm(baseline.displacement, axis=1).max())
    ext = float(np.linalg.norm(u_ext, axis=1).max())
    rel = abs(ext - ref) / max(ref, 1e-300)
    return {"max_disp_internal_m": ref, "max_disp_external_m": ext, "rel_diff": rel,
            "agrees": rel <= CROSSCHECK_TOLERANCE}
