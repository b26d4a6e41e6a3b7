"""Sweep execution: batch sizing, isolated case runs, retries and streaming aggregation."""
from __future__ import annotations

import json
import logging
import math
import os
import shutil
import signal
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (
    InsufficientMemoryError,
    MeshQualityError,
    NonConvergenceError,
    ResolutionError,
    WingFeaError,
)
from .mesher import upgrade_level
from .spec import AnalysisSpec, ConfigurationPoint, apply_configuration, spec_hash

logger = logging.getLogger(__name__)

MAX_RETRIES = 2
TOLERANCE_RELAX = 10.0
STAT_FIELDS = ("mass_kg", "max_vm_stress_pa", "max_disp_m")
OK_STATUSES = ("ok", "retried_ok")
# bytes per free DOF: ~81 stiffness entries per row at 12 bytes, times headroom
# for the preconditioner hierarchy, the extracted free block and work vectors
BYTES_PER_DOF = 81 * 12 * 8


@dataclass(frozen=True)
class ResourceEnvelope:
    m_available: float
    m_per_case: float
    n_cores: int
    b_max: int

    def __post_init__(self):
        for name in ("m_available", "m_per_case", "n_cores", "b_max"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"resource envelope field {name} must be positive, got {v}")


def plan_batch(env: ResourceEnvelope) -> int:
    """Concurrent case count: memory-bound, core-bound and capped."""
    by_memory = math.floor(env.m_available / env.m_per_case)
    if by_memory == 0:
        raise InsufficientMemoryError(
            f"{env.m_available:.3g} bytes available cannot hold one case of {env.m_per_case:.3g} bytes"
        )
    return int(min(by_memory, env.n_cores, env.b_max))


def available_memory() -> int:
    try:
        return os.sysconf("SC_AVPHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return 2**31


def estimate_case_memory(n_nodes: int) -> int:
    """Working-set proxy for a solve on ``n_nodes`` nodes."""
    return int(3 * n_nodes * BYTES_PER_DOF)


def default_envelope(m_per_case: float, b_max: int = 16, workers: int | None = None) -> ResourceEnvelope:
    cores = workers or os.cpu_count() or 1
    return ResourceEnvelope(available_memory(), m_per_case, cores, b_max)


# --------------------------------------------------------------------------
# outcomes
# --------------------------------------------------------------------------

@dataclass
class CaseOutcome:
    index: int
    params: dict
    status: str  # ok | failed | retried_ok
    attempts: int
    metrics: dict | None = None
    reason: str | None = None
    wall_time: float = 0.0
    adjustments: list = field(default_factory=list)

    def __post_init__(self):
        if self.status == "retried_ok" and self.attempts < 2:
            raise ValueError("retried_ok requires at least two attempts")

    @property
    def ok(self) -> bool:
        return self.status in OK_STATUSES

    def to_record(self) -> dict:
        return asdict(self)

    @classmethod
    def from_record(cls, rec: dict) -> "CaseOutcome":
        return cls(**{k: rec.get(k) for k in ("index", "params", "status", "attempts", "metrics", "reason")},
                   wall_time=rec.get("wall_time", 0.0), adjustments=rec.get("adjustments", []))


@dataclass
class SweepDataset:
    outcomes: list[CaseOutcome]
    parameters: dict = field(default_factory=dict)  # name -> value list
    stats: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return len(self.outcomes)

    @property
    def converged(self) -> list[CaseOutcome]:
        return [o for o in self.outcomes if o.ok and o.metrics and o.metrics.get("converged")]

    @property
    def convergence_rate(self) -> float:
        return len(self.converged) / self.total if self.total else 0.0

    def records(self) -> list[dict]:
        """Metrics records of converged cases, in index order."""
        return [o.metrics for o in self.converged]

    def to_dict(self) -> dict:
        return {
            "outcomes": [o.to_record() for o in self.outcomes],
            "parameters": self.parameters,
            "stats": self.stats,
            "meta": self.meta,
        }

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "SweepDataset":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepDataset":
        outcomes = [CaseOutcome.from_record(r) for r in doc.get("outcomes", [])]
        return cls(outcomes, doc.get("parameters", {}), doc.get("stats", {}), doc.get("meta", {}))


def aggregate(outcomes, parameters: dict | None = None, meta: dict | None = None) -> SweepDataset:
    """Order outcomes by index and summarize every numeric metric over converged cases.

    Statistics use the population standard deviation; the coefficient of
    variation is None when the mean is zero.
    """
    ordered = sorted(outcomes, key=lambda o: o.index)
    indices = [o.index for o in ordered]
    if len(set(indices)) != len(indices):
        raise ValueError("duplicate configuration index among outcomes")
    ds = SweepDataset(ordered, dict(parameters or {}), {}, dict(meta or {}))
    stats = {}
    records = ds.records()
    for name in STAT_FIELDS:
        values = np.array([r[name] for r in records if r.get(name) is not None], dtype=float)
        if len(values) == 0:
            continue
        mean = float(values.mean())
        std = float(values.std())
        stats[name] = {
            "count": int(len(values)),
            "min": float(values.min()),
            "max": float(values.max()),
            "mean": mean,
            "std": std,
            "cv": std / abs(mean) if mean != 0 else None,
        }
    ds.stats = {
        "metrics": stats,
        "total": ds.total,
        "converged": len(records),
        "failed": sum(o.status == "failed" for o in ordered),
        "retried_ok": sum(o.status == "retried_ok" for o in ordered),
        "convergence_rate": ds.convergence_rate,
    }
    return ds


# --------------------------------------------------------------------------
# retries
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RetryDecision:
    retry: bool
    level: str | None = None
    tolerance: float | None = None
    note: str = ""


def retry_policy(attempts: int, error: BaseException, level: str, tolerance: float,
                 tolerance_relaxed: bool = False, max_retries: int = MAX_RETRIES) -> RetryDecision:
    """Decide the next attempt after ``attempts`` failed tries ending in ``error``."""
    if attempts >= max_retries:
        return RetryDecision(False, note=f"gave up after {attempts} attempts")
    if isinstance(error, (ResolutionError, MeshQualityError)):
        nxt = upgrade_level(level)
        if nxt is None:
            return RetryDecision(False, note=f"no mesh level above {level}")
        return RetryDecision(True, nxt, tolerance, f"mesh level {level} -> {nxt}")
    if isinstance(error, NonConvergenceError) and not tolerance_relaxed:
        looser = tolerance * TOLERANCE_RELAX
        return RetryDecision(True, level, looser, f"solver tolerance {tolerance:g} -> {looser:g} (relaxed)")
    return RetryDecision(False, note=f"{type(error).__name__} is not retryable")


# --------------------------------------------------------------------------
# case execution
# --------------------------------------------------------------------------

def default_runner(spec: AnalysisSpec, case_dir: Path, level: str, tolerance: float, options: dict) -> dict:
    from .pipeline import run_case

    return run_case(spec, case_dir, case_index=options["index"], params=options["params"], level=level,
                    tol=tolerance, calculix_bin=options.get("calculix_bin"))


def execute_case(spec: AnalysisSpec, point: ConfigurationPoint, case_dir, runner=None,
                 options: dict | None = None, max_retries: int = MAX_RETRIES) -> CaseOutcome:
    """Run one configuration with the retry policy; never raises for case errors."""
    runner = runner or default_runner
    case_dir = Path(case_dir)
    t0 = time.perf_counter()
    params = dict(point.values)
    opts = {**(options or {}), "index": point.index, "params": params}
    adjustments = []
    try:
        case_spec = apply_configuration(spec, point)
    except WingFeaError as exc:
        return CaseOutcome(point.index, params, "failed", 1, None, f"{type(exc).__name__}: {exc}",
                           time.perf_counter() - t0)
    level, tolerance, relaxed = case_spec.mesh.density, case_spec.analysis.tolerance, False
    attempts = 0
    while True:
        attempts += 1
        try:
            metrics = runner(case_spec, case_dir, level, tolerance, opts)
        except Exception as exc:  # noqa: BLE001 - any case failure is recorded, not raised
            reason = f"{type(exc).__name__}: {exc}"
            decision = retry_policy(attempts, exc, level, tolerance, relaxed, max_retries)
            if not decision.retry:
                return CaseOutcome(point.index, params, "failed", attempts, None, reason,
                                   time.perf_counter() - t0, adjustments + [decision.note])
            adjustments.append(decision.note)
            relaxed = relaxed or decision.tolerance != tolerance
            level, tolerance = decision.level, decision.tolerance
            continue
        if relaxed:
            metrics = {**metrics, "tolerance_relaxed": True}
        status = "ok" if attempts == 1 else "retried_ok"
        return CaseOutcome(point.index, params, status, attempts, metrics, None, time.perf_counter() - t0, adjustments)


def _worker(args):
    spec, point, case_dir, runner, options, max_retries = args
    return execute_case(spec, point, case_dir, runner, options, max_retries)


def sweep_id(spec: AnalysisSpec, configurations) -> str:
    import hashlib

    h = hashlib.sha256(spec_hash(spec).encode())
    for p in configurations:
        h.update(json.dumps([p.index, p.values], sort_keys=True, default=str).encode())
    return "sweep-" + h.hexdigest()[:12]


def read_outcomes(path) -> dict[int, CaseOutcome]:
    """Last record per index from an outcome stream file."""
    out: dict[int, CaseOutcome] = {}
    path = Path(path)
    if not path.exists():
        return out
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            try:
                o = CaseOutcome.from_record(json.loads(line))
            except (ValueError, TypeError, KeyError):
                continue
            out[o.index] = o
    return out


class _Drain:
    """SIGINT/SIGTERM set a flag: no new cases start, in-flight cases finish."""

    def __init__(self):
        self.event = threading.Event()
        self._saved = {}

    def __enter__(self):
        if threading.current_thread() is threading.main_thread():
            for sig in (signal.SIGINT, signal.SIGTERM):
                self._saved[sig] = signal.signal(sig, self._handle)
        return self

    def _handle(self, signum, frame):
        logger.warning("signal %s received; draining in-flight cases", signum)
        self.event.set()

    def __exit__(self, *exc):
        for sig, handler in self._saved.items():
            signal.signal(sig, handler)
        return False


def run_sweep(spec: AnalysisSpec, configurations, out_dir, *, batch_size: int | None = None,
              env: ResourceEnvelope | None = None, runner: Callable | None = None, resume: bool = False,
              on_outcome: Callable[[CaseOutcome], None] | None = None,
              stop_when: Callable[[list[CaseOutcome]], bool] | None = None,
              options: dict | None = None, kb=None, max_retries: int = MAX_RETRIES) -> SweepDataset:
    """Execute ``configurations`` with at most B cases in flight and return the ordered dataset.

    Each case runs in ``out_dir/case_<index>``; outcomes are appended to
    ``outcomes.jsonl`` as they complete and ``manifest.json`` tracks status.
    With ``resume`` the cases already finished successfully are reused.
    ``stop_when`` sees the outcomes so far and may end the sweep early.
    """
    configurations = list(configurations)
    if not configurations:
        raise ValueError("no configurations to run")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stream = out_dir / "outcomes.jsonl"
    done: dict[int, CaseOutcome] = {}
    if resume:
        done = {i: o for i, o in read_outcomes(stream).items() if o.ok}
    elif stream.exists():
        stream.unlink()

    if batch_size is None:
        batch_size = plan_batch(env) if env is not None else 1
    if batch_size < 1:
        raise ValueError("batch size must be at least 1")
    manifest = _Manifest(out_dir / "manifest.json", spec, configurations, batch_size)
    for o in done.values():
        manifest.update(o)
    manifest.write()

    pending = [p for p in configurations if p.index not in done]
    collected = list(done.values())
    stopped = False

    def accept(o: CaseOutcome):
        nonlocal stopped
        collected.append(o)
        with open(stream, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(o.to_record(), sort_keys=True) + "\n")
        manifest.update(o)
        manifest.write()
        if kb is not None and not o.ok:
            case_spec = apply_configuration(spec, ConfigurationPoint(o.index, o.params))
            kb.record_failure(case_spec, o.reason or "unknown")
        if on_outcome is not None:
            on_outcome(o)
        if stop_when is not None and not stopped and stop_when(list(collected)):
            stopped = True

    def job(p):
        case_dir = out_dir / f"case_{p.index}"
        if case_dir.exists():
            shutil.rmtree(case_dir)
        return (spec, p, case_dir, runner, options, max_retries)

    with _Drain() as drain:
        if batch_size == 1:
            for p in pending:
                if stopped or drain.event.is_set():
                    break
                accept(_worker(job(p)))
        else:
            queue = list(pending)
            with ProcessPoolExecutor(max_workers=batch_size) as pool:
                running = set()
                while queue or running:
                    while queue and len(running) < batch_size and not stopped and not drain.event.is_set():
                        running.add(pool.submit(_worker, job(queue.pop(0))))
                    if not running:
                        break
                    finished, running = wait(running, return_when=FIRST_COMPLETED)
                    for fut in sorted(finished, key=lambda f: id(f)):
                        accept(fut.result())

    executed = {o.index for o in collected}
    meta = {
        "sweep_id": out_dir.name,
        "spec_hash": spec_hash(spec),
        "batch_size": batch_size,
        "configurations": len(configurations),
        "terminated_early": len(executed) < len(configurations),
        "interrupted": drain.event.is_set(),
    }
    parameters = {r.name: list(r.values) for r in spec.sweep}
    ds = aggregate(collected, parameters, meta)
    ds.save(out_dir / "dataset.json")
    manifest.write(finished=True)
    return ds


class _Manifest:
    def __init__(self, path: Path, spec: AnalysisSpec, configurations, batch_size: int):
        self.path = path
        previous = {}
        if path.exists():
            try:
                previous = json.loads(path.read_text(encoding="utf-8"))
            except ValueError:
                previous = {}
        self.doc = {
            "spec_hash": spec_hash(spec),
            "created": previous.get("created", time.strftime("%Y-%m-%dT%H:%M:%S%z")),
            "batch_size": batch_size,
            "configurations": [{"index": p.index, "params": p.values} for p in configurations],
            "cases": {str(p.index): {"status": "pending"} for p in configurations},
        }

    def update(self, o: CaseOutcome):
        self.doc["cases"][str(o.index)] = {"status": o.status, "attempts": o.attempts,
                                           "wall_time": o.wall_time, "reason": o.reason}

    def write(self, finished: bool = False):
        if finished:
            self.doc["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.doc, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
        os.replace(tmp, self.path)
