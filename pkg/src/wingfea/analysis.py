"""Pareto fronts, Pearson sensitivities, S-N fatigue with Miner damage and safety factors."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import DegenerateError, NoDataError
from .solver import GAG_STEPS

INFINITE_LIFE_REPORT = 1e8
BANDS = ("infinite", "finite", "redesign")


def _records(data) -> list[dict]:
    """Converged metrics records from a SweepDataset or a list of records."""
    if hasattr(data, "records"):
        return data.records()
    return [r for r in data if r.get("converged", True)]


# --------------------------------------------------------------------------
# Pareto front
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ParetoPoint:
    index: int
    objectives: tuple[float, ...]
    dominated: bool = False


def _signed(objectives, senses) -> np.ndarray:
    sign = np.array([-1.0 if s == "maximize" else 1.0 for s in senses])
    return np.asarray(objectives, dtype=float) * sign


def non_dominated(values) -> np.ndarray:
    """Boolean mask of rows not dominated under minimization.

    Rows are visited in lexicographic order: a dominating row always sorts
    first, so each candidate is only compared with the front built so far.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("objective values must form a 2-D array")
    order = np.lexsort(v.T[::-1])
    front: list[int] = []
    mask = np.zeros(len(v), dtype=bool)
    for i in order:
        if front:
            f = v[front]
            dominated = np.any(np.all(f <= v[i], axis=1) & np.any(f < v[i], axis=1))
            if dominated:
                continue
        front.append(i)
        mask[i] = True
    return mask


def pareto_front(data, objectives) -> list[ParetoPoint]:
    """Front members sorted by the first objective (then index).

    ``objectives`` is a list of ``(sense, metric)`` pairs; records lacking a
    metric are skipped.
    """
    objectives = list(objectives)
    if len(objectives) < 2:
        raise ValueError("a Pareto front needs at least two objectives")
    senses = [s for s, _ in objectives]
    names = [m for _, m in objectives]
    rows = [r for r in _records(data) if all(r.get(m) is not None for m in names)]
    if not rows:
        raise NoDataError("no converged case carries the requested objectives")
    raw = np.array([[float(r[m]) for m in names] for r in rows])
    mask = non_dominated(_signed(raw, senses))
    points = [ParetoPoint(int(rows[i].get("case_index", i)), tuple(raw[i].tolist())) for i in np.nonzero(mask)[0]]
    return sorted(points, key=lambda p: (p.objectives[0], p.index))


# --------------------------------------------------------------------------
# sensitivity
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Correlation:
    parameter: str
    metric: str
    r: float | None
    p_value: float | None
    n: int
    error: str | None = None


def pearson(x, y) -> tuple[float, float]:
    """Pearson r and the two-sided p-value from Student's t with n-2 DOF."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n != len(y):
        raise ValueError("samples differ in length")
    if n - 2 <= 0:
        raise DegenerateError(f"need at least 3 samples, got {n}")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0 or not np.isfinite(sxx * syy):
        raise DegenerateError("zero variance: correlation undefined")
    r = float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, float(2.0 * stats.t.sf(abs(t), n - 2))


def _numeric(value) -> float:
    if isinstance(value, str):
        raise DegenerateError(f"categorical value {value!r} has no numeric encoding")
    return float(value)


def sensitivity(data, parameters, metrics) -> list[Correlation]:
    """Correlation table over converged cases; undefined entries carry an error, never NaN."""
    rows = _records(data)
    table = []
    for p in parameters:
        for m in metrics:
            pairs = [(r["params"].get(p), r.get(m)) for r in rows if r.get("params", {}).get(p) is not None
                     and r.get(m) is not None]
            try:
                x = [_numeric(a) for a, _ in pairs]
                y = [float(b) for _, b in pairs]
                r, pv = pearson(x, y)
                table.append(Correlation(p, m, r, pv, len(pairs)))
            except DegenerateError as exc:
                table.append(Correlation(p, m, None, None, len(pairs), f"DegenerateError: {exc}"))
    return table


# --------------------------------------------------------------------------
# fatigue
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SnCurve:
    """Basquin line through two (cycles, amplitude) anchors, flat below the fatigue limit."""

    fatigue_limit: float = 160e6
    limit_cycles: float = 1e7
    low_cycle_amplitude: float = 450e6
    low_cycle_cycles: float = 1e3
    redesign_amplitude: float = 300e6

    def __post_init__(self):
        if not (self.fatigue_limit > 0 and self.limit_cycles > 0):
            raise ValueError("fatigue limit and its cycle count must be positive")
        if not (self.low_cycle_amplitude > self.fatigue_limit and 0 < self.low_cycle_cycles < self.limit_cycles):
            raise ValueError("low-cycle anchor must sit above and left of the fatigue limit")

    @classmethod
    def for_material(cls, material, **overrides) -> "SnCurve":
        kw = {}
        if getattr(material, "fatigue_limit", None):
            kw["fatigue_limit"] = material.fatigue_limit
        if getattr(material, "fatigue_limit_cycles", None):
            kw["limit_cycles"] = material.fatigue_limit_cycles
        kw.update(overrides)
        return cls(**kw)

    @property
    def exponent(self) -> float:
        """Slope k in N = N_e (sigma_e / sigma_a)^k."""
        return math.log(self.limit_cycles / self.low_cycle_cycles) / math.log(
            self.low_cycle_amplitude / self.fatigue_limit
        )

    def cycles(self, amplitude: float) -> float:
        """Cycles to failure at ``amplitude``; infinite below the fatigue limit."""
        if amplitude < self.fatigue_limit:
            return math.inf
        return self.limit_cycles * (self.fatigue_limit / amplitude) ** self.exponent


def life_band(amplitude: float, sn: SnCurve) -> str:
    if amplitude < sn.fatigue_limit:
        return "infinite"
    if amplitude > sn.redesign_amplitude:
        return "redesign"
    return "finite"


@dataclass(frozen=True)
class FatigueAssessment:
    amplitude: float
    cycles: float  # math.inf for infinite life
    damage_per_mission: float
    life_class: str
    missions_to_failure: float
    damage_all_steps: float

    @property
    def fails(self) -> bool:
        return self.damage_per_mission >= 1.0

    def as_dict(self) -> dict:
        d = asdict(self)
        for k in ("cycles", "missions_to_failure"):
            if math.isinf(d[k]):
                d[k] = None
        d["cycles_reported"] = f">{INFINITE_LIFE_REPORT:.0e}" if math.isinf(self.cycles) else d["cycles"]
        return d


def miner_damage(amplitudes, sn: SnCurve, counts=None) -> float:
    counts = [1.0] * len(amplitudes) if counts is None else counts
    return float(sum(n / sn.cycles(a) for a, n in zip(amplitudes, counts)))


def fatigue_life(per_step_max, sn: SnCurve | None = None, gag_steps=GAG_STEPS) -> FatigueAssessment:
    """Pulsating (R=0) assessment: amplitude is half the worst step maximum.

    One mission is one pass through the GAG steps with one cycle each.
    """
    sn = sn or SnCurve()
    per_step = [float(s) for s in per_step_max]
    if not per_step:
        raise ValueError("no step stresses given")
    amplitude = max(per_step) / 2.0
    gag = [per_step[i - 1] / 2.0 for i in gag_steps if i - 1 < len(per_step)]
    damage = miner_damage(gag, sn)
    missions = 1.0 / damage if damage > 0 else math.inf
    return FatigueAssessment(
        amplitude=amplitude,
        cycles=sn.cycles(amplitude),
        damage_per_mission=damage,
        life_class=life_band(amplitude, sn),
        missions_to_failure=missions,
        damage_all_steps=miner_damage([s / 2.0 for s in per_step], sn),
    )


def safety_factor(sigma_max: float, material) -> float:
    """Yield strength over peak stress; ``material`` may be a record or a number."""
    if not sigma_max > 0:
        raise ValueError("peak stress must be positive")
    yield_strength = getattr(material, "yield_strength", material)
    return float(yield_strength) / float(sigma_max)


def classify_design(assessment: FatigueAssessment, sf: float | None) -> dict:
    return {
        "band": assessment.life_class,
        "safety_factor": sf,
        "yields": sf is not None and sf < 1.0,
        **assessment.as_dict(),
    }


def band_census(entries) -> dict:
    """Counts and percentages per band; percentages are rounded to two decimals."""
    counts = {b: 0 for b in BANDS}
    for e in entries:
        counts[e["band"]] += 1
    total = sum(counts.values())
    pct = {b: round(100.0 * c / total, 2) if total else 0.0 for b, c in counts.items()}
    return {"total": total, "counts": counts, "percent": pct}


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------

DEFAULT_OBJECTIVES = (("minimize", "mass_kg"), ("minimize", "max_vm_stress_pa"))
SENSITIVITY_METRICS = ("mass_kg", "max_vm_stress_pa", "max_disp_m")


@dataclass
class AnalysisReport:
    objectives: list
    front: list[ParetoPoint]
    correlations: list[Correlation]
    fatigue: list[dict]
    census: dict
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "objectives": [list(o) for o in self.objectives],
            "front": [{"case_index": p.index, "objectives": list(p.objectives)} for p in self.front],
            "correlations": [asdict(c) for c in self.correlations],
            "fatigue": self.fatigue,
            "census": self.census,
            "meta": self.meta,
        }


def analyze(data, material, objectives=DEFAULT_OBJECTIVES, parameters=None, metrics=SENSITIVITY_METRICS,
            sn: SnCurve | None = None) -> AnalysisReport:
    rows = _records(data)
    if not rows:
        raise NoDataError("dataset holds no converged cases")
    sn = sn or SnCurve.for_material(material)
    if parameters is None:
        parameters = sorted({k for r in rows for k, v in r.get("params", {}).items() if not isinstance(v, str)})
    front = pareto_front(rows, objectives)
    correlations = sensitivity(rows, parameters, metrics) if len(rows) >= 3 else [
        Correlation(p, m, None, None, len(rows), "DegenerateError: need at least 3 samples")
        for p in parameters for m in metrics
    ]
    fatigue = []
    for r in rows:
        per_step = r.get("per_step_max_vm_pa")
        if not per_step:
            continue
        a = fatigue_life(per_step, sn)
        sf = safety_factor(r["max_vm_stress_pa"], material) if r.get("max_vm_stress_pa", 0) > 0 else None
        fatigue.append({"case_index": r.get("case_index"), "params": r.get("params", {}), **classify_design(a, sf)})
    meta = {
        "sn_curve": asdict(sn),
        "miner_steps": list(GAG_STEPS),
        "miner_alternative": "damage_all_steps counts every spectrum step once per mission",
        "cases": len(rows),
    }
    return AnalysisReport(list(objectives), front, correlations, fatigue, band_census(fatigue), meta)


def write_report(report: AnalysisReport, out_dir) -> dict[str, Path]:
    """analysis_report.json plus CSV tables for the front, correlations and fatigue records."""
    from .pipeline import write_json

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"report": write_json(out_dir / "analysis_report.json", report.as_dict())}
    names = [m for _, m in report.objectives]
    paths["front"] = _write_csv(out_dir / "pareto_front.csv", ["case_index", *names],
                                [[p.index, *p.objectives] for p in report.front])
    paths["correlations"] = _write_csv(out_dir / "correlations.csv", ["parameter", "metric", "r", "p_value", "n", "error"],
                                       [[c.parameter, c.metric, c.r, c.p_value, c.n, c.error] for c in report.correlations])
    paths["fatigue"] = _write_csv(
        out_dir / "fatigue.csv",
        ["case_index", "band", "amplitude", "cycles", "damage_per_mission", "safety_factor"],
        [[f["case_index"], f["band"], f["amplitude"], f["cycles"], f["damage_per_mission"], f["safety_factor"]]
         for f in report.fatigue],
    )
    return paths


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return path
