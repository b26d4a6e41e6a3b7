"""Structured analysis specifications: parsing, validation and sweep expansion."""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import itertools
import json
import logging
import math
import re
from dataclasses import dataclass, field

from . import units
from .errors import CapacityError, ParseError, RangeError, SchemaError, UnitError
from .geometry import SUPPORTED_LOCATIONS, normalize_location
from .knowledge import MaterialRecord

logger = logging.getLogger(__name__)

MESH_DENSITIES = ("ultra_fine", "fine", "medium", "coarse")
ELEMENT_TYPES = {
    "first_order_tet": "first_order_tet",
    "c3d4": "first_order_tet",
    "second_order_tet": "second_order_tet",
    "c3d10": "second_order_tet",
}
LOAD_KINDS = ("force", "pressure", "acceleration_factor")
AXES = ("X", "Y", "Z")
MAX_CONFIGURATIONS = 100_000

METRIC_ALIASES = {
    "stress": "max_vm_stress_pa",
    "von_mises_stress": "max_vm_stress_pa",
    "max_stress": "max_vm_stress_pa",
    "max_vm_stress_pa": "max_vm_stress_pa",
    "weight": "mass_kg",
    "mass": "mass_kg",
    "mass_kg": "mass_kg",
    "displacement": "max_disp_m",
    "deflection": "max_disp_m",
    "max_disp_m": "max_disp_m",
}
REQUESTABLE_METRICS = ("von_mises_stress", "displacement", "mass")
MODE_ALIASES = {
    "single": "single",
    "parametric": "parametric",
    "pareto": "pareto",
    "pareto_front": "pareto",
}

# sweepable parameter name -> (quantity kind, geometry field)
PARAMETERS = {
    "shell_thickness": ("length", "shell_thickness"),
    "spar_width": ("length", "spar_width"),
    "rib_thickness": ("length", "rib_thickness"),
    "spar_count": ("dimensionless", "spar_count"),
    "rib_count": ("dimensionless", "rib_count"),
    "chord": ("length", "chord"),
    "span": ("length", "span"),
    "mesh_density": ("label", None),
}
PARAMETER_ALIASES = {
    "shell_thickness": "shell_thickness",
    "shell": "shell_thickness",
    "skin_thickness": "shell_thickness",
    "spar_width": "spar_width",
    "spar_thickness": "spar_width",
    "rib_thickness": "rib_thickness",
    "rib_width": "rib_thickness",
    "spar_count": "spar_count",
    "number_of_spars": "spar_count",
    "spars": "spar_count",
    "n_spars": "spar_count",
    "rib_count": "rib_count",
    "number_of_ribs": "rib_count",
    "ribs": "rib_count",
    "n_ribs": "rib_count",
    "chord": "chord",
    "span": "span",
    "mesh_density": "mesh_density",
    "density": "mesh_density",
}


@dataclass
class LoadSpec:
    kind: str
    magnitude: float
    direction: tuple[str, int]
    location: str
    gain: float = 1.0


@dataclass
class BcSpec:
    kind: str
    location: str
    constrained_dofs: tuple[str, ...]


@dataclass
class MeshSpec:
    density: str = "medium"
    element_type: str = "first_order_tet"
    refinement_zones: tuple[str, ...] = ()


@dataclass
class AnalysisDirective:
    type: str = "static"
    solver: str = "CalculiX"
    tolerance: float = 1e-8
    max_iterations: int = 10_000


@dataclass
class DataAnalysisSpec:
    objectives: tuple[tuple[str, str], ...] = ()
    metrics: tuple[str, ...] = REQUESTABLE_METRICS
    mode: str = "single"


@dataclass
class GeometryParams:
    kind: str = "naca_wing"
    naca_code: str = "4412"
    chord: float = 0.2
    span: float = 0.2
    shell_thickness: float = 1.0e-3
    spar_count: int = 2
    spar_width: float = 1.0e-3
    rib_count: int = 2
    rib_thickness: float = 1.0e-3
    box_size: tuple[float, float, float] = (0.01, 0.01, 0.01)


@dataclass
class ParameterRange:
    name: str
    values: tuple
    unit: str = ""

    def __post_init__(self):
        self.values = tuple(self.values)
        if not self.values:
            raise RangeError(f"range {self.name!r} has no values")
        if all(_is_number(v) for v in self.values):
            if any(b <= a for a, b in zip(self.values, self.values[1:])):
                raise RangeError(f"range {self.name!r} values must be strictly increasing")

    @property
    def numeric(self) -> bool:
        return all(_is_number(v) for v in self.values)

    def si_value(self, value) -> float | str:
        kind = PARAMETERS.get(self.name, ("length", None))[0]
        if kind == "label" or not _is_number(value):
            return value
        if kind == "dimensionless":
            return int(value) if float(value).is_integer() else float(value)
        return units.to_si(value, kind, self.unit or None)


@dataclass(frozen=True)
class ConfigurationPoint:
    index: int
    values: dict

    def __hash__(self):
        return hash((self.index, tuple(sorted(self.values.items()))))


@dataclass
class AnalysisSpec:
    material: MaterialRecord
    loads: list[LoadSpec] = field(default_factory=list)
    boundary_conditions: list[BcSpec] = field(default_factory=list)
    mesh: MeshSpec = field(default_factory=MeshSpec)
    analysis: AnalysisDirective = field(default_factory=AnalysisDirective)
    data_analysis: DataAnalysisSpec = field(default_factory=DataAnalysisSpec)
    geometry: GeometryParams = field(default_factory=GeometryParams)
    sweep: list[ParameterRange] = field(default_factory=list)


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


# --------------------------------------------------------------------------
# document parsing
# --------------------------------------------------------------------------

def strip_comments(text: str) -> str:
    """Remove ``//`` line comments that sit outside JSON strings."""
    out = []
    for line in text.splitlines():
        in_str = False
        escaped = False
        cut = len(line)
        for i, ch in enumerate(line):
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_str = not in_str
            elif ch == "/" and not in_str and line[i + 1:i + 2] == "/":
                cut = i
                break
        out.append(line[:cut])
    return "\n".join(out)


_KNOWN_SECTIONS = {"material", "loads", "boundary_conditions", "mesh", "analysis", "data_analysis", "geometry", "sweep"}


def parse_spec(document, kb=None) -> AnalysisSpec:
    """Parse a JSON-shaped specification document into an :class:`AnalysisSpec`.

    ``document`` may be the raw text (``//`` comments allowed) or an already
    decoded mapping. Quantities are normalized to SI; omitted mesh and
    analysis fields take their defaults. Material properties missing from
    the document are filled from the knowledge base by name.
    """
    if isinstance(document, (str, bytes)):
        text = document.decode("utf-8") if isinstance(document, bytes) else document
        try:
            doc = json.loads(strip_comments(text))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"document is not well-formed: {exc}") from None
    else:
        doc = copy.deepcopy(document)
    if not isinstance(doc, dict):
        raise SchemaError("specification must be an object")
    for key in sorted(set(doc) - _KNOWN_SECTIONS):
        logger.warning("ignoring unknown section %r", key)
    for required in ("material", "loads", "boundary_conditions"):
        if required not in doc:
            raise SchemaError(f"missing required section {required!r}")

    spec = AnalysisSpec(
        material=_parse_material(doc["material"], kb),
        loads=[_parse_load(x) for x in _as_list(doc["loads"], "loads")],
        boundary_conditions=[_parse_bc(x) for x in _as_list(doc["boundary_conditions"], "boundary_conditions")],
        mesh=_parse_mesh(doc.get("mesh", {})),
        analysis=_parse_analysis(doc.get("analysis", {})),
        data_analysis=_parse_data_analysis(doc.get("data_analysis", {})),
        geometry=_parse_geometry(doc.get("geometry", {})),
        sweep=[_parse_range_entry(x) for x in _as_list(doc.get("sweep", []), "sweep")],
    )
    return spec


def _as_list(value, name):
    if not isinstance(value, list):
        raise SchemaError(f"section {name!r} must be a list")
    return value


def _section(value, name) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"section {name!r} must be an object")
    return value


def _warn_unknown(d: dict, allowed: set, where: str):
    for key in sorted(set(d) - allowed):
        logger.warning("ignoring unknown key %r in %s", key, where)


def _parse_material(raw, kb) -> MaterialRecord:
    d = _section(raw, "material")
    fields = {
        "youngs_modulus": "stress",
        "poissons_ratio": "dimensionless",
        "density": "density",
        "yield_strength": "stress",
        "fatigue_limit": "stress",
        "fatigue_limit_cycles": "dimensionless",
    }
    _warn_unknown(d, set(fields) | {"name"}, "material")
    values = {k: units.to_si(d[k], q) for k, q in fields.items() if k in d and d[k] is not None}
    name = str(d.get("name", "")).strip()
    required = ("youngs_modulus", "poissons_ratio", "density", "yield_strength")
    if any(k not in values for k in required):
        if not name:
            raise SchemaError("material needs a name or all of " + ", ".join(required))
        from .knowledge import KnowledgeBase

        base = (kb if kb is not None else KnowledgeBase.seeded()).lookup_material(name)
        merged = dataclasses.asdict(base)
        merged.update(values)
        merged["name"] = name
        return MaterialRecord(**merged)
    return MaterialRecord(name=name or "unnamed", **values)


def parse_direction(raw) -> tuple[str, int]:
    text = str(raw).strip().upper()
    sign = 1
    if text[:1] in "+-":
        sign = -1 if text[0] == "-" else 1
        text = text[1:]
    if text not in AXES:
        raise SchemaError(f"direction {raw!r} is not a unit axis")
    return text, sign


def _parse_load(raw) -> LoadSpec:
    d = _section(raw, "load")
    _warn_unknown(d, {"type", "magnitude", "direction", "location", "gain"}, "load")
    kind = str(d.get("type", "force")).strip().lower()
    if kind not in LOAD_KINDS:
        raise SchemaError(f"load type {kind!r} not in {LOAD_KINDS}")
    if "magnitude" not in d or "location" not in d:
        raise SchemaError("load needs magnitude and location")
    quantity = {"force": "force", "pressure": "pressure", "acceleration_factor": "load_factor"}[kind]
    return LoadSpec(
        kind=kind,
        magnitude=units.to_si(d["magnitude"], quantity),
        direction=parse_direction(d.get("direction", "Z")),
        location=str(d["location"]),
        gain=units.to_si(d.get("gain", 1.0), "dimensionless"),
    )


def _parse_bc(raw) -> BcSpec:
    d = _section(raw, "boundary condition")
    _warn_unknown(d, {"type", "location", "constraints"}, "boundary condition")
    kind = str(d.get("type", "fixed")).strip().lower()
    if kind != "fixed":
        raise SchemaError(f"boundary condition type {kind!r} unsupported (only 'fixed')")
    if "location" not in d:
        raise SchemaError("boundary condition needs a location")
    dofs = d.get("constraints", list(AXES))
    dofs = tuple(sorted({parse_direction(x)[0] for x in dofs}, key=AXES.index))
    return BcSpec(kind=kind, location=str(d["location"]), constrained_dofs=dofs)


def _parse_mesh(raw) -> MeshSpec:
    d = _section(raw, "mesh")
    _warn_unknown(d, {"density", "element_type", "refinement_zones"}, "mesh")
    density = str(d.get("density", "medium")).strip().lower().replace("-", "_")
    if density not in MESH_DENSITIES:
        raise SchemaError(f"mesh density {density!r} not in {MESH_DENSITIES}")
    etype = str(d.get("element_type", "first_order_tet")).strip().lower()
    if etype not in ELEMENT_TYPES:
        raise SchemaError(f"element type {etype!r} unsupported")
    zones = tuple(str(z) for z in d.get("refinement_zones", []))
    return MeshSpec(density=density, element_type=ELEMENT_TYPES[etype], refinement_zones=zones)


def _parse_analysis(raw) -> AnalysisDirective:
    d = _section(raw, "analysis")
    _warn_unknown(d, {"type", "solver", "tolerance", "max_iterations"}, "analysis")
    out = AnalysisDirective(
        type=str(d.get("type", "static")).strip().lower(),
        solver=str(d.get("solver", "CalculiX")),
        tolerance=float(d.get("tolerance", 1e-8)),
        max_iterations=int(d.get("max_iterations", 10_000)),
    )
    if not math.isfinite(out.tolerance):
        raise ValueError("non-finite solver tolerance")
    return out


def parse_objective(raw) -> tuple[str, str]:
    if isinstance(raw, dict):
        sense, metric = raw.get("sense", "minimize"), raw.get("metric", "")
    else:
        parts = str(raw).strip().lower().split()
        if len(parts) != 2:
            raise SchemaError(f"objective {raw!r} must read '<minimize|maximize> <metric>'")
        sense, metric = parts
    sense = str(sense).lower()
    if sense not in ("minimize", "maximize"):
        raise SchemaError(f"objective sense {sense!r} must be minimize or maximize")
    key = str(metric).lower()
    if key not in METRIC_ALIASES:
        raise SchemaError(f"unknown objective metric {metric!r}")
    return sense, METRIC_ALIASES[key]


def _parse_data_analysis(raw) -> DataAnalysisSpec:
    d = _section(raw, "data_analysis")
    _warn_unknown(d, {"objectives", "metrics", "optimization", "mode"}, "data_analysis")
    objectives = tuple(parse_objective(o) for o in d.get("objectives", []))
    metrics = tuple(str(m).strip().lower() for m in d.get("metrics", REQUESTABLE_METRICS))
    for m in metrics:
        if m not in REQUESTABLE_METRICS:
            raise SchemaError(f"unknown metric {m!r}; expected one of {REQUESTABLE_METRICS}")
    mode_raw = str(d.get("optimization", d.get("mode", "single"))).strip().lower()
    if mode_raw not in MODE_ALIASES:
        raise SchemaError(f"unknown analysis mode {mode_raw!r}")
    return DataAnalysisSpec(objectives=objectives, metrics=metrics, mode=MODE_ALIASES[mode_raw])


def _parse_geometry(raw) -> GeometryParams:
    d = _section(raw, "geometry")
    _warn_unknown(d, {"kind", "naca_code", "chord", "span", "shell_thickness", "spar", "rib", "size"}, "geometry")
    g = GeometryParams()
    g.kind = str(d.get("kind", g.kind))
    if "naca_code" in d:
        g.naca_code = str(d["naca_code"]).upper().removeprefix("NACA").strip()
    for key in ("chord", "span", "shell_thickness"):
        if key in d:
            setattr(g, key, units.to_si(d[key], "length"))
    spar = d.get("spar", {})
    if spar:
        g.spar_count = int(spar.get("count", g.spar_count))
        if "width" in spar:
            g.spar_width = units.to_si(spar["width"], "length")
    rib = d.get("rib", {})
    if rib:
        g.rib_count = int(rib.get("count", g.rib_count))
        if "thickness" in rib:
            g.rib_thickness = units.to_si(rib["thickness"], "length")
    if "size" in d:
        size = d["size"]
        if not isinstance(size, list) or len(size) != 3:
            raise SchemaError("geometry.size must list three lengths")
        g.box_size = tuple(units.to_si(s, "length") for s in size)
    if g.kind not in ("naca_wing", "box"):
        raise SchemaError(f"geometry kind {g.kind!r} unsupported")
    return g


def _parse_range_entry(raw) -> ParameterRange:
    if isinstance(raw, str):
        return parse_range_phrase(raw)
    d = _section(raw, "sweep entry")
    if "phrase" in d:
        return parse_range_phrase(d["phrase"])
    if "name" not in d:
        raise SchemaError("sweep entry needs a name")
    name = normalize_parameter(d["name"])
    unit = str(d.get("unit", ""))
    if "values" in d:
        return ParameterRange(name, tuple(d["values"]), unit)
    if all(k in d for k in ("from", "to", "step")):
        return ParameterRange(name, arange_inclusive(float(d["from"]), float(d["to"]), float(d["step"])), unit)
    raise SchemaError(f"sweep entry {name!r} needs 'values' or from/to/step")


# --------------------------------------------------------------------------
# ranges
# --------------------------------------------------------------------------

def normalize_parameter(name: str) -> str:
    key = re.sub(r"[\s\-]+", "_", name.strip().lower())
    return PARAMETER_ALIASES.get(key, key)


def arange_inclusive(start: float, stop: float, step: float) -> tuple[float, ...]:
    if not (math.isfinite(start) and math.isfinite(stop) and math.isfinite(step)):
        raise ValueError("non-finite range bound")
    if step <= 0:
        raise RangeError(f"step must be positive, got {step}")
    if stop < start:
        raise RangeError(f"range end {stop} is below its start {start}")
    # endpoint tolerance of 1e-9 steps keeps the last value despite rounding
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(units.clean(start + i * step) for i in range(count))


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_UNIT = r"[a-zA-Z]+"
_RANGE_RE = re.compile(
    rf"^\s*(?:(?P<name>[a-zA-Z][a-zA-Z _\-]*?)\s+)?from\s+(?P<a>{_NUM})\s*(?P<ua>{_UNIT})?"
    rf"\s+to\s+(?P<b>{_NUM})\s*(?P<ub>{_UNIT})?"
    rf"\s*,?\s+(?:in|with|step|by)\s+(?P<s>{_NUM})\s*(?P<us>{_UNIT})?(?:\s+steps?)?\s*\.?\s*$",
    re.IGNORECASE,
)
_KNOWN_UNIT = r"(?:mm|cm|m|in|kn|n|kpa|mpa|gpa|pa|g)"
_LIST_RE = re.compile(
    rf"^\s*(?P<name>[a-zA-Z][a-zA-Z _\-]*?)\s*(?:=|:|\bin\b|\bof\b)\s*[\{{\[]?\s*(?P<vals>[^\}}\]]+?)\s*[\}}\]]?(?:\s+(?P<unit>{_KNOWN_UNIT}))?\s*$",
    re.IGNORECASE,
)


def parse_range_phrase(phrase: str) -> ParameterRange:
    """Parse ``<name> from A to B [unit] in S [unit] steps`` or an explicit list.

    Explicit lists read ``<name> = a, b, c [unit]`` (``:``, ``in`` and
    ``of`` also work as separators; ``and`` may join the last item).
    """
    m = _RANGE_RE.match(phrase)
    if m:
        name = normalize_parameter(m.group("name") or "parameter")
        unit_names = [u for u in (m.group("ub"), m.group("ua"), m.group("us")) if u]
        unit = unit_names[0] if unit_names else ""
        a = _convert(float(m.group("a")), m.group("ua"), unit)
        b = _convert(float(m.group("b")), m.group("ub"), unit)
        s = _convert(float(m.group("s")), m.group("us"), unit)
        return ParameterRange(name, arange_inclusive(a, b, s), unit)
    m = _LIST_RE.match(phrase)
    if m:
        vals = m.group("vals")
        unit = m.group("unit") or ""
        items = [x.strip() for x in re.split(r"\s*(?:,|\band\b)\s*", vals) if x.strip()]
        if items and re.fullmatch(_NUM + _UNIT, items[-1]):
            number, unit = units.split_quantity(items[-1])
            items[-1] = repr(number)
        values = []
        for item in items:
            if re.fullmatch(_NUM, item):
                number = float(item)
                values.append(int(number) if number.is_integer() and "." not in item and "e" not in item.lower() else number)
            elif re.fullmatch(r"[A-Za-z_][\w\-]*", item):
                values.append(item)
            else:
                raise ParseError(f"cannot read value {item!r} in {phrase!r}")
        if not values:
            raise ParseError(f"no values in {phrase!r}")
        return ParameterRange(normalize_parameter(m.group("name")), tuple(values), unit)
    raise ParseError(f"phrase does not match the range grammar: {phrase!r}")


def _convert(value: float, unit: str | None, target: str) -> float:
    if not unit or not target or unit.lower() == target.lower():
        return value
    for table in (units.LENGTH, units.FORCE, units.STRESS):
        if unit.lower() in table and target.lower() in table:
            return value * table[unit.lower()] / table[target.lower()]
    raise UnitError(f"cannot convert {unit!r} to {target!r}")


def format_range(r: ParameterRange) -> str:
    """Render a range back into phrase form (inverse of parse_range_phrase)."""
    name = r.name.replace("_", " ")
    unit = r.unit
    vals = r.values
    if r.numeric and len(vals) >= 2 and all(isinstance(v, float) for v in vals):
        step = units.clean(vals[1] - vals[0])
        if step > 0 and arange_inclusive(vals[0], vals[-1], step) == tuple(vals):
            return f"{name} from {vals[0]!r} to {vals[-1]!r} {unit} in {step!r} {unit} steps".replace("  ", " ")
    body = ", ".join(repr(v) if _is_number(v) else str(v) for v in vals)
    return f"{name} = {{{body}}} {unit}".rstrip()


def expand_parameter_space(ranges, max_configurations: int = MAX_CONFIGURATIONS) -> list[ConfigurationPoint]:
    """Cartesian product of ``ranges``, indexed by lexicographic rank."""
    ranges = list(ranges)
    if not ranges:
        raise RangeError("no parameter ranges to expand")
    names = [r.name for r in ranges]
    if len(set(names)) != len(names):
        raise RangeError(f"duplicate parameter names in {names}")
    total = math.prod(len(r.values) for r in ranges)
    if total > max_configurations:
        raise CapacityError(f"{total} configurations exceed the limit of {max_configurations}")
    return [
        ConfigurationPoint(index=i, values=dict(zip(names, combo)))
        for i, combo in enumerate(itertools.product(*(r.values for r in ranges)))
    ]


def apply_configuration(spec: AnalysisSpec, point: ConfigurationPoint) -> AnalysisSpec:
    """Return a copy of ``spec`` with the point's parameter values substituted."""
    out = copy.deepcopy(spec)
    by_name = {r.name: r for r in spec.sweep}
    for name, value in point.values.items():
        if name not in PARAMETERS:
            raise SchemaError(f"parameter {name!r} is not sweepable")
        r = by_name.get(name) or ParameterRange(name, (value,))
        si = r.si_value(value)
        if name == "mesh_density":
            out.mesh.density = str(si)
        else:
            setattr(out.geometry, PARAMETERS[name][1], si)
    return out


# --------------------------------------------------------------------------
# validation and serialization
# --------------------------------------------------------------------------

def validate_spec(spec: AnalysisSpec) -> ValidationReport:
    report = ValidationReport()
    err, warn = report.errors.append, report.warnings.append
    mat = spec.material
    if not mat.youngs_modulus > 0:
        err("material: Young's modulus must be positive")
    if not 0 < mat.poissons_ratio < 0.5:
        err("material: Poisson's ratio must lie in (0, 0.5)")
    if not mat.density > 0:
        err("material: density must be positive")
    if not mat.yield_strength > 0:
        warn("material: yield strength is not positive, safety factor undefined")

    if not spec.loads:
        warn("no loads defined; the solution will be zero")
    for load in spec.loads:
        if not math.isfinite(load.magnitude):
            err(f"load at {load.location!r}: non-finite magnitude")
        if normalize_location(load.location) not in SUPPORTED_LOCATIONS:
            err(f"load location {load.location!r} is not a supported semantic location")
    constrained = 0
    for bc in spec.boundary_conditions:
        if not bc.constrained_dofs:
            warn(f"boundary condition at {bc.location!r} constrains no DOFs")
        constrained += len(bc.constrained_dofs)
        if normalize_location(bc.location) not in SUPPORTED_LOCATIONS:
            err(f"boundary condition location {bc.location!r} is not a supported semantic location")
    if not spec.boundary_conditions or constrained == 0:
        err("unconstrained model: no constrained DOFs, rigid-body motion is free")
    for zone in spec.mesh.refinement_zones:
        if normalize_location(zone) not in SUPPORTED_LOCATIONS:
            warn(f"refinement zone {zone!r} is not a supported location and is ignored")

    if spec.analysis.type != "static":
        err(f"analysis type {spec.analysis.type!r} unsupported (only static)")
    if "calculix" not in spec.analysis.solver.lower():
        warn(f"solver {spec.analysis.solver!r} requested; decks are emitted in CalculiX format")
    if not 0 < spec.analysis.tolerance < 1:
        err("analysis: solver tolerance must lie in (0, 1)")
    if spec.data_analysis.mode == "pareto" and len(spec.data_analysis.objectives) < 2:
        err("pareto mode requires at least two objectives")

    g = spec.geometry
    if g.kind == "naca_wing":
        if not (len(g.naca_code) == 4 and g.naca_code.isdigit()):
            err(f"geometry: NACA code {g.naca_code!r} is not four digits")
        for key in ("chord", "span", "shell_thickness", "spar_width", "rib_thickness"):
            if not getattr(g, key) > 0:
                err(f"geometry: {key} must be positive")
        if g.spar_count not in (2, 3):
            err("geometry: spar count must be 2 or 3")
        if g.rib_count not in (2, 3):
            err("geometry: rib count must be 2 or 3")
    elif any(s <= 0 for s in g.box_size):
        err("geometry: box dimensions must be positive")

    seen = set()
    for r in spec.sweep:
        if r.name not in PARAMETERS:
            err(f"sweep parameter {r.name!r} is not sweepable")
        if r.name in seen:
            err(f"sweep parameter {r.name!r} appears twice")
        seen.add(r.name)
    return report


def _encode(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _encode(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_encode(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    return obj


def canonical_json(spec: AnalysisSpec) -> str:
    return json.dumps(_encode(spec), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def spec_hash(spec: AnalysisSpec) -> str:
    return hashlib.sha256(canonical_json(spec).encode("utf-8")).hexdigest()


def document_json(spec: AnalysisSpec) -> str:
    """Stable JSON text of ``spec_to_document``; readable by parse_spec."""
    return json.dumps(spec_to_document(spec), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def spec_to_document(spec: AnalysisSpec) -> dict:
    """Re-encode a spec as a document that parse_spec accepts (SI values)."""
    g = spec.geometry
    geometry = {
        "kind": g.kind,
        "naca_code": g.naca_code,
        "chord": g.chord,
        "span": g.span,
        "shell_thickness": g.shell_thickness,
        "spar": {"count": g.spar_count, "width": g.spar_width},
        "rib": {"count": g.rib_count, "thickness": g.rib_thickness},
        "size": list(g.box_size),
    }
    mat = {k: v for k, v in dataclasses.asdict(spec.material).items() if v is not None}
    return {
        "material": mat,
        "loads": [
            {
                "type": ld.kind,
                "magnitude": ld.magnitude,
                "direction": ("-" if ld.direction[1] < 0 else "+") + ld.direction[0],
                "location": ld.location,
                "gain": ld.gain,
            }
            for ld in spec.loads
        ],
        "boundary_conditions": [
            {"type": bc.kind, "location": bc.location, "constraints": list(bc.constrained_dofs)}
            for bc in spec.boundary_conditions
        ],
        "mesh": {
            "density": spec.mesh.density,
            "element_type": spec.mesh.element_type,
            "refinement_zones": list(spec.mesh.refinement_zones),
        },
        "analysis": dataclasses.asdict(spec.analysis),
        "data_analysis": {
            "objectives": [f"{s} {m}" for s, m in spec.data_analysis.objectives],
            "metrics": list(spec.data_analysis.metrics),
            "optimization": spec.data_analysis.mode,
        },
        "geometry": geometry,
        "sweep": [{"name": r.name, "values": list(r.values), "unit": r.unit} for r in spec.sweep],
    }
