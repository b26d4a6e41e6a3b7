"""Unit normalization to SI base units (m, N, Pa, kg)."""
from __future__ import annotations

import math
import re

from .errors import UnitError

LENGTH = {"m": 1.0, "mm": 1e-3, "cm": 1e-2, "in": 0.0254}
FORCE = {"n": 1.0, "kn": 1e3}
STRESS = {"pa": 1.0, "kpa": 1e3, "mpa": 1e6, "gpa": 1e9}
DENSITY = {"kg/m3": 1.0, "kg/m^3": 1.0, "g/cm3": 1e3, "g/cm^3": 1e3, "tonne/mm3": 1e12, "tonne/mm^3": 1e12}
ACCEL = {"g": 1.0}
DIMENSIONLESS = {"": 1.0, "-": 1.0}

QUANTITIES = {
    "length": LENGTH,
    "force": FORCE,
    "stress": STRESS,
    "pressure": STRESS,
    "density": DENSITY,
    "load_factor": ACCEL,
    "dimensionless": DIMENSIONLESS,
}

_QUANTITY_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z/^0-9]*)\s*$")


def split_quantity(text: str) -> tuple[float, str]:
    m = _QUANTITY_RE.match(text)
    if not m:
        raise UnitError(f"cannot parse quantity {text!r}")
    return float(m.group(1)), m.group(2)


def unit_factor(unit: str, quantity: str) -> float:
    try:
        table = QUANTITIES[quantity]
    except KeyError:
        raise UnitError(f"unknown quantity kind {quantity!r}") from None
    key = unit.strip().lower()
    if key not in table:
        raise UnitError(f"unit {unit!r} is not a valid {quantity} unit (expected one of {sorted(table)})")
    return table[key]


def to_si(value, quantity: str, default_unit: str | None = None) -> float:
    """Convert a bare number or a ``"<number> <unit>"`` string to SI.

    Bare numbers are taken to be in ``default_unit`` (SI when omitted), so
    already-normalized values pass through unchanged, which makes the
    conversion idempotent.
    """
    if isinstance(value, bool):
        raise UnitError(f"boolean is not a {quantity}")
    if isinstance(value, (int, float)):
        number, unit = float(value), default_unit or ""
        if not unit:
            return _finite(number)
    elif isinstance(value, str):
        number, unit = split_quantity(value)
        if not unit:
            unit = default_unit or ""
            if not unit:
                return _finite(number)
    else:
        raise UnitError(f"expected a number or quantity string, got {type(value).__name__}")
    return _finite(number * unit_factor(unit, quantity))


def _finite(x: float) -> float:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r}")
    return x


def clean(x: float, digits: int = 12) -> float:
    """Round to ``digits`` significant figures to strip accumulation noise."""
    if x == 0 or not math.isfinite(x):
        return float(x)
    return float(f"{x:.{digits}g}")
