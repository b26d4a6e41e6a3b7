"""Turns a plain-language request into a specification document.

Planning goes through a provider interface. The only provider shipped is
rule-based: it retrieves material candidates from the knowledge base,
reads range phrases with the range grammar and maps intent keywords to an
analysis mode.
"""
from __future__ import annotations

import re
from typing import Protocol

from . import units
from .errors import NoMatchError, ParseError
from .knowledge import THETA, KnowledgeBase
from .spec import format_range, parse_range_phrase

TOP_K = 5
DEFAULT_LOAD_GAIN = 250.0

_RANGE_FIND = re.compile(
    r"(?P<name>[a-z][a-z ]*?)\s+from\s+[-+\d.]+\s*[a-z]*\s+to\s+[-+\d.]+\s*[a-z]*\s+in\s+[-+\d.]+\s*[a-z]*\s+steps?",
    re.IGNORECASE,
)
_BOTH = re.compile(r"(?:both\s+)?(\d+)\s+and\s+(\d+)\s+(spars?|ribs?)", re.IGNORECASE)
_DIMENSION = re.compile(r"(\d+(?:\.\d+)?)\s*(mm|cm|m|in)\s+(chord|span)", re.IGNORECASE)
_NACA = re.compile(r"naca\s*-?\s*(\d{4})", re.IGNORECASE)
_INTENTS = (
    (("optimal", "pareto", "trade-off", "trade-offs", "tradeoff"), "pareto"),
    (("vary", "sweep", "sensitivity", "parametric"), "parametric"),
)
_MATERIAL_HINTS = ("aluminum", "aluminium", "steel", "titanium", "alloy", "aerospace", "7075", "c355")


class PlannerProvider(Protocol):
    def plan(self, request: str, kb: KnowledgeBase) -> dict: ...


def top_k(request: str, kb: KnowledgeBase, k: int = TOP_K, kind: str | None = None):
    from .knowledge import cosine, embed

    q = embed(request)
    scored = [(cosine(q, e.embedding), i, e) for i, e in enumerate(kb.entries) if kind is None or e.kind == kind]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [(s, e) for s, _, e in scored[:k]]


def _material_phrase(request: str) -> str:
    words = [w for w in re.findall(r"[A-Za-z0-9\-]+", request) if any(h in w.lower() for h in _MATERIAL_HINTS)]
    return " ".join(words) or request


class RuleBasedPlanner:
    def __init__(self, load_gain: float = DEFAULT_LOAD_GAIN):
        self.load_gain = load_gain

    def plan(self, request: str, kb: KnowledgeBase | None = None) -> dict:
        kb = kb if kb is not None else KnowledgeBase.seeded()
        text = " ".join(request.split())
        candidates = top_k(_material_phrase(text), kb, kind="material")
        if not candidates or candidates[0][0] <= 0:
            raise NoMatchError("no material in the knowledge base relates to the request")
        material = {k: v for k, v in candidates[0][1].payload.items() if k != "kind" and v is not None}

        sweep = []
        for m in _RANGE_FIND.finditer(text):
            phrase = m.group(0)
            name = re.sub(r"^(?:and|vary|the|with)\s+", "", m.group("name").strip(), flags=re.IGNORECASE)
            name = re.sub(r"^(?:the)\s+", "", name, flags=re.IGNORECASE)
            try:
                r = parse_range_phrase(name + phrase[len(m.group("name")):])
            except ParseError:
                continue
            sweep.append({"phrase": format_range(r)})
        for a, b, what in _BOTH.findall(text):
            key = "spar_count" if what.lower().startswith("spar") else "rib_count"
            sweep.append({"name": key, "values": sorted({int(a), int(b)})})

        geometry = {"kind": "naca_wing"}
        code = _NACA.search(text)
        if code:
            geometry["naca_code"] = code.group(1)
        for value, unit, which in _DIMENSION.findall(text):
            geometry[which.lower()] = units.to_si(f"{value}{unit}", "length")

        lowered = text.lower()
        mode = "single"
        for words, m in _INTENTS:
            if any(w in lowered for w in words):
                mode = m
                break
        if mode == "single" and sweep:
            mode = "parametric"
        objectives = ["minimize stress", "minimize weight"] if mode == "pareto" else []
        strategy = kb.strategy(text, THETA)

        doc = {
            "material": material,
            "loads": [{"type": "acceleration_factor", "magnitude": 1.0, "direction": "+Z",
                       "location": "wing tip", "gain": self.load_gain}],
            "boundary_conditions": [{"type": "fixed", "location": "wing root", "constraints": ["X", "Y", "Z"]}],
            "mesh": {"density": _density(lowered), "element_type": "first_order_tet"},
            "analysis": {"type": "static", "solver": "CalculiX"},
            "data_analysis": {"objectives": objectives,
                              "metrics": ["von_mises_stress", "displacement", "mass"],
                              "optimization": mode},
            "geometry": geometry,
            "sweep": sweep,
        }
        doc["_plan"] = {
            "strategy": strategy.mode,
            "score": strategy.score,
            "material_candidates": [[round(s, 6), e.key] for s, e in candidates],
        }
        return doc


def _density(lowered: str) -> str:
    for level in ("ultra fine", "ultra_fine", "fine", "coarse", "medium"):
        if f"{level} mesh" in lowered:
            return level.replace(" ", "_")
    return "medium"


def plan_request(request: str, kb: KnowledgeBase | None = None, provider: PlannerProvider | None = None) -> dict:
    return (provider or RuleBasedPlanner()).plan(request, kb if kb is not None else KnowledgeBase.seeded())
