"""Similarity-searchable store of materials and validated configuration patterns."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import EmptyKbError, NoMatchError, WingFeaError

DIM = 384
THETA = 0.85
MATERIAL_FLOOR = 0.3
_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class MaterialRecord:
    name: str
    youngs_modulus: float
    poissons_ratio: float
    density: float
    yield_strength: float
    fatigue_limit: float | None = None
    fatigue_limit_cycles: float | None = None

    def check(self) -> None:
        if not (self.youngs_modulus > 0 and 0 < self.poissons_ratio < 0.5 and self.density > 0 and self.yield_strength > 0):
            raise ValueError(f"material {self.name!r} violates E>0, 0<nu<0.5, rho>0, yield>0")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(str(text).lower())


def _bucket(token: str) -> tuple[int, float]:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    value = int.from_bytes(digest, "little")
    return value % DIM, (1.0 if (value >> 63) & 1 else -1.0)


def embed(text: str) -> np.ndarray:
    """Signed feature-hashing bag-of-words vector, L2-normalized (zero if no tokens)."""
    v = np.zeros(DIM)
    for tok in tokenize(text):
        k, s = _bucket(tok)
        v[k] += s
    n = float(np.linalg.norm(v))
    return v / n if n > 0 else v


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


@dataclass
class KnowledgeEntry:
    key: str
    payload: dict
    provenance: str = "seed"
    embedding: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.embedding is None:
            self.embedding = embed(self.key)

    @property
    def kind(self) -> str:
        return self.payload.get("kind", "")

    def to_record(self) -> dict:
        return {"key": self.key, "payload": self.payload, "provenance": self.provenance}


@dataclass(frozen=True)
class StrategyDecision:
    mode: str
    score: float
    matched: KnowledgeEntry | None = None


def select_strategy(score: float, theta: float = THETA, matched: KnowledgeEntry | None = None) -> StrategyDecision:
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    mode = "knowledge_augmented" if score > theta else "novel_synthesis"
    return StrategyDecision(mode, float(score), matched if mode == "knowledge_augmented" else None)


AL7075_T6 = MaterialRecord(
    name="Al 7075-T6",
    youngs_modulus=71.7e9,
    poissons_ratio=0.33,
    density=2810.0,
    yield_strength=503e6,
    fatigue_limit=160e6,
    fatigue_limit_cycles=1e7,
)

# the source gives E, nu and rho only; the yield value is a typical handbook
# figure for C355-T6 castings
ALUMINUM_C355 = MaterialRecord(
    name="Aluminum C355",
    youngs_modulus=75e9,
    poissons_ratio=0.3,
    density=2650.0,
    yield_strength=170e6,
)

_SEED_MATERIALS = (
    ("al 7075 t6 aluminum alloy 7075 aerospace aluminum wing structural", AL7075_T6),
    ("aluminum c355 cast alloy c355 t6 turbine housing casting", ALUMINUM_C355),
)

_SEED_PATTERNS = (
    (
        "naca airfoil wing with shell spars and ribs",
        {"kind": "geometry_pattern", "template": "naca_wing", "spar_stations": [0.33, 0.65]},
    ),
    (
        "rectangular block solid box",
        {"kind": "geometry_pattern", "template": "box"},
    ),
    (
        "static linear elastic cantilever fixed root tip load",
        {"kind": "solver_pattern", "analysis": "static", "element": "C3D4"},
    ),
)


def material_payload(m: MaterialRecord) -> dict:
    return {"kind": "material", **dataclasses.asdict(m)}


class KnowledgeBase:
    """Append-ordered entries; the backing file holds one JSON object per line."""

    def __init__(self, entries=(), path: str | os.PathLike | None = None):
        self.entries: list[KnowledgeEntry] = []
        self.path = Path(path) if path is not None else None
        for e in entries:
            self._put(e)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def seeded(cls, path=None) -> "KnowledgeBase":
        kb = cls(path=path)
        for key, mat in _SEED_MATERIALS:
            kb._put(KnowledgeEntry(key, material_payload(mat), "seed"))
        for key, payload in _SEED_PATTERNS:
            kb._put(KnowledgeEntry(key, dict(payload), "seed"))
        return kb

    @classmethod
    def load(cls, path) -> "KnowledgeBase":
        path = Path(path)
        kb = cls(path=path)
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    kb._put(KnowledgeEntry(rec["key"], rec["payload"], rec.get("provenance", "")))
        return kb

    @classmethod
    def open(cls, path=None) -> "KnowledgeBase":
        """Load ``path`` if it exists, else start from the seed set bound to it."""
        if path is not None and Path(path).exists():
            return cls.load(path)
        return cls.seeded(path)

    def dumps(self) -> str:
        return "".join(json.dumps(e.to_record(), sort_keys=True, ensure_ascii=False) + "\n" for e in self.entries)

    def save(self, path=None) -> Path:
        target = Path(path) if path is not None else self.path
        if target is None:
            raise WingFeaError("knowledge base has no file path")
        target.parent.mkdir(parents=True, exist_ok=True)
        tmp = target.with_suffix(target.suffix + ".tmp")
        tmp.write_text(self.dumps(), encoding="utf-8")
        os.replace(tmp, target)
        self.path = target
        return target

    def _put(self, entry: KnowledgeEntry) -> KnowledgeEntry:
        for i, e in enumerate(self.entries):
            if e.key == entry.key:
                self.entries[i] = entry
                return entry
        self.entries.append(entry)
        return entry

    def similarity(self, request: str, kind: str | None = None) -> tuple[float, KnowledgeEntry]:
        return similarity(request, [e for e in self.entries if kind is None or e.kind == kind])

    def lookup_material(self, name: str) -> MaterialRecord:
        try:
            score, best = self.similarity(name, "material")
        except EmptyKbError:
            raise NoMatchError("knowledge base holds no materials") from None
        if score < MATERIAL_FLOOR:
            raise NoMatchError(f"no material matches {name!r} (best score {score:.3f})")
        fields = {k: v for k, v in best.payload.items() if k != "kind"}
        return MaterialRecord(**fields)

    def strategy(self, request: str, theta: float = THETA) -> StrategyDecision:
        score, best = self.similarity(request)
        return select_strategy(score, theta, best)

    def record_success(self, spec, outcome: dict[str, Any], key: str | None = None) -> KnowledgeEntry:
        """Store a validated configuration; ``outcome`` is a metrics record."""
        if not outcome.get("converged", False):
            raise WingFeaError("only converged cases can be recorded as validated patterns")
        return self._record(spec, outcome, key, "validated_configuration", "success")

    def record_failure(self, spec, reason: str, key: str | None = None) -> KnowledgeEntry:
        return self._record(spec, {"failure_reason": str(reason)}, key, "failure_pattern", "failure")

    def _record(self, spec, extra: dict, key, kind, provenance) -> KnowledgeEntry:
        g = spec.geometry
        if key is None:
            key = (
                f"naca {g.naca_code} wing shell {g.shell_thickness * 1e3:g} mm spars {g.spar_count} "
                f"ribs {g.rib_count} mesh {spec.mesh.density} {kind.replace('_', ' ')}"
                if g.kind == "naca_wing"
                else f"box {' '.join(f'{s * 1e3:g}' for s in g.box_size)} mm {kind.replace('_', ' ')}"
            )
        payload = {
            "kind": kind,
            "geometry": dataclasses.asdict(g),
            "mesh_density": spec.mesh.density,
            "material": spec.material.name,
            **_jsonable(extra),
        }
        entry = self._put(KnowledgeEntry(key, payload, provenance))
        if self.path is not None:
            self.save()
        return entry


def _jsonable(obj):
    return json.loads(json.dumps(obj, default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o)))


def similarity(request: str, kb) -> tuple[float, KnowledgeEntry]:
    """Highest cosine between the request and any entry; first entry wins ties."""
    entries = list(kb.entries if isinstance(kb, KnowledgeBase) else kb)
    if not entries:
        raise EmptyKbError("knowledge base is empty")
    q = embed(request)
    best_score, best = -math.inf, None
    for e in entries:
        s = cosine(q, e.embedding)
        if s > best_score:
            best_score, best = s, e
    return best_score, best
