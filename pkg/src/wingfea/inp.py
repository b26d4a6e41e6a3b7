"""CalculiX input decks (MPa-mm-tonne), FRD result parsing and the optional external runner."""
from __future__ import annotations

import os
import re
import shutil
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptySetError, WingFeaError
from .geometry import normalize_location
from .mesher import Mesh
from .solver import LOAD_SPECTRUM, load_vector

# SI -> deck units
LENGTH_SCALE = 1e3  # m -> mm
STRESS_SCALE = 1e-6  # Pa -> MPa
DENSITY_SCALE = 1e-12  # kg/m^3 -> tonne/mm^3
NSET_PER_LINE = 16
CALCULIX_ENV = "WINGFEA_CALCULIX_BIN"
AXIS_DOF = {"X": 1, "Y": 2, "Z": 3}
ELEMENT_CARD = {"first_order_tet": "C3D4", "second_order_tet": "C3D10"}
# CalculiX C3D10 midside order: edges 1-2, 2-3, 3-1, 1-4, 2-4, 3-4
C3D10_EDGES = ((0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3))


def fmt(x: float) -> str:
    return f"{x:.8e}"


def set_name(location: str) -> str:
    return normalize_location(location).upper()


def quadratic_tets(nodes: np.ndarray, elements: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Add one shared midside node per edge; returns (nodes, (M, 10) connectivity)."""
    pairs = np.stack([elements[:, [a, b]] for a, b in C3D10_EDGES], axis=1).reshape(-1, 2)
    key = np.sort(pairs, axis=1)
    uniq, inverse = np.unique(key, axis=0, return_inverse=True)
    mids = 0.5 * (nodes[uniq[:, 0]] + nodes[uniq[:, 1]])
    mid_ids = (len(nodes) + inverse.reshape(-1)).reshape(len(elements), 6)
    return np.vstack([nodes, mids]), np.hstack([elements, mid_ids])


def _material_name(material) -> str:
    name = re.sub(r"[^A-Za-z0-9_]+", "_", str(material.name)).strip("_").upper()
    return (name or "MATERIAL")[:80]


def write_inp(mesh: Mesh, material, loads, bcs, steps=LOAD_SPECTRUM, element_type: str = "first_order_tet") -> str:
    """Render the deck text.

    ``loads`` is a list of LoadSpec (resolved against the mesh node sets) or a
    precomputed (N, 3) nodal force array in newtons. Each step applies the
    baseline forces times its factor.
    """
    if element_type not in ELEMENT_CARD:
        raise ValueError(f"unknown element type {element_type!r}")
    referenced = []
    for item in list(bcs) + ([] if isinstance(loads, np.ndarray) else list(loads)):
        name = normalize_location(item.location)
        nodes = mesh.node_sets.get(name)
        if nodes is None or len(nodes) == 0:
            raise EmptySetError(f"node set for {item.location!r} is empty")
        if name not in referenced:
            referenced.append(name)
    forces = loads if isinstance(loads, np.ndarray) else load_vector(mesh, loads, material.density)
    forces = np.asarray(forces, dtype=float).reshape(-1, 3)

    nodes, elements = mesh.nodes, mesh.elements
    if element_type == "second_order_tet":
        nodes, elements = quadratic_tets(nodes, elements)
    out = ["** wingfea deck, units MPa-mm-tonne-N", "*NODE"]
    out += [f"{i}, {fmt(x)}, {fmt(y)}, {fmt(z)}" for i, (x, y, z) in enumerate((nodes * LENGTH_SCALE).tolist(), 1)]
    out.append(f"*ELEMENT, TYPE={ELEMENT_CARD[element_type]}, ELSET=EALL")
    out += [f"{i}, " + ", ".join(str(n + 1) for n in row) for i, row in enumerate(elements.tolist(), 1)]
    for name in referenced:
        ids = (np.sort(mesh.node_sets[name]) + 1).tolist()
        out.append(f"*NSET, NSET={name.upper()}")
        for k in range(0, len(ids), NSET_PER_LINE):
            out.append(", ".join(str(v) for v in ids[k : k + NSET_PER_LINE]))

    mat = _material_name(material)
    out += [
        f"*MATERIAL, NAME={mat}",
        "*ELASTIC",
        f"{material.youngs_modulus * STRESS_SCALE!r}, {material.poissons_ratio!r}",
        "*DENSITY",
        f"{material.density * DENSITY_SCALE!r}",
        f"*SOLID SECTION, ELSET=EALL, MATERIAL={mat}",
        "*BOUNDARY",
    ]
    for bc in bcs:
        dofs = sorted(AXIS_DOF[a] for a in bc.constrained_dofs)
        for lo, hi in _runs(dofs):
            out.append(f"{set_name(bc.location)}, {lo}, {hi}")

    loaded = np.argwhere(forces != 0.0)
    for step in steps:
        out += [f"** step {step.index}: {step.name} ({step.factor!r} g)", "*STEP", "*STATIC", "*CLOAD, OP=NEW"]
        out += [f"{n + 1}, {d + 1}, {fmt(step.factor * forces[n, d])}" for n, d in loaded.tolist()]
        out += ["*NODE FILE", "U", "*EL FILE", "S", "*END STEP"]
    return "\n".join(out) + "\n"


def _runs(values):
    runs = []
    for v in values:
        if runs and v == runs[-1][1] + 1:
            runs[-1][1] = v
        else:
            runs.append([v, v])
    return [tuple(r) for r in runs]


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

@dataclass
class InpDeck:
    nodes: np.ndarray  # (N, 3) deck units
    node_ids: np.ndarray
    elements: np.ndarray  # (M, k) 1-based node ids
    element_type: str = ""
    nsets: dict = field(default_factory=dict)
    materials: dict = field(default_factory=dict)
    boundaries: list = field(default_factory=list)  # (set or node, first dof, last dof)
    steps: list = field(default_factory=list)  # per step: list of (node, dof, value)
    cards: list = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)


def _card(line: str) -> tuple[str, dict]:
    parts = [p.strip() for p in line[1:].split(",")]
    opts = {}
    for p in parts[1:]:
        if "=" in p:
            k, v = p.split("=", 1)
            opts[k.strip().upper()] = v.strip()
        elif p:
            opts[p.upper()] = ""
    return parts[0].upper(), opts


def parse_inp(text: str) -> InpDeck:
    """Read the card subset that write_inp emits (comments and blank lines skipped)."""
    node_rows, elem_rows = [], []
    deck = InpDeck(np.zeros((0, 3)), np.zeros(0, dtype=np.int64), np.zeros((0, 4), dtype=np.int64))
    card, opts, material = None, {}, None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("**"):
            continue
        if line.startswith("*"):
            card, opts = _card(line)
            deck.cards.append(card)
            if card == "ELEMENT":
                deck.element_type = opts.get("TYPE", "")
            elif card == "NSET":
                deck.nsets.setdefault(opts["NSET"], [])
            elif card == "MATERIAL":
                material = opts["NAME"]
                deck.materials[material] = {}
            elif card == "STEP":
                deck.steps.append([])
            continue
        fields = [f.strip() for f in line.split(",") if f.strip()]
        if card == "NODE":
            node_rows.append((int(fields[0]), *map(float, fields[1:4])))
        elif card == "ELEMENT":
            elem_rows.append([int(f) for f in fields])
        elif card == "NSET":
            deck.nsets[opts["NSET"]].extend(int(f) for f in fields)
        elif card == "ELASTIC":
            deck.materials[material].update(E=float(fields[0]), nu=float(fields[1]))
        elif card == "DENSITY":
            deck.materials[material]["density"] = float(fields[0])
        elif card == "BOUNDARY":
            first = int(fields[1])
            deck.boundaries.append((fields[0], first, int(fields[2]) if len(fields) > 2 else first))
        elif card == "CLOAD":
            deck.steps[-1].append((int(fields[0]), int(fields[1]), float(fields[2])))
    if node_rows:
        arr = np.array(node_rows)
        deck.node_ids = arr[:, 0].astype(np.int64)
        deck.nodes = arr[:, 1:]
    if elem_rows:
        deck.elements = np.array([r[1:] for r in elem_rows], dtype=np.int64)
    deck.nsets = {k: np.array(v, dtype=np.int64) for k, v in deck.nsets.items()}
    return deck


def parse_frd(text: str) -> dict[str, dict[int, np.ndarray]]:
    """Nodal result blocks of an ASCII FRD file keyed by block name (DISP, STRESS).

    When a block repeats (one per step) the last one wins; ``parse_frd_steps``
    keeps them all.
    """
    steps = parse_frd_steps(text)
    out: dict[str, dict[int, np.ndarray]] = {}
    for block in steps:
        out.update(block)
    return out


def parse_frd_steps(text: str) -> list[dict[str, dict[int, np.ndarray]]]:
    blocks: list[tuple[str, dict[int, np.ndarray]]] = []
    name, values = None, None
    for line in text.splitlines():
        tag = line[:3].strip()
        if tag == "-4":
            name = line[3:].split()[0].upper()
            values = {}
        elif tag == "-1" and values is not None:
            node = int(line[3:13])
            body = line[13:]
            values[node] = np.array([float(body[k : k + 12]) for k in range(0, len(body.rstrip()), 12)])
        elif tag == "-3" and values is not None:
            if name in ("DISP", "STRESS"):
                blocks.append((name, values))
            name, values = None, None
    steps: list[dict] = []
    for name, vals in blocks:
        if not steps or name in steps[-1]:
            steps.append({})
        steps[-1][name] = vals
    return steps


def calculix_binary(explicit: str | None = None) -> str | None:
    """Executable named by the flag or the environment, if it resolves."""
    candidate = explicit or os.environ.get(CALCULIX_ENV)
    if not candidate:
        return None
    return shutil.which(candidate) or (candidate if Path(candidate).is_file() else None)


def run_calculix(deck_text: str, workdir, binary: str, job: str = "job", timeout: float = 3600.0):
    """Run the external solver on ``deck_text`` and parse its FRD output per step."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    (workdir / f"{job}.inp").write_text(deck_text, encoding="ascii")
    proc = subprocess.run([binary, job], cwd=workdir, capture_output=True, text=True, timeout=timeout)
    frd = workdir / f"{job}.frd"
    if proc.returncode != 0 or not frd.exists():
        raise WingFeaError(f"external solver failed ({proc.returncode}): {proc.stdout[-500:]}{proc.stderr[-500:]}")
    return parse_frd_steps(frd.read_text(encoding="ascii", errors="replace"))


def frd_displacements(block: dict[int, np.ndarray], n_nodes: int) -> np.ndarray:
    """DISP block (mm) to an (n_nodes, 3) array in metres, ids 1-based."""
    u = np.zeros((n_nodes, 3))
    for node, vec in block.items():
        if 1 <= node <= n_nodes:
            u[node - 1] = vec[:3] / LENGTH_SCALE
    return u
