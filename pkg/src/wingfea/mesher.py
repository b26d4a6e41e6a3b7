"""Conforming first-order tetrahedral meshes for wing and box models.

Wings are meshed by extruding a body-fitted cross-section triangulation
along the span. The cross-section is built from vertical columns whose
nodes split each column into lower shell, core and upper shell; the core
is kept only inside spar slabs and rib slabs. Column and span spacing
follow the threshold size field of the distance to the feature set
(leading edge, spar stations, root plane and rib stations).
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import EmptyMeshError, ResolutionError
from .geometry import (
    MATERIAL_REGIONS,
    TE_CLOSURE_START,
    BoxModel,
    Region,
    WingModel,
    normalize_location,
    resolve_semantic_location,
)

# minimum element size per level (m), coarse to finest
LEVELS = {"coarse": 5.0e-3, "medium": 2.0e-3, "fine": 1.0e-3, "ultra_fine": 0.2e-3}
LEVEL_ORDER = ("coarse", "medium", "fine", "ultra_fine")
H_RATIO = 6.0
THIN_SHELL_LIMIT = 0.5e-3
# a level resolves a feature of thickness t when t >= h_min / RESOLVE_RATIO
RESOLVE_RATIO = 5.0
GRADING = 0.5
TIP_REFINEMENT = 50.0


@dataclass(frozen=True)
class SizeFieldParams:
    h_min: float
    h_max: float
    d_min: float
    d_max: float
    features: tuple[str, ...] = ("spar_rib_intersections", "root_plane", "leading_edge")

    def __post_init__(self):
        if not (0 < self.h_min <= self.h_max):
            raise ValueError("size field needs 0 < h_min <= h_max")
        if not (0 <= self.d_min < self.d_max):
            raise ValueError("size field needs 0 <= d_min < d_max")


def size_field(d, params: SizeFieldParams):
    """Threshold size function of the feature distance ``d`` (scalar or array)."""
    d = np.asarray(d, dtype=float)
    p = params
    ramp = p.h_min + (p.h_max - p.h_min) * (d - p.d_min) / (p.d_max - p.d_min)
    h = np.where(d < p.d_min, p.h_min, np.where(d > p.d_max, p.h_max, ramp))
    return float(h) if h.ndim == 0 else h


def derive_size_params(level: str) -> SizeFieldParams:
    level = normalize_level(level)
    h_min = LEVELS[level]
    h_max = H_RATIO * h_min
    return SizeFieldParams(h_min, h_max, 2.0 * h_min, 10.0 * h_max)


def normalize_level(level: str) -> str:
    name = str(level).strip().lower().replace("-", "_").replace(" ", "_")
    if name not in LEVELS:
        raise ValueError(f"unknown mesh level {level!r}; choose from {', '.join(LEVEL_ORDER)}")
    return name


def upgrade_level(level: str) -> str | None:
    i = LEVEL_ORDER.index(normalize_level(level))
    return LEVEL_ORDER[i + 1] if i + 1 < len(LEVEL_ORDER) else None


def effective_level(model, level: str) -> str:
    """Level after the thin-feature rule; raises ResolutionError if none suffices."""
    level = normalize_level(level)
    feats = model.thin_features()
    thinnest = min(feats.values())
    if isinstance(model, WingModel) and model.shell_thickness < THIN_SHELL_LIMIT:
        level = "ultra_fine"
    while thinnest < LEVELS[level] / RESOLVE_RATIO:
        nxt = upgrade_level(level)
        if nxt is None:
            name = min(feats, key=feats.get)
            raise ResolutionError(
                f"{name} thickness {thinnest * 1e3:.4g} mm cannot be resolved even at ultra_fine"
            )
        level = nxt
    return level


# --------------------------------------------------------------------------
# mesh container and audit
# --------------------------------------------------------------------------

@dataclass
class Mesh:
    nodes: np.ndarray  # (N, 3) float64, metres
    elements: np.ndarray  # (M, 4) int64, 0-based
    labels: np.ndarray  # (M,) int8 Region values
    node_sets: dict[str, np.ndarray] = field(default_factory=dict)
    element_sets: dict[str, np.ndarray] = field(default_factory=dict)
    level: str = "medium"
    meta: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def element_volumes(self) -> np.ndarray:
        return signed_volumes(self.nodes, self.elements)

    def volume(self) -> float:
        return float(np.abs(self.element_volumes()).sum())

    def centroids(self) -> np.ndarray:
        return self.nodes[self.elements].mean(axis=1)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.nodes, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.elements, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.labels, dtype="i1").tobytes())
        return h.hexdigest()

    def summary(self) -> dict:
        return {
            "level": self.level,
            "nodes": self.n_nodes,
            "elements": self.n_elements,
            "volume_m3": self.volume(),
            "hash": self.digest(),
            "node_sets": {k: int(len(v)) for k, v in sorted(self.node_sets.items())},
            "element_sets": {k: int(len(v)) for k, v in sorted(self.element_sets.items())},
            "region_counts": {Region(r).name.lower(): int(np.sum(self.labels == r)) for r in np.unique(self.labels)},
            **self.meta,
        }


def signed_volumes(nodes, elements) -> np.ndarray:
    p = nodes[elements]
    return np.einsum("ij,ij->i", np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), p[:, 3] - p[:, 0]) / 6.0


_FACES = np.array([[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]])
_EDGES = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])


@dataclass(frozen=True)
class MeshQualityReport:
    element_count: int
    node_count: int
    min_jacobian: float
    max_jacobian: float
    nonpositive_jacobians: int
    components: int
    closed_boundary: bool
    hanging_nodes: int
    duplicate_elements: int
    degenerate_elements: int
    boundary_faces: int
    min_aspect_ratio: float
    max_aspect_ratio: float
    mean_aspect_ratio: float

    @property
    def positive_jacobian_fraction(self) -> float:
        return 1.0 - self.nonpositive_jacobians / max(self.element_count, 1)

    @property
    def valid(self) -> bool:
        return (
            self.nonpositive_jacobians == 0
            and self.components == 1
            and self.closed_boundary
            and self.hanging_nodes == 0
            and self.duplicate_elements == 0
            and self.degenerate_elements == 0
        )

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["positive_jacobian_fraction"] = self.positive_jacobian_fraction
        out["valid"] = self.valid
        return out


def boundary_faces(elements) -> tuple[np.ndarray, np.ndarray]:
    """Faces used by exactly one element (oriented as in that element) and face usage counts."""
    faces = elements[:, _FACES].reshape(-1, 3)
    key = np.sort(faces, axis=1)
    _, first, inverse, counts = np.unique(key, axis=0, return_index=True, return_inverse=True, return_counts=True)
    once = counts[inverse.ravel()] == 1
    return faces[once], counts


def _aspect_ratios(nodes, elements, vol):
    p = nodes[elements]
    edges = np.linalg.norm(p[:, _EDGES[:, 1]] - p[:, _EDGES[:, 0]], axis=2)
    fa = p[:, _FACES]
    areas = 0.5 * np.linalg.norm(np.cross(fa[:, :, 1] - fa[:, :, 0], fa[:, :, 2] - fa[:, :, 0]), axis=2)
    r_in = 3.0 * np.abs(vol) / np.maximum(areas.sum(axis=1), 1e-300)
    return edges.max(axis=1) / np.maximum(2.0 * math.sqrt(6.0) * r_in, 1e-300)


def _hanging_nodes(nodes, faces, tol) -> int:
    if len(faces) == 0:
        return 0
    a, b, c = nodes[faces[:, 0]], nodes[faces[:, 1]], nodes[faces[:, 2]]
    cen = (a + b + c) / 3.0
    radius = np.max(np.stack([np.linalg.norm(v - cen, axis=1) for v in (a, b, c)]), axis=0)
    used = np.unique(faces)
    tree = cKDTree(nodes[used])
    hits = tree.query_ball_point(cen, radius * (1 + 1e-9) + tol)
    fi = np.repeat(np.arange(len(faces)), [len(h) for h in hits])
    if len(fi) == 0:
        return 0
    ni = used[np.concatenate([np.asarray(h, dtype=np.int64) for h in hits])]
    keep = np.all(faces[fi] != ni[:, None], axis=1)
    fi, ni = fi[keep], ni[keep]
    if len(fi) == 0:
        return 0
    p = nodes[ni]
    A, B, C = a[fi], b[fi], c[fi]
    n = np.cross(B - A, C - A)
    nn = np.linalg.norm(n, axis=1)
    on_plane = np.abs(np.einsum("ij,ij->i", p - A, n)) <= tol * nn
    # barycentric coordinates
    v0, v1, v2 = C - A, B - A, p - A
    d00, d01, d02 = (np.einsum("ij,ij->i", v0, v) for v in (v0, v1, v2))
    d11, d12 = np.einsum("ij,ij->i", v1, v1), np.einsum("ij,ij->i", v1, v2)
    den = d00 * d11 - d01 * d01
    u = (d11 * d02 - d01 * d12) / den
    v = (d00 * d12 - d01 * d02) / den
    eps = 1e-9
    inside = (u >= -eps) & (v >= -eps) & (u + v <= 1 + eps)
    return int(np.unique(ni[on_plane & inside]).size)


def validate_mesh(mesh: Mesh) -> MeshQualityReport:
    nodes, el = mesh.nodes, mesh.elements
    if len(el) == 0:
        raise EmptyMeshError("mesh has no elements")
    vol = signed_volumes(nodes, el)
    jac = 6.0 * vol
    scale = float(np.max(np.ptp(nodes, axis=0)))
    srt = np.sort(el, axis=1)
    degenerate = int(np.any(srt[:, 1:] == srt[:, :-1], axis=1).sum())
    duplicates = len(el) - len(np.unique(srt, axis=0))

    used = np.unique(el)
    e = el[:, _EDGES].reshape(-1, 2)
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(len(nodes), len(nodes)))
    _, comp = connected_components(adj, directed=False)
    components = int(np.unique(comp[used]).size)

    bfaces, counts = boundary_faces(el)
    closed = bool(np.all(counts <= 2))
    if closed and len(bfaces):
        be = np.sort(bfaces[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2), axis=1)
        _, ecount = np.unique(be, axis=0, return_counts=True)
        closed = bool(np.all(ecount % 2 == 0))
    hanging = _hanging_nodes(nodes, bfaces, 1e-9 * scale)
    ar = _aspect_ratios(nodes, el, vol)
    return MeshQualityReport(
        element_count=int(len(el)),
        node_count=int(len(nodes)),
        min_jacobian=float(jac.min()),
        max_jacobian=float(jac.max()),
        nonpositive_jacobians=int(np.sum(jac <= 0)),
        components=components,
        closed_boundary=closed,
        hanging_nodes=hanging,
        duplicate_elements=int(duplicates),
        degenerate_elements=degenerate,
        boundary_faces=int(len(bfaces)),
        min_aspect_ratio=float(ar.min()),
        max_aspect_ratio=float(ar.max()),
        mean_aspect_ratio=float(ar.mean()),
    )


# --------------------------------------------------------------------------
# 1D station placement
# --------------------------------------------------------------------------

def place_stations(breaks, h_of, samples: int = 257) -> np.ndarray:
    """Nodes along a line: every break is kept and each interval gets
    ``ceil(integral of 1/h)`` equal-measure divisions."""
    breaks = np.unique(np.asarray(breaks, dtype=float))
    out = [breaks[:1]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        x = np.linspace(a, b, samples)
        density = 1.0 / h_of(x)
        cum = cumulative_trapezoid(density, x, initial=0.0)
        n = max(1, int(math.ceil(cum[-1] - 1e-9)))
        targets = np.linspace(0.0, cum[-1], n + 1)[1:-1]
        out.append(np.interp(targets, cum, x))
        out.append(np.array([b]))
    return np.concatenate(out)


def _feature_distance(x, features):
    x = np.asarray(x, dtype=float)
    if not features:
        return np.full(x.shape, np.inf)
    return np.min(np.abs(x[:, None] - np.asarray(features)[None, :]), axis=1)


def _size_1d(params, features, graded=()):
    def h_of(x):
        h = size_field(_feature_distance(x, features), params)
        for x0, h0 in graded:
            h = np.minimum(h, h0 + GRADING * np.abs(x - x0))
        return h

    return h_of


# --------------------------------------------------------------------------
# generation
# --------------------------------------------------------------------------

def generate_mesh(model, spec=None, level: str | None = None) -> Mesh:
    """Mesh a ``WingModel`` or ``BoxModel``.

    ``spec`` is a ``MeshSpec``-like object (density, refinement_zones);
    ``level`` overrides its density.
    """
    requested = normalize_level(level or getattr(spec, "density", "medium"))
    zones = tuple(normalize_location(z) for z in getattr(spec, "refinement_zones", ()) or ())
    lvl = effective_level(model, requested)
    params = derive_size_params(lvl)
    if isinstance(model, BoxModel):
        nodes, elements = _box_mesh(model, params)
    elif isinstance(model, WingModel):
        nodes, elements = _wing_mesh(model, params, zones)
    else:
        raise TypeError(f"cannot mesh {type(model).__name__}")
    if len(elements) == 0:
        raise EmptyMeshError("mesh generation produced no elements")

    labels = model.classify_points(nodes[elements].mean(axis=1))
    keep = np.isin(labels, [int(r) for r in MATERIAL_REGIONS])
    dropped = int(np.sum(~keep))
    elements, labels = elements[keep], labels[keep]
    if len(elements) == 0:
        raise EmptyMeshError("no element centroid lies in a material region")
    nodes, elements = _compact(nodes, elements)

    mesh = Mesh(nodes, elements, labels.astype(np.int8), level=lvl)
    mesh.meta = {"requested_level": requested, "upgraded": lvl != requested, "dropped_candidates": dropped}
    mesh.element_sets = {"EALL": np.arange(len(elements))}
    for r in MATERIAL_REGIONS:
        idx = np.nonzero(labels == r)[0]
        if len(idx):
            mesh.element_sets[r.name] = idx
    mesh.node_sets = build_node_sets(model, nodes)
    return mesh


def _compact(nodes, elements):
    used, inverse = np.unique(elements, return_inverse=True)
    return nodes[used], inverse.reshape(elements.shape).astype(np.int64)


def semantic_locations(model) -> list[str]:
    names = ["wing_root", "wing_tip", "left_edge", "right_edge", "shell_surface"]
    if isinstance(model, WingModel):
        names += ["leading_edge", "trailing_edge"]
        names += [f"spar_{i + 1}" for i in range(model.spar_count)]
        names += [f"rib_{i + 1}" for i in range(model.rib_count)]
    return names


def build_node_sets(model, nodes) -> dict[str, np.ndarray]:
    sets = {}
    for name in semantic_locations(model):
        sel = resolve_semantic_location(model, name)
        sets[name] = np.nonzero(sel(nodes))[0]
    return sets


def _box_mesh(model: BoxModel, params: SizeFieldParams):
    n = [max(2, int(math.ceil(s / params.h_min - 1e-9))) for s in model.size]
    return structured_box(model.size, n)


def structured_box(size, divisions):
    """Grid of ``divisions`` cells per axis, each cube split into six tets around its main diagonal."""
    n = [int(k) for k in divisions]
    axes = [np.linspace(0.0, s, k + 1) for s, k in zip(size, n)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    nx, ny, nz = (k + 1 for k in n)

    def idx(i, j, k):
        return (i * ny + j) * nz + k

    i, j, k = np.meshgrid(np.arange(n[0]), np.arange(n[1]), np.arange(n[2]), indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    c = [idx(i + (v >> 2 & 1), j + (v >> 1 & 1), k + (v & 1)) for v in range(8)]
    # Kuhn paths from corner 0 to corner 7
    paths = [(4, 6), (4, 5), (2, 6), (2, 3), (1, 5), (1, 3)]
    tets = [np.stack([c[0], c[a], c[b], c[7]], axis=1) for a, b in paths]
    elements = np.concatenate(tets)
    return nodes, _orient(nodes, elements)


def _orient(nodes, elements):
    vol = signed_volumes(nodes, elements)
    flip = vol < 0
    elements = elements.copy()
    elements[flip, 2], elements[flip, 3] = elements[flip, 3], elements[flip, 2].copy()
    return elements


@dataclass
class _Section:
    nodes: np.ndarray  # (n, 2) x, z
    tris: np.ndarray  # (t, 3)
    kind: np.ndarray  # 0 lower shell, 1 core, 2 upper shell
    strip: np.ndarray  # chordwise strip index


def _column_positions(model: WingModel, params, zones):
    c = model.contour
    ts = model.shell_thickness
    extent = model.core_extent
    spar_faces = [x + s * model.spar_width / 2 for x in model.spar_positions for s in (-1, 1)]
    feats = [c.x_min] + list(model.spar_positions)
    if "trailing_edge" in zones or "right_edge" in zones:
        feats.append(c.x_max)
    # square-root shaped outline near the nose and the core tips
    h_tip = min(params.h_min / TIP_REFINEMENT, ts / 10.0)
    graded = [(c.x_min, h_tip)]
    kinks = [float(model.profile.surface(TE_CLOSURE_START, side)[0]) for side in (1, -1)]
    breaks = [c.x_min, c.x_max] + spar_faces + kinks
    if extent is not None:
        breaks += list(extent)
        graded += [(extent[0], h_tip), (extent[1], h_tip)]
    return place_stations(breaks, _size_1d(params, feats, graded)), extent


def _span_positions(model: WingModel, params, zones):
    faces = [y + s * model.rib_thickness / 2 for y in model.rib_positions for s in (-1, 1)]
    feats = [0.0] + list(model.rib_positions)
    if "wing_tip" in zones:
        feats.append(model.span)
    return place_stations([0.0, model.span] + faces, _size_1d(params, feats))


def _cross_section(model: WingModel, params, zones) -> _Section:
    c = model.contour
    ts = model.shell_thickness
    X, extent = _column_positions(model, params, zones)
    z_lo, z_hi = c.envelope(X)
    core_lo = np.full(len(X), np.nan)
    core_hi = np.full(len(X), np.nan)
    if extent is not None:
        inner = (X > extent[0]) & (X < extent[1])
        if inner.any():
            lo, hi = c.core_interval(X[inner], ts)
            core_lo[inner], core_hi[inner] = lo, hi
    h_col = size_field(_feature_distance(X, [c.x_min] + list(model.spar_positions)), params)
    n_t = max(2, int(math.ceil(ts / params.h_min - 1e-9)))

    columns = []  # per column: (node z array, index of core start, index of core end)
    for j, x in enumerate(X):
        if j == 0 or j == len(X) - 1:
            columns.append(None)
            continue
        if np.isnan(core_lo[j]) or core_hi[j] <= core_lo[j]:
            zs = np.linspace(z_lo[j], z_hi[j], 2 * n_t + 1)
            columns.append((zs, n_t, n_t))
            continue
        k = max(1, int(math.ceil((core_hi[j] - core_lo[j]) / h_col[j] - 1e-9)))
        zs = np.concatenate([
            np.linspace(z_lo[j], core_lo[j], n_t + 1),
            np.linspace(core_lo[j], core_hi[j], k + 1)[1:],
            np.linspace(core_hi[j], z_hi[j], n_t + 1)[1:],
        ])
        columns.append((zs, n_t, n_t + k))

    pts, offsets = [], []
    count = 0
    for j, col in enumerate(columns):
        offsets.append(count)
        if col is None:
            pts.append(np.array([[X[j], z_lo[j]]]))
            count += 1
        else:
            zs = col[0]
            pts.append(np.stack([np.full(len(zs), X[j]), zs], axis=1))
            count += len(zs)
    nodes = np.vstack(pts)

    tris, kind, strip = [], [], []

    def add(t, kd, s):
        tris.append(t)
        kind.append(kd)
        strip.append(s)

    for j in range(len(X) - 1):
        a, b = columns[j], columns[j + 1]
        oa, ob = offsets[j], offsets[j + 1]
        if a is None or b is None:
            col, oc, apex = (b, ob, oa) if a is None else (a, oa, ob)
            zs, c0, c1 = col
            for i in range(len(zs) - 1):
                kd = 0 if i < c0 else (1 if i < c1 else 2)
                add((oc + i, oc + i + 1, apex), kd, j)
            continue
        za, a0, a1 = a
        zb, b0, b1 = b
        # shell layers pair node by node
        for i in range(n_t):
            add((oa + i, ob + i, ob + i + 1), 0, j)
            add((oa + i, ob + i + 1, oa + i + 1), 0, j)
        ua, ub = len(za) - 1 - n_t, len(zb) - 1 - n_t
        for i in range(n_t):
            add((oa + ua + i, ob + ub + i, ob + ub + i + 1), 2, j)
            add((oa + ua + i, ob + ub + i + 1, oa + ua + i + 1), 2, j)
        # core strip by zipper merge on normalized height
        ka, kb = a1 - a0, b1 - b0
        ia = ib = 0
        while ia < ka or ib < kb:
            advance_a = ib >= kb or (ia < ka and (ia + 1) / ka <= (ib + 1) / kb)
            if advance_a:
                add((oa + a0 + ia, oa + a0 + ia + 1, ob + b0 + ib), 1, j)
                ia += 1
            else:
                add((oa + a0 + ia, ob + b0 + ib, ob + b0 + ib + 1), 1, j)
                ib += 1
    return _Section(nodes, np.asarray(tris, dtype=np.int64), np.asarray(kind), np.asarray(strip)), X


def _wing_mesh(model: WingModel, params: SizeFieldParams, zones):
    sec, X = _cross_section(model, params, zones)
    Y = _span_positions(model, params, zones)
    n2 = len(sec.nodes)
    nodes = np.empty((len(Y) * n2, 3))
    for l, y in enumerate(Y):
        nodes[l * n2 : (l + 1) * n2] = np.column_stack([sec.nodes[:, 0], np.full(n2, y), sec.nodes[:, 1]])

    mid_x = 0.5 * (X[sec.strip] + X[sec.strip + 1])
    in_spar = np.zeros(len(sec.tris), dtype=bool)
    for xs in model.spar_positions:
        in_spar |= np.abs(mid_x - xs) < 0.5 * model.spar_width
    mid_y = 0.5 * (Y[:-1] + Y[1:])
    in_rib = np.zeros(len(mid_y), dtype=bool)
    for yr in model.rib_positions:
        in_rib |= np.abs(mid_y - yr) < 0.5 * model.rib_thickness

    srt = np.sort(sec.tris, axis=1)
    i, j, k = srt[:, 0], srt[:, 1], srt[:, 2]
    blocks = []
    for l in range(len(Y) - 1):
        sel = (sec.kind != 1) | in_spar | in_rib[l]
        bi, bj, bk = i[sel] + l * n2, j[sel] + l * n2, k[sel] + l * n2
        ti, tj, tk = bi + n2, bj + n2, bk + n2
        blocks.append(np.stack([
            np.stack([bi, bj, bk, tk], axis=1),
            np.stack([bi, bj, tj, tk], axis=1),
            np.stack([bi, ti, tj, tk], axis=1),
        ], axis=1).reshape(-1, 4))
    elements = np.concatenate(blocks)
    return nodes, _orient(nodes, elements)


# --------------------------------------------------------------------------
# neutral text export
# --------------------------------------------------------------------------

NEUTRAL_HEADER = "# wingfea neutral mesh v1; units m; ids 1-based"


def write_neutral(mesh: Mesh, path) -> None:
    """Plain text: header, ``NODES n`` then ``id x y z``, ``ELEMENTS m`` then ``id n1 n2 n3 n4 region``."""
    lines = [NEUTRAL_HEADER, f"NODES {mesh.n_nodes}"]
    lines += [f"{i + 1} {x:.9e} {y:.9e} {z:.9e}" for i, (x, y, z) in enumerate(mesh.nodes.tolist())]
    lines.append(f"ELEMENTS {mesh.n_elements}")
    lines += [
        f"{i + 1} {a + 1} {b + 1} {c + 1} {d + 1} {int(r)}"
        for i, ((a, b, c, d), r) in enumerate(zip(mesh.elements.tolist(), mesh.labels.tolist()))
    ]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_neutral(path) -> Mesh:
    with open(path, encoding="ascii") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
    n = int(lines[0].split()[1])
    nodes = np.array([[float(v) for v in ln.split()[1:4]] for ln in lines[1 : n + 1]])
    m = int(lines[n + 1].split()[1])
    rows = np.array([[int(v) for v in ln.split()[1:6]] for ln in lines[n + 2 : n + 2 + m]], dtype=np.int64)
    return Mesh(nodes, rows[:, :4] - 1, rows[:, 4].astype(np.int8))
