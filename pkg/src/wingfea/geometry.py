"""Parametric NACA 4-digit wings as analytic region classifiers.

Coordinates: x runs chordwise (leading edge near x=0), y runs spanwise with
the root plane at y=0, z is the thickness direction. All lengths are metres.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid
from scipy.spatial import cKDTree

from .errors import CodeError, GeometryError, SamplingError, UnknownLocationError

# thickness polynomial coefficients (sqrt term first)
THICKNESS_COEFFS = (0.2969, -0.1260, -0.3516, 0.2843, -0.1015)
TE_CLOSURE_START = 0.99
TWO_SPAR_STATIONS = (0.33, 0.65)
THREE_SPAR_STATIONS = (0.25, 0.50, 0.75)
RIB_SPAN_LIMITS = (0.05, 0.95)


class Region(IntEnum):
    EXTERIOR = 0
    SHELL = 1
    SPAR = 2
    RIB = 3
    VOID_INTERIOR = 4


MATERIAL_REGIONS = (Region.SHELL, Region.SPAR, Region.RIB)

_BASE_LOCATIONS = (
    "wing_root",
    "wing_tip",
    "left_edge",
    "right_edge",
    "leading_edge",
    "trailing_edge",
    "shell_surface",
)


class _Vocabulary:
    """Supported semantic locations; ``spar_<i>`` and ``rib_<i>`` are 1-based."""

    _indexed = re.compile(r"^(spar|rib)_([1-9]\d*)$")

    def __contains__(self, name) -> bool:
        return name in _BASE_LOCATIONS or bool(self._indexed.match(str(name)))

    def __iter__(self):
        return iter(_BASE_LOCATIONS + ("spar_<i>", "rib_<i>"))

    def __repr__(self):
        return "{" + ", ".join(self) + "}"


SUPPORTED_LOCATIONS = _Vocabulary()


def normalize_location(descriptor: str) -> str:
    """``"Left edge"`` -> ``"left_edge"``; ``"spar 2"`` -> ``"spar_2"``."""
    return re.sub(r"[\s\-]+", "_", str(descriptor).strip().lower())


# --------------------------------------------------------------------------
# airfoil profile
# --------------------------------------------------------------------------

def naca_half_thickness(x, t):
    """Raw 4-digit half-thickness at normalized station(s) ``x``."""
    x = np.asarray(x, dtype=float)
    a0, a1, a2, a3, a4 = THICKNESS_COEFFS
    return (t / 0.2) * (a0 * np.sqrt(x) + a1 * x + a2 * x**2 + a3 * x**3 + a4 * x**4)


def closed_half_thickness(x, t):
    """Half-thickness with the trailing-edge gap removed over the last 1% of chord.

    The open-edge half-thickness at x=1 is subtracted with a linear weight
    that is zero at x=0.99 and one at x=1, so the outline stays smooth and
    concave ahead of the edge and closes exactly.
    """
    x = np.asarray(x, dtype=float)
    w = np.clip((x - TE_CLOSURE_START) / (1.0 - TE_CLOSURE_START), 0.0, 1.0)
    yt = naca_half_thickness(np.clip(x, 0.0, 1.0), t) - w * naca_half_thickness(1.0, t)
    return np.maximum(yt, 0.0)


def camber_line(x, m, p):
    """Camber ordinate and slope of the two-arc 4-digit mean line."""
    x = np.asarray(x, dtype=float)
    if m == 0.0:
        return np.zeros_like(x), np.zeros_like(x)
    fore = x < p
    yc = np.where(fore, m / p**2 * (2 * p * x - x**2), m / (1 - p) ** 2 * ((1 - 2 * p) + 2 * p * x - x**2))
    dyc = np.where(fore, 2 * m / p**2 * (p - x), 2 * m / (1 - p) ** 2 * (p - x))
    return yc, dyc


@dataclass(frozen=True)
class AirfoilProfile:
    code: str
    chord: float
    n: int
    m: float
    p: float
    t: float
    x: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    lower: np.ndarray = field(repr=False)

    def surface(self, xn, side: int) -> np.ndarray:
        """Physical (x, z) of the surface at normalized stations ``xn``.

        ``side`` is +1 for the upper and -1 for the lower surface; thickness
        is laid off perpendicular to the camber line.
        """
        xn = np.asarray(xn, dtype=float)
        yt = closed_half_thickness(xn, self.t)
        yc, dyc = camber_line(xn, self.m, self.p)
        theta = np.arctan(dyc)
        px = xn - side * yt * np.sin(theta)
        pz = yc + side * yt * np.cos(theta)
        return np.stack([px, pz], axis=-1) * self.chord

    def half_thickness(self, xn):
        return closed_half_thickness(xn, self.t)

    def camber(self, xn):
        return camber_line(xn, self.m, self.p)[0]

    @property
    def max_thickness(self) -> float:
        xs = np.linspace(0.0, 1.0, 20001)
        return 2.0 * float(np.max(closed_half_thickness(xs, self.t))) * self.chord

    @property
    def leading_edge_radius(self) -> float:
        return 1.1019 * self.t**2 * self.chord


def parse_naca_code(code) -> tuple[str, float, float, float]:
    text = str(code).strip().upper().removeprefix("NACA").strip()
    if not re.fullmatch(r"\d{4}", text):
        raise CodeError(f"NACA code {code!r} is not four digits")
    m, p, t = int(text[0]) / 100.0, int(text[1]) / 10.0, int(text[2:]) / 100.0
    if t <= 0:
        raise CodeError(f"NACA code {code!r} has zero thickness")
    if (m == 0) != (p == 0):
        raise CodeError(f"NACA code {code!r}: camber and its position must both be zero or both nonzero")
    return text, m, p, t


def naca4_profile(code, chord: float, n: int = 129) -> AirfoilProfile:
    text, m, p, t = parse_naca_code(code)
    if n < 32:
        raise SamplingError(f"at least 32 stations required, got {n}")
    if not chord > 0:
        raise GeometryError("chord must be positive")
    beta = np.linspace(0.0, math.pi, n)
    x = 0.5 * (1.0 - np.cos(beta))
    prof = AirfoilProfile(text, float(chord), n, m, p, t, x, np.empty((0, 2)), np.empty((0, 2)))
    object.__setattr__(prof, "upper", prof.surface(x, +1))
    object.__setattr__(prof, "lower", prof.surface(x, -1))
    return prof


# --------------------------------------------------------------------------
# closed contour utilities
# --------------------------------------------------------------------------

class Contour:
    """Closed airfoil outline with vertical-line envelope and distance queries.

    Loop parameter s in [0, 2*pi]: s < pi walks the upper surface from the
    trailing edge to the leading edge, s >= pi walks the lower surface back.
    """

    def __init__(self, profile: AirfoilProfile, dense: int = 12001):
        self.profile = profile
        self._s_left = self._find_leftmost()
        self.x_min = float(self.point(self._s_left)[0])
        self.x_max = float(self.point(0.0)[0])
        beta = np.linspace(0.0, math.pi, dense)
        xn = 0.5 * (1.0 - np.cos(beta))
        up = profile.surface(xn[::-1], +1)
        lo = profile.surface(xn[1:], -1)
        self.loop = np.vstack([up, lo])  # TE -> LE -> TE, first == last
        self._tree = cKDTree(self.loop)
        # x-monotone chains split at the leftmost point
        k = int(np.argmin(self.loop[:, 0]))
        left = self.point(self._s_left)
        self._top = np.vstack([left, self.loop[:k][::-1]])
        self._bot = np.vstack([left, self.loop[k + 1 :]])
        self._top = self._top[np.concatenate([[True], np.diff(self._top[:, 0]) > 0])]
        self._bot = self._bot[np.concatenate([[True], np.diff(self._bot[:, 0]) > 0])]

    def point(self, s):
        s = np.asarray(s, dtype=float)
        upper = s < math.pi
        beta = np.where(upper, math.pi - s, s - math.pi)
        xn = 0.5 * (1.0 - np.cos(beta))
        up = self.profile.surface(xn, +1)
        lo = self.profile.surface(xn, -1)
        return np.where(upper[..., None], up, lo)

    def _find_leftmost(self) -> float:
        s = np.linspace(math.pi * 0.5, math.pi * 1.5, 20001)
        k = int(np.argmin(self.point(s)[:, 0]))
        lo, hi = s[max(k - 1, 0)], s[min(k + 1, len(s) - 1)]
        for _ in range(100):  # golden-section refinement
            a = hi - 0.618033988749895 * (hi - lo)
            b = lo + 0.618033988749895 * (hi - lo)
            if self.point(a)[0] < self.point(b)[0]:
                hi = b
            else:
                lo = a
        return 0.5 * (lo + hi)

    def envelope(self, X):
        """(z_lo, z_hi) where the vertical line at ``X`` meets the outline."""
        X = np.clip(np.asarray(X, dtype=float), self.x_min, self.x_max)
        return np.interp(X, self._bot[:, 0], self._bot[:, 1]), np.interp(X, self._top[:, 0], self._top[:, 1])

    def contains(self, X, Z):
        X = np.asarray(X, dtype=float)
        Z = np.asarray(Z, dtype=float)
        z_lo, z_hi = self.envelope(X)
        return (X >= self.x_min) & (X <= self.x_max) & (Z >= z_lo) & (Z <= z_hi)

    def distance(self, X, Z):
        """Euclidean distance from (X, Z) to the outline polyline."""
        X = np.asarray(X, dtype=float)
        Z = np.asarray(Z, dtype=float)
        pts = np.stack([X.ravel(), Z.ravel()], axis=-1)
        _, k = self._tree.query(pts)
        n = len(self.loop)
        best = np.full(len(pts), np.inf)
        for a_idx, b_idx in ((k - 1, k), (k, k + 1)):
            a = self.loop[np.clip(a_idx, 0, n - 1)]
            b = self.loop[np.clip(b_idx, 0, n - 1)]
            ab = b - a
            denom = np.einsum("ij,ij->i", ab, ab)
            tpar = np.where(denom > 0, np.einsum("ij,ij->i", pts - a, ab) / np.where(denom > 0, denom, 1.0), 0.0)
            proj = a + np.clip(tpar, 0.0, 1.0)[:, None] * ab
            best = np.minimum(best, np.linalg.norm(pts - proj, axis=1))
        return best.reshape(X.shape)

    def core_interval(self, X, offset: float):
        """Vertical extent of the region deeper than ``offset`` below the outline.

        Returns (z_lo, z_hi) arrays with NaN where the column has no such
        region. Distance along a column is unimodal, so a golden-section
        search finds the deepest point and bisection finds both crossings.
        """
        X = np.atleast_1d(np.asarray(X, dtype=float))
        z_lo, z_hi = self.envelope(X)
        z_star, d_star = self._deepest(X, z_lo, z_hi)
        has = d_star > offset
        lo = self._crossing(X, z_lo, z_star, offset, rising=True)
        hi = self._crossing(X, z_star, z_hi, offset, rising=False)
        return np.where(has, lo, np.nan), np.where(has, hi, np.nan)

    def _deepest(self, X, a, b, iterations: int = 48):
        g = 0.618033988749895
        a, b = a.copy(), b.copy()
        c, d = b - g * (b - a), a + g * (b - a)
        fc, fd = self.distance(X, c), self.distance(X, d)
        for _ in range(iterations):
            left = fc > fd
            # left: keep [a, d], old c becomes the new d
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            nd = np.where(left, c, a + g * (b - a))
            nc = np.where(left, b - g * (b - a), d)
            fnew = self.distance(X, np.where(left, nc, nd))
            fd, fc = np.where(left, fc, fnew), np.where(left, fnew, fd)
            c, d = nc, nd
        z = 0.5 * (a + b)
        return z, self.distance(X, z)

    def _crossing(self, X, a, b, offset, rising: bool):
        lo, hi = a.copy(), b.copy()
        for _ in range(52):
            mid = 0.5 * (lo + hi)
            below = self.distance(X, mid) < offset
            move_lo = below if rising else ~below
            lo = np.where(move_lo, mid, lo)
            hi = np.where(move_lo, hi, mid)
        return 0.5 * (lo + hi)

    def core_extent(self, offset: float) -> tuple[float, float] | None:
        """Chordwise interval over which a core deeper than ``offset`` exists."""
        xs = np.linspace(self.x_min, self.x_max, 401)
        _, d = self._deepest(xs, *self.envelope(xs))
        k = int(np.argmax(d))
        if d[k] <= offset:
            return None

        def deep(X):
            return self._deepest(np.atleast_1d(X), *self.envelope(np.atleast_1d(X)))[1][0] > offset

        def edge(lo, hi, inside_at_hi):
            for _ in range(48):
                mid = 0.5 * (lo + hi)
                if deep(mid) == inside_at_hi:
                    hi = mid
                else:
                    lo = mid
            return hi

        x_a = edge(self.x_min, xs[k], True)
        x_b = edge(self.x_max, xs[k], True)
        return x_a, x_b


# --------------------------------------------------------------------------
# models
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionSelector:
    descriptor: str
    predicate: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, points) -> np.ndarray:
        return self.predicate(np.atleast_2d(np.asarray(points, dtype=float)))


@dataclass(frozen=True)
class WingModel:
    profile: AirfoilProfile
    span: float
    shell_thickness: float
    spar_count: int
    spar_width: float
    spar_stations: tuple[float, ...]
    rib_count: int
    rib_thickness: float
    rib_stations: tuple[float, ...]

    @property
    def chord(self) -> float:
        return self.profile.chord

    @cached_property
    def contour(self) -> Contour:
        return Contour(self.profile)

    @property
    def spar_positions(self) -> tuple[float, ...]:
        return tuple(s * self.chord for s in self.spar_stations)

    @property
    def rib_positions(self) -> tuple[float, ...]:
        return tuple(s * self.span for s in self.rib_stations)

    @cached_property
    def core_extent(self):
        return self.contour.core_extent(self.shell_thickness)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        c = self.contour
        z = np.concatenate([self.profile.upper[:, 1], self.profile.lower[:, 1]])
        return (np.array([c.x_min, 0.0, z.min()]), np.array([c.x_max, self.span, z.max()]))

    def thin_features(self) -> dict[str, float]:
        return {"shell": self.shell_thickness, "spar": self.spar_width, "rib": self.rib_thickness}

    def classify_points(self, points) -> np.ndarray:
        """Vectorized region labels (``Region`` values) for an (N, 3) array."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        X, Y, Z = pts[:, 0], pts[:, 1], pts[:, 2]
        out = np.full(len(pts), int(Region.EXTERIOR), dtype=np.int8)
        inside = (Y >= 0.0) & (Y <= self.span) & self.contour.contains(X, Z)
        if not inside.any():
            return out
        idx = np.nonzero(inside)[0]
        Xi, Yi, Zi = X[idx], Y[idx], Z[idx]
        in_spar = np.zeros(len(idx), dtype=bool)
        for xs in self.spar_positions:
            in_spar |= np.abs(Xi - xs) <= 0.5 * self.spar_width
        in_rib = np.zeros(len(idx), dtype=bool)
        for yr in self.rib_positions:
            in_rib |= np.abs(Yi - yr) <= 0.5 * self.rib_thickness
        in_shell = self.contour.distance(Xi, Zi) <= self.shell_thickness
        lab = np.full(len(idx), int(Region.VOID_INTERIOR), dtype=np.int8)
        lab[in_shell] = Region.SHELL
        lab[in_rib] = Region.RIB
        lab[in_spar] = Region.SPAR
        out[idx] = lab
        return out

    def section_areas(self, samples: int = 2001) -> dict:
        """Cross-section areas used by :meth:`volume` (m^2)."""
        c = self.contour
        x, z = c.loop[:, 0], c.loop[:, 1]
        airfoil = 0.5 * abs(float(np.dot(x[:-1], z[1:]) - np.dot(x[1:], z[:-1])))
        core = 0.0
        spars = []
        extent = self.core_extent
        if extent is not None:
            xa, xb = extent
            xc = xa + (xb - xa) * 0.5 * (1 - np.cos(np.linspace(0, math.pi, samples)))
            lo, hi = c.core_interval(xc, self.shell_thickness)
            core = trapezoid(np.nan_to_num(hi - lo), xc)
            for xsp in self.spar_positions:
                a = max(xsp - 0.5 * self.spar_width, xa)
                b = min(xsp + 0.5 * self.spar_width, xb)
                if b <= a:
                    spars.append(0.0)
                    continue
                xq = np.linspace(a, b, 65)
                lo, hi = c.core_interval(xq, self.shell_thickness)
                spars.append(float(trapezoid(np.nan_to_num(hi - lo), xq)))
        return {"airfoil": float(airfoil), "core": float(core), "spar_core": spars}

    def volume(self) -> float:
        """Material volume (shell, spars and ribs) in m^3."""
        a = self.section_areas()
        shell = self.span * (a["airfoil"] - a["core"])
        spars = self.span * sum(a["spar_core"])
        ribs = self.rib_count * self.rib_thickness * (a["core"] - sum(a["spar_core"]))
        return shell + spars + ribs

    def resolve(self, descriptor: str) -> RegionSelector:
        return resolve_semantic_location(self, descriptor)

    def summary(self) -> dict:
        return {
            "kind": "naca_wing",
            "naca_code": self.profile.code,
            "chord_m": self.chord,
            "span_m": self.span,
            "shell_thickness_m": self.shell_thickness,
            "spar_count": self.spar_count,
            "spar_width_m": self.spar_width,
            "spar_stations": list(self.spar_stations),
            "rib_count": self.rib_count,
            "rib_thickness_m": self.rib_thickness,
            "rib_stations": list(self.rib_stations),
            "max_thickness_m": self.profile.max_thickness,
            "volume_m3": self.volume(),
        }


@dataclass(frozen=True)
class BoxModel:
    """Axis-aligned solid block from the origin; its material is labelled SHELL."""

    size: tuple[float, float, float]

    @property
    def bounds(self):
        return np.zeros(3), np.asarray(self.size, dtype=float)

    def thin_features(self) -> dict[str, float]:
        return {"solid": min(self.size)}

    def classify_points(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo, hi = self.bounds
        inside = np.all((pts >= lo) & (pts <= hi), axis=1)
        return np.where(inside, int(Region.SHELL), int(Region.EXTERIOR)).astype(np.int8)

    def volume(self) -> float:
        return float(np.prod(self.size))

    def resolve(self, descriptor: str) -> RegionSelector:
        return resolve_semantic_location(self, descriptor)

    def summary(self) -> dict:
        return {"kind": "box", "size_m": list(self.size), "volume_m3": self.volume()}


def classify_point(model, point) -> Region:
    return Region(int(model.classify_points(np.asarray(point, dtype=float)[None, :])[0]))


def spar_stations_for(count: int) -> tuple[float, ...]:
    if count == 2:
        return TWO_SPAR_STATIONS
    if count == 3:
        return THREE_SPAR_STATIONS
    raise GeometryError(f"spar count must be 2 or 3, got {count}")


def rib_stations_for(count: int) -> tuple[float, ...]:
    if count not in (2, 3):
        raise GeometryError(f"rib count must be 2 or 3, got {count}")
    lo, hi = RIB_SPAN_LIMITS
    return tuple(float(v) for v in np.linspace(lo, hi, count))


def build_wing(profile: AirfoilProfile, span: float, shell_t: float, spar_spec, rib_spec) -> WingModel:
    """Assemble a wing from a profile.

    ``spar_spec`` is ``(count, width)`` and ``rib_spec`` is
    ``(count, thickness)``; all lengths in metres.
    """
    spar_count, spar_width = spar_spec
    rib_count, rib_thickness = rib_spec
    for name, v in (("span", span), ("shell thickness", shell_t), ("spar width", spar_width), ("rib thickness", rib_thickness)):
        if not (v > 0 and math.isfinite(v)):
            raise GeometryError(f"{name} must be positive, got {v}")
    spars = spar_stations_for(int(spar_count))
    ribs = rib_stations_for(int(rib_count))
    half = 0.5 * profile.max_thickness
    if shell_t >= half:
        raise GeometryError(
            f"shell thickness {shell_t * 1e3:.3g} mm leaves no interior: "
            f"maximum airfoil half-thickness is {half * 1e3:.3g} mm"
        )
    chord = profile.chord
    edges = [(s * chord - spar_width / 2, s * chord + spar_width / 2) for s in spars]
    if edges[0][0] <= 0 or edges[-1][1] >= chord or any(b[0] <= a[1] for a, b in zip(edges, edges[1:])):
        raise GeometryError("spars overlap each other or the chord ends")
    slabs = [(r * span - rib_thickness / 2, r * span + rib_thickness / 2) for r in ribs]
    if slabs[0][0] <= 0 or slabs[-1][1] >= span or any(b[0] <= a[1] for a, b in zip(slabs, slabs[1:])):
        raise GeometryError("ribs overlap each other or the span ends")
    return WingModel(profile, float(span), float(shell_t), int(spar_count), float(spar_width), spars,
                     int(rib_count), float(rib_thickness), ribs)


def build_model(geometry):
    """Model from a ``GeometryParams``-like object."""
    if geometry.kind == "box":
        return BoxModel(tuple(float(s) for s in geometry.box_size))
    profile = naca4_profile(geometry.naca_code, geometry.chord)
    return build_wing(
        profile,
        geometry.span,
        geometry.shell_thickness,
        (geometry.spar_count, geometry.spar_width),
        (geometry.rib_count, geometry.rib_thickness),
    )


# --------------------------------------------------------------------------
# semantic locations
# --------------------------------------------------------------------------

def resolve_semantic_location(model, descriptor: str) -> RegionSelector:
    """Map a semantic location to a point predicate; unknown names raise."""
    name = normalize_location(descriptor)
    if name not in SUPPORTED_LOCATIONS:
        raise UnknownLocationError(f"unknown location {descriptor!r}; supported: {SUPPORTED_LOCATIONS!r}")
    lo, hi = model.bounds
    tol = 1e-6 * float(np.max(hi - lo))

    def plane(axis, value):
        return RegionSelector(name, lambda p: np.abs(p[:, axis] - value) <= tol)

    if name == "left_edge":
        return plane(0, lo[0])
    if name == "right_edge":
        return plane(0, hi[0])
    if name == "wing_root":
        return plane(1, 0.0)
    if name == "wing_tip":
        return plane(1, hi[1])

    if isinstance(model, BoxModel):
        if name == "shell_surface":
            return RegionSelector(name, lambda p: np.any((np.abs(p - lo) <= tol) | (np.abs(p - hi) <= tol), axis=1))
        raise UnknownLocationError(f"location {descriptor!r} is not defined on a box model")

    contour = model.contour

    def on_surface(p):
        return (p[:, 1] >= -tol) & (p[:, 1] <= model.span + tol) & (contour.distance(p[:, 0], p[:, 2]) <= tol)

    band = 0.01 * model.chord
    if name == "shell_surface":
        return RegionSelector(name, on_surface)
    if name == "leading_edge":
        return RegionSelector(name, lambda p: on_surface(p) & (p[:, 0] <= contour.x_min + band))
    if name == "trailing_edge":
        return RegionSelector(name, lambda p: on_surface(p) & (p[:, 0] >= contour.x_max - band))
    kind, number = name.split("_")
    i = int(number) - 1
    if kind == "spar":
        if i >= model.spar_count:
            raise UnknownLocationError(f"{descriptor!r}: model has {model.spar_count} spars")
        xs = model.spar_positions[i]
        return RegionSelector(name, lambda p: np.abs(p[:, 0] - xs) <= 0.5 * model.spar_width + tol)
    if i >= model.rib_count:
        raise UnknownLocationError(f"{descriptor!r}: model has {model.rib_count} ribs")
    yr = model.rib_positions[i]
    return RegionSelector(name, lambda p: np.abs(p[:, 1] - yr) <= 0.5 * model.rib_thickness + tol)


# --------------------------------------------------------------------------
# surface export
# --------------------------------------------------------------------------

def surface_triangles(model) -> np.ndarray:
    """Outer surface as an (N, 3, 3) triangle array."""
    if isinstance(model, BoxModel):
        lx, ly, lz = model.size
        v = np.array([[x, y, z] for x in (0, lx) for y in (0, ly) for z in (0, lz)], dtype=float)
        quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
        tris = [(q[0], q[1], q[2]) for q in quads] + [(q[0], q[2], q[3]) for q in quads]
        return v[np.array(tris)]
    loop = np.vstack([model.profile.upper[::-1], model.profile.lower[1:]])
    b = model.span
    tris = []
    for a, c in zip(loop[:-1], loop[1:]):
        p0, p1 = np.array([a[0], 0, a[1]]), np.array([c[0], 0, c[1]])
        q0, q1 = p0 + [0, b, 0], p1 + [0, b, 0]
        tris += [(p0, p1, q1), (p0, q1, q0)]
    up, lo = model.profile.upper, model.profile.lower
    for i in range(len(up) - 1):
        for y in (0.0, b):
            u0, u1 = np.array([up[i, 0], y, up[i, 1]]), np.array([up[i + 1, 0], y, up[i + 1, 1]])
            l0, l1 = np.array([lo[i, 0], y, lo[i, 1]]), np.array([lo[i + 1, 0], y, lo[i + 1, 1]])
            if y == 0.0:
                tris += [(u0, u1, l1), (u0, l1, l0)]
            else:
                tris += [(u0, l1, u1), (u0, l0, l1)]
    return np.array(tris)


def write_stl(model, path, name: str = "wing") -> None:
    tris = surface_triangles(model)
    normals = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    lengths = np.linalg.norm(normals, axis=1)
    normals = np.divide(normals, lengths[:, None], out=np.zeros_like(normals), where=lengths[:, None] > 0)
    lines = [f"solid {name}"]
    for n, t in zip(normals, tris):
        lines.append(f"  facet normal {n[0]:.9e} {n[1]:.9e} {n[2]:.9e}")
        lines.append("    outer loop")
        for v in t:
            lines.append(f"      vertex {v[0]:.9e} {v[1]:.9e} {v[2]:.9e}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append(f"endsolid {name}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
