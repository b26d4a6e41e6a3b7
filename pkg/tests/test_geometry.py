from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wingfea.errors import CodeError, GeometryError, SamplingError, UnknownLocationError
from wingfea.geometry import (
    BoxModel,
    Region,
    build_wing,
    classify_point,
    closed_half_thickness,
    naca4_profile,
    naca_half_thickness,
    resolve_semantic_location,
    surface_triangles,
    write_stl,
)


def thickness_decimal(x: str, t: str) -> float:
    getcontext().prec = 50
    x, t = Decimal(x), Decimal(t)
    poly = (Decimal("0.2969") * x.sqrt() - Decimal("0.1260") * x - Decimal("0.3516") * x**2
            + Decimal("0.2843") * x**3 - Decimal("0.1015") * x**4)
    return float(t / Decimal("0.2") * poly)


def test_thickness_matches_high_precision_oracle():
    assert abs(float(naca_half_thickness(0.3, 0.12)) - thickness_decimal("0.3", "0.12")) <= 1e-12
    p = naca4_profile("4412", 1.0)
    assert abs(float(p.half_thickness(0.3)) - thickness_decimal("0.3", "0.12")) <= 1e-12
    assert naca_half_thickness(0.0, 0.12) == 0.0


def test_naca0012_symmetric():
    p = naca4_profile("0012", 0.2, n=101)
    assert np.allclose(p.upper[:, 1], -p.lower[:, 1], atol=0)
    assert np.allclose(p.upper[:, 0], p.lower[:, 0], atol=0)
    assert p.upper[0, 1] == 0.0


def test_trailing_edge_closed_and_thickness_nonnegative():
    for code in ("0012", "4412", "2415"):
        p = naca4_profile(code, 0.2)
        gap = np.linalg.norm(p.upper[-1] - p.lower[-1])
        assert gap < 1e-6 * p.chord
        xs = np.linspace(0, 1, 5001)
        assert np.all(closed_half_thickness(xs, p.t) >= 0)


def test_profile_residual_before_closure():
    # thickness is laid off normal to the camber line, so upper-lower distance is 2*y_t
    p = naca4_profile("4412", 1.0, n=257)
    keep = p.x < 0.99
    gap = np.linalg.norm(p.upper[keep] - p.lower[keep], axis=1)
    assert np.max(np.abs(gap - 2 * naca_half_thickness(p.x[keep], 0.12))) < 1e-9


def test_profile_errors():
    with pytest.raises(CodeError):
        naca4_profile("44A2", 0.2)
    with pytest.raises(CodeError):
        naca4_profile("12", 0.2)
    with pytest.raises(SamplingError):
        naca4_profile("4412", 0.2, n=16)


def test_spar_and_rib_stations(wing):
    assert wing.spar_stations == (0.33, 0.65)
    assert wing.chord == 0.2 and wing.span == 0.2
    three = build_wing(naca4_profile("4412", 0.2), 0.2, 1e-3, (3, 1e-3), (3, 1e-3))
    assert three.spar_stations == (0.25, 0.50, 0.75)
    assert three.rib_stations == pytest.approx((0.05, 0.5, 0.95))
    assert wing.volume() > 0


def test_thick_shell_rejected():
    p = naca4_profile("4412", 0.2)
    assert p.max_thickness == pytest.approx(0.12 * 0.2, rel=2e-3)
    with pytest.raises(GeometryError):
        build_wing(p, 0.2, 50e-3, (2, 1e-3), (2, 1e-3))
    with pytest.raises(GeometryError):
        build_wing(p, 0.2, 1e-3, (4, 1e-3), (2, 1e-3))


def test_classify_points(wing):
    assert classify_point(wing, (0.1, 0.1, 0.5)) == Region.EXTERIOR
    xs = wing.spar_positions[0]
    zc = float(wing.profile.camber(0.33)) * wing.chord
    assert classify_point(wing, (xs, 0.1, zc)) == Region.SPAR
    yr = wing.rib_positions[0]
    assert classify_point(wing, (0.1, yr, float(wing.profile.camber(0.5)) * 0.2)) == Region.RIB
    assert classify_point(wing, (0.1, 0.1, float(wing.profile.camber(0.5)) * 0.2)) == Region.VOID_INTERIOR
    # spar wins over shell and rib where they overlap
    z_top = float(wing.contour.envelope(xs)[1])
    assert classify_point(wing, (xs, yr, z_top - 0.2e-3)) == Region.SPAR


def test_monte_carlo_mass_matches(wing, wing_coarse_mesh):
    from wingfea.solver import mass

    lo, hi = wing.bounds
    rng = np.random.default_rng(12345)
    n = 1_000_000
    pts = lo + (hi - lo) * rng.random((n, 3))
    frac = np.isin(wing.classify_points(pts), [1, 2, 3]).mean()
    mc_mass = frac * np.prod(hi - lo) * 2810
    assert mc_mass == pytest.approx(mass(wing_coarse_mesh, 2810), rel=0.01)
    assert mc_mass == pytest.approx(wing.volume() * 2810, rel=0.01)


def test_semantic_locations(wing):
    pts = np.array([[0.05, 0.0, 0.0], [0.05, 0.2, 0.0], [0.05, 0.1, 0.0]])
    root = resolve_semantic_location(wing, "wing_root")(pts)
    tip = resolve_semantic_location(wing, "Wing tip")(pts)
    assert root.tolist() == [True, False, False]
    assert tip.tolist() == [False, True, False]
    assert not np.any(root & tip)
    with pytest.raises(UnknownLocationError):
        resolve_semantic_location(wing, "fuselage_attachment")
    with pytest.raises(UnknownLocationError):
        resolve_semantic_location(wing, "spar_3")


def test_left_edge_on_plate():
    box = BoxModel((0.1, 0.05, 0.01))
    sel = resolve_semantic_location(box, "left edge")
    assert sel(np.array([[0.0, 0.02, 0.005], [0.1, 0.02, 0.005]])).tolist() == [True, False]


def test_determinism():
    a = build_wing(naca4_profile("4412", 0.2), 0.2, 1e-3, (2, 1e-3), (2, 1e-3))
    b = build_wing(naca4_profile("4412", 0.2), 0.2, 1e-3, (2, 1e-3), (2, 1e-3))
    pts = np.random.default_rng(1).random((2000, 3)) * [0.2, 0.2, 0.04] - [0, 0, 0.01]
    assert np.array_equal(a.classify_points(pts), b.classify_points(pts))
    assert np.array_equal(a.profile.upper, b.profile.upper)


def test_stl_export(tmp_path, wing):
    tris = surface_triangles(wing)
    assert tris.shape[1:] == (3, 3)
    write_stl(wing, tmp_path / "w.stl")
    text = (tmp_path / "w.stl").read_text()
    assert text.startswith("solid wing") and text.count("facet normal") == len(tris)


sym_wing = build_wing(naca4_profile("0012", 0.2), 0.2, 1e-3, (2, 1e-3), (2, 1e-3))
points = st.tuples(st.floats(0, 0.2), st.floats(0, 0.2), st.floats(-0.013, 0.013))


@given(points)
@settings(max_examples=200, deadline=None)
def test_naca0012_mirror_symmetry(p):
    x, y, z = p
    assert classify_point(sym_wing, (x, y, z)) == classify_point(sym_wing, (x, y, -z))


thin = build_wing(naca4_profile("4412", 0.2), 0.2, 1e-3, (2, 1e-3), (2, 1e-3))
thick = build_wing(naca4_profile("4412", 0.2), 0.2, 2e-3, (2, 1e-3), (2, 1e-3))


@given(st.tuples(st.floats(0, 0.2), st.floats(0, 0.2), st.floats(-0.01, 0.03)))
@settings(max_examples=200, deadline=None)
def test_thicker_shell_never_removes_material(p):
    material = (1, 2, 3)
    if classify_point(thin, p) in material:
        assert classify_point(thick, p) in material
