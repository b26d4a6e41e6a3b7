import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wingfea.errors import EmptyMeshError, ResolutionError
from wingfea.geometry import BoxModel, Region, build_wing, naca4_profile
from wingfea.mesher import (
    LEVELS,
    Mesh,
    SizeFieldParams,
    derive_size_params,
    effective_level,
    generate_mesh,
    read_neutral,
    signed_volumes,
    size_field,
    validate_mesh,
    write_neutral,
)

FINE_PARAMS = SizeFieldParams(0.5e-3, 3.0e-3, 1.0e-3, 30.0e-3)


def threshold_size(d, p):
    if d < p.d_min:
        return p.h_min
    if d > p.d_max:
        return p.h_max
    return p.h_min + (p.h_max - p.h_min) * (d - p.d_min) / (p.d_max - p.d_min)


def test_size_field_examples():
    assert size_field(0.0, FINE_PARAMS) == 0.5e-3
    assert size_field(1e9, FINE_PARAMS) == 3.0e-3
    assert size_field(15.5e-3, FINE_PARAMS) == pytest.approx(1.75e-3, abs=1e-15)


def test_derived_params():
    fine = derive_size_params("fine")
    assert (fine.h_min, fine.d_min, fine.d_max) == pytest.approx((1.0e-3, 2.0e-3, 60.0e-3))
    assert derive_size_params("ultra_fine").h_min == 0.2e-3
    assert derive_size_params("coarse").h_min == 5.0e-3
    for level in LEVELS:
        p = derive_size_params(level)
        assert p.d_min == 2 * p.h_min and p.d_max == 10 * p.h_max and p.h_max == 6 * p.h_min
    with pytest.raises(ValueError):
        SizeFieldParams(2.0, 1.0, 0.0, 1.0)


@given(
    h_min=st.floats(1e-4, 1e-2),
    ratio=st.floats(1.0, 10.0),
    d_min=st.floats(0, 1e-2),
    span=st.floats(1e-4, 1e-1),
    d=st.lists(st.floats(0, 0.5), min_size=2, max_size=20),
)
@settings(max_examples=200, deadline=None)
def test_size_field_monotone_and_matches_formula(h_min, ratio, d_min, span, d):
    p = SizeFieldParams(h_min, h_min * ratio, d_min, d_min + span)
    d = np.sort(np.asarray(d))
    h = size_field(d, p)
    assert np.all(np.diff(h) >= -1e-18)
    assert np.allclose(h, [threshold_size(x, p) for x in d], rtol=0, atol=1e-15)
    # continuity at both knots
    for knot in (p.d_min, p.d_max):
        assert abs(size_field(knot * (1 + 1e-12), p) - size_field(knot * (1 - 1e-12) if knot else 0.0, p)) < 1e-9


def test_box_volume_conserved():
    mesh = generate_mesh(BoxModel((0.01, 0.01, 0.01)), level="coarse")
    assert mesh.n_elements > 0
    assert mesh.volume() == pytest.approx(1e-6, rel=5e-3)
    assert validate_mesh(mesh).valid


def test_wing_mesh_valid_and_labelled(wing, wing_coarse_mesh):
    mesh = wing_coarse_mesh
    report = validate_mesh(mesh)
    assert report.valid
    assert report.positive_jacobian_fraction == 1.0
    assert report.components == 1 and report.hanging_nodes == 0 and report.closed_boundary
    assert np.array_equal(mesh.labels, wing.classify_points(mesh.centroids()))
    for name in ("wing_root", "wing_tip", "leading_edge", "trailing_edge", "spar_1", "spar_2", "rib_1", "rib_2"):
        assert len(mesh.node_sets[name]) > 0, name
    assert set(np.unique(mesh.labels)) == {int(Region.SHELL), int(Region.SPAR), int(Region.RIB)}
    assert validate_mesh(mesh) == report


def test_thin_shell_upgrades_level():
    wing = build_wing(naca4_profile("4412", 0.2), 0.2, 0.4e-3, (2, 1e-3), (2, 1e-3))
    assert effective_level(wing, "medium") == "ultra_fine"
    with pytest.raises(ResolutionError):
        effective_level(BoxModel((0.1, 0.1, 1e-5)), "coarse")


def test_single_tet_orientation():
    nodes = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    good = Mesh(nodes, np.array([[0, 1, 2, 3]]), np.array([1], dtype=np.int8))
    assert validate_mesh(good).nonpositive_jacobians == 0
    assert signed_volumes(nodes, good.elements)[0] == pytest.approx(1 / 6)
    bad = Mesh(nodes, np.array([[0, 2, 1, 3]]), np.array([1], dtype=np.int8))
    assert validate_mesh(bad).nonpositive_jacobians == 1


def test_two_disjoint_tets():
    a = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    nodes = np.vstack([a, a + 5])
    mesh = Mesh(nodes, np.array([[0, 1, 2, 3], [4, 5, 6, 7]]), np.ones(2, dtype=np.int8))
    assert validate_mesh(mesh).components == 2


def test_hanging_node_detected():
    # one big tet face meets two small tets whose shared edge midpoint sits on it
    nodes = np.array([[0, 0, 0], [2, 0, 0], [0, 2, 0], [0, 0, 2], [1, 1, 0], [0, 0, -2]], dtype=float)
    el = np.array([[0, 1, 2, 3], [0, 4, 1, 5], [0, 2, 4, 5]])
    mesh = Mesh(nodes, el, np.ones(3, dtype=np.int8))
    assert validate_mesh(mesh).hanging_nodes >= 1


def test_empty_mesh():
    with pytest.raises(EmptyMeshError):
        validate_mesh(Mesh(np.zeros((0, 3)), np.zeros((0, 4), dtype=np.int64), np.zeros(0, dtype=np.int8)))


def test_determinism(wing):
    a = generate_mesh(wing, level="coarse")
    b = generate_mesh(build_wing(naca4_profile("4412", 0.2), 0.2, 1e-3, (2, 1e-3), (2, 1e-3)), level="coarse")
    assert a.digest() == b.digest()


def test_neutral_round_trip(tmp_path, wing_coarse_mesh):
    path = tmp_path / "m.txt"
    write_neutral(wing_coarse_mesh, path)
    back = read_neutral(path)
    assert np.array_equal(back.elements, wing_coarse_mesh.elements)
    assert np.allclose(back.nodes, wing_coarse_mesh.nodes, rtol=1e-9, atol=0)


@pytest.mark.slow
def test_fine_count_and_volume_convergence(wing):
    exact = wing.volume()
    errors = []
    for level in ("coarse", "medium", "fine"):
        mesh = generate_mesh(wing, level=level)
        errors.append(abs(mesh.volume() - exact) / exact)
        if level == "fine":
            assert 60_000 <= mesh.n_elements <= 300_000
            assert validate_mesh(mesh).valid
    assert errors[0] > errors[1] > errors[2]
