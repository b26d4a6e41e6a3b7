import itertools
import json
import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wingfea import units
from wingfea.errors import CapacityError, ParseError, RangeError, SchemaError, UnitError
from wingfea.spec import (
    ConfigurationPoint,
    ParameterRange,
    apply_configuration,
    canonical_json,
    expand_parameter_space,
    format_range,
    parse_range_phrase,
    parse_spec,
    spec_hash,
    spec_to_document,
    strip_comments,
    validate_spec,
)

from conftest import SPECS, box_spec_doc


def test_listing_parses_to_si(listing_text):
    spec = parse_spec(listing_text)
    assert spec.material.youngs_modulus == 71.7e9
    assert spec.material.poissons_ratio == 0.33
    assert spec.material.density == 2810
    assert spec.material.yield_strength == 503e6
    (load,) = spec.loads
    assert (load.kind, load.magnitude, load.direction, load.location) == ("force", 500.0, ("X", 1), "right edge")
    (bc,) = spec.boundary_conditions
    assert bc.location == "left edge" and bc.constrained_dofs == ("X", "Y", "Z")
    assert spec.mesh.density == "fine" and spec.mesh.element_type == "second_order_tet"
    assert spec.data_analysis.mode == "pareto"
    assert spec.data_analysis.objectives == (("minimize", "max_vm_stress_pa"), ("minimize", "mass_kg"))


def test_listing_validates_without_errors(listing_text):
    report = validate_spec(parse_spec(listing_text))
    assert report.errors == []
    # the listing's refinement zone is not in the location vocabulary
    assert any("hole boundary" in w for w in report.warnings)


def test_defaults_applied():
    doc = {"material": {"name": "Al 7075-T6"}, "loads": [], "boundary_conditions": []}
    spec = parse_spec(doc)
    assert spec.mesh.density == "medium"
    assert spec.mesh.element_type == "first_order_tet"
    assert spec.analysis.type == "static"
    assert spec.material.youngs_modulus == 71.7e9


def test_empty_loads_is_warning_not_error():
    doc = box_spec_doc()
    doc["loads"] = []
    report = validate_spec(parse_spec(doc))
    assert report.ok
    assert any("no loads" in w for w in report.warnings)


def test_kilonewton_magnitude():
    doc = box_spec_doc()
    doc["loads"][0]["magnitude"] = "0.5 kN"
    assert parse_spec(doc).loads[0].magnitude == 500.0


def test_missing_section_and_bad_units():
    with pytest.raises(SchemaError):
        parse_spec({"material": {"name": "x"}, "loads": []})
    doc = box_spec_doc()
    doc["loads"][0]["magnitude"] = "5 furlongs"
    with pytest.raises(UnitError):
        parse_spec(doc)
    doc = box_spec_doc()
    doc["loads"][0]["magnitude"] = float("nan")
    with pytest.raises(ValueError):
        parse_spec(doc)
    with pytest.raises(SchemaError):
        parse_spec("{not json")


def test_unknown_keys_warn(caplog):
    doc = box_spec_doc()
    doc["colour"] = "red"
    with caplog.at_level(logging.WARNING, logger="wingfea.spec"):
        parse_spec(doc)
    assert "colour" in caplog.text


def test_no_bcs_is_unconstrained_error():
    doc = box_spec_doc()
    doc["boundary_conditions"] = []
    report = validate_spec(parse_spec(doc))
    assert any("unconstrained model" in e for e in report.errors)


def test_zero_yield_warns_safety_factor_undefined():
    doc = box_spec_doc()
    doc["material"] = {"name": "x", "youngs_modulus": 70e9, "poissons_ratio": 0.3, "density": 2700, "yield_strength": 0}
    report = validate_spec(parse_spec(doc))
    assert any("safety factor undefined" in w for w in report.warnings)


def test_pareto_needs_two_objectives():
    doc = box_spec_doc()
    doc["data_analysis"] = {"objectives": ["minimize mass"], "optimization": "pareto"}
    assert not validate_spec(parse_spec(doc)).ok


def test_strip_comments_keeps_slashes_in_strings():
    assert json.loads(strip_comments('{"a": "x//y"} // note')) == {"a": "x//y"}


# ranges


def test_table_phrases():
    r = parse_range_phrase("shell thickness from 1.0 to 2.0mm in 0.5mm steps")
    assert r.name == "shell_thickness" and r.values == (1.0, 1.5, 2.0) and r.unit == "mm"
    r = parse_range_phrase("spar width from 1.0 to 2.0mm in 0.2mm steps")
    assert r.values == (1.0, 1.2, 1.4, 1.6, 1.8, 2.0)
    r = parse_range_phrase("from 1.0 to 1.0 in 0.5 steps")
    assert r.values == (1.0,)


def test_explicit_lists():
    assert parse_range_phrase("spar count = 2, 3").values == (2, 3)
    assert parse_range_phrase("ribs in {2 and 3}").name == "rib_count"
    assert parse_range_phrase("mesh density = coarse, medium").values == ("coarse", "medium")


def test_range_errors():
    with pytest.raises(ParseError):
        parse_range_phrase("make it stronger")
    with pytest.raises(RangeError):
        parse_range_phrase("x from 2 to 1 in 0.5 steps")
    with pytest.raises(RangeError):
        parse_range_phrase("x from 1 to 2 in 0 steps")
    with pytest.raises(RangeError):
        ParameterRange("x", (2.0, 1.0))


def test_table_space_has_432_points():
    spec = parse_spec((SPECS / "naca4412_sweep.json").read_text())
    assert [len(r.values) for r in spec.sweep] == [3, 6, 6, 2, 2]
    points = expand_parameter_space(spec.sweep)
    assert len(points) == 432
    assert [p.index for p in points] == list(range(432))


def test_expansion_matches_nested_loops():
    a = ParameterRange("shell_thickness", (1.0, 2.0), "mm")
    b = ParameterRange("spar_count", (2, 3, 4))
    points = expand_parameter_space([a, b])
    oracle = []
    for x in a.values:
        for y in b.values:
            oracle.append((x, y))
    assert [(p.values["shell_thickness"], p.values["spar_count"]) for p in points] == oracle
    assert len(expand_parameter_space([ParameterRange("span", (1.0,))])) == 1


def test_capacity_and_duplicates():
    big = [ParameterRange(f"p{i}", tuple(float(v) for v in range(10))) for i in range(6)]
    with pytest.raises(CapacityError):
        expand_parameter_space(big)
    with pytest.raises(RangeError):
        expand_parameter_space([ParameterRange("a", (1.0,)), ParameterRange("a", (2.0,))])
    with pytest.raises(RangeError):
        expand_parameter_space([])


def test_apply_configuration_converts_units():
    spec = parse_spec((SPECS / "naca4412_sweep.json").read_text())
    point = expand_parameter_space(spec.sweep)[-1]
    case = apply_configuration(spec, point)
    g = case.geometry
    assert g.shell_thickness == pytest.approx(2.0e-3)
    assert g.spar_width == pytest.approx(2.0e-3)
    assert (g.spar_count, g.rib_count) == (3, 3)
    assert spec.geometry.shell_thickness == pytest.approx(1.0e-3)  # original untouched


def test_canonical_serialization_is_deterministic(listing_text):
    a, b = parse_spec(listing_text), parse_spec(listing_text)
    assert canonical_json(a) == canonical_json(b)
    assert spec_hash(a) == spec_hash(b)


def test_document_round_trip(listing_text):
    spec = parse_spec(listing_text)
    again = parse_spec(spec_to_document(spec))
    assert canonical_json(again) == canonical_json(spec)


# properties

value_lists = st.lists(st.integers(1, 6), min_size=1, max_size=4)


@given(value_lists)
@settings(max_examples=50, deadline=None)
def test_expansion_count_is_product(sizes):
    ranges = [ParameterRange(f"p{i}", tuple(float(v) for v in range(n))) for i, n in enumerate(sizes)]
    points = expand_parameter_space(ranges)
    assert len(points) == __import__("math").prod(sizes)
    assert len({tuple(p.values.values()) for p in points}) == len(points)
    assert [tuple(p.values.values()) for p in points] == list(itertools.product(*(r.values for r in ranges)))


@given(
    start=st.integers(0, 200).map(lambda k: k / 10),
    count=st.integers(1, 12),
    step=st.sampled_from([0.1, 0.2, 0.25, 0.5, 1.0, 2.5]),
)
@settings(max_examples=80, deadline=None)
def test_range_phrase_round_trip(start, count, step):
    stop = units.clean(start + (count - 1) * step)
    r = parse_range_phrase(f"shell thickness from {start} to {stop}mm in {step}mm steps")
    back = parse_range_phrase(format_range(r))
    assert len(back.values) == len(r.values) == count
    assert all(abs(a - b) <= 1e-12 for a, b in zip(back.values, r.values))


@given(st.floats(1e-6, 1e6), st.sampled_from(["mm", "m", "in", "cm"]))
@settings(max_examples=50, deadline=None)
def test_unit_normalization_idempotent(x, unit):
    once = units.to_si(f"{x!r} {unit}", "length")
    assert units.to_si(once, "length") == once


def test_configuration_point_hashable():
    p = ConfigurationPoint(3, {"a": 1.0})
    assert hash(p) == hash(ConfigurationPoint(3, {"a": 1.0}))
