import json
from itertools import product

import pytest

from wingfea.errors import NoMatchError
from wingfea.knowledge import KnowledgeBase
from wingfea.planner import RuleBasedPlanner, plan_request, top_k
from wingfea.spec import expand_parameter_space, parse_spec

REQUEST = (
    "Find optimal NACA 4412 wing designs in aerospace aluminum 7075, 200mm chord and 200mm span. "
    "Vary shell thickness from 1.0 to 2.0mm in 0.5mm steps, spar width from 1.0 to 2.0mm in 0.2mm steps, "
    "rib thickness from 1.0 to 2.0mm in 0.2mm steps, with both 2 and 3 spars and 2 and 3 ribs."
)


@pytest.fixture(scope="module")
def planned():
    return plan_request(REQUEST)


def test_request_expands_to_full_grid(planned):
    spec = parse_spec(json.dumps(planned))
    points = expand_parameter_space(spec.sweep)
    assert len(points) == 3 * 6 * 6 * 2 * 2 == 432
    shells = sorted({p.values["shell_thickness"] for p in points})
    assert shells == [1.0, 1.5, 2.0]
    assert sorted({p.values["spar_width"] for p in points}) == [1.0, 1.2, 1.4, 1.6, 1.8, 2.0]
    combos = {tuple(p.values[k] for k in ("spar_count", "rib_count")) for p in points}
    assert combos == set(product((2, 3), (2, 3)))


def test_plan_fields(planned):
    assert planned["material"]["name"] == "Al 7075-T6"
    assert planned["geometry"] == {"kind": "naca_wing", "naca_code": "4412", "chord": 0.2, "span": 0.2}
    assert planned["data_analysis"]["optimization"] == "pareto"
    assert len(planned["data_analysis"]["objectives"]) == 2
    assert planned["mesh"]["density"] == "medium"
    meta = planned["_plan"]
    assert meta["strategy"] in ("pattern_reuse", "novel_synthesis")
    assert meta["material_candidates"][0][0] >= meta["material_candidates"][-1][0]


def test_intent_and_density():
    doc = plan_request("sweep shell thickness from 1 mm to 2 mm in 1 mm steps, aluminum 7075, coarse mesh")
    assert doc["data_analysis"]["optimization"] == "parametric"
    assert doc["mesh"]["density"] == "coarse"
    assert doc["data_analysis"]["objectives"] == []
    single = plan_request("analyze a NACA 2412 wing in aluminum 7075")
    assert single["data_analysis"]["optimization"] == "single" and single["sweep"] == []


def test_no_match():
    with pytest.raises(NoMatchError):
        plan_request("qqq zzz")
    with pytest.raises(NoMatchError):
        RuleBasedPlanner().plan("aluminum wing", KnowledgeBase())


def test_top_k_order_and_limit():
    kb = KnowledgeBase.seeded()
    hits = top_k("aluminum alloy", kb, k=2)
    assert len(hits) == 2 and hits[0][0] >= hits[1][0]


def test_custom_provider_is_used():
    class Fixed:
        def plan(self, request, kb):
            return {"request": request}

    assert plan_request("anything", provider=Fixed()) == {"request": "anything"}
