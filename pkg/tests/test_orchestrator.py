import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wingfea.errors import (
    InsufficientMemoryError,
    NonConvergenceError,
    ResolutionError,
    SchemaError,
)
from wingfea.orchestrator import (
    CaseOutcome,
    ResourceEnvelope,
    SweepDataset,
    aggregate,
    estimate_case_memory,
    execute_case,
    plan_batch,
    read_outcomes,
    retry_policy,
    run_sweep,
)
from wingfea.spec import ConfigurationPoint, expand_parameter_space, parse_spec

from conftest import SPECS

GIB = 2**30


@pytest.fixture(scope="module")
def mini():
    spec = parse_spec((SPECS / "mini_sweep.json").read_text())
    return spec, expand_parameter_space(spec.sweep)


# runners live at module level so worker processes can unpickle them


def fake_runner(spec, case_dir, level, tolerance, options):
    g = spec.geometry
    case_dir.mkdir(parents=True, exist_ok=True)
    (case_dir / "marker.txt").write_text(str(options["index"]))
    mass = 2810 * g.span * (g.shell_thickness * 0.4 + g.spar_width * 0.02 + g.rib_thickness * 0.01)
    stress = 1e5 / (g.shell_thickness + 0.5 * g.spar_width + 0.1 * g.rib_thickness)
    return {"case_index": options["index"], "params": options["params"], "converged": True,
            "mass_kg": mass, "max_vm_stress_pa": stress, "max_disp_m": stress * 1e-12, "level": level}


def flaky_runner(spec, case_dir, level, tolerance, options):
    """Index 1 needs a finer mesh, index 2 needs a looser tolerance, index 3 always fails."""
    i = options["index"]
    if i == 1 and level == "medium":
        raise ResolutionError("feature too thin at medium")
    if i == 2 and tolerance < 1e-7:
        raise NonConvergenceError("stalled", residual_history=[1.0, 0.5])
    if i == 3:
        case_dir.mkdir(parents=True, exist_ok=True)
        (case_dir / "partial.txt").write_text("x")
        raise SchemaError("bad input")
    return fake_runner(spec, case_dir, level, tolerance, options)


# batch sizing


def test_plan_batch_examples():
    assert plan_batch(ResourceEnvelope(64 * GIB, 2 * GIB, 10, 16)) == 10
    assert plan_batch(ResourceEnvelope(8 * GIB, 2 * GIB, 2, 16)) == 2
    with pytest.raises(InsufficientMemoryError):
        plan_batch(ResourceEnvelope(1 * GIB, 2 * GIB, 10, 16))
    with pytest.raises(ValueError):
        ResourceEnvelope(0, 1, 1, 1)


def test_plan_batch_exhaustive_grid():
    for m_avail in range(1, 41):
        for m_case in range(1, 11):
            for cores in range(1, 9):
                for bmax in range(1, 9):
                    env = ResourceEnvelope(m_avail * GIB, m_case * GIB, cores, bmax)
                    floor = m_avail // m_case
                    if floor == 0:
                        with pytest.raises(InsufficientMemoryError):
                            plan_batch(env)
                    else:
                        assert plan_batch(env) == min(floor, cores, bmax)


@given(st.integers(1, 2**40), st.integers(1, 2**34), st.integers(1, 256), st.integers(1, 64), st.integers(0, 2**36),
       st.integers(0, 64))
def test_plan_batch_monotone(m, per, cores, bmax, dm, dc):
    base = ResourceEnvelope(m, per, cores, bmax)
    more = ResourceEnvelope(m + dm, per, cores + dc, bmax)
    if m // per == 0:
        return
    assert plan_batch(more) >= plan_batch(base)


def test_memory_estimate_proportional():
    assert estimate_case_memory(2000) == 2 * estimate_case_memory(1000)


# retry policy


def test_retry_policy():
    d = retry_policy(1, ResolutionError("x"), "medium", 1e-8)
    assert d.retry and d.level == "fine" and d.tolerance == 1e-8
    d = retry_policy(1, NonConvergenceError("x"), "medium", 1e-8)
    assert d.retry and d.level == "medium" and d.tolerance == pytest.approx(1e-7)
    assert not retry_policy(1, NonConvergenceError("x"), "medium", 1e-7, tolerance_relaxed=True).retry
    assert not retry_policy(2, ResolutionError("x"), "fine", 1e-8).retry
    assert not retry_policy(1, SchemaError("x"), "medium", 1e-8).retry
    assert not retry_policy(1, ResolutionError("x"), "ultra_fine", 1e-8).retry


def test_execute_case_retry_paths(tmp_path, mini):
    spec, points = mini
    o = execute_case(spec, points[0], tmp_path / "c0", flaky_runner)
    assert o.status == "ok" and o.attempts == 1
    o = execute_case(spec, points[1], tmp_path / "c1", flaky_runner)
    assert o.status == "retried_ok" and o.attempts == 2 and o.metrics["level"] == "fine"
    o = execute_case(spec, points[2], tmp_path / "c2", flaky_runner)
    assert o.status == "retried_ok" and o.metrics["tolerance_relaxed"] is True
    o = execute_case(spec, points[3], tmp_path / "c3", flaky_runner)
    assert o.status == "failed" and o.attempts == 1 and "SchemaError: bad input" in o.reason


def test_retry_cap_preserves_reason(tmp_path, mini):
    spec, points = mini

    def always(*_):
        raise ResolutionError("still too thin")

    o = execute_case(spec, points[0], tmp_path, always)
    assert o.status == "failed" and o.attempts == 2 and "still too thin" in o.reason


def test_outcome_invariant():
    with pytest.raises(ValueError):
        CaseOutcome(0, {}, "retried_ok", 1, {}, None, 0.0)


# aggregation


def outcome(i, value, status="ok"):
    metrics = None if status == "failed" else {"converged": True, "mass_kg": value, "max_vm_stress_pa": value,
                                                "max_disp_m": value}
    return CaseOutcome(i, {"p": i}, status, 1 if status != "retried_ok" else 2, metrics,
                       "boom" if status == "failed" else None, 0.1)


def test_aggregate_statistics():
    ds = aggregate([outcome(2, 3.0), outcome(0, 1.0), outcome(1, 2.0)])
    s = ds.stats["metrics"]["mass_kg"]
    assert s["mean"] == 2.0 and s["min"] == 1.0 and s["max"] == 3.0
    assert s["std"] == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
    assert s["cv"] == pytest.approx(math.sqrt(2 / 3) / 2, abs=1e-12)
    assert s["cv"] == pytest.approx(0.4082, abs=1e-4)
    assert [o.index for o in ds.outcomes] == [0, 1, 2]
    assert ds.convergence_rate == 1.0


def test_aggregate_edge_cases():
    failed = aggregate([outcome(0, 0, "failed"), outcome(1, 0, "failed")])
    assert failed.convergence_rate == 0.0 and failed.stats["metrics"] == {}
    single = aggregate([outcome(5, 7.0)])
    assert single.stats["metrics"]["mass_kg"]["std"] == 0.0
    with pytest.raises(ValueError):
        aggregate([outcome(0, 1.0), outcome(0, 2.0)])


def test_dataset_round_trip(tmp_path):
    ds = aggregate([outcome(0, 1.0), outcome(1, 2.0, "retried_ok"), outcome(2, 0, "failed")], {"p": [0, 1, 2]})
    path = ds.save(tmp_path / "d.json")
    back = SweepDataset.load(path)
    assert back.to_dict() == ds.to_dict()
    assert back.stats["retried_ok"] == 1 and back.stats["failed"] == 1


# sweeps


def test_sweep_serial_vs_pool_identical(tmp_path, mini):
    spec, points = mini
    a = run_sweep(spec, points, tmp_path / "a", batch_size=1, runner=fake_runner)
    b = run_sweep(spec, points, tmp_path / "b", batch_size=4, runner=fake_runner)
    assert [o.metrics for o in a.outcomes] == [o.metrics for o in b.outcomes]
    assert [o.index for o in b.outcomes] == list(range(8))
    assert b.convergence_rate == 1.0
    streamed = [json.loads(x)["index"] for x in (tmp_path / "b" / "outcomes.jsonl").read_text().splitlines()]
    assert sorted(streamed) == list(range(8))


def test_sweep_isolation_and_failures(tmp_path, mini):
    spec, points = mini
    seen = []
    ds = run_sweep(spec, points[:5], tmp_path, batch_size=1, runner=flaky_runner, on_outcome=seen.append)
    assert len(seen) == 5
    assert [o.status for o in ds.outcomes] == ["ok", "retried_ok", "retried_ok", "failed", "ok"]
    assert ds.convergence_rate == pytest.approx(0.8)
    for i in range(5):
        files = sorted(p.name for p in (tmp_path / f"case_{i}").iterdir())
        assert files == (["partial.txt"] if i == 3 else ["marker.txt"])
        if i != 3:
            assert (tmp_path / f"case_{i}" / "marker.txt").read_text() == str(i)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["cases"]["3"]["status"] == "failed" and "finished" in manifest


def test_sweep_resume_skips_finished(tmp_path, mini):
    spec, points = mini
    run_sweep(spec, points[:3], tmp_path, batch_size=1, runner=fake_runner)
    calls = []
    ds = run_sweep(spec, points[:5], tmp_path, batch_size=1, runner=fake_runner, resume=True, on_outcome=calls.append)
    assert sorted(o.index for o in calls) == [3, 4]
    assert len(ds.outcomes) == 5
    assert set(read_outcomes(tmp_path / "outcomes.jsonl")) == set(range(5))


def test_early_stop(tmp_path, mini):
    spec, points = mini
    ds = run_sweep(spec, points, tmp_path, batch_size=1, runner=fake_runner, stop_when=lambda got: len(got) >= 3)
    assert len(ds.outcomes) == 3
    assert ds.meta["terminated_early"] is True


def test_failure_recorded_in_kb(tmp_path, mini):
    from wingfea.knowledge import KnowledgeBase

    spec, points = mini
    kb = KnowledgeBase.open(tmp_path / "kb.jsonl")
    run_sweep(spec, [points[3]], tmp_path / "s", batch_size=1, runner=flaky_runner, kb=kb)
    assert any(e.kind == "failure_pattern" for e in KnowledgeBase.load(tmp_path / "kb.jsonl").entries)


def test_empty_configuration_list(tmp_path, mini):
    with pytest.raises(ValueError):
        run_sweep(mini[0], [], tmp_path)


def test_configuration_indices_unique(mini):
    _, points = mini
    assert len({p.index for p in points}) == len(points) == 8
    assert isinstance(points[0], ConfigurationPoint)
