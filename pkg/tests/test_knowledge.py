import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wingfea.errors import EmptyKbError, NoMatchError, WingFeaError
from wingfea.knowledge import (
    DIM,
    THETA,
    KnowledgeBase,
    KnowledgeEntry,
    MaterialRecord,
    _bucket,
    cosine,
    embed,
    select_strategy,
    similarity,
    tokenize,
)
from wingfea.spec import parse_spec

from conftest import box_spec_doc

words = st.lists(st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789", min_size=1, max_size=8), min_size=1, max_size=12)


def test_embed_shape_and_norm():
    v = embed("Al 7075-T6 aerospace aluminum")
    assert v.shape == (DIM,) == (384,)
    assert abs(np.linalg.norm(v) - 1.0) <= 1e-9
    assert not embed("").any()
    assert not embed("  --  ").any()


def test_embed_case_and_whitespace_insensitive():
    assert np.array_equal(embed("Aluminum  7075"), embed("aluminum 7075"))
    assert cosine(embed("aluminum 7075"), embed("7075 aluminum")) == pytest.approx(1.0, abs=1e-12)


def test_similarity_identical_and_disjoint():
    kb = KnowledgeBase.seeded()
    key = kb.entries[0].key
    score, best = kb.similarity(key)
    assert score == pytest.approx(1.0, abs=1e-12) and best is kb.entries[0]
    # these tokens share no hash bucket with the seed keys (checked below)
    request = "carbon fiber composite rotor blade"
    seed_buckets = {_bucket(t)[0] for e in kb.entries for t in tokenize(e.key)}
    assert not seed_buckets & {_bucket(t)[0] for t in tokenize(request)}
    assert kb.similarity(request)[0] == 0.0


def test_similarity_matches_bruteforce_oracle():
    keys = ["steel beam bolt", "aluminum wing spar", "titanium fan blade", "aluminum rib plate", "rubber seal"]
    kb = KnowledgeBase([KnowledgeEntry(k, {"kind": "note", "i": i}) for i, k in enumerate(keys)])
    request = "aluminum wing rib"
    q = embed(request)
    oracle = [float(np.dot(q, embed(k))) for k in keys]
    score, best = similarity(request, kb)
    assert score == pytest.approx(max(oracle), abs=1e-12)
    assert best.key == keys[int(np.argmax(oracle))]


def test_ties_go_to_first_inserted():
    kb = KnowledgeBase([KnowledgeEntry("alpha beta", {"n": 1}), KnowledgeEntry("beta alpha", {"n": 2})])
    assert kb.similarity("alpha beta")[1].payload["n"] == 1


def test_empty_kb():
    with pytest.raises(EmptyKbError):
        similarity("x", [])
    with pytest.raises(NoMatchError):
        KnowledgeBase().lookup_material("aluminum")


def test_strategy_gate():
    assert select_strategy(0.97).mode == "knowledge_augmented"
    assert select_strategy(0.85).mode == "novel_synthesis"
    assert select_strategy(np.nextafter(0.85, 1)).mode == "knowledge_augmented"
    assert select_strategy(0.0).mode == "novel_synthesis"
    with pytest.raises(ValueError):
        select_strategy(0.5, theta=1.0)
    assert THETA == 0.85


def test_material_lookup_listing_record():
    kb = KnowledgeBase.seeded()
    m = kb.lookup_material("Aluminum 7075-T6")
    assert (m.name, m.youngs_modulus, m.poissons_ratio, m.density, m.yield_strength) == (
        "Al 7075-T6", 71.7e9, 0.33, 2810.0, 503e6)
    c = kb.lookup_material("Aluminum C355")
    assert (c.youngs_modulus, c.poissons_ratio, c.density) == (75e9, 0.3, 2650.0)
    with pytest.raises(NoMatchError):
        kb.lookup_material("unobtainium")


def test_material_record_invariants():
    with pytest.raises(ValueError):
        MaterialRecord("bad", 70e9, 0.5, 2700, 300e6).check()
    with pytest.raises(ValueError):
        MaterialRecord("bad", 70e9, 0.3, 2700, 0.0).check()


def test_record_success_round_trip(tmp_path):
    path = tmp_path / "kb.jsonl"
    kb = KnowledgeBase.open(path)
    spec = parse_spec(box_spec_doc())
    n = len(kb)
    entry = kb.record_success(spec, {"converged": True, "mass_kg": 0.03})
    kb.record_success(spec, {"converged": True, "mass_kg": 0.04})
    assert len(kb) == n + 1
    again = KnowledgeBase.load(path)
    assert again.similarity(entry.key)[0] == pytest.approx(1.0)
    assert again.similarity(entry.key)[1].payload["mass_kg"] == 0.04
    with pytest.raises(WingFeaError):
        kb.record_success(spec, {"converged": False})
    kb.record_failure(spec, "did not converge")
    assert any(e.provenance == "failure" for e in KnowledgeBase.load(path).entries)


def test_save_load_save_is_byte_identical(tmp_path):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    KnowledgeBase.seeded().save(a)
    KnowledgeBase.load(a).save(b)
    assert a.read_bytes() == b.read_bytes()


@given(words)
@settings(max_examples=100, deadline=None)
def test_embed_permutation_invariant(tokens):
    shuffled = tokens[:]
    random.Random(len(tokens)).shuffle(shuffled)
    assert np.allclose(embed(" ".join(tokens)), embed(" ".join(shuffled)), atol=1e-15)
    n = np.linalg.norm(embed(" ".join(tokens)))
    assert n == 0.0 or abs(n - 1.0) <= 1e-9


@given(words, words)
@settings(max_examples=100, deadline=None)
def test_cosine_bounded(a, b):
    assert -1.0 <= cosine(embed(" ".join(a)), embed(" ".join(b))) <= 1.0


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_strategy_monotone(s1, s2):
    lo, hi = sorted((s1, s2))
    if select_strategy(lo).mode == "knowledge_augmented":
        assert select_strategy(hi).mode == "knowledge_augmented"
