import json

import numpy as np
import pytest

from proofset.datagen import (
    ConfigInvalid, GenConfig, NoiseConfig, TooManyGoldProofs, dataset_stats,
    generate_dataset, generate_example, profile, simulate_probabilities,
)
from proofset.decoder import decode_proof_set, proof_labels
from proofset.proofs import ProofSet, enumerate_proofs, proof_depth, validate
from proofset.reasoner import answer
from proofset.rulebase import read_examples, serialize_context, parse_context, write_examples


@pytest.fixture(scope="module")
def du3():
    return list(generate_dataset(profile("du3", num_examples=150, seed=3)))


def test_depth_zero_profile():
    for ex in generate_dataset(profile("du0", num_examples=60, seed=1)):
        assert ex.depth == 0
        assert all(len(g.nodes) == 1 for g in ex.gold_proofs)


def test_same_seed_same_bytes(tmp_path):
    cfg = profile("du2", num_examples=40, seed=9)
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_examples(a, generate_dataset(cfg))
    write_examples(b, generate_dataset(cfg))
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.jsonl"
    write_examples(c, generate_dataset(profile("du2", num_examples=40, seed=10)))
    assert a.read_bytes() != c.read_bytes()


def test_examples_are_indexed_independently():
    cfg = profile("du3", num_examples=12, seed=5)
    stream = list(generate_dataset(cfg))
    assert generate_example(cfg, 7) == stream[7]
    assert list(generate_dataset(cfg, start=10)) == stream[10:]


def test_examples_are_consistent(du3):
    for ex in du3:
        assert ex.context.f + ex.context.r <= 25
        assert answer(ex.context, ex.question)[0] == ex.answer
        proofs, truncated = enumerate_proofs(ex.context, ex.question)
        assert not truncated
        assert proofs == ProofSet(ex.gold_proofs)
        assert 1 <= len(ex.gold_proofs) <= 3
        for g in ex.gold_proofs:
            assert validate(g, ex.context) == []
        assert ex.depth == min(proof_depth(g) for g in ex.gold_proofs)
        assert parse_context(serialize_context(ex.context)) == ex.context


def test_question_kinds_and_depths_are_covered(du3):
    kinds = set()
    for ex in du3:
        lit = ex.question.literal
        if not lit.negated and ex.answer:
            kinds.add("derived" if ex.depth else "lookup")
        elif not lit.negated:
            kinds.add("cwa_false")
        elif ex.answer:
            kinds.add("naf_true")
    assert {"derived", "lookup", "cwa_false", "naf_true"} <= kinds
    assert {ex.depth for ex in du3} == {0, 1, 2, 3}


def test_jsonl_round_trip_and_stats(tmp_path, du3):
    path = tmp_path / "d.jsonl"
    write_examples(path, du3)
    back = list(read_examples(path))
    assert back == du3
    stats = dataset_stats(back)
    assert stats == dataset_stats(du3)
    assert sum(stats["depth_hist"].values()) == len(du3)
    assert json.loads(json.dumps(stats)) == stats
    for key in ("common_node_frac", "common_edge_frac", "multiproof_frac"):
        assert 0.0 <= stats[key] <= 1.0


@pytest.mark.parametrize("bad", [
    dict(facts_range=(5, 2)),
    dict(facts_range=(20, 20), rules_range=(10, 10)),
    dict(negation_rate=1.5),
    dict(max_depth=-1),
    dict(question_mix=(0, 0, 0)),
    dict(n_attributes=3),
])
def test_config_validation(bad):
    with pytest.raises(ConfigInvalid):
        GenConfig(**bad).validate()
    with pytest.raises(ConfigInvalid):
        profile("du9")


def test_simulation_without_noise_is_exact(du3):
    ex = next(e for e in du3 if len(e.gold_proofs) == 2)
    slots = simulate_probabilities(ex.gold_proofs, ex.context, 3, NoiseConfig(0.0))
    assert len(slots) == 3
    for slot, g in zip(slots, ex.gold_proofs):
        yn, ye = proof_labels(g, ex.context)
        assert np.array_equal(slot.node_probs, yn) and np.array_equal(slot.edge_probs, ye)
    assert not slots[2].node_probs.any()
    assert decode_proof_set(slots, ex.context).proofs == ProofSet(ex.gold_proofs)


def test_full_slots_have_no_terminator(du3):
    ex = next(e for e in du3 if len(e.gold_proofs) == 2)
    slots = simulate_probabilities(ex.gold_proofs, ex.context, 2, NoiseConfig(0.0))
    assert all(s.node_probs.any() for s in slots)
    with pytest.raises(TooManyGoldProofs):
        simulate_probabilities(ex.gold_proofs, ex.context, 1, NoiseConfig(0.0))


def test_noise_is_seeded_and_bounded(du3):
    ex = du3[0]
    a = simulate_probabilities(ex.gold_proofs, ex.context, 3, NoiseConfig(0.3, 1), stream=4)
    b = simulate_probabilities(ex.gold_proofs, ex.context, 3, NoiseConfig(0.3, 1), stream=4)
    c = simulate_probabilities(ex.gold_proofs, ex.context, 3, NoiseConfig(0.3, 2), stream=4)
    assert all(np.array_equal(x.node_probs, y.node_probs) for x, y in zip(a, b))
    assert not all(np.array_equal(x.node_probs, y.node_probs) for x, y in zip(a, c))
    yn, _ = proof_labels(ex.gold_proofs[0], ex.context)
    assert np.all(np.abs(a[0].node_probs - yn) <= 0.3)
    with pytest.raises(ConfigInvalid):
        NoiseConfig(1.5)
