import numpy as np
import pytest

from proofset.metrics import EmptyGold, EmptyInput, aggregate, f1, sample_metrics
from proofset.proofs import ProofGraph, ProofSet


def G(nodes, edges=()):
    return ProofGraph(frozenset(nodes), frozenset(edges))


A = G({"F1", "R1"}, {("F1", "R1")})
B = G({"F2", "R2"}, {("F2", "R2")})
C = G({"F3", "R3"}, {("F3", "R3")})
D = G({"F4"})


def test_identity():
    m = sample_metrics([A], [A], True, True)
    assert (m.node_f1, m.edge_f1, m.proof_f1) == (1.0, 1.0, 1.0)
    assert m.full_acc and m.qa_correct


def test_partial_node_match():
    m = sample_metrics([A, D], [A, B, C], True, True)
    assert m.node_p == 0.5
    assert m.node_r == pytest.approx(1 / 3)
    assert m.node_f1 == pytest.approx(0.4)
    assert not m.full_acc


def test_wrong_answer_blocks_full_accuracy():
    m = sample_metrics([A, B], [B, A], False, True)
    assert m.proof_f1 == 1.0
    assert not m.full_acc and not m.qa_correct


def test_node_match_without_edge_match():
    wrong_edges = G({"F1", "F2", "R1"}, {("F1", "R1"), ("F2", "R1")})
    gold = G({"F1", "F2", "R1"}, {("F1", "R1")})  # nodes equal, edges differ
    m = sample_metrics([wrong_edges], [gold], True, True)
    assert m.node_p == 1.0 and m.edge_p == 0.0 and m.proof_p == 0.0


def test_edges_of_different_proofs_do_not_combine():
    p1 = G({"F1", "R1"}, {("F1", "R1")})
    p2 = G({"F1", "R1", "NAF"}, {("F1", "R1")})
    m = sample_metrics([p2], [p1], True, True)
    assert m.edge_p == 1.0 and m.node_p == 0.0 and m.proof_p == 0.0


def test_lookup_proofs_have_matching_empty_edges():
    m = sample_metrics([D], [G({"F4"})], True, True)
    assert m.edge_f1 == 1.0


def test_empty_prediction_gives_zero_precision():
    m = sample_metrics([], [A], True, True)
    assert (m.node_p, m.node_r, m.node_f1) == (0.0, 0.0, 0.0)


def test_empty_gold_is_an_error():
    with pytest.raises(EmptyGold):
        sample_metrics([A], [], True, True)


def test_duplicates_do_not_raise_recall():
    once = sample_metrics([A], [A, B], True, True)
    twice = sample_metrics([A, A, A], [A, B], True, True)
    assert once == twice


def test_f1_zero_case():
    assert f1(0.0, 0.0) == 0.0


def test_aggregate_singleton_and_mean():
    m = sample_metrics([A], [A], True, True)
    agg = aggregate([m])
    assert agg.node_f1 == m.node_f1 and agg.full_acc == 1.0 and agg.n == 1
    two = aggregate([m, sample_metrics([A], [A], False, True)])
    assert two.full_acc == 0.5 and two.qa_accuracy == 0.5
    with pytest.raises(EmptyInput):
        aggregate([])


def test_aggregate_matches_manual_recomputation():
    rng = np.random.default_rng(1)
    pool = [A, B, C, D]
    samples, rows = [], []
    for _ in range(100):
        gold = [pool[i] for i in rng.choice(4, size=int(rng.integers(1, 4)), replace=False)]
        pred = [pool[i] for i in rng.choice(4, size=int(rng.integers(0, 4)), replace=False)]
        m = sample_metrics(pred, gold, True, bool(rng.random() < 0.8))
        samples.append(m)
        hit_p = sum(g in gold for g in pred)
        p = hit_p / len(pred) if pred else 0.0
        r = sum(g in pred for g in gold) / len(gold)
        rows.append((p, r, 0.0 if p + r == 0 else 2 * p * r / (p + r)))
    agg = aggregate(samples)
    assert agg.proof_p == pytest.approx(sum(x[0] for x in rows) / 100)
    assert agg.proof_r == pytest.approx(sum(x[1] for x in rows) / 100)
    assert agg.proof_f1 == pytest.approx(sum(x[2] for x in rows) / 100)


def test_table_row_layout():
    row = aggregate([sample_metrics([A], [A], True, True)]).table_row()
    assert list(row) == ["QA", "N-P", "N-R", "N-F1", "E-P", "E-R", "E-F1",
                         "P-P", "P-R", "P-F1", "FA", "n"]
