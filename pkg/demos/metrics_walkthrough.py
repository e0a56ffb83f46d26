"""Exact-match precision and recall on nodes, edges and whole proofs."""
from proofset import ProofGraph, aggregate, sample_metrics


def g(nodes, edges=()):
    return ProofGraph(frozenset(nodes), frozenset(edges))


gold = [g({"F1", "R1"}, {("F1", "R1")}), g({"F2", "R2"}, {("F2", "R2")})]
pred = [g({"F1", "R1"}, {("F1", "R1")}), g({"F3"})]
m = sample_metrics(pred, gold, answer_pred=True, answer_gold=True)
print(m)
wrong = sample_metrics(gold, gold, answer_pred=False, answer_gold=True)
print("right proofs, wrong answer -> full accuracy", wrong.full_acc)
print(aggregate([m, wrong]))
