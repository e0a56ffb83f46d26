"""Exact-match proof metrics: node, edge and proof P/R/F1 plus full accuracy."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .proofs import ProofSet


class EmptyGold(ValueError):
    pass


class EmptyInput(ValueError):
    pass


def f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


@dataclass(frozen=True)
class SampleMetrics:
    node_p: float
    node_r: float
    node_f1: float
    edge_p: float
    edge_r: float
    edge_f1: float
    proof_p: float
    proof_r: float
    proof_f1: float
    full_acc: bool
    qa_correct: bool


@dataclass(frozen=True)
class AggregateMetrics:
    node_p: float
    node_r: float
    node_f1: float
    edge_p: float
    edge_r: float
    edge_f1: float
    proof_p: float
    proof_r: float
    proof_f1: float
    full_acc: float
    qa_accuracy: float
    n: int

    def table_row(self) -> dict:
        """Column layout QA, N-P/R/F1, E-P/R/F1, P-P/R/F1, FA."""
        return {
            "QA": self.qa_accuracy,
            "N-P": self.node_p, "N-R": self.node_r, "N-F1": self.node_f1,
            "E-P": self.edge_p, "E-R": self.edge_r, "E-F1": self.edge_f1,
            "P-P": self.proof_p, "P-R": self.proof_r, "P-F1": self.proof_f1,
            "FA": self.full_acc,
            "n": self.n,
        }


def _prf(pred_items: list, gold_items: list) -> tuple[float, float, float]:
    gold_set = set(gold_items)
    pred_set = set(pred_items)
    p = sum(x in gold_set for x in pred_items) / len(pred_items) if pred_items else 0.0
    r = sum(x in pred_set for x in gold_items) / len(gold_items)
    return p, r, f1(p, r)


def sample_metrics(pred, gold, answer_pred: bool, answer_gold: bool) -> SampleMetrics:
    pred = pred if isinstance(pred, ProofSet) else ProofSet(pred)
    gold = gold if isinstance(gold, ProofSet) else ProofSet(gold)
    if not len(gold):
        raise EmptyGold("gold proof set is empty")
    node = _prf([g.nodes for g in pred], [g.nodes for g in gold])
    edge = _prf([g.edges for g in pred], [g.edges for g in gold])
    proof = _prf([(g.nodes, g.edges) for g in pred], [(g.nodes, g.edges) for g in gold])
    qa = bool(answer_pred) == bool(answer_gold)
    return SampleMetrics(*node, *edge, *proof, full_acc=qa and pred == gold, qa_correct=qa)


def aggregate(samples) -> AggregateMetrics:
    samples = list(samples)
    if not samples:
        raise EmptyInput("no samples to aggregate")
    n = len(samples)
    means = {}
    for f in fields(SampleMetrics):
        if f.name == "qa_correct":
            continue
        means[f.name] = sum(float(getattr(s, f.name)) for s in samples) / n
    qa = sum(s.qa_correct for s in samples) / n
    return AggregateMetrics(**means, qa_accuracy=qa, n=n)


def as_dict(m) -> dict:
    return asdict(m)
