"""Decoding proof sets from node and edge probabilities.

Scores are compared on probabilities quantised to 1e-9, so two node or edge
sets whose scores agree to nine decimals are treated as tied and ordered by
the lexicographic tie rules below.
"""
from __future__ import annotations

import heapq
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .proofs import EMPTY_PROOF, ProofGraph, ProofSet
from .rulebase import Context, node_kind

log = logging.getLogger(__name__)

QUANTUM = 10**9
DEFAULT_P_MAX = 3


class DecodeError(ValueError):
    pass


class LengthMismatch(DecodeError):
    pass


class Infeasible(DecodeError):
    pass


@dataclass
class Slot:
    """Node probabilities (length k) and edge probabilities (k x k) of one proof."""

    node_probs: np.ndarray
    edge_probs: np.ndarray

    def __post_init__(self):
        self.node_probs = np.asarray(self.node_probs, dtype=float)
        self.edge_probs = np.asarray(self.edge_probs, dtype=float)
        k = self.node_probs.shape[0]
        if self.node_probs.ndim != 1 or self.edge_probs.shape != (k, k):
            raise LengthMismatch(
                f"node probs {self.node_probs.shape} vs edge probs {self.edge_probs.shape}"
            )
        _check_probs(self.node_probs)
        _check_probs(self.edge_probs)

    @property
    def k(self) -> int:
        return self.node_probs.shape[0]

    @classmethod
    def zeros(cls, k: int) -> "Slot":
        return cls(np.zeros(k), np.zeros((k, k)))


def _check_probs(a):
    if not np.all(np.isfinite(a)):
        raise DecodeError("probabilities must be finite")
    if a.size and (a.min() < 0.0 or a.max() > 1.0):
        raise DecodeError("probabilities must lie in [0, 1]")


def edge_mask(ctx: Context) -> np.ndarray:
    """Candidate edges: any node into a rule, never a self-pair."""
    kinds = [node_kind(ref) for ref in ctx.nodes]
    is_rule = np.array([kd == "rule" for kd in kinds])
    mask = np.zeros((ctx.k, ctx.k), dtype=bool)
    mask[:, is_rule] = True
    np.fill_diagonal(mask, False)
    return mask


def _quantise(probs) -> list[int]:
    return [int(x) for x in np.rint(np.asarray(probs, dtype=float) * QUANTUM)]


def node_set_score(v, probs) -> float:
    v = np.asarray(v)
    probs = np.asarray(probs, dtype=float)
    if v.shape != probs.shape:
        raise LengthMismatch(f"{v.shape} vs {probs.shape}")
    return float(np.sum(probs * v + (1.0 - probs) * (1 - v)))


def round_nodes(probs) -> np.ndarray:
    return (np.asarray(probs, dtype=float) >= 0.5).astype(np.int8)


def _top_p(probs, p: int):
    """Yield ``(v, score, quantised_score)`` in rank order."""
    q = _quantise(probs)
    k = len(q)
    best = [1 if 2 * x >= QUANTUM else 0 for x in q]
    margin = [abs(2 * x - QUANTUM) for x in q]
    top = sum(max(x, QUANTUM - x) for x in q)
    # Each flip set's parent drops its largest index: the parent costs no
    # more and its tuple is a prefix, so the (cost, flips) key never decreases
    # along the tree and best-first order is exact, ties included.
    heap = [(0, ())]
    emitted = 0
    while heap and emitted < p:
        cost, flips = heapq.heappop(heap)
        v = np.array(best, dtype=np.int8)
        for i in flips:
            v[i] ^= 1
        yield v, node_set_score(v, probs), top - cost
        emitted += 1
        start = flips[-1] + 1 if flips else 0
        for j in range(start, k):
            heapq.heappush(heap, (cost + margin[j], flips + (j,)))


def top_p_node_sets(probs, p: int) -> list[tuple[np.ndarray, float]]:
    """The ``p`` best binary node vectors, best first.

    Equal scores are ordered by the lexicographically smallest set of
    positions flipped away from the rounded optimum.
    """
    if p < 1:
        raise ValueError("p must be positive")
    probs = np.asarray(probs, dtype=float)
    _check_probs(probs)
    return [(v, s) for v, s, _ in _top_p(probs, p)]


# ------------------------------------------------------------ edges --------


def decode_edges(v, edge_probs, mask) -> list[tuple[int, int]]:
    """Best valid edge set over the selected nodes, as 0-based index pairs.

    Exact branch and bound on the edge objective; admissible bound is the
    current score plus every undecided edge's best contribution.  Among
    optimal sets the lexicographically smallest sorted edge list wins.
    """
    v = np.asarray(v)
    ep = np.asarray(edge_probs, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    k = v.shape[0]
    if ep.shape != (k, k) or mask.shape != (k, k):
        raise LengthMismatch(f"k={k} vs edges {ep.shape} / mask {mask.shape}")
    sel = [i for i in range(k) if v[i]]
    if not sel:
        raise DecodeError("node set is empty")
    if len(sel) == 1:
        return []
    cands = [(i, j) for i in sel for j in sel if mask[i, j]]
    touch = {n: 0 for n in sel}
    for i, j in cands:
        touch[i] += 1
        touch[j] += 1
    if any(c == 0 for c in touch.values()):
        raise Infeasible(f"no candidate edge reaches nodes {[n for n in sel if not touch[n]]}")
    q = _quantise([ep[i, j] for i, j in cands])
    gain = [2 * x - QUANTUM for x in q]
    m = len(cands)
    suffix = [0] * (m + 1)
    for t in range(m - 1, -1, -1):
        suffix[t] = suffix[t + 1] + max(gain[t], 0)

    incident = {n: 0 for n in sel}
    undecided = dict(touch)
    out_adj: dict[int, list] = {n: [] for n in sel}
    chosen: list[int] = []
    best = {"score": None, "edges": None}

    def reaches(src, dst):
        stack, seen = [src], {src}
        while stack:
            x = stack.pop()
            if x == dst:
                return True
            for y in out_adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return False

    def connected_possible(t):
        parent = {n: n for n in sel}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in chosen:
            a, b = cands[e]
            parent[find(a)] = find(b)
        for e in range(t, m):
            a, b = cands[e]
            parent[find(a)] = find(b)
        return len({find(n) for n in sel}) == 1

    def better(score):
        if best["score"] is None or score > best["score"]:
            return True
        if score < best["score"]:
            return False
        return [cands[e] for e in chosen] < best["edges"]

    def leaf(score):
        if not connected_possible(m):
            return
        if better(score):
            best["score"] = score
            best["edges"] = [cands[e] for e in chosen]

    def search(t, score):
        if best["score"] is not None and score + suffix[t] < best["score"]:
            return
        if t == m:
            leaf(score)
            return
        a, b = cands[t]
        undecided[a] -= 1
        undecided[b] -= 1
        for include in ((True, False) if gain[t] > 0 else (False, True)):
            if include:
                if reaches(b, a):
                    continue
                chosen.append(t)
                out_adj[a].append(b)
                incident[a] += 1
                incident[b] += 1
                search(t + 1, score + gain[t])
                incident[a] -= 1
                incident[b] -= 1
                out_adj[a].pop()
                chosen.pop()
            else:
                if (incident[a] == 0 and undecided[a] == 0) or (
                    incident[b] == 0 and undecided[b] == 0
                ):
                    continue
                if not connected_possible(t + 1):
                    continue
                search(t + 1, score)
        undecided[a] += 1
        undecided[b] += 1

    search(0, 0)
    if best["edges"] is None:
        raise Infeasible(f"no valid edge set over nodes {sel}")
    return best["edges"]


def edge_objective(edges, edge_probs, mask, v) -> float:
    """Edge objective over the candidate pairs among selected nodes."""
    ep = np.asarray(edge_probs, dtype=float)
    sel = [i for i in range(len(v)) if v[i]]
    chosen = set(map(tuple, edges))
    total = 0.0
    for i in sel:
        for j in sel:
            if mask[i][j]:
                total += ep[i, j] if (i, j) in chosen else 1.0 - ep[i, j]
    return total


def graph_from_indices(ctx: Context, v, edges) -> ProofGraph:
    refs = ctx.nodes
    nodes = {refs[i] for i in range(len(v)) if v[i]}
    return ProofGraph(nodes, {(refs[i], refs[j]) for i, j in edges})


def proof_labels(g: ProofGraph, ctx: Context) -> tuple[np.ndarray, np.ndarray]:
    """0/1 node vector (k) and edge matrix (k x k) for a proof graph."""
    yn = np.zeros(ctx.k)
    ye = np.zeros((ctx.k, ctx.k))
    for ref in g.nodes:
        yn[ctx.node_index(ref) - 1] = 1.0
    for a, b in g.edges:
        ye[ctx.node_index(a) - 1, ctx.node_index(b) - 1] = 1.0
    return yn, ye


# ---------------------------------------------------------- proof sets -----


@dataclass
class DecodeResult:
    proofs: ProofSet
    infeasible: int = 0
    scores: list = field(default_factory=list)


def decode_proof_set(slots, ctx: Context, stop_at_empty: bool = True) -> DecodeResult:
    """Round each slot to a node set and decode its edges.

    A slot that rounds to no nodes is the empty-graph terminator; with
    ``stop_at_empty`` decoding ends there.
    """
    mask = edge_mask(ctx)
    graphs = []
    infeasible = 0
    for n, slot in enumerate(slots):
        if slot.k != ctx.k:
            raise LengthMismatch(f"slot {n} has k={slot.k}, context has k={ctx.k}")
        v = round_nodes(slot.node_probs)
        if not v.any():
            if stop_at_empty:
                break
            continue
        try:
            edges = decode_edges(v, slot.edge_probs, mask)
        except Infeasible as exc:
            infeasible += 1
            log.debug("slot %d skipped: %s", n, exc)
            continue
        graphs.append(graph_from_indices(ctx, v, edges))
    return DecodeResult(ProofSet(graphs), infeasible)


def decode_top_p_threshold(node_probs, edge_probs, ctx: Context, p_max: int = DEFAULT_P_MAX,
                           theta: float = math.inf) -> DecodeResult:
    """Top-p node sets, stopping once consecutive scores drop by more than ``theta``."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if p_max < 1:
        raise ValueError("p_max must be positive")
    node_probs = np.asarray(node_probs, dtype=float)
    if node_probs.shape[0] != ctx.k:
        raise LengthMismatch(f"node probs have length {node_probs.shape[0]}, k={ctx.k}")
    _check_probs(node_probs)
    mask = edge_mask(ctx)
    graphs = []
    scores = []
    infeasible = 0
    prev = None
    for v, score, qscore in _top_p(node_probs, p_max):
        if prev is not None and (prev - qscore) / QUANTUM > theta:
            break
        prev = qscore
        if not v.any():
            continue
        try:
            edges = decode_edges(v, edge_probs, mask)
        except Infeasible as exc:
            infeasible += 1
            log.debug("node set skipped: %s", exc)
            continue
        graphs.append(graph_from_indices(ctx, v, edges))
        scores.append(score)
    return DecodeResult(ProofSet(graphs), infeasible, scores)


# ----------------------------------------------------------------- io ------


def slots_to_json(example_id: str, slots, answer_prob: float | None = None) -> dict:
    k = slots[0].k if slots else 0
    obj = {
        "id": example_id,
        "k": k,
        "slots": [
            {"node_probs": s.node_probs.tolist(), "edge_probs": s.edge_probs.tolist()}
            for s in slots
        ],
    }
    if answer_prob is not None:
        obj["answer_prob"] = float(answer_prob)
    return obj


def slots_from_json(obj: dict) -> list[Slot]:
    k = int(obj["k"])
    slots = [Slot(s["node_probs"], s["edge_probs"]) for s in obj["slots"]]
    for s in slots:
        if s.k != k:
            raise LengthMismatch(f"{obj.get('id')}: slot has k={s.k}, header says {k}")
    return slots


def read_probability_file(path) -> dict[str, dict]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                obj = json.loads(line)
                out[str(obj["id"])] = obj
    return out

