"""Proof graphs: validity, canonical form, depth, replay and enumeration."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, NamedTuple

from .reasoner import Closure, CyclicNegation, closure as compute_closure
from .rulebase import NAF, Context, Literal, Question, node_kind, node_sort_key

DEFAULT_LIMIT = 100

Unstratifiable = CyclicNegation


class ProofError(ValueError):
    pass


class NoProof(ProofError):
    pass


class ProofExplosion(ProofError):
    """Raised when intermediate derivation sets outgrow the safety budget."""


def _edge_key(edge):
    return node_sort_key(edge[0]), node_sort_key(edge[1])


@dataclass(frozen=True)
class ProofGraph:
    nodes: frozenset = frozenset()
    edges: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))

    @property
    def is_empty(self) -> bool:
        return not self.nodes and not self.edges

    def sorted_nodes(self) -> list[str]:
        return sorted(self.nodes, key=node_sort_key)

    def sorted_edges(self) -> list[tuple[str, str]]:
        return sorted(self.edges, key=_edge_key)

    @property
    def key(self) -> str:
        return canonical_key(self)

    def __repr__(self):
        return f"ProofGraph({self.key!r})"


EMPTY_PROOF = ProofGraph()


def canonical_key(g: ProofGraph) -> str:
    nodes = ",".join(g.sorted_nodes())
    edges = ",".join(f"{a}>{b}" for a, b in g.sorted_edges())
    return f"{nodes}|{edges}"


def sort_proofs(graphs: Iterable[ProofGraph]) -> list[ProofGraph]:
    """Deduplicate by canonical key and order by it."""
    unique = {g.key: g for g in graphs}
    return [unique[k] for k in sorted(unique)]


class ProofSet:
    """An order-free collection of distinct non-empty proof graphs."""

    __slots__ = ("proofs",)

    def __init__(self, graphs: Iterable[ProofGraph] = ()):
        graphs = list(graphs)
        for g in graphs:
            if g.is_empty:
                raise ProofError("the empty graph cannot be a member of a proof set")
        self.proofs = tuple(sort_proofs(graphs))

    def __iter__(self):
        return iter(self.proofs)

    def __len__(self):
        return len(self.proofs)

    def __contains__(self, g):
        return g.key in self.keys()

    def __eq__(self, other):
        if not isinstance(other, ProofSet):
            return NotImplemented
        return self.keys() == other.keys()

    def __hash__(self):
        return hash(self.keys())

    def keys(self) -> frozenset:
        return frozenset(g.key for g in self.proofs)

    def __repr__(self):
        return f"ProofSet({[g.key for g in self.proofs]})"


class Violation(NamedTuple):
    kind: str
    detail: tuple


def _topological(nodes, edges) -> list | None:
    """Kahn order of the graph, or None when it has a cycle."""
    indeg = {n: 0 for n in nodes}
    succ: dict[str, list] = {n: [] for n in nodes}
    for a, b in edges:
        succ[a].append(b)
        indeg[b] += 1
    ready = sorted((n for n, d in indeg.items() if d == 0), key=node_sort_key)
    order = []
    while ready:
        n = ready.pop()
        order.append(n)
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    return order if len(order) == len(indeg) else None


def _components(nodes, edges) -> int:
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(n) for n in nodes})


def validate(g: ProofGraph, ctx: Context) -> list[Violation]:
    """Every structural violation of ``g``; an empty list means valid."""
    for ref in g.nodes:
        ctx.node_index(ref)
    for a, b in g.edges:
        ctx.node_index(a)
        ctx.node_index(b)
    if g.is_empty:
        return [Violation("EmptyGraph", ())]
    out = []
    for a, b in g.sorted_edges():
        if a == b:
            out.append(Violation("SelfLoop", ((a, b),)))
        if node_kind(b) != "rule":
            out.append(Violation("IllegalEdgeType", ((a, b),)))
        if a not in g.nodes or b not in g.nodes:
            out.append(Violation("DanglingEdge", ((a, b),)))
    inside = [(a, b) for a, b in g.edges if a in g.nodes and b in g.nodes]
    if len(g.nodes) > 1:
        touched = {x for e in inside for x in e}
        isolated = [n for n in g.sorted_nodes() if n not in touched]
        if isolated:
            out.append(Violation("IsolatedNode", tuple(isolated)))
        if _components(g.nodes, inside) > 1:
            out.append(Violation("Disconnected", tuple(g.sorted_nodes())))
    if _topological(g.nodes, [e for e in inside if e[0] != e[1]]) is None:
        out.append(Violation("Cycle", tuple(sorted(inside, key=_edge_key))))
    return out


def is_valid(g: ProofGraph, ctx: Context) -> bool:
    return not validate(g, ctx)


def proof_depth(g: ProofGraph) -> int:
    """Rule nodes on the longest directed path; 0 for single-node proofs."""
    if len(g.nodes) <= 1:
        return 0
    order = _topological(g.nodes, g.edges)
    if order is None:
        raise ProofError(f"cyclic proof graph {g.key}")
    preds: dict[str, list] = {n: [] for n in g.nodes}
    for a, b in g.edges:
        preds[b].append(a)
    depth: dict[str, int] = {}
    for n in order:
        own = 1 if node_kind(n) == "rule" else 0
        depth[n] = own + max((depth[p] for p in preds[n]), default=0)
    return max(depth.values())


def common_nodes(proofs: Iterable[ProofGraph]) -> frozenset:
    graphs = list(proofs)
    if not graphs:
        return frozenset()
    return frozenset.intersection(*(g.nodes for g in graphs))


def common_edges(proofs: Iterable[ProofGraph]) -> frozenset:
    graphs = list(proofs)
    if not graphs:
        return frozenset()
    return frozenset.intersection(*(g.edges for g in graphs))


def proof_to_json(g: ProofGraph) -> dict:
    return {"nodes": g.sorted_nodes(), "edges": [list(e) for e in g.sorted_edges()]}


def proof_from_json(obj: dict) -> ProofGraph:
    return ProofGraph(frozenset(obj.get("nodes", [])),
                      frozenset(tuple(e) for e in obj.get("edges", [])))


# ------------------------------------------------------------- replay ------


def replay(g: ProofGraph, ctx: Context, q: Question | Literal,
           cl: Closure | None = None) -> bool:
    """Re-derive the question by firing the proof's rules in topological order.

    A rule fires on a grounding only when every positive body literal is
    produced by one of its in-neighbours and, if it has negated literals,
    the NAF node feeds it and the negated atoms are absent from the closure.
    """
    lit = q.literal if isinstance(q, Question) else q
    if cl is None:
        cl = compute_closure(ctx)
    if g.nodes == {NAF} and not g.edges:
        return not cl.holds(lit.atom)
    target = lit.atom
    order = _topological(g.nodes, g.edges)
    if order is None:
        return False
    preds: dict[str, list] = {n: [] for n in g.nodes}
    for a, b in g.edges:
        preds[b].append(a)
    produced: dict[str, set] = {}
    rule_by_id = {r.id: r for r in ctx.rules}
    for n in order:
        kind = node_kind(n)
        if kind == "fact":
            produced[n] = {ctx.fact(n).literal}
        elif kind == "naf":
            produced[n] = set()
        else:
            rule = ctx.rule(n)
            available = set().union(*(produced[p] for p in preds[n]))
            has_naf = NAF in preds[n]
            heads = set()
            for head, sups in cl.supports.items():
                for sup in sups:
                    if rule_by_id[sup.rule] is not rule:
                        continue
                    ok = True
                    for b in sup.body:
                        if b.negated:
                            ok = has_naf and b.atom not in cl.derived
                        else:
                            ok = b in available
                        if not ok:
                            break
                    if ok:
                        heads.add(head)
            if not heads:
                return False
            produced[n] = heads
    return any(target in atoms for atoms in produced.values())


# ---------------------------------------------------------- enumeration ----


def _ancestors(cl: Closure) -> dict[Literal, frozenset]:
    """Atoms that can occur in some derivation tree of each atom."""
    deps: dict[Literal, set] = {}
    for head, sups in cl.supports.items():
        s = deps.setdefault(head, set())
        for sup in sups:
            s.update(b for b in sup.body if not b.negated)
    memo: dict[Literal, frozenset] = {}
    for start in deps:
        seen = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for y in deps.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        memo[start] = frozenset(seen)
    return memo


class _Enumerator:
    def __init__(self, ctx: Context, cl: Closure, budget: int):
        self.ctx = ctx
        self.cl = cl
        self.budget = budget
        self.anc = _ancestors(cl)
        self.facts_by_lit: dict[Literal, list[str]] = {}
        for fact in ctx.facts:
            self.facts_by_lit.setdefault(fact.literal, []).append(fact.ref)
        self.memo: dict = {}

    def derive(self, atom: Literal, forbidden: frozenset) -> list:
        """Distinct ``(nodes, edges, output_node)`` derivations of ``atom``."""
        key = (atom, forbidden & self.anc.get(atom, frozenset((atom,))))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        found: dict = {}
        for ref in self.facts_by_lit.get(atom, ()):
            found[(frozenset((ref,)), frozenset(), ref)] = None
        inner = forbidden | {atom}
        for sup in self.cl.supports.get(atom, ()):
            rid = f"R{sup.rule}"
            options = []
            for b in sup.body:
                if b.negated:
                    options.append(None)
                    continue
                if b in inner:
                    options = None
                    break
                sub = self.derive(b, inner)
                if not sub:
                    options = None
                    break
                options.append(sub)
            if options is None:
                continue
            uses_naf = any(o is None for o in options)
            choices = [o for o in options if o is not None]
            for combo in product(*choices):
                nodes = {rid}
                edges = set()
                for sub_nodes, sub_edges, out in combo:
                    nodes |= sub_nodes
                    edges |= sub_edges
                    edges.add((out, rid))
                if uses_naf:
                    nodes.add(NAF)
                    edges.add((NAF, rid))
                if (rid, rid) in edges or _topological(nodes, edges) is None:
                    continue
                found[(frozenset(nodes), frozenset(edges), rid)] = None
                if len(found) > self.budget:
                    raise ProofExplosion(
                        f"more than {self.budget} partial derivations of {atom}"
                    )
        result = list(found)
        self.memo[key] = result
        return result


def enumerate_proofs(ctx: Context, q: Question | Literal, limit: int = DEFAULT_LIMIT,
                     cl: Closure | None = None, cwa_failure_proof: bool = True,
                     budget: int = 200_000) -> tuple[ProofSet, bool]:
    """All distinct proof graphs for the question's answer.

    Returns ``(proofs, truncated)``; when more than ``limit`` proofs exist
    only the first ``limit`` in canonical order are kept and ``truncated``
    is true.
    """
    if limit < 1:
        raise ValueError("limit must be positive")
    lit = q.literal if isinstance(q, Question) else q
    if cl is None:
        cl = compute_closure(ctx)
    atom = lit.atom
    if atom not in cl.derived:
        if not lit.negated and not cwa_failure_proof:
            raise NoProof(f"{lit} is not derivable")
        return ProofSet([ProofGraph({NAF})]), False
    derivations = _Enumerator(ctx, cl, budget).derive(atom, frozenset())
    graphs = sort_proofs(ProofGraph(n, e) for n, e, _ in derivations)
    truncated = len(graphs) > limit
    return ProofSet(graphs[:limit]), truncated
