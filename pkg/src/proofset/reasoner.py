"""Closed-world forward chaining with stratified negation-as-failure.

Atoms are grouped for stratification by their *signature*: the predicate
together with the object when the object is a constant, so that
``(X, is, big)`` and ``(X, is, kind)`` live in different strata.  A literal
whose object is a variable has the signature ``(predicate, None)`` and
overlaps every signature with the same predicate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import NamedTuple

import networkx as nx

from .rulebase import Context, Literal, Question, Rule, is_variable


class ReasonerError(ValueError):
    pass


class CyclicNegation(ReasonerError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        names = " -> ".join(_sig_str(s) for s in self.cycle)
        super().__init__(f"negation inside a recursive cycle: {names}")


class Signature(NamedTuple):
    predicate: str
    object: str | None


def _sig_str(sig: Signature) -> str:
    return f"{sig.predicate}/{sig.object if sig.object is not None else '*'}"


def signature(lit: Literal) -> Signature:
    return Signature(lit.predicate, None if is_variable(lit.object) else lit.object)


def _overlaps(a: Signature, b: Signature) -> bool:
    return a.predicate == b.predicate and (
        a.object is None or b.object is None or a.object == b.object
    )


@dataclass(frozen=True)
class Strata:
    stratum: dict
    rule_stratum: dict = field(default_factory=dict)

    def __getitem__(self, sig) -> int:
        if isinstance(sig, Literal):
            sig = signature(sig)
        return self.stratum[sig]

    def of(self, lit: Literal) -> int:
        """Stratum of a literal: the largest stratum among overlapping signatures."""
        sig = signature(lit)
        levels = [v for s, v in self.stratum.items() if _overlaps(s, sig)]
        return max(levels, default=0)


def _dependency_graph(ctx: Context) -> nx.MultiDiGraph:
    sigs = set()
    for fact in ctx.facts:
        sigs.add(signature(fact.literal))
    for rule in ctx.rules:
        sigs.add(signature(rule.head))
        sigs.update(signature(b) for b in rule.body)
    graph = nx.MultiDiGraph()
    graph.add_nodes_from(sigs)
    for rule in ctx.rules:
        head = signature(rule.head)
        for lit in rule.body:
            b = signature(lit)
            for s in sigs:
                if _overlaps(s, b):
                    graph.add_edge(s, head, negative=lit.negated, rule=rule.id)
    # a variable-object head defines every signature it overlaps
    for s in sigs:
        if s.object is None:
            for t in sigs:
                if t != s and _overlaps(s, t):
                    graph.add_edge(s, t, negative=False, rule=None)
    return graph


def stratify(ctx: Context) -> Strata:
    graph = _dependency_graph(ctx)
    comp_of = {}
    for i, comp in enumerate(nx.strongly_connected_components(graph)):
        for s in comp:
            comp_of[s] = i
    for u, v, data in graph.edges(data=True):
        if data["negative"] and comp_of[u] == comp_of[v]:
            back = nx.shortest_path(graph, v, u)
            raise CyclicNegation([u] + back)
    cond = nx.DiGraph()
    cond.add_nodes_from(set(comp_of.values()))
    weight: dict[tuple[int, int], int] = {}
    for u, v, data in graph.edges(data=True):
        cu, cv = comp_of[u], comp_of[v]
        if cu != cv:
            cond.add_edge(cu, cv)
            w = 1 if data["negative"] else 0
            weight[cu, cv] = max(weight.get((cu, cv), 0), w)
    comp_level = {c: 0 for c in cond.nodes}
    for c in nx.topological_sort(cond):
        for d in cond.successors(c):
            comp_level[d] = max(comp_level[d], comp_level[c] + weight[c, d])
    level = {s: comp_level[c] for s, c in comp_of.items()}
    rule_stratum = {rule.id: level[signature(rule.head)] for rule in ctx.rules}
    return Strata(level, rule_stratum)


class Support(NamedTuple):
    rule: int
    body: tuple[Literal, ...]  # grounded body literals, in rule order


@dataclass(frozen=True)
class Closure:
    derived: dict  # Literal -> min derivation depth
    supports: dict  # Literal -> list[Support]
    strata: Strata

    def __contains__(self, lit: Literal) -> bool:
        return lit in self.derived

    def depth(self, lit: Literal) -> int:
        return self.derived[lit]

    def holds(self, lit: Literal) -> bool:
        """Truth of a ground literal under the closed-world reading."""
        if lit.negated:
            return lit.atom not in self.derived
        return lit in self.derived


def _match(lit: Literal, atom: Literal, binding: dict) -> dict | None:
    if lit.predicate != atom.predicate:
        return None
    out = binding
    for term, value in ((lit.subject, atom.subject), (lit.object, atom.object)):
        if is_variable(term):
            bound = out.get(term)
            if bound is None:
                if out is binding:
                    out = dict(binding)
                out[term] = value
            elif bound != value:
                return None
        elif term != value:
            return None
    return out


def _groundings(rule: Rule, by_pred: dict, holds_neg, domain) -> list[dict]:
    """Bindings satisfying every body literal against the current atoms."""
    positives = [b for b in rule.body if not b.negated]
    negatives = [b for b in rule.body if b.negated]
    results = []

    def extend(i, binding):
        if i == len(positives):
            free = [v for v in rule.variables if v not in binding]
            options = [binding]
            if free:
                options = [
                    {**binding, **dict(zip(free, combo))}
                    for combo in product(domain, repeat=len(free))
                ]
            for b in options:
                if all(holds_neg(n.substitute(b).atom) for n in negatives):
                    results.append(b)
            return
        lit = positives[i]
        for atom in tuple(by_pred.get(lit.predicate, ())):
            nb = _match(lit, atom, binding)
            if nb is not None:
                extend(i + 1, nb)

    extend(0, {})
    return results


def closure(ctx: Context, strata: Strata | None = None) -> Closure:
    if strata is None:
        strata = stratify(ctx)
    domain = ctx.constants()
    derived: dict[Literal, int] = {}
    for fact in ctx.facts:
        derived[fact.literal] = 0
    by_pred: dict[str, dict] = {}  # predicate -> insertion-ordered atoms
    for atom in derived:
        by_pred.setdefault(atom.predicate, {})[atom] = None

    levels = sorted(set(strata.rule_stratum.values()))
    for level in levels:
        rules = [r for r in ctx.rules if strata.rule_stratum[r.id] == level]

        def absent(atom):
            return atom not in derived

        changed = True
        while changed:
            changed = False
            for rule in rules:
                for b in _groundings(rule, by_pred, absent, domain):
                    head = rule.head.substitute(b)
                    depth = 1 + max(
                        (derived[x.substitute(b)] for x in rule.body if not x.negated),
                        default=0,
                    )
                    old = derived.get(head)
                    if old is None:
                        derived[head] = depth
                        by_pred.setdefault(head.predicate, {})[head] = None
                        changed = True
                    elif depth < old:
                        derived[head] = depth
                        changed = True

    supports: dict[Literal, list[Support]] = {}
    absent = lambda atom: atom not in derived  # noqa: E731
    for rule in ctx.rules:
        for b in _groundings(rule, by_pred, absent, domain):
            head = rule.head.substitute(b)
            body = tuple(x.substitute(b) for x in rule.body)
            entry = Support(rule.id, body)
            lst = supports.setdefault(head, [])
            if entry not in lst:
                lst.append(entry)
    return Closure(derived, supports, strata)


def answer(ctx: Context, q: Question | Literal, cl: Closure | None = None) -> tuple[bool, int]:
    """Answer a ground question; returns ``(answer, label_depth)``."""
    lit = q.literal if isinstance(q, Question) else q
    if cl is None:
        cl = closure(ctx)
    if lit.negated:
        return lit.atom not in cl.derived, 0
    if lit in cl.derived:
        return True, cl.derived[lit]
    return False, 0
