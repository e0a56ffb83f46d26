"""Theories, questions and examples.

A theory is a list of facts and rules over ``(subject, predicate, object)``
triples.  The text form is one statement per line::

    # comment
    fact F1: (Anne, is, big).
    rule R1: (X, is, big) & ~(X, is, red) -> (X, is, kind).

Every context indexes its nodes as facts ``F1..Ff``, then rules ``R1..Rr``,
then the single ``NAF`` pseudo-node, so ``k = f + r + 1``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

MAX_STATEMENTS = 25
MAX_RULE_VARIABLES = 2
NAF = "NAF"

_IDENT = re.compile(r"^[A-Za-z0-9_]+$")
_VARIABLE = re.compile(r"^[A-Z][0-9]*$")
_NODE_REF = re.compile(r"^(F|R)([1-9][0-9]*)$")


class RulebaseError(ValueError):
    pass


class DSLSyntaxError(RulebaseError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class LimitExceeded(RulebaseError):
    pass


class DuplicateId(RulebaseError):
    pass


class UnknownNode(RulebaseError, KeyError):
    def __str__(self):
        return ValueError.__str__(self)


def is_variable(term: str) -> bool:
    return bool(_VARIABLE.match(term))


@dataclass(frozen=True, order=True)
class Literal:
    subject: str
    predicate: str
    object: str
    negated: bool = False

    def __post_init__(self):
        for term in (self.subject, self.predicate, self.object):
            if not isinstance(term, str) or not _IDENT.match(term):
                raise RulebaseError(f"bad identifier {term!r}")
        if is_variable(self.predicate):
            raise RulebaseError(f"predicate {self.predicate!r} cannot be a variable")

    @property
    def atom(self) -> "Literal":
        """The positive version of this literal."""
        if not self.negated:
            return self
        return Literal(self.subject, self.predicate, self.object)

    def negate(self) -> "Literal":
        return Literal(self.subject, self.predicate, self.object, not self.negated)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(t for t in (self.subject, self.object) if is_variable(t))

    @property
    def is_ground(self) -> bool:
        return not self.variables

    def substitute(self, binding: dict[str, str]) -> "Literal":
        return Literal(
            binding.get(self.subject, self.subject),
            self.predicate,
            binding.get(self.object, self.object),
            self.negated,
        )

    def __str__(self):
        neg = "~" if self.negated else ""
        return f"{neg}({self.subject}, {self.predicate}, {self.object})"


@dataclass(frozen=True)
class Fact:
    id: int
    literal: Literal

    def __post_init__(self):
        if self.literal.negated:
            raise RulebaseError(f"fact F{self.id} must be positive")
        if not self.literal.is_ground:
            raise RulebaseError(f"fact F{self.id} must be ground")

    @property
    def ref(self) -> str:
        return f"F{self.id}"


@dataclass(frozen=True)
class Rule:
    id: int
    body: tuple[Literal, ...]
    head: Literal

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        if not self.body:
            raise RulebaseError(f"rule R{self.id} has an empty body")
        if self.head.negated:
            raise RulebaseError(f"rule R{self.id} head must be positive")
        body_vars = {v for lit in self.body for v in lit.variables}
        missing = set(self.head.variables) - body_vars
        if missing:
            raise RulebaseError(
                f"rule R{self.id} head variables {sorted(missing)} not in body"
            )
        if len(body_vars) > MAX_RULE_VARIABLES:
            raise RulebaseError(
                f"rule R{self.id} uses {len(body_vars)} variables "
                f"(at most {MAX_RULE_VARIABLES})"
            )

    @property
    def ref(self) -> str:
        return f"R{self.id}"

    @property
    def variables(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for lit in self.body:
            for v in lit.variables:
                seen.setdefault(v)
        return tuple(seen)


@dataclass(frozen=True)
class Context:
    facts: tuple[Fact, ...] = ()
    rules: tuple[Rule, ...] = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "facts", tuple(self.facts))
        object.__setattr__(self, "rules", tuple(self.rules))
        if len(self.facts) + len(self.rules) > MAX_STATEMENTS:
            raise LimitExceeded(
                f"{len(self.facts) + len(self.rules)} statements "
                f"(at most {MAX_STATEMENTS})"
            )
        for kind, items in (("F", self.facts), ("R", self.rules)):
            seen = set()
            for pos, item in enumerate(items, 1):
                if item.id in seen:
                    raise DuplicateId(f"{kind}{item.id}")
                seen.add(item.id)
                if item.id != pos:
                    raise RulebaseError(
                        f"ids must be dense in order: expected {kind}{pos}, "
                        f"got {kind}{item.id}"
                    )
        index = {ref: i for i, ref in enumerate(self.nodes, 1)}
        object.__setattr__(self, "_index", index)

    @property
    def f(self) -> int:
        return len(self.facts)

    @property
    def r(self) -> int:
        return len(self.rules)

    @property
    def k(self) -> int:
        return self.f + self.r + 1

    @property
    def nodes(self) -> list[str]:
        """Node refs in index order."""
        return [x.ref for x in self.facts] + [x.ref for x in self.rules] + [NAF]

    def node_index(self, ref: str) -> int:
        """1-based position of ``ref`` in the node universe."""
        try:
            return self._index[ref]
        except KeyError:
            raise UnknownNode(f"unknown node {ref!r}") from None

    def fact(self, ref: str) -> Fact:
        i = self.node_index(ref)
        if i > self.f:
            raise UnknownNode(f"{ref!r} is not a fact")
        return self.facts[i - 1]

    def rule(self, ref: str) -> Rule:
        i = self.node_index(ref)
        if not self.f < i <= self.f + self.r:
            raise UnknownNode(f"{ref!r} is not a rule")
        return self.rules[i - self.f - 1]

    def constants(self) -> list[str]:
        """Constants in subject/object positions, in first-seen order."""
        seen: dict[str, None] = {}
        lits = [x.literal for x in self.facts]
        for rule in self.rules:
            lits.extend(rule.body)
            lits.append(rule.head)
        for lit in lits:
            for term in (lit.subject, lit.object):
                if not is_variable(term):
                    seen.setdefault(term)
        return list(seen)


def node_kind(ref: str) -> str:
    """``"fact"``, ``"rule"`` or ``"naf"`` for a node ref."""
    if ref == NAF:
        return "naf"
    m = _NODE_REF.match(ref)
    if not m:
        raise UnknownNode(f"malformed node ref {ref!r}")
    return "fact" if m.group(1) == "F" else "rule"


def node_sort_key(ref: str) -> tuple[int, int]:
    """Facts, then rules, then NAF; numeric within a kind."""
    if ref == NAF:
        return (2, 0)
    m = _NODE_REF.match(ref)
    if not m:
        raise UnknownNode(f"malformed node ref {ref!r}")
    return (0 if m.group(1) == "F" else 1, int(m.group(2)))


def node_index(ctx: Context, ref: str) -> int:
    return ctx.node_index(ref)


@dataclass(frozen=True)
class Question:
    literal: Literal

    def __post_init__(self):
        if not self.literal.is_ground:
            raise RulebaseError("question must be ground")


@dataclass(frozen=True)
class Example:
    id: str
    context: Context
    question: Question
    answer: bool
    gold_proofs: tuple  # ProofGraph values, ordered by canonical key
    depth: int

    def to_json(self) -> dict:
        return example_to_json(self)


# ---------------------------------------------------------------- DSL ------

_STMT = re.compile(
    r"^(?P<kind>fact|rule)\s+(?P<id>[A-Za-z0-9_]+)\s*:\s*(?P<body>.*)\.\s*$"
)
_LITERAL = re.compile(
    r"^(?P<neg>~)?\s*\(\s*(?P<s>[^,()\s]+)\s*,\s*(?P<p>[^,()\s]+)\s*,"
    r"\s*(?P<o>[^,()\s]+)\s*\)$"
)


def _parse_literal(text: str, lineno: int) -> Literal:
    m = _LITERAL.match(text.strip())
    if not m:
        raise DSLSyntaxError(lineno, f"malformed literal {text.strip()!r}")
    try:
        return Literal(m["s"], m["p"], m["o"], bool(m["neg"]))
    except RulebaseError as exc:
        raise DSLSyntaxError(lineno, str(exc)) from None


def _parse_id(raw: str, prefix: str, lineno: int) -> int:
    m = _NODE_REF.match(raw)
    if not m or m.group(1) != prefix:
        raise DSLSyntaxError(lineno, f"expected an id like {prefix}1, got {raw!r}")
    return int(m.group(2))


def parse_context(text: str) -> Context:
    facts: list[Fact] = []
    rules: list[Rule] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _STMT.match(line)
        if not m:
            raise DSLSyntaxError(lineno, f"not a statement: {line!r}")
        if m["id"] in seen:
            raise DuplicateId(f"line {lineno}: {m['id']}")
        seen.add(m["id"])
        try:
            if m["kind"] == "fact":
                ident = _parse_id(m["id"], "F", lineno)
                if ident != len(facts) + 1:
                    raise DSLSyntaxError(
                        lineno, f"expected F{len(facts) + 1}, got {m['id']}"
                    )
                facts.append(Fact(ident, _parse_literal(m["body"], lineno)))
            else:
                ident = _parse_id(m["id"], "R", lineno)
                if ident != len(rules) + 1:
                    raise DSLSyntaxError(
                        lineno, f"expected R{len(rules) + 1}, got {m['id']}"
                    )
                if m["body"].count("->") != 1:
                    raise DSLSyntaxError(lineno, "rule needs exactly one '->'")
                lhs, rhs = m["body"].split("->")
                body = tuple(_parse_literal(part, lineno) for part in lhs.split("&"))
                rules.append(Rule(ident, body, _parse_literal(rhs, lineno)))
        except RulebaseError as exc:
            if isinstance(exc, DSLSyntaxError):
                raise
            raise DSLSyntaxError(lineno, str(exc)) from None
        if len(facts) + len(rules) > MAX_STATEMENTS:
            raise LimitExceeded(
                f"line {lineno}: more than {MAX_STATEMENTS} statements"
            )
    if not facts and not rules:
        raise DSLSyntaxError(0, "empty theory")
    return Context(tuple(facts), tuple(rules))


def serialize_context(ctx: Context) -> str:
    lines = [f"fact {x.ref}: {x.literal}." for x in ctx.facts]
    for rule in ctx.rules:
        body = " & ".join(str(lit) for lit in rule.body)
        lines.append(f"rule {rule.ref}: {body} -> {rule.head}.")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------- JSON ------


def _lit_to_json(lit: Literal) -> dict:
    return {"s": lit.subject, "p": lit.predicate, "o": lit.object, "neg": lit.negated}


def _lit_from_json(obj: dict) -> Literal:
    return Literal(obj["s"], obj["p"], obj["o"], bool(obj.get("neg", False)))


def _ref_number(ref: str, prefix: str) -> int:
    m = _NODE_REF.match(str(ref))
    if not m or m.group(1) != prefix:
        raise RulebaseError(f"expected an id like {prefix}1, got {ref!r}")
    return int(m.group(2))


def context_to_json(ctx: Context) -> dict:
    return {
        "facts": [
            {"id": x.ref, "s": x.literal.subject, "p": x.literal.predicate,
             "o": x.literal.object}
            for x in ctx.facts
        ],
        "rules": [
            {"id": x.ref, "body": [_lit_to_json(b) for b in x.body],
             "head": _lit_to_json(x.head)}
            for x in ctx.rules
        ],
    }


def context_from_json(obj: dict) -> Context:
    facts = tuple(
        Fact(_ref_number(x["id"], "F"), Literal(x["s"], x["p"], x["o"]))
        for x in obj.get("facts", [])
    )
    rules = tuple(
        Rule(
            _ref_number(x["id"], "R"),
            tuple(_lit_from_json(b) for b in x["body"]),
            _lit_from_json(x["head"]),
        )
        for x in obj.get("rules", [])
    )
    return Context(facts, rules)


def example_to_json(ex: Example) -> dict:
    from .proofs import proof_to_json

    return {
        "id": ex.id,
        "context": context_to_json(ex.context),
        "question": _lit_to_json(ex.question.literal),
        "answer": ex.answer,
        "proofs": [proof_to_json(g) for g in ex.gold_proofs],
        "depth": ex.depth,
    }


def example_from_json(obj: dict) -> Example:
    from .proofs import proof_from_json, sort_proofs

    ctx = context_from_json(obj["context"])
    proofs = sort_proofs(proof_from_json(p) for p in obj.get("proofs", []))
    return Example(
        id=str(obj["id"]),
        context=ctx,
        question=Question(_lit_from_json(obj["question"])),
        answer=bool(obj["answer"]),
        gold_proofs=tuple(proofs),
        depth=int(obj.get("depth", 0)),
    )


def dumps_example(ex: Example) -> str:
    return json.dumps(example_to_json(ex), sort_keys=False, separators=(",", ":"))


def read_jsonl(path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise RulebaseError(f"{path}:{lineno}: {exc}") from None


def read_examples(path) -> Iterator[Example]:
    for obj in read_jsonl(path):
        yield example_from_json(obj)


def write_examples(path, examples: Iterable[Example]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(dumps_example(ex) + "\n")
            n += 1
    return n
