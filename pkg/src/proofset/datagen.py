"""Synthetic attribute-style rule-bases with controlled depth and proof counts.

Each example plants a derivation chain of the target depth for one entity,
optionally adds a second rule concluding one link of the chain at the same
depth (a second proof), then pads the theory with random distractor facts and rules.
Examples are seeded independently from ``(seed, index)``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .decoder import Slot, proof_labels
from .proofs import (
    ProofExplosion, ProofSet, common_edges, common_nodes, enumerate_proofs, proof_depth,
)
from .reasoner import CyclicNegation, answer, closure
from .rulebase import (
    MAX_STATEMENTS, Context, Example, Fact, Literal, Question, Rule,
)

NAMES = ["Anne", "Bob", "Charlie", "Dave", "Erin", "Fiona", "Gary", "Harry"]
ADJECTIVES = [
    "big", "blue", "cold", "furry", "green", "kind", "nice", "quiet", "red",
    "rough", "round", "smart", "white", "young", "high", "fast", "soft", "old",
]
QUESTION_KINDS = ("derived", "cwa_false", "naf_true")


class ConfigInvalid(ValueError):
    pass


class GenerationStalled(RuntimeError):
    pass


class TooManyGoldProofs(ValueError):
    pass


def vocabulary(words: list[str], size: int) -> list[str]:
    base = list(words[:size])
    n = len(base)
    while len(base) < size:
        base.append(f"{words[n % len(words)]}{len(base) // len(words)}")
        n += 1
    return base


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    num_examples: int = 100
    max_depth: int = 3
    facts_range: tuple[int, int] = (2, 10)
    rules_range: tuple[int, int] = (2, 10)
    n_entities: int = 3
    n_attributes: int = 14
    negation_rate: float = 0.25
    proof_limit: int = 100
    p_max: int = 3
    multiproof_rate: float = 0.18
    question_mix: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    max_attempts: int = 500
    id_prefix: str = "gen"

    def validate(self) -> None:
        lo_f, hi_f = self.facts_range
        lo_r, hi_r = self.rules_range
        if not (0 <= lo_f <= hi_f and 0 <= lo_r <= hi_r):
            raise ConfigInvalid("ranges must be nonempty and nonnegative")
        if lo_f + lo_r > MAX_STATEMENTS:
            raise ConfigInvalid(f"facts + rules must fit in {MAX_STATEMENTS}")
        if self.max_depth < 0 or self.max_depth + 2 > MAX_STATEMENTS:
            raise ConfigInvalid("max_depth out of range")
        if self.n_entities < 1:
            raise ConfigInvalid("need at least one entity")
        if self.n_attributes < self.max_depth + 4:
            raise ConfigInvalid(f"need at least {self.max_depth + 4} attributes")
        if not 0.0 <= self.negation_rate <= 1.0:
            raise ConfigInvalid("negation_rate must lie in [0, 1]")
        if not 0.0 <= self.multiproof_rate <= 1.0:
            raise ConfigInvalid("multiproof_rate must lie in [0, 1]")
        if self.proof_limit < 1 or self.p_max < 1 or self.num_examples < 0:
            raise ConfigInvalid("proof_limit, p_max must be positive")
        mix = np.asarray(self.question_mix, dtype=float)
        if mix.shape != (3,) or mix.min() < 0 or mix.sum() <= 0:
            raise ConfigInvalid("question_mix needs three nonnegative weights")


PROFILES = {
    "du0": dict(max_depth=0, facts_range=(2, 10), rules_range=(1, 8)),
    "du1": dict(max_depth=1, facts_range=(2, 10), rules_range=(2, 10)),
    "du2": dict(max_depth=2, facts_range=(2, 10), rules_range=(2, 10)),
    "du3": dict(max_depth=3, facts_range=(2, 10), rules_range=(3, 11)),
    "du5": dict(max_depth=5, facts_range=(2, 10), rules_range=(5, 13)),
}


def profile(name: str, **overrides) -> GenConfig:
    try:
        base = PROFILES[name.lower()]
    except KeyError:
        raise ConfigInvalid(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None
    return GenConfig(**{**base, "id_prefix": name.lower(), **overrides})


def is_lit(e, attr, neg=False):
    return Literal(e, "is", attr, neg)


class _Builder:
    def __init__(self, cfg: GenConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.facts: list[Literal] = []
        self.rules: list[tuple[tuple[Literal, ...], Literal]] = []

    def fact(self, lit):
        if lit not in self.facts:
            self.facts.append(lit)

    def rule(self, body, head):
        self.rules.append((tuple(body), head))


def _attempt(cfg: GenConfig, rng: np.random.Generator, kind: str, depth: int):
    ents = list(rng.permutation(vocabulary(NAMES, cfg.n_entities)))
    attrs = list(rng.permutation(vocabulary(ADJECTIVES, cfg.n_attributes)))
    b = _Builder(cfg, rng)
    hero = ents[0]
    pool = attrs[:]
    chain = [pool.pop() for _ in range(depth + 1)]
    blocked = pool.pop()  # never concluded and never a fact of anyone
    planted = set(chain)
    b.fact(is_lit(hero, chain[0]))
    for i in range(1, depth + 1):
        body = [is_lit("X", chain[i - 1])]
        if rng.random() < 0.3 and pool:
            extra = pool[int(rng.integers(len(pool)))]
            planted.add(extra)
            b.fact(is_lit(hero, extra))
            body.append(is_lit("X", extra))
        if rng.random() < cfg.negation_rate:
            body.append(is_lit("X", blocked, True))
        b.rule(body, is_lit("X", chain[i]))
    if depth >= 1 and rng.random() < min(1.0, cfg.multiproof_rate * depth):
        step = int(rng.integers(1, depth + 1))
        alt = pool.pop()
        planted.add(alt)
        b.fact(is_lit(hero, alt))
        # same depth as the planted link: reuse the previous link, add a fact
        b.rule([is_lit("X", chain[step - 1]), is_lit("X", alt)], is_lit("X", chain[step]))

    n_facts = max(int(rng.integers(cfg.facts_range[0], cfg.facts_range[1] + 1)), len(b.facts))
    n_rules = max(int(rng.integers(cfg.rules_range[0], cfg.rules_range[1] + 1)), len(b.rules))
    n_facts = min(n_facts, MAX_STATEMENTS - n_rules)
    free_attrs = [a for a in attrs if a != blocked]
    # distractors never conclude an attribute of the planted derivation
    head_attrs = [a for a in free_attrs if a not in planted]
    guard = 0
    while len(b.facts) < n_facts and guard < 200:
        guard += 1
        e = ents[int(rng.integers(len(ents)))]
        a = free_attrs[int(rng.integers(len(free_attrs)))]
        if e == hero and a in chain[1:]:
            continue
        b.fact(is_lit(e, a))
    while len(b.rules) < n_rules:
        size = 1 + int(rng.random() < 0.4)
        head = head_attrs[int(rng.integers(len(head_attrs)))]
        options = [a for a in free_attrs if a != head]
        picks = rng.choice(len(options), size=size, replace=False)
        body = [is_lit("X", options[j]) for j in picks]
        if rng.random() < cfg.negation_rate:
            neg = free_attrs[int(rng.integers(len(free_attrs)))]
            if neg != head and all(lit.object != neg for lit in body):
                body.append(is_lit("X", neg, True))
        b.rule(body, is_lit("X", head))

    facts = list(b.facts)
    rules = list(b.rules)
    rng.shuffle(facts)
    order = rng.permutation(len(rules))
    ctx = Context(
        tuple(Fact(i, lit) for i, lit in enumerate(facts, 1)),
        tuple(Rule(i, rules[j][0], rules[j][1]) for i, j in enumerate(order, 1)),
    )
    cl = closure(ctx)  # raises CyclicNegation

    if kind == "derived":
        q = is_lit(hero, chain[depth])
    else:
        candidates = [
            is_lit(e, a) for e in ents for a in attrs if is_lit(e, a) not in cl.derived
        ]
        if not candidates:
            return None
        q = candidates[int(rng.integers(len(candidates)))]
        if kind == "naf_true":
            q = q.negate()
    return ctx, cl, q


def generate_example(cfg: GenConfig, index: int) -> Example:
    """The ``index``-th example of the stream; independent of other indices."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed & (2**64 - 1), index]))
    mix = np.asarray(cfg.question_mix, dtype=float)
    mix = mix / mix.sum()
    kind = QUESTION_KINDS[int(rng.choice(3, p=mix))]
    depth = int(rng.integers(cfg.max_depth + 1)) if kind == "derived" else 0
    for _ in range(cfg.max_attempts):
        try:
            built = _attempt(cfg, rng, kind, depth)
        except CyclicNegation:
            continue
        if built is None:
            continue
        ctx, cl, q = built
        try:
            proofs, truncated = enumerate_proofs(ctx, q, cfg.proof_limit, cl=cl)
        except ProofExplosion:
            continue
        if truncated or len(proofs) > cfg.p_max:
            continue
        depths = [proof_depth(g) for g in proofs]
        if max(depths) > cfg.max_depth or min(depths) != depth:
            continue
        if depth == 0 and any(len(g.nodes) > 1 for g in proofs):
            continue
        ans, _ = answer(ctx, Question(q), cl)
        return Example(
            id=f"{cfg.id_prefix}-{cfg.seed}-{index}",
            context=ctx,
            question=Question(q),
            answer=ans,
            gold_proofs=tuple(proofs),
            depth=min(depths),
        )
    raise GenerationStalled(f"example {index}: no acceptable sample in {cfg.max_attempts} attempts")


def generate_dataset(cfg: GenConfig, start: int = 0) -> Iterator[Example]:
    cfg.validate()
    for index in range(start, cfg.num_examples):
        yield generate_example(cfg, index)


# ------------------------------------------------------------ noise --------


@dataclass(frozen=True)
class NoiseConfig:
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 1.0:
            raise ConfigInvalid("sigma must lie in [0, 1]")


def simulate_probabilities(gold, ctx: Context, p_max: int, noise: NoiseConfig,
                           stream: int = 0) -> list[Slot]:
    """Slots whose probabilities are ``|label - u|`` with ``u ~ U[0, sigma]``.

    Slot i carries gold proof i (canonical order); the remaining slots are
    terminators with all-zero labels.
    """
    gold = list(gold if isinstance(gold, ProofSet) else ProofSet(gold))
    if not gold:
        raise ValueError("gold proof set is empty")
    if len(gold) > p_max:
        raise TooManyGoldProofs(f"{len(gold)} gold proofs > p_max={p_max}")
    rng = np.random.default_rng(np.random.SeedSequence([noise.seed & (2**64 - 1), stream]))
    k = ctx.k
    slots = []
    for i in range(p_max):
        if i < len(gold):
            yn, ye = proof_labels(gold[i], ctx)
        else:
            yn, ye = np.zeros(k), np.zeros((k, k))
        un = rng.uniform(0.0, noise.sigma, size=k) if noise.sigma else np.zeros(k)
        ue = rng.uniform(0.0, noise.sigma, size=(k, k)) if noise.sigma else np.zeros((k, k))
        slots.append(Slot(np.abs(yn - un), np.abs(ye - ue)))
    return slots


# ------------------------------------------------------------ stats --------


def dataset_stats(examples) -> dict:
    """Depth histogram, multi-proof fraction by depth and common-subgraph rates."""
    depth_hist: Counter = Counter()
    multi: Counter = Counter()
    n_multi = common_n = common_e = common_both = 0
    total = 0
    for ex in examples:
        total += 1
        depth_hist[ex.depth] += 1
        proofs = list(ex.gold_proofs)
        if len(proofs) > 1:
            multi[ex.depth] += 1
            n_multi += 1
            has_n = bool(common_nodes(proofs))
            has_e = bool(common_edges(proofs))
            common_n += has_n
            common_e += has_e
            common_both += has_n and has_e
    frac = {str(d): multi[d] / c for d, c in sorted(depth_hist.items())}
    return {
        "n": total,
        "depth_hist": {str(d): c for d, c in sorted(depth_hist.items())},
        "multiproof_frac_by_depth": frac,
        "multiproof_frac": n_multi / total if total else 0.0,
        "common_node_frac": common_n / n_multi if n_multi else 0.0,
        "common_edge_frac": common_e / n_multi if n_multi else 0.0,
        "common_node_and_edge_frac": common_both / n_multi if n_multi else 0.0,
    }
