"""Acceptance criteria, each run at its stated size and time budget.

Every test prints one ``[PASS]``/``[FAIL]`` line; the lines are repeated in
the terminal summary under "acceptance criteria".
"""
import time

import numpy as np

from proofset.datagen import (
    GenConfig, NoiseConfig, dataset_stats, generate_dataset, profile, simulate_probabilities,
)
from proofset.decoder import Infeasible, Slot, decode_edges, decode_proof_set, top_p_node_sets
from proofset.metrics import aggregate, sample_metrics
from proofset.proofs import ProofGraph, ProofSet, enumerate_proofs, replay, validate
from proofset.reasoner import answer, closure
from proofset.rulebase import NAF
from proofset.setloss import hungarian, hungarian_loss

from _oracles import (
    brute_force_assignment, brute_force_edges, exhaustive_top_p, naive_model, naive_proofs,
)


def _triples(atoms):
    return {(a.subject, a.predicate, a.object) for a in atoms}


def test_hungarian_exactness(report):
    rng = np.random.default_rng(20240601)
    mats = []
    for n in range(1000):
        p = 2 + n % 5
        if n % 4 == 0:  # integer costs create many tied optima
            mats.append(rng.integers(0, 4, size=(p, p)).astype(float))
        else:
            mats.append(rng.random((p, p)) * 10)
    start = time.perf_counter()
    got = [hungarian(c) for c in mats]
    elapsed = time.perf_counter() - start
    mismatches = sum(
        abs(a.total_cost - brute_force_assignment(c)[0]) > 1e-9 for a, c in zip(got, mats)
    )
    ok = mismatches == 0 and elapsed < 5.0
    report("Hungarian exactness", ok,
           f"{mismatches} mismatches / 1000 matrices (p=2..6), {elapsed:.2f}s < 5s")
    assert ok


def test_top_p_exactness(report):
    rng = np.random.default_rng(7)
    cases = []
    for n in range(500):
        k = 1 + n % 15
        p = int(rng.integers(1, 11))
        if n % 3 == 0:  # coarse grid: exact ties and 0.5 entries
            probs = rng.integers(0, 11, size=k) / 10
        else:
            probs = rng.random(k)
        cases.append((probs, p))
    start = time.perf_counter()
    got = [top_p_node_sets(probs, p) for probs, p in cases]
    elapsed = time.perf_counter() - start
    mismatches = 0
    for (probs, p), mine in zip(cases, got):
        want = exhaustive_top_p(probs, p)
        same_vectors = [v.tolist() for v, _ in mine] == [v for v, _ in want]
        same_scores = len(mine) == len(want) and all(
            abs(a - b) <= 1e-9 for (_, a), (_, b) in zip(mine, want)
        )
        mismatches += not (same_vectors and same_scores)
    ok = mismatches == 0 and elapsed < 10.0
    report("Top-p exactness", ok,
           f"{mismatches} mismatches / 500 vectors (k<=15, p<=10, tie order included), "
           f"{elapsed:.2f}s < 10s")
    assert ok


def _edge_instance(rng, n):
    """Selected node count cycles through 1..8, with at most 18 candidate edges."""
    s = 1 + n % 8
    max_rules = s if s == 1 else min(s, 18 // (s - 1))
    r = int(rng.integers(0 if n % 10 == 0 else 1, max_rules + 1))
    naf = int(s > r and rng.random() < 0.4)
    f = s - r - naf
    n_facts = f + int(rng.integers(0, 3))
    n_rules = r + int(rng.integers(0, 3))
    kinds = ["fact"] * n_facts + ["rule"] * n_rules + ["naf"]
    k = len(kinds)
    v = np.zeros(k, dtype=int)
    v[rng.choice(n_facts, size=f, replace=False)] = 1
    v[n_facts + rng.choice(n_rules, size=r, replace=False)] = 1
    v[k - 1] = naf
    ep = rng.integers(0, 11, size=(k, k)) / 10 if n % 3 == 0 else rng.random((k, k))
    mask = np.zeros((k, k), dtype=bool)
    mask[:, n_facts:n_facts + n_rules] = True
    np.fill_diagonal(mask, False)
    return v, ep, mask, kinds


def test_edge_decoder_optimality(report):
    rng = np.random.default_rng(99)
    mismatches = infeasible = 0
    sizes = set()
    for n in range(300):
        v, ep, mask, kinds = _edge_instance(rng, n)
        sizes.add(int(v.sum()))
        want = brute_force_edges(v, ep, kinds)
        try:
            got = decode_edges(v, ep, mask)
        except Infeasible:
            got = None
        infeasible += want is None
        mismatches += got != want
    ok = mismatches == 0
    report("Edge-decoder optimality", ok,
           f"{mismatches} mismatches / 300 instances (selected nodes {min(sizes)}..{max(sizes)}, "
           f"{infeasible} infeasible agreed)")
    assert ok


def test_enumeration_oracle_equivalence(report):
    cfg = GenConfig(seed=31, num_examples=200, max_depth=3, facts_range=(1, 8),
                    rules_range=(1, 6), id_prefix="enum")
    mismatches = questions = 0
    for ex in generate_dataset(cfg):
        ctx = ex.context
        assert ctx.f <= 8 and ctx.r <= 6
        cl = closure(ctx)
        targets = [ex.question.literal] + list(cl.derived)
        for lit in targets:
            got, truncated = enumerate_proofs(ctx, lit, limit=10**6, cl=cl)
            want = naive_proofs(ctx, lit.atom)
            mismatches += truncated or got.keys() != want
            questions += 1
    ok = mismatches == 0
    report("Enumeration oracle equivalence", ok,
           f"{mismatches} mismatches over 200 contexts ({questions} questions, "
           "<= 8 facts, <= 6 rules)")
    assert ok


def _decode_and_score(examples, sigma, seed=0):
    samples = []
    for index, ex in enumerate(examples):
        slots = simulate_probabilities(ex.gold_proofs, ex.context, 3,
                                       NoiseConfig(sigma, seed), stream=index)
        pred = decode_proof_set(slots, ex.context).proofs
        predicted_answer = answer(ex.context, ex.question)[0]
        samples.append(sample_metrics(pred, ProofSet(ex.gold_proofs), predicted_answer, ex.answer))
    return aggregate(samples)


def test_clean_round_trip(report):
    start = time.perf_counter()
    examples = list(generate_dataset(profile("du3", num_examples=1000, seed=0)))
    clean = _decode_and_score(examples, 0.0)
    elapsed = time.perf_counter() - start
    sweep = [clean.full_acc] + [_decode_and_score(examples, s, seed=1).full_acc for s in (0.2, 0.4)]
    monotone = all(a >= b for a, b in zip(sweep, sweep[1:]))
    ok = clean.full_acc == 1.0 and clean.proof_f1 == 1.0 and elapsed < 60.0 and monotone
    report("Clean round-trip", ok,
           f"FA={clean.full_acc} proofF1={clean.proof_f1} on 1000 DU3 in {elapsed:.1f}s < 60s; "
           f"FA over sigma 0/0.2/0.4 = {sweep}")
    assert ok


def test_reasoner_soundness(report):
    examples = []
    for name, seed in (("du0", 100), ("du1", 101), ("du2", 102), ("du3", 103), ("du5", 105)):
        examples += generate_dataset(profile(name, num_examples=2000, seed=seed))
    bad_proofs = bad_models = proofs_checked = 0
    for ex in examples:
        cl = closure(ex.context)
        if _triples(cl.derived) != naive_model(ex.context):
            bad_models += 1
        proofs, _ = enumerate_proofs(ex.context, ex.question, cl=cl)
        lit = ex.question.literal
        for g in proofs:
            proofs_checked += 1
            if validate(g, ex.context):
                bad_proofs += 1
            elif g.nodes == {NAF}:
                bad_proofs += lit.atom in cl.derived
            elif not replay(g, ex.context, lit.atom, cl):
                bad_proofs += 1
    ok = len(examples) == 10_000 and bad_proofs == 0 and bad_models == 0
    report("Reasoner soundness", ok,
           f"{bad_proofs} bad of {proofs_checked} proofs, {bad_models} closure/model-checker "
           f"disagreements on {len(examples)} examples")
    assert ok


def test_metric_definitions(report):
    def G(nodes, edges=()):
        return ProofGraph(frozenset(nodes), frozenset(edges))

    a = G({"F1", "R1"}, {("F1", "R1")})
    b = G({"F2", "R2"}, {("F2", "R2")})
    c = G({"F3", "R3"}, {("F3", "R3")})
    d = G({"F4"})
    worked = sample_metrics([a, d], [a, b, c], True, True)
    identity = sample_metrics([a], [a], True, True)
    wrong_answer = sample_metrics([a, b], [a, b], False, True)
    examples_ok = (
        worked.node_p == 0.5 and abs(worked.node_r - 1 / 3) < 1e-15
        and abs(worked.node_f1 - 0.4) < 1e-15
        and identity.full_acc and identity.proof_f1 == 1.0
        and wrong_answer.proof_f1 == 1.0 and not wrong_answer.full_acc
    )
    rng = np.random.default_rng(3)
    refs = ["F1", "F2", "F3", "R1", "R2", "NAF"]
    rules = ["R1", "R2"]

    def random_graph():
        nodes = set(rng.choice(refs, size=int(rng.integers(1, 4)), replace=False))
        edges = {(s, t) for s in nodes for t in nodes & set(rules) if s != t and rng.random() < 0.6}
        return G(nodes, edges)

    violations = 0
    for _ in range(10_000):
        gold = [random_graph() for _ in range(int(rng.integers(1, 4)))]
        pred = [random_graph() for _ in range(int(rng.integers(0, 4)))]
        if rng.random() < 0.5 and gold:
            pred.append(gold[0])
        m = sample_metrics(pred, gold, True, True)
        violations += m.proof_p > min(m.node_p, m.edge_p) + 1e-15
    ok = examples_ok and violations == 0
    report("Metric definitions", ok,
           f"worked examples {'reproduce' if examples_ok else 'differ'} "
           f"(node_p {worked.node_p}, node_r {worked.node_r:.6f}, F1 {worked.node_f1:.6f}); "
           f"{violations} violations of proof_p <= min(node_p, edge_p) in 10000 pairs")
    assert ok


def test_depth_multiproof_trend(report):
    examples = list(generate_dataset(profile("du5", num_examples=2000, seed=0)))
    stats = dataset_stats(examples)
    fracs = [stats["multiproof_frac_by_depth"].get(str(d)) for d in range(6)]
    present = all(f is not None for f in fracs)
    monotone = present and all(a <= b for a, b in zip(fracs, fracs[1:]))
    depth0_single = all(
        all(len(g.nodes) == 1 for g in ex.gold_proofs) for ex in examples if ex.depth == 0
    )
    ok = monotone and depth0_single
    shown = ", ".join(f"d{d}={f:.3f}" for d, f in enumerate(fracs) if f is not None)
    report("Depth/multi-proof trend", ok,
           f"multi-proof fraction by depth {shown} (non-decreasing: {monotone}); "
           f"depth-0 single-node only: {depth0_single}; overall {stats['multiproof_frac']:.3f}")
    assert ok


def test_hungarian_loss_permutation_invariance(report):
    rng = np.random.default_rng(5)
    examples = [ex for ex in generate_dataset(profile("du5", num_examples=3000, seed=44))
                if len(ex.gold_proofs) >= 2][:250]
    examples += list(generate_dataset(profile("du3", num_examples=250, seed=45)))
    worst = 0.0
    for ex in examples:
        k = ex.context.k
        p = int(rng.integers(len(ex.gold_proofs), 5))
        slots = [Slot(rng.random(k), rng.random((k, k))) for _ in range(int(rng.integers(1, p + 1)))]
        gold = list(ex.gold_proofs)
        base, _ = hungarian_loss(slots, gold, ex.context, p)
        order = rng.permutation(len(gold))
        moved, _ = hungarian_loss(slots, [gold[i] for i in order], ex.context, p)
        worst = max(worst, abs(moved - base))
    ok = len(examples) == 500 and worst < 1e-9
    report("Hungarian-loss permutation invariance", ok,
           f"max |delta loss| = {worst:.2e} < 1e-9 over {len(examples)} instances")
    assert ok
