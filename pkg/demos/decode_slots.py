"""Decode a proof set from hand-written slot probabilities, then via top-p."""
import numpy as np

from proofset import Slot, decode_proof_set, decode_top_p_threshold, parse_context, top_p_node_sets

ctx = parse_context("""
fact F1: (Anne, is, big).
fact F2: (Anne, is, young).
rule R1: (X, is, big) -> (X, is, strong).
rule R2: (X, is, young) -> (X, is, strong).
""")
k = ctx.k  # F1 F2 R1 R2 NAF
edges = np.zeros((k, k))
edges[0, 2] = 0.9   # F1 -> R1
edges[1, 3] = 0.8   # F2 -> R2
slots = [
    Slot(np.array([0.95, 0.1, 0.9, 0.05, 0.02]), edges),
    Slot(np.array([0.1, 0.85, 0.2, 0.7, 0.02]), edges),
    Slot(np.zeros(k), np.zeros((k, k))),  # terminator
]
print("slot decoding:")
for g in decode_proof_set(slots, ctx).proofs:
    print("  ", sorted(g.nodes), sorted(g.edges))

node_probs = np.array([0.9, 0.6, 0.8, 0.55, 0.05])
print("\nfive best node sets:")
for v, score in top_p_node_sets(node_probs, 5):
    print("  ", v.tolist(), round(score, 3))
res = decode_top_p_threshold(node_probs, edges, ctx, p_max=3, theta=0.5)
print("\nthreshold decoding:")
for g in res.proofs:
    print("  ", sorted(g.nodes), sorted(g.edges))
