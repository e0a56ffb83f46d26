"""Parse a small theory, answer questions and list every proof graph."""
from proofset import Literal, answer, closure, enumerate_proofs, parse_context, proof_depth

THEORY = """
fact F1: (Anne, is, big).
fact F2: (Anne, is, young).
fact F3: (Bob, is, green).
rule R1: (X, is, big) -> (X, is, strong).
rule R2: (X, is, young) -> (X, is, strong).
rule R3: (X, is, strong) & ~(X, is, red) -> (X, is, kind).
"""

ctx = parse_context(THEORY)
cl = closure(ctx)
print("derived atoms:")
for atom in sorted(cl.derived, key=str):
    print("  ", atom, "depth", cl.depth(atom))

for q in (Literal("Anne", "is", "kind"), Literal("Bob", "is", "kind"),
          Literal("Bob", "is", "kind", True)):
    value, depth = answer(ctx, q, cl)
    proofs, truncated = enumerate_proofs(ctx, q, cl=cl)
    print(f"\n{q}: {value} (depth {depth}), {len(proofs)} proof(s)")
    for g in proofs:
        print("   nodes", sorted(g.nodes), "edges", sorted(g.edges), "depth", proof_depth(g))
