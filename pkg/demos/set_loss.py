"""The matching loss does not care how gold proofs are ordered."""
import numpy as np

from proofset import Slot, generate_dataset, hungarian, hungarian_loss, profile

print("assignment of a 3x3 cost matrix:", hungarian(np.array([[2., 1, 1], [1, 2, 1], [1, 1, 2]])))

ex = next(e for e in generate_dataset(profile("du5", num_examples=500, seed=1))
          if len(e.gold_proofs) >= 2)
rng = np.random.default_rng(0)
k = ex.context.k
slots = [Slot(rng.random(k), rng.random((k, k))) for _ in range(3)]
gold = list(ex.gold_proofs)
loss, match = hungarian_loss(slots, gold, ex.context, 3)
loss_rev, _ = hungarian_loss(slots, gold[::-1], ex.context, 3)
print(f"{ex.id}: {len(gold)} gold proofs, loss {loss:.6f}, reversed order {loss_rev:.6f}")
print("gold position matched to each slot:", match.perm)
