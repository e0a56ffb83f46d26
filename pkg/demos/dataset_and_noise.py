"""Generate a dataset, print its statistics and sweep simulated noise."""
import json

from proofset import (
    NoiseConfig, ProofSet, aggregate, answer, dataset_stats, decode_proof_set,
    generate_dataset, profile, sample_metrics, simulate_probabilities,
)

examples = list(generate_dataset(profile("du5", num_examples=600, seed=0)))
print(json.dumps(dataset_stats(examples), indent=2))

for sigma in (0.0, 0.2, 0.4, 0.6):
    samples = []
    for i, ex in enumerate(examples):
        slots = simulate_probabilities(ex.gold_proofs, ex.context, 3, NoiseConfig(sigma, 1), stream=i)
        pred = decode_proof_set(slots, ex.context).proofs
        samples.append(sample_metrics(pred, ProofSet(ex.gold_proofs),
                                      answer(ex.context, ex.question)[0], ex.answer))
    agg = aggregate(samples)
    print(f"sigma={sigma}: full accuracy {agg.full_acc:.3f}, proof F1 {agg.proof_f1:.3f}")
