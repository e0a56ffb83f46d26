"""Proof-set reasoning over small rule bases.

Parse theories, compute their closure under stratified negation, enumerate
every proof graph of a question, decode proof sets from per-slot
probabilities, match predicted slots to gold proofs, and score predictions.
"""

__version__ = "0.1.0"

from .rulebase import (  # noqa: E402
    Context, DSLSyntaxError, Example, Fact, Literal, Question, Rule, RulebaseError,
    parse_context, read_examples, serialize_context, write_examples,
)
from .reasoner import Closure, CyclicNegation, answer, closure, stratify  # noqa: E402
from .proofs import (  # noqa: E402
    EMPTY_PROOF, NoProof, ProofExplosion, ProofGraph, ProofSet, canonical_key,
    enumerate_proofs, is_valid, proof_depth, replay, validate,
)
from .decoder import (  # noqa: E402
    DecodeResult, Infeasible, Slot, decode_edges, decode_proof_set,
    decode_top_p_threshold, edge_mask, top_p_node_sets,
)
from .setloss import Assignment, bce, cost_matrices, hungarian, hungarian_loss, sequential_loss  # noqa: E402
from .metrics import AggregateMetrics, SampleMetrics, aggregate, sample_metrics  # noqa: E402
from .datagen import (  # noqa: E402
    GenConfig, NoiseConfig, PROFILES, dataset_stats, generate_dataset, generate_example,
    profile, simulate_probabilities,
)
