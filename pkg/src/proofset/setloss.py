"""Permutation-invariant matching of predicted slots to gold proofs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoder import Slot, edge_mask, proof_labels
from .proofs import EMPTY_PROOF
from .rulebase import Context

EPS = 1e-7


class DimensionMismatch(ValueError):
    pass


class LengthMismatch(DimensionMismatch):
    pass


def clamp(probs):
    return np.clip(np.asarray(probs, dtype=float), EPS, 1.0 - EPS)


def bce(probs, labels) -> float:
    """Summed binary cross-entropy of ``probs`` against 0/1 ``labels``."""
    p = clamp(probs)
    y = np.asarray(labels, dtype=float)
    if p.shape != y.shape:
        raise LengthMismatch(f"{p.shape} vs {y.shape}")
    return float(-np.sum(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _pad(slots, gold, ctx: Context, p: int):
    slots = list(slots)
    gold = list(gold)
    if len(slots) > p or len(gold) > p:
        raise DimensionMismatch(f"{len(slots)} slots / {len(gold)} gold proofs exceed p={p}")
    for s in slots:
        if s.k != ctx.k:
            raise DimensionMismatch(f"slot has k={s.k}, context has k={ctx.k}")
    slots += [Slot.zeros(ctx.k) for _ in range(p - len(slots))]
    gold += [EMPTY_PROOF] * (p - len(gold))
    return slots, gold


def cost_matrices(slots, gold, ctx: Context, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Node and edge cross-entropy between every (slot, gold proof) pair.

    Both sides are padded to ``p``: slots with all-zero probabilities and
    gold with empty proofs.  Edge terms cover unmasked positions only.
    """
    slots, gold = _pad(slots, gold, ctx, p)
    mask = edge_mask(ctx)
    labels = [proof_labels(g, ctx) for g in gold]
    ln = np.zeros((p, p))
    le = np.zeros((p, p))
    for i, s in enumerate(slots):
        ep = s.edge_probs[mask]
        for j, (yn, ye) in enumerate(labels):
            ln[i, j] = bce(s.node_probs, yn)
            le[i, j] = bce(ep, ye[mask])
    return ln, le


@dataclass(frozen=True)
class Assignment:
    perm: tuple[int, ...]  # 0-based: row i is matched to column perm[i]
    total_cost: float


def _kuhn_munkres(c: np.ndarray):
    """Shortest augmenting path Hungarian method; returns (col_of_row, u, v)."""
    n = c.shape[0]
    inf = float("inf")
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    row_of = np.zeros(n + 1, dtype=int)  # column j -> row (1-based), 0 = free
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        row_of[0] = i
        j0 = 0
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = c[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[row_of[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if row_of[j0] == 0:
                break
        while True:
            j1 = way[j0]
            row_of[j0] = row_of[j1]
            j0 = j1
            if j0 == 0:
                break
    col_of = [0] * n
    for j in range(1, n + 1):
        col_of[row_of[j] - 1] = j - 1
    return col_of, u[1:], v[1:]


def _has_perfect_matching(allowed, rows, cols) -> bool:
    match: dict[int, int] = {}

    def augment(r, seen):
        for cidx in cols:
            if allowed[r][cidx] and cidx not in seen:
                seen.add(cidx)
                if cidx not in match or augment(match[cidx], seen):
                    match[cidx] = r
                    return True
        return False

    return all(augment(r, set()) for r in rows)


def hungarian(cost) -> Assignment:
    """Minimum-cost perfect matching; ties go to the lexicographically smallest perm.

    Optimal matchings are exactly the perfect matchings on edges that are
    tight under the optimal duals, so the smallest one is built greedily
    row by row over those edges.
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DimensionMismatch(f"cost matrix must be square, got {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix must be finite")
    n = c.shape[0]
    if n == 0:
        return Assignment((), 0.0)
    col_of, u, v = _kuhn_munkres(c)
    tol = 1e-9 * max(1.0, float(np.abs(c).max())) * n
    tight = (c - u[:, None] - v[None, :]) <= tol
    perm = []
    free = list(range(n))
    for i in range(n):
        for j in free:
            if not tight[i, j]:
                continue
            rest = [x for x in free if x != j]
            if _has_perfect_matching(tight, range(i + 1, n), rest):
                perm.append(j)
                free = rest
                break
        else:  # numerical corner: fall back to the primal solution
            perm = col_of
            break
    total = float(sum(c[i, perm[i]] for i in range(n)))
    return Assignment(tuple(int(j) for j in perm), total)


def hungarian_loss(slots, gold, ctx: Context, p: int) -> tuple[float, Assignment]:
    ln, le = cost_matrices(slots, gold, ctx, p)
    match = hungarian(ln + le)
    return match.total_cost, match


def sequential_loss(slots, gold, ctx: Context, p: int) -> float:
    """Slot i against gold proof i, no matching; a diagnostic baseline."""
    ln, le = cost_matrices(slots, gold, ctx, p)
    return float(np.trace(ln + le))
