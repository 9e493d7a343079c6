"""Subspace distances, segmentation scoring and the eigengap diagnostic."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InputError

__all__ = [
    "SubspaceReport",
    "subspace_distance",
    "subspace_distance_sq",
    "evaluate_segmentation",
    "eigengap",
    "subspace_recovery",
]

EXHAUSTIVE_MAX_GROUPS = 8


@dataclass(frozen=True)
class SubspaceReport:
    per_group_m2: list
    max_m2: float
    avg_m2: float
    correct: bool
    m_hat: int
    m_true: int

    def as_row(self):
        return {"correct": self.correct, "m_hat": self.m_hat,
                "max_m2": self.max_m2, "avg_m2": self.avg_m2}


def _check_half_orthogonal(B, name):
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    G = B.T @ B
    if np.abs(G - np.eye(B.shape[1])).max() > 1e-8:
        raise InputError(f"{name} does not have orthonormal columns")
    return B


def subspace_distance_sq(B1, B2) -> float:
    """Squared distance ``1 - tr(B1 B1' B2 B2') / r`` between column spaces.

    Blocks of different widths are compared with ``r`` set to the larger
    width, which keeps the value in [0, 1] and zero only for equal spaces.
    """
    B1 = _check_half_orthogonal(B1, "B1")
    B2 = _check_half_orthogonal(B2, "B2")
    if B1.shape[0] != B2.shape[0]:
        raise InputError("subspace bases live in different dimensions")
    r = max(B1.shape[1], B2.shape[1])
    # tr(B1 B1' B2 B2') = ||B1' B2||_F^2
    tr = float(np.sum((B1.T @ B2) ** 2))
    return min(max(1.0 - tr / r, 0.0), 1.0)


def subspace_distance(B1, B2) -> float:
    B1 = np.asarray(B1)
    B2 = np.asarray(B2)
    if B1.shape != B2.shape:
        raise InputError(f"shape mismatch {B1.shape} vs {B2.shape}")
    return math.sqrt(subspace_distance_sq(B1, B2))


def _match(cost):
    n_est, n_true = cost.shape
    if n_est == n_true and n_est <= EXHAUSTIVE_MAX_GROUPS:
        best, best_perm = math.inf, None
        for perm in itertools.permutations(range(n_true)):
            c = cost[np.arange(n_est), perm].sum()
            if c < best - 1e-15:
                best, best_perm = c, perm
        return np.arange(n_est), np.asarray(best_perm)
    return linear_sum_assignment(cost)


def evaluate_segmentation(result, truth) -> SubspaceReport:
    """Score an estimated segmentation against the generating model.

    ``result`` needs ``group_blocks()`` (estimated mixing blocks);
    ``truth`` needs ``blocks()`` (true mixing blocks). Estimated and true
    groups are matched by minimum total squared distance. The run counts
    as correct when the group counts agree, matched groups have equal size
    and every matched pair is also the closest true block for that
    estimated block.
    """
    est = [np.asarray(b) for b in result.group_blocks()]
    true = [np.asarray(b) for b in truth.blocks()]
    p = true[0].shape[0]
    if any(b.shape[0] != p for b in est):
        raise InputError("estimated and true mixing matrices differ in dimension")
    cost = np.array([[subspace_distance_sq(e, t) for t in true] for e in est])
    rows, cols = _match(cost)
    per = [float(cost[i, j]) for i, j in zip(rows, cols)]
    m_hat, m = len(est), len(true)
    correct = m_hat == m
    if correct:
        for i, j in zip(rows, cols):
            if est[i].shape[1] != true[j].shape[1] or cost[i, j] > cost[i].min():
                correct = False
                break
    mx = max(per) if per else 1.0
    avg = float(np.mean(per)) if per else 1.0
    return SubspaceReport(per, float(mx), avg, bool(correct), m_hat, m)


def eigengap(S, group_sizes) -> float:
    """Smallest absolute difference between eigenvalues of different blocks.

    ``S`` is split into consecutive diagonal blocks of the given sizes.
    """
    S = np.asarray(S, dtype=float)
    sizes = [int(d) for d in group_sizes]
    if sum(sizes) != S.shape[0]:
        raise InputError("group sizes must sum to the matrix dimension")
    bounds = np.cumsum([0] + sizes)
    eigs = [np.linalg.eigvalsh(S[a:b, a:b]) for a, b in zip(bounds[:-1], bounds[1:])]
    gap = math.inf
    for i, j in itertools.combinations(range(len(eigs)), 2):
        gap = min(gap, float(np.abs(eigs[i][:, None] - eigs[j][None, :]).min()))
    return gap


def subspace_recovery(eigenvectors, truth) -> SubspaceReport:
    """Score the eigenvectors alone, grouping them with the true block sizes.

    Columns are assigned to true blocks by maximising the total captured
    projection mass subject to the block sizes, which isolates the
    eigendecomposition step from the pairwise testing step.
    """
    L = _check_half_orthogonal(eigenvectors, "eigenvectors")
    true = [np.asarray(b) for b in truth.blocks()]
    share = np.stack([np.sum((b.T @ L) ** 2, axis=0) for b in true])
    slots = np.repeat(np.arange(len(true)), [b.shape[1] for b in true])
    rows, cols = linear_sum_assignment(-share[slots])
    per = []
    for k, b in enumerate(true):
        idx = cols[slots[rows] == k]
        per.append(subspace_distance_sq(L[:, np.sort(idx)], b))
    return SubspaceReport(per, float(max(per)), float(np.mean(per)), True,
                          len(true), len(true))
