"""Assignment-based matching of feature rows, with error metrics.

Both matchers build the squared-distance cost c(i, j) = ||a_i - b_j||^2 and
solve the linear assignment problem exactly with scipy's shortest
augmenting path solver (Jonker-Volgenant family, O(n^3), deterministic).
Costs are computed through the expansion ||a||^2 + ||b||^2 - 2<a, b> with a
single matrix product; for binary inputs every intermediate is an exact
small integer, so the costs carry no rounding error.

The returned permutation is oriented so that row i of the second input
matches row perm[i] of the first.  When the second input is a hidden
relabeling b_i ~ a_{pi(i)}, the recovered permutation is directly comparable
to pi (see the alignment-direction note in AlignmentResult).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment

from . import rng as _rng
from .generate import FeatureMatrix

__all__ = [
    "AlignmentResult",
    "FeatureError",
    "lap_solve",
    "align_features",
    "align_linear",
    "alignment_error",
    "feature_error",
    "count_swap_events",
    "invert_permutation",
    "validate_permutation",
]


def validate_permutation(perm: np.ndarray, n: int | None = None) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.int64)
    if perm.ndim != 1:
        raise ValueError("permutation must be a 1-d array")
    if n is not None and perm.size != n:
        raise ValueError(f"permutation length {perm.size} != {n}")
    if not np.array_equal(np.sort(perm), np.arange(perm.size)):
        raise ValueError("not a bijection on [0, n)")
    return perm


def invert_permutation(perm: np.ndarray) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.int64)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


@dataclass(frozen=True)
class AlignmentResult:
    """Outcome of one assignment solve.

    perm[i] is the first-input row matched to second-input row i, i.e. the
    permutation rho minimizing sum_i c(rho(i), i); equivalently, the inverse
    of the row-to-column assignment on the cost matrix c(i, j) = ||a_i - b_j||^2.
    objective is the achieved total cost.  correct_flags[i] = (perm[i] ==
    truth[i]) when a ground-truth relabeling was supplied, else None.
    """

    perm: np.ndarray
    objective: float
    correct_flags: np.ndarray | None = None

    @property
    def error(self) -> float | None:
        if self.correct_flags is None:
            return None
        return float(1.0 - self.correct_flags.mean())


@dataclass(frozen=True)
class FeatureError:
    """Relative Frobenius distance to the truth and the exact-recovery flag."""

    relative_distance: float
    exact: bool


def lap_solve(cost: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact minimum-cost assignment on a square cost matrix.

    Returns the row-to-column assignment (column index per row, a bijection)
    and the objective, recomputed from the matrix entries.  Rejects
    non-square or non-finite input.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {cost.shape}")
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix entries must be finite")
    rows, cols = linear_sum_assignment(cost)
    assignment = cols.astype(np.int64)
    objective = float(cost[rows, cols].sum())
    return assignment, objective


def _pairwise_sq_dists(a, b) -> np.ndarray:
    if sp.issparse(a) or sp.issparse(b):
        a = sp.csr_matrix(a)
        b = sp.csr_matrix(b)
        gram = (a @ b.T).toarray().astype(np.float64)
        a2 = np.asarray(a.multiply(a).sum(axis=1), dtype=np.float64).ravel()
        b2 = np.asarray(b.multiply(b).sum(axis=1), dtype=np.float64).ravel()
    else:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        gram = a @ b.T
        a2 = np.einsum("ij,ij->i", a, a)
        b2 = np.einsum("ij,ij->i", b, b)
    return a2[:, None] + b2[None, :] - 2.0 * gram


def _align(a, b, truth) -> AlignmentResult:
    cost = _pairwise_sq_dists(a, b)
    assignment, objective = lap_solve(cost)
    perm = invert_permutation(assignment)
    flags = None
    if truth is not None:
        truth = validate_permutation(truth, perm.size)
        flags = perm == truth
    return AlignmentResult(perm=perm, objective=objective, correct_flags=flags)


def align_features(
    z: FeatureMatrix, z_prime: FeatureMatrix, truth: np.ndarray | None = None
) -> AlignmentResult:
    """Match denoised binary rows; costs are exact integer squared distances."""
    if z.shape != z_prime.shape:
        raise ValueError(f"shape mismatch: {z.shape} vs {z_prime.shape}")
    # float32 products of 0/1 rows are exact for d < 2**24
    return _align(z.dense(np.float32), z_prime.dense(np.float32), truth)


def align_linear(y, y_prime, truth: np.ndarray | None = None) -> AlignmentResult:
    """Match raw real-valued rows directly; accepts dense or CSR inputs."""
    if y.shape != y_prime.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {y_prime.shape}")
    for mat in (y, y_prime):
        if not sp.issparse(mat) and not np.isfinite(np.asarray(mat)).all():
            raise ValueError("feature entries must be finite")
    return _align(y, y_prime, truth)


def alignment_error(found: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of vertices whose image differs from the ground truth."""
    found = validate_permutation(found)
    truth = validate_permutation(truth)
    if found.size != truth.size:
        raise ValueError(f"length mismatch: {found.size} vs {truth.size}")
    return float(np.mean(found != truth))


def feature_error(z: FeatureMatrix, x: FeatureMatrix) -> FeatureError:
    """Relative Frobenius distance ||Z - X||_F / ||X||_F and exactness flag.

    For binary matrices the squared Frobenius distance is the number of
    differing entries, so both norms are exact integer popcounts.
    """
    if z.shape != x.shape:
        raise ValueError(f"shape mismatch: {z.shape} vs {x.shape}")
    mismatches = int(np.bitwise_count(z.bits ^ x.bits).sum())
    ones = int(np.bitwise_count(x.bits).sum())
    if ones == 0:
        rel = 0.0 if mismatches == 0 else float("inf")
    else:
        rel = float(np.sqrt(mismatches / ones))
    return FeatureError(relative_distance=rel, exact=mismatches == 0)


def _swap_matrix_count(a: np.ndarray, b: np.ndarray) -> int:
    gram = a @ b.T
    diag = np.diag(gram)
    swaps = (gram + gram.T) >= (diag[:, None] + diag[None, :])
    return int(np.triu(swaps, 1).sum())


def count_swap_events(
    a,
    b,
    pair_budget: int | None = None,
    seed: int = 0,
) -> tuple[int, int]:
    """Count index pairs i < j whose rows could be swapped at no cost increase.

    The event for a pair is <a_i, b_j> + <a_j, b_i> >= <a_i, b_i> + <a_j, b_j>
    (inclusive).  Rows of a and b must already be index-aligned under the
    candidate ground truth.  Any such pair certifies that some assignment at
    least as cheap as the identity pairs the rows differently, so exact
    recovery by the matcher is not guaranteed.

    Exhaustive over all n*(n-1)/2 pairs when pair_budget is None; otherwise a
    uniform sample (without replacement) of pair_budget pairs is examined.
    Returns (event_count, pairs_examined).
    """
    a = a.dense(np.float64) if isinstance(a, FeatureMatrix) else np.asarray(a, dtype=np.float64)
    b = b.dense(np.float64) if isinstance(b, FeatureMatrix) else np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    n = a.shape[0]
    total = n * (n - 1) // 2
    if pair_budget is None or pair_budget >= total:
        return _swap_matrix_count(a, b), total
    if pair_budget < 0:
        raise ValueError("pair_budget must be nonnegative")
    gen = _rng.substream(seed, _rng.PAIR_SAMPLE)
    chosen = gen.choice(total, size=pair_budget, replace=False, shuffle=False)
    # linear index -> (i, j) with i < j, rows enumerated in lexicographic order
    counts = n - 1 - np.arange(n - 1, dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(counts)])
    i = np.searchsorted(starts, chosen, side="right") - 1
    j = chosen - starts[i] + i + 1
    cross = np.einsum("ij,ij->i", a[i], b[j]) + np.einsum("ij,ij->i", a[j], b[i])
    straight = np.einsum("ij,ij->i", a[i], b[i]) + np.einsum("ij,ij->i", a[j], b[j])
    return int(np.sum(cross >= straight)), pair_budget
