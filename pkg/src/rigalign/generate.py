"""Sampling of intersection graphs and their noisy, subsampled observations.

The truth instance is a binary feature matrix X (rows i.i.d. Bernoulli(s/d))
together with the edge set {i, j} for every pair whose feature inner product
reaches the threshold t.  An observation adds i.i.d. N(0, sigma^2) noise to
every feature entry and independently keeps each edge with probability q.
A correlated pair consists of two independent observations of one truth,
the second one relabeled by a hidden permutation.

Rows are sampled support-first (a Binomial(d, s/d) count, then a uniform
index subset), which is distributionally identical to entrywise Bernoulli
draws and stays cheap when d is large.  Pairwise inner products are computed
exactly: dense float32 matrix products for moderate n*n*d (0/1 sums are exact
integers well below 2**24) and sparse integer products otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import rng as _rng
from .params import ModelParams, NoiseParams

__all__ = [
    "FeatureMatrix",
    "Graph",
    "ObservedGraph",
    "CorrelatedInstance",
    "DegreeStats",
    "sample_rig",
    "sample_features",
    "perturb",
    "sample_correlated_pair",
    "degree_stats",
]

# Above this many dense multiply-adds the pairwise inner products switch to
# the sparse path.  Both paths are exact; the cutoff only affects speed.
_DENSE_GRAM_OPS = 8e9


class FeatureMatrix:
    """Binary n x d feature matrix, stored bit-packed row-major.

    Each row occupies ceil(d/8) bytes with little-endian bit order: entry k
    lives in byte k // 8 at bit position k % 8.
    """

    __slots__ = ("bits", "d")

    def __init__(self, bits: np.ndarray, d: int):
        bits = np.ascontiguousarray(bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[1] != (d + 7) // 8:
            raise ValueError(f"packed shape {bits.shape} does not match d={d}")
        if d % 8:
            tail = bits[:, -1] >> (d % 8)
            if np.any(tail):
                raise ValueError("padding bits beyond dimension d must be zero")
        self.bits = bits
        self.d = int(d)

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "FeatureMatrix":
        dense = np.asarray(dense)
        if dense.ndim != 2:
            raise ValueError("feature matrix must be 2-dimensional")
        if not np.isin(dense, (0, 1)).all():
            raise ValueError("feature entries must be 0 or 1")
        packed = np.packbits(dense.astype(np.uint8), axis=1, bitorder="little")
        return cls(packed, dense.shape[1])

    @classmethod
    def from_supports(cls, supports: list[np.ndarray], d: int) -> "FeatureMatrix":
        n = len(supports)
        bits = np.zeros((n, (d + 7) // 8), dtype=np.uint8)
        for i, idx in enumerate(supports):
            if idx.size:
                np.bitwise_or.at(bits[i], idx // 8, np.uint8(1) << (idx % 8).astype(np.uint8))
        return cls(bits, d)

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.d)

    def dense(self, dtype=np.uint8) -> np.ndarray:
        out = np.unpackbits(self.bits, axis=1, bitorder="little", count=self.d)
        return out.astype(dtype, copy=False)

    def to_sparse(self) -> sp.csr_matrix:
        """CSR view with int64 data, suitable for exact sparse inner products."""
        dense_rows = self.support_sizes()
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(dense_rows, out=indptr[1:])
        indices = np.empty(int(indptr[-1]), dtype=np.int64)
        for i in range(self.n):
            indices[indptr[i] : indptr[i + 1]] = self.row_support(i)
        data = np.ones(indices.size, dtype=np.int64)
        return sp.csr_matrix((data, indices, indptr), shape=self.shape)

    def support_sizes(self) -> np.ndarray:
        return np.bitwise_count(self.bits).sum(axis=1).astype(np.int64)

    def row_support(self, i: int) -> np.ndarray:
        """Sorted indices of the ones in row i."""
        row = np.unpackbits(self.bits[i], bitorder="little", count=self.d)
        return np.nonzero(row)[0]

    def permute_rows(self, perm: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(self.bits[perm], self.d)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FeatureMatrix)
            and self.d == other.d
            and np.array_equal(self.bits, other.bits)
        )

    def __repr__(self) -> str:
        return f"FeatureMatrix(n={self.n}, d={self.d})"


class Graph:
    """Undirected simple graph on [0, n) with a canonical edge array.

    Edges are stored as an (E, 2) uint32 array with u < v in each row, sorted
    lexicographically.  Adjacency (CSR with per-row sorted neighbors) is built
    lazily and cached.
    """

    __slots__ = ("n", "edges", "_indptr", "_indices")

    def __init__(self, n: int, edges: np.ndarray):
        edges = np.asarray(edges, dtype=np.uint32).reshape(-1, 2)
        if edges.size:
            if edges.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise ValueError("edges must satisfy u < v (no self-loops)")
        self.n = int(n)
        self.edges = edges
        self._indptr = None
        self._indices = None

    @classmethod
    def from_pairs(cls, n: int, u: np.ndarray, v: np.ndarray) -> "Graph":
        """Canonicalize arbitrary pair arrays: order endpoints, sort, dedupe."""
        u = np.asarray(u, dtype=np.uint32)
        v = np.asarray(v, dtype=np.uint32)
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        if np.any(lo == hi):
            raise ValueError("self-loops are not allowed")
        order = np.lexsort((hi, lo))
        edges = np.unique(np.column_stack([lo[order], hi[order]]), axis=0)
        return cls(n, edges)

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    def _build_adjacency(self) -> None:
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order = np.lexsort((cols, rows))
        counts = np.bincount(rows, minlength=self.n)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        self._indptr = indptr
        self._indices = cols[order].astype(np.int64)

    @property
    def indptr(self) -> np.ndarray:
        if self._indptr is None:
            self._build_adjacency()
        return self._indptr

    @property
    def indices(self) -> np.ndarray:
        if self._indices is None:
            self._build_adjacency()
        return self._indices

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.indices.size, dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def relabel(self, perm: np.ndarray) -> "Graph":
        """Graph whose vertex i is this graph's vertex perm[i]."""
        inv = np.empty(self.n, dtype=np.int64)
        inv[perm] = np.arange(self.n)
        if self.edge_count == 0:
            return Graph(self.n, self.edges.copy())
        return Graph.from_pairs(self.n, inv[self.edges[:, 0]], inv[self.edges[:, 1]])

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.edge_count})"


@dataclass(frozen=True)
class ObservedGraph:
    """One observation: real feature matrix Y and the retained edge set."""

    features: np.ndarray
    graph: Graph

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise ValueError("observed features must be 2-dimensional")
        if not np.isfinite(feats).all():
            raise ValueError("observed features must be finite (no NaN/inf)")
        if feats.shape[0] != self.graph.n:
            raise ValueError("feature rows and graph vertex count differ")
        object.__setattr__(self, "features", feats)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class CorrelatedInstance:
    """A matching problem: truth, two observations, and the hidden relabeling.

    The second observation satisfies second.features[i] ~ truth row
    hidden_perm[i] plus noise, and its edges are an independently subsampled
    copy of the relabeled base edges.
    """

    truth: FeatureMatrix
    base: Graph
    first: ObservedGraph
    second: ObservedGraph
    hidden_perm: np.ndarray

    def to_truth_order(self, rows: np.ndarray) -> np.ndarray:
        """Reindex an array of second-observation rows into truth vertex order."""
        out = np.empty_like(np.asarray(rows))
        out[self.hidden_perm] = rows
        return out


@dataclass(frozen=True)
class DegreeStats:
    minimum: int
    maximum: int
    mean: float
    histogram: np.ndarray = field(repr=False)


def sample_features(params: ModelParams, generator: np.random.Generator) -> FeatureMatrix:
    """Draw the n x d Bernoulli(s/d) feature matrix.

    Each row draws its support size Binomial(d, s/d), then a uniform subset
    of that size; rows are processed in index order so the stream is fixed.
    """
    counts = generator.binomial(params.d, params.entry_probability, size=params.n)
    supports = [
        generator.choice(params.d, size=int(k), replace=False, shuffle=False)
        for k in counts
    ]
    return FeatureMatrix.from_supports(supports, params.d)


def intersection_edges(features: FeatureMatrix, t: int) -> Graph:
    """Edges {i, j} with feature inner product >= t, computed exactly."""
    n, d = features.shape
    if n * n * d <= _DENSE_GRAM_OPS:
        dense = features.dense(np.float32)
        gram = dense @ dense.T
        hits = gram >= t
        np.fill_diagonal(hits, False)
        u, v = np.nonzero(np.triu(hits, 1))
    else:
        x = features.to_sparse()
        gram = (x @ x.T).tocoo()
        mask = (gram.data >= t) & (gram.row < gram.col)
        u, v = gram.row[mask], gram.col[mask]
        order = np.lexsort((v, u))
        u, v = u[order], v[order]
    return Graph(n, np.column_stack([u, v]).astype(np.uint32))


def sample_rig(params: ModelParams, seed: int) -> tuple[FeatureMatrix, Graph]:
    """Sample a truth instance: features plus the full intersection edge set."""
    gen = _rng.substream(seed, _rng.FEATURES)
    features = sample_features(params, gen)
    return features, intersection_edges(features, params.t)


def perturb(
    features: FeatureMatrix, base: Graph, noise: NoiseParams, seed: int
) -> ObservedGraph:
    """Observe a truth instance: Gaussian feature noise, q-subsampled edges.

    Noise and subsampling use separate substreams of the given seed, so the
    retained edge set does not depend on sigma and vice versa.
    """
    if features.n != base.n:
        raise ValueError("features and edges disagree on vertex count")
    dense = features.dense(np.float64)
    if noise.sigma > 0.0:
        gen = _rng.substream(seed, _rng.NOISE)
        dense = dense + gen.normal(0.0, noise.sigma, size=dense.shape)
    if noise.q < 1.0:
        gen = _rng.substream(seed, _rng.SUBSAMPLE)
        keep = gen.random(base.edge_count) < noise.q
        graph = Graph(base.n, base.edges[keep])
    else:
        graph = Graph(base.n, base.edges.copy())
    return ObservedGraph(dense, graph)


def sample_correlated_pair(
    params: ModelParams,
    noise: NoiseParams,
    seed: int,
    perm_mode: str = "uniform",
) -> CorrelatedInstance:
    """Sample one truth and two independent observations of it.

    The second observation's vertex i is the truth's vertex hidden_perm[i];
    its features and retained edges are drawn independently of the first
    observation's.  perm_mode is "uniform" (default) or "identity".
    """
    if perm_mode not in ("uniform", "identity"):
        raise ValueError(f"perm_mode must be 'uniform' or 'identity', got {perm_mode!r}")
    truth, base = sample_rig(params, seed)
    if perm_mode == "uniform":
        perm = _rng.substream(seed, _rng.PERMUTATION).permutation(params.n)
    else:
        perm = np.arange(params.n)
    first = perturb(truth, base, noise, _rng.derive_seed(seed, _rng.OBSERVE_FIRST))
    second = perturb(
        truth.permute_rows(perm),
        base.relabel(perm),
        noise,
        _rng.derive_seed(seed, _rng.OBSERVE_SECOND),
    )
    return CorrelatedInstance(truth, base, first, second, perm)


def degree_stats(graph: Graph) -> DegreeStats:
    """Exact degree summary: min, max, mean, and a full histogram."""
    if graph.n == 0:
        return DegreeStats(0, 0, 0.0, np.zeros(1, dtype=np.int64))
    deg = graph.degrees()
    hist = np.bincount(deg, minlength=int(deg.max()) + 1)
    return DegreeStats(int(deg.min()), int(deg.max()), float(deg.mean()), hist)
