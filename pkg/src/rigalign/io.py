"""File formats: binary instances, edge-list text, permutation text, npz pairs.

Binary instance layout (little-endian throughout):

    bytes 0..3    u32  n   (vertex count)
    bytes 4..7    u32  d   (feature dimension)
    bytes 8..11   u32  t   (connection threshold)
    next n*ceil(d/8) bytes  bit-packed feature matrix, row-major; entry k of a
                            row sits in byte k//8 at bit k%8 (LSB first)
    remainder     edge list, one (u32 u, u32 v) pair per edge with u < v,
                            sorted lexicographically

Edge-list text: one "u v" pair per line, 0-indexed.
Permutation text: header line "n=<n>", then one image per line, 0-indexed.
"""

from __future__ import annotations

import numpy as np

from .generate import CorrelatedInstance, FeatureMatrix, Graph, ObservedGraph
from .params import ModelParams, NoiseParams

__all__ = [
    "write_instance",
    "read_instance",
    "write_edge_list",
    "write_permutation",
    "read_permutation",
    "save_pair_npz",
    "load_pair_npz",
]

_HEADER_BYTES = 12


def write_instance(path, features: FeatureMatrix, graph: Graph, t: int) -> None:
    if features.n != graph.n:
        raise ValueError("features and graph disagree on vertex count")
    header = np.array([features.n, features.d, t], dtype="<u4")
    edges = np.ascontiguousarray(graph.edges, dtype="<u4")
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(features.bits).tobytes())
        fh.write(edges.tobytes())


def read_instance(path) -> tuple[FeatureMatrix, Graph, int]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER_BYTES:
        raise ValueError(f"{path}: truncated header")
    n, d, t = (int(x) for x in np.frombuffer(blob, dtype="<u4", count=3))
    row_bytes = (d + 7) // 8
    bits_end = _HEADER_BYTES + n * row_bytes
    if len(blob) < bits_end or (len(blob) - bits_end) % 8:
        raise ValueError(f"{path}: size inconsistent with header (n={n}, d={d})")
    bits = np.frombuffer(blob, dtype=np.uint8, count=n * row_bytes, offset=_HEADER_BYTES)
    features = FeatureMatrix(bits.reshape(n, row_bytes).copy(), d)
    edges = np.frombuffer(blob, dtype="<u4", offset=bits_end).reshape(-1, 2)
    if edges.size:
        if edges.max() >= n or np.any(edges[:, 0] >= edges[:, 1]):
            raise ValueError(f"{path}: malformed edge list")
        keys = edges.astype(np.uint64)
        flat = keys[:, 0] * np.uint64(n) + keys[:, 1]
        if np.any(np.diff(flat.astype(np.int64)) <= 0):
            raise ValueError(f"{path}: edge list not strictly sorted")
    return features, Graph(n, edges.copy()), t


def write_edge_list(path, graph: Graph) -> None:
    with open(path, "w") as fh:
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")


def write_permutation(path, perm: np.ndarray) -> None:
    perm = np.asarray(perm)
    with open(path, "w") as fh:
        fh.write(f"n={perm.size}\n")
        for image in perm:
            fh.write(f"{int(image)}\n")


def read_permutation(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("n="):
            raise ValueError(f"{path}: missing n= header")
        n = int(header[2:])
        perm = np.array([int(line) for line in fh], dtype=np.int64)
    if perm.size != n or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValueError(f"{path}: not a permutation of [0, {n})")
    return perm


def save_pair_npz(
    path, instance: CorrelatedInstance, params: ModelParams, noise: NoiseParams
) -> None:
    """Persist a correlated pair with enough context to rerun alignment."""
    np.savez_compressed(
        path,
        n=params.n,
        d=params.d,
        t=params.t,
        s=params.s,
        m=params.m,
        sigma=noise.sigma,
        q=noise.q,
        truth_bits=instance.truth.bits,
        base_edges=instance.base.edges,
        first_features=instance.first.features,
        first_edges=instance.first.graph.edges,
        second_features=instance.second.features,
        second_edges=instance.second.graph.edges,
        hidden_perm=instance.hidden_perm,
    )


def load_pair_npz(path) -> tuple[CorrelatedInstance, ModelParams, NoiseParams]:
    with np.load(path) as data:
        params = ModelParams(
            n=int(data["n"]), d=int(data["d"]), t=int(data["t"]), s=float(data["s"])
        )
        noise = NoiseParams(sigma=float(data["sigma"]), q=float(data["q"]))
        truth = FeatureMatrix(data["truth_bits"], params.d)
        instance = CorrelatedInstance(
            truth=truth,
            base=Graph(params.n, data["base_edges"]),
            first=ObservedGraph(data["first_features"], Graph(params.n, data["first_edges"])),
            second=ObservedGraph(data["second_features"], Graph(params.n, data["second_edges"])),
            hidden_perm=data["hidden_perm"].astype(np.int64),
        )
    return instance, params, noise
