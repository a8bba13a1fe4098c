"""One-layer graph neural network that recovers binary features from noise.

The layer averages the observed feature vectors of a vertex's neighbors,
rescales by s/t, and applies a hard threshold at 1/2:

    u_i = (s / (t * |N_i|)) * sum_{j in N_i} y_j        (|N_i| >= 1)
    u_i = 0                                             (isolated vertex)
    z_i = 1{u_i >= 1/2}   entrywise, boundary maps to 1

The sum runs over the neighbors' observations y_j; the vertex's own row
enters only through other vertices' neighborhoods (there is no self-loop).
The scale parameters s and t are the generative ones and are passed in
explicitly.  Accumulation is 64-bit; the threshold comparison is exact,
with no epsilon.
"""

from __future__ import annotations

import numpy as np

from .generate import FeatureMatrix, ObservedGraph

__all__ = ["message_pass", "threshold", "denoise"]


def message_pass(obs: ObservedGraph, s: float, t: int) -> np.ndarray:
    """Scaled neighborhood means, one row per vertex; zero rows for isolated vertices."""
    if not (s > 0.0):
        raise ValueError(f"scale s must be positive, got {s}")
    if not (isinstance(t, int) and t >= 1):
        raise ValueError(f"threshold t must be an integer >= 1, got {t!r}")
    graph = obs.graph
    out = np.zeros_like(obs.features)
    if graph.edge_count == 0:
        return out
    # CSR matvec accumulates over the sorted neighbor list of each row, so
    # the summation order is fixed regardless of how the sum is scheduled.
    sums = graph.adjacency() @ obs.features
    deg = graph.degrees().astype(np.float64)
    active = deg > 0
    out[active] = (s / t) * sums[active] / deg[active, None]
    return out


def threshold(messages: np.ndarray) -> FeatureMatrix:
    """Entrywise hard threshold 1{u >= 1/2}; u = 1/2 exactly maps to 1."""
    messages = np.asarray(messages, dtype=np.float64)
    return FeatureMatrix.from_dense(messages >= 0.5)


def denoise(obs: ObservedGraph, s: float, t: int) -> FeatureMatrix:
    """Threshold composed with message passing; pure function of its inputs."""
    return threshold(message_pass(obs, s, t))
