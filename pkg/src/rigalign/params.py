"""Model parameters and exact analytic quantities for the intersection-graph model.

The generative model puts an n x d binary feature matrix behind the graph:
each entry is Bernoulli(s/d), and vertices i, j are adjacent when their
feature inner product reaches a threshold t.  Two equivalent parameterizations
of the feature sparsity are supported:

    s = sqrt(t * d * (m/n)**(1/t))        (sparsity, expected ones per row)
    m = n * (s**2 / (t*d))**t             (density, the order of the mean degree)

All probability computations here are exact binomial-tail evaluations done
with log-space terms and compensated summation; no normal approximation is
used anywhere.  Every other module treats this one as the single source of
truth for parameter validation.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

__all__ = [
    "ParameterError",
    "ModelParams",
    "NoiseParams",
    "sparsity_from_density",
    "density_from_sparsity",
    "binomial_tail",
    "edge_probability",
    "expected_degree",
    "pair_collision_probability",
]


class ParameterError(ValueError):
    """A model parameter is outside its valid domain."""


def _check_counts(n: int, d: int, t: int) -> None:
    if not (isinstance(n, int) and n >= 1):
        raise ParameterError(f"vertex count n must be a positive integer, got {n!r}")
    if not (isinstance(d, int) and d >= 1):
        raise ParameterError(f"feature dimension d must be a positive integer, got {d!r}")
    if not (isinstance(t, int) and t >= 1):
        raise ParameterError(f"threshold t must be an integer >= 1, got {t!r}")


def sparsity_from_density(n: int, d: int, m: float, t: int) -> float:
    """Sparsity s corresponding to density m: sqrt(t*d*(m/n)**(1/t)).

    Raises ParameterError when m is outside [1, n] or the resulting s would
    exceed d (s/d must be a valid Bernoulli probability).
    """
    _check_counts(n, d, t)
    if not (1.0 <= m <= n):
        raise ParameterError(f"density m must lie in [1, n={n}], got {m}")
    s = math.sqrt(t * d * (m / n) ** (1.0 / t))
    if s > d:
        raise ParameterError(
            f"density m={m} implies sparsity s={s} > d={d}; s/d is not a probability"
        )
    return s


def density_from_sparsity(n: int, d: int, s: float, t: int) -> float:
    """Density m corresponding to sparsity s: n*(s**2/(t*d))**t.

    Inverse of sparsity_from_density.  Raises ParameterError when s is outside
    (0, d], or when the computed density falls below 1 (the value is reported
    in the error message; it is never clamped).
    """
    _check_counts(n, d, t)
    if not (0.0 < s <= d):
        raise ParameterError(f"sparsity s must lie in (0, d={d}], got {s}")
    m = n * (s * s / (t * d)) ** t
    if m < 1.0:
        raise ParameterError(
            f"sparsity s={s} implies density m={m} < 1; graph too sparse for this model"
        )
    return m


@dataclass(frozen=True)
class ModelParams:
    """Validated parameter bundle (n, d, s, t, m).

    Exactly one of s, m may be supplied; the other is derived.  When both are
    given they must agree through the reparameterization to 1e-12 relative.
    A supplied density must lie in [1, n]; a supplied sparsity whose implied
    density falls below 1 is accepted with m left unset (None), since the
    graph itself only depends on s/d and t.
    """

    n: int
    d: int
    t: int
    s: float = None  # type: ignore[assignment]
    m: float | None = None

    def __post_init__(self) -> None:
        _check_counts(self.n, self.d, self.t)
        if self.s is None and self.m is None:
            raise ParameterError("one of s (sparsity) or m (density) is required")
        if self.s is None:
            object.__setattr__(self, "s", sparsity_from_density(self.n, self.d, self.m, self.t))
        elif self.m is None:
            if not (0.0 < self.s <= self.d):
                raise ParameterError(f"sparsity s must lie in (0, d={self.d}], got {self.s}")
            try:
                object.__setattr__(
                    self, "m", density_from_sparsity(self.n, self.d, self.s, self.t)
                )
            except ParameterError:
                pass  # implied density below 1: leave m unset
        else:
            if not (0.0 < self.s <= self.d):
                raise ParameterError(f"sparsity s must lie in (0, d={self.d}], got {self.s}")
            if not (1.0 <= self.m <= self.n):
                raise ParameterError(f"density m must lie in [1, n={self.n}], got {self.m}")
            expect = sparsity_from_density(self.n, self.d, self.m, self.t)
            if abs(self.s - expect) > 1e-12 * max(abs(self.s), abs(expect)):
                raise ParameterError(
                    f"s={self.s} and m={self.m} are inconsistent; m implies s={expect}"
                )
        s = float(self.s)
        if not (0.0 < s / self.d <= 1.0):
            raise ParameterError(f"s/d must lie in (0, 1], got {s / self.d}")
        object.__setattr__(self, "s", s)
        if self.m is not None:
            object.__setattr__(self, "m", float(self.m))

    def require_density(self) -> float:
        """The density m, for quantities that need it; raises when unset."""
        if self.m is None:
            raise ParameterError(
                f"density undefined: s={self.s} implies m < 1 at n={self.n}, "
                f"d={self.d}, t={self.t}"
            )
        return self.m

    @property
    def entry_probability(self) -> float:
        """Per-entry Bernoulli probability s/d of the feature matrix."""
        return self.s / self.d


@dataclass(frozen=True)
class NoiseParams:
    """Observation noise: Gaussian feature noise sigma and edge retention q."""

    sigma: float = 0.0
    q: float = 1.0

    def __post_init__(self) -> None:
        if not (self.sigma >= 0.0 and math.isfinite(self.sigma)):
            raise ParameterError(f"sigma must be a finite real >= 0, got {self.sigma}")
        if not (0.0 < self.q <= 1.0):
            raise ParameterError(f"edge retention q must lie in (0, 1], got {self.q}")


def binomial_tail(k: int, n: int, p: float) -> float:
    """Exact upper tail P(Binomial(n, p) >= k).

    Terms are evaluated in log space (lgamma) and accumulated with math.fsum,
    so the result is accurate to a few ulps even when the tail is tiny.
    """
    if n < 0:
        raise ParameterError(f"binomial size must be >= 0, got {n}")
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"binomial probability must lie in [0, 1], got {p}")
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    lp = math.log(p)
    lq = math.log1p(-p)
    lchoose = math.lgamma(n + 1)
    terms = [
        math.exp(lchoose - math.lgamma(j + 1) - math.lgamma(n - j + 1) + j * lp + (n - j) * lq)
        for j in range(k, n + 1)
    ]
    return min(1.0, math.fsum(terms))


def _binomial_pmf(j: int, n: int, p: float) -> float:
    if p == 0.0:
        return 1.0 if j == 0 else 0.0
    if p == 1.0:
        return 1.0 if j == n else 0.0
    return math.exp(
        math.lgamma(n + 1)
        - math.lgamma(j + 1)
        - math.lgamma(n - j + 1)
        + j * math.log(p)
        + (n - j) * math.log1p(-p)
    )


def edge_probability(
    d: int,
    s: float,
    t: int,
    q: float = 1.0,
    given_support: int | None = None,
) -> float:
    """Probability that a vertex pair is adjacent in the observed graph.

    Unconditional form (given_support is None): the feature inner product of
    two independent rows is Binomial(d, (s/d)**2), so the result is
    q * P(Binomial(d, (s/d)**2) >= t).

    Conditional form: given one row has support size given_support, the inner
    product is Binomial(given_support, s/d) and the result is
    q * P(Binomial(given_support, s/d) >= t).
    """
    _check_counts(1, d, t)
    if not (0.0 < s <= d):
        raise ParameterError(f"sparsity s must lie in (0, d={d}], got {s}")
    if not (0.0 < q <= 1.0):
        raise ParameterError(f"edge retention q must lie in (0, 1], got {q}")
    p_entry = s / d
    if given_support is None:
        return q * binomial_tail(t, d, p_entry * p_entry)
    if not (0 <= given_support <= d):
        raise ParameterError(f"given_support must lie in [0, d={d}], got {given_support}")
    return q * binomial_tail(t, int(given_support), p_entry)


def expected_degree(params: ModelParams, q: float = 1.0) -> float:
    """Expected vertex degree (n-1) * edge_probability in the observed graph."""
    return (params.n - 1) * edge_probability(params.d, params.s, params.t, q)


def pair_collision_probability(d: int, s: float) -> float:
    """Exact probability two independent feature rows are identical.

    Per coordinate the rows agree with probability (1-p)^2 + p^2 where
    p = s/d; coordinates are independent.
    """
    if not (0.0 < s <= d):
        raise ParameterError(f"sparsity s must lie in (0, d={d}], got {s}")
    p = s / d
    return (1.0 - 2.0 * p + 2.0 * p * p) ** d


@functools.lru_cache(maxsize=128)
def edge_count_std(params: ModelParams, q: float = 1.0) -> float:
    """Standard deviation of the observed edge count.

    The pair indicators are independent across vertex-disjoint pairs but
    correlated through a shared endpoint; conditionally on a row's support
    size the incident indicators are i.i.d., which gives the exact two-term
    variance used here (harness sanity-gate plumbing).
    """
    n, d, t, s = params.n, params.d, params.t, params.s
    p_entry = s / d
    pbar = edge_probability(d, s, t, q)
    # E[p_i^2] over the support-size distribution of one endpoint.
    second = math.fsum(
        _binomial_pmf(k, d, p_entry) * (q * binomial_tail(t, k, p_entry)) ** 2
        for k in range(d + 1)
    )
    npairs = n * (n - 1) / 2.0
    shared = n * (n - 1) * (n - 2) / 2.0  # unordered indicator pairs with a common vertex
    var = npairs * pbar * (1.0 - pbar) + shared * max(second - pbar * pbar, 0.0)
    return math.sqrt(var)
