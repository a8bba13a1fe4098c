"""Seeded Monte Carlo trials, parameter sweeps, and phase-diagram grids.

A trial samples one correlated pair, runs the requested matchers (the
denoise-then-match pipeline and/or the raw linear matcher), and scores the
recovered permutations against the hidden one.  Sweeps vary one axis of
(sigma, q, m, d) over a grid with several replicates per point; per-trial
seeds are derived from (base seed, grid index, replicate index), so records
are independent of worker scheduling and a rerun is byte-identical.

Output is a flat CSV (one row per trial and method), a whitespace plot-data
table (one row per grid point with mean and standard error per method), and
rendered figure files (see figures module).
"""

from __future__ import annotations

import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import rng as _rng
from .denoise import denoise
from .generate import CorrelatedInstance, sample_correlated_pair
from .matching import align_features, align_linear, count_swap_events, feature_error
from .bounds import recovery_condition
from .params import ModelParams, NoiseParams, ParameterError, edge_count_std, expected_degree

__all__ = [
    "TrialSpec",
    "MethodRecord",
    "TrialRecord",
    "SweepSpec",
    "PhaseCell",
    "run_trial",
    "run_sweep",
    "phase_diagram",
    "write_csv",
    "emit_plot_data",
    "CSV_HEADER",
]

log = logging.getLogger(__name__)

METHODS = ("gnn", "linear")
SWEEP_AXES = ("sigma", "q", "m", "d")

CSV_HEADER = (
    "trial,seed,n,d,s,m,t,sigma,q,method,align_error,feat_rel_dist,"
    "feat_exact,objective,swap_events,mean_degree,runtime_ms"
)


@dataclass(frozen=True)
class TrialSpec:
    """Everything one trial depends on; two equal specs give equal records."""

    params: ModelParams
    noise: NoiseParams
    seed: int
    methods: tuple[str, ...] = METHODS
    perm_mode: str = "uniform"
    count_swaps: bool = False
    denoise_s: float | None = None  # override for misspecified-scale studies

    def __post_init__(self):
        if not self.methods:
            raise ParameterError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ParameterError(f"unknown methods: {sorted(unknown)}")
        _rng.check_seed(self.seed)


@dataclass(frozen=True)
class MethodRecord:
    align_error: float
    objective: float
    runtime_ms: float
    feat_rel_dist: float | None = None
    feat_exact: bool | None = None
    swap_events: int | None = None


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    n: int
    d: int
    s: float
    m: float | None
    t: int
    sigma: float
    q: float
    mean_degree: float
    methods: dict[str, MethodRecord]


def _duplicate_rows(features) -> int:
    return features.n - np.unique(features.bits, axis=0).shape[0]


def _degree_sanity_gate(mean_degree: float, params: ModelParams, q: float) -> None:
    expected = expected_degree(params, q)
    std = 2.0 * edge_count_std(params, q) / params.n
    if std > 0 and abs(mean_degree - expected) > 5.0 * std:
        warnings.warn(
            f"observed mean degree {mean_degree:.3f} is more than 5 standard "
            f"deviations from the model value {expected:.3f}",
            RuntimeWarning,
            stacklevel=3,
        )


def run_trial(spec: TrialSpec, trial_index: int = 0) -> TrialRecord:
    """Sample one correlated pair and score every requested method on it."""
    params, noise = spec.params, spec.noise
    inst = sample_correlated_pair(params, noise, spec.seed, spec.perm_mode)
    mean_degree = 2.0 * inst.first.graph.edge_count / params.n
    _degree_sanity_gate(mean_degree, params, noise.q)
    methods: dict[str, MethodRecord] = {}
    for method in spec.methods:
        if method == "gnn":
            methods[method] = _run_gnn(spec, inst)
        else:
            methods[method] = _run_linear(spec, inst)
    return TrialRecord(
        trial=trial_index,
        seed=spec.seed,
        n=params.n,
        d=params.d,
        s=params.s,
        m=params.m,
        t=params.t,
        sigma=noise.sigma,
        q=noise.q,
        mean_degree=mean_degree,
        methods=methods,
    )


def _run_gnn(spec: TrialSpec, inst: CorrelatedInstance) -> MethodRecord:
    scale = spec.params.s if spec.denoise_s is None else spec.denoise_s
    start = time.perf_counter()
    z = denoise(inst.first, scale, spec.params.t)
    z_prime = denoise(inst.second, scale, spec.params.t)
    result = align_features(z, z_prime, truth=inst.hidden_perm)
    runtime_ms = 1e3 * (time.perf_counter() - start)
    ferr = feature_error(z, inst.truth)
    swaps = None
    if spec.count_swaps:
        aligned = inst.to_truth_order(z_prime.dense(np.float64))
        swaps, _ = count_swap_events(z.dense(np.float64), aligned)
    if log.isEnabledFor(logging.DEBUG):
        log.debug(
            "trial seed=%d duplicate denoised rows: first=%d second=%d",
            spec.seed,
            _duplicate_rows(z),
            _duplicate_rows(z_prime),
        )
    return MethodRecord(
        align_error=result.error,
        objective=result.objective,
        runtime_ms=runtime_ms,
        feat_rel_dist=ferr.relative_distance,
        feat_exact=ferr.exact,
        swap_events=swaps,
    )


def _run_linear(spec: TrialSpec, inst: CorrelatedInstance) -> MethodRecord:
    start = time.perf_counter()
    result = align_linear(inst.first.features, inst.second.features, truth=inst.hidden_perm)
    runtime_ms = 1e3 * (time.perf_counter() - start)
    swaps = None
    if spec.count_swaps:
        aligned = inst.to_truth_order(inst.second.features)
        swaps, _ = count_swap_events(inst.first.features, aligned)
    return MethodRecord(
        align_error=result.error,
        objective=result.objective,
        runtime_ms=runtime_ms,
        swap_events=swaps,
    )


@dataclass(frozen=True)
class SweepSpec:
    """One-axis grid around a base trial.

    axis "sigma" or "q" varies the noise model; axis "m" re-derives s from
    the new density; axis "d" keeps s fixed and re-derives m.  Seeds for the
    trial at grid index g, replicate r are derived from
    (base.seed, TRIAL, g, r).
    """

    base: TrialSpec
    axis: str
    grid: tuple[float, ...]
    replicates: int = 10

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ParameterError(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if self.replicates < 1:
            raise ParameterError("replicates must be >= 1")
        for value in self.grid:
            self.spec_at(value, 0, 0)  # validate every grid point up front

    def spec_at(self, value: float, grid_index: int, replicate: int) -> TrialSpec:
        base = self.base
        seed = _rng.derive_seed(base.seed, _rng.TRIAL, grid_index, replicate)
        if self.axis == "sigma":
            noise, params = replace(base.noise, sigma=value), base.params
        elif self.axis == "q":
            noise, params = replace(base.noise, q=value), base.params
        elif self.axis == "m":
            noise = base.noise
            params = ModelParams(n=base.params.n, d=base.params.d, t=base.params.t, m=value)
        else:  # axis == "d"
            noise = base.noise
            params = ModelParams(
                n=base.params.n, d=int(round(value)), t=base.params.t, s=base.params.s
            )
        return replace(base, params=params, noise=noise, seed=seed)


def _sweep_trials(sweep: SweepSpec) -> list[TrialSpec]:
    specs = []
    for g, value in enumerate(sweep.grid):
        for r in range(sweep.replicates):
            specs.append(sweep.spec_at(value, g, r))
    return specs


def _run_indexed(args: tuple[int, TrialSpec]) -> TrialRecord:
    index, spec = args
    return run_trial(spec, trial_index=index)


def run_sweep(sweep: SweepSpec, workers: int = 1) -> list[TrialRecord]:
    """Run grid x replicates trials, in deterministic trial order.

    With workers > 1 the trials run on a process pool; per-trial seeds make
    the records identical to a sequential run.
    """
    jobs = list(enumerate(_sweep_trials(sweep)))
    if not jobs:
        return []
    if workers <= 1:
        records = [_run_indexed(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_indexed, jobs, chunksize=1))
    return sorted(records, key=lambda rec: rec.trial)


@dataclass(frozen=True)
class PhaseCell:
    """One cell of the density/dimension recovery grid."""

    alpha: float
    beta: float
    m: float
    d: int
    s: float | None
    valid: bool
    recovery_rate: float | None
    margin_ratio: float | None
    reason: str = ""


def phase_diagram(
    alpha_grid,
    beta_grid,
    base: TrialSpec,
    replicates: int = 10,
    workers: int = 1,
) -> list[PhaseCell]:
    """Empirical perfect-recovery rates over a (density, dimension) grid.

    Each cell sets m = n**alpha and d = round(n**beta), derives s, runs
    `replicates` denoise-and-match trials, and records the fraction with a
    perfectly recovered permutation together with the signal-condition
    margin.  Cells whose parameters fail validation (e.g. s > d) are kept in
    the output, flagged invalid with the rejection reason.
    """
    if replicates < 1:
        raise ParameterError("replicates must be >= 1")
    n = base.params.n
    cells: list[PhaseCell] = []
    jobs: list[tuple[int, TrialSpec]] = []
    cell_index: list[tuple[int, int]] = []
    for gi, alpha in enumerate(alpha_grid):
        for gj, beta in enumerate(beta_grid):
            m = float(n) ** alpha
            d = max(1, round(float(n) ** beta))
            try:
                params = ModelParams(n=n, d=d, t=base.params.t, m=m)
            except ParameterError as exc:
                cells.append(
                    PhaseCell(alpha, beta, m, d, None, False, None, None, reason=str(exc))
                )
                continue
            margin = recovery_condition(params, base.noise).margin_ratio
            cells.append(PhaseCell(alpha, beta, m, d, params.s, True, 0.0, margin))
            for r in range(replicates):
                seed = _rng.derive_seed(base.seed, _rng.TRIAL, gi, gj, r)
                spec = replace(
                    base, params=params, seed=seed, methods=("gnn",), count_swaps=False
                )
                cell_index.append((len(cells) - 1, r))
                jobs.append((len(jobs), spec))
    if workers <= 1:
        records = [_run_indexed(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_indexed, jobs, chunksize=1))
    perfect = {}
    for (cell_id, _), record in zip(cell_index, records):
        perfect.setdefault(cell_id, []).append(record.methods["gnn"].align_error == 0.0)
    for cell_id, flags in perfect.items():
        cells[cell_id] = replace(cells[cell_id], recovery_rate=float(np.mean(flags)))
    return cells


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(records: list[TrialRecord], path) -> None:
    """One row per (trial, method); floats as shortest round-trip repr."""
    try:
        with open(path, "w") as fh:
            fh.write(CSV_HEADER + "\n")
            for rec in records:
                for method, res in rec.methods.items():
                    fields = [
                        rec.trial,
                        rec.seed,
                        rec.n,
                        rec.d,
                        rec.s,
                        rec.m,
                        rec.t,
                        rec.sigma,
                        rec.q,
                        method,
                        res.align_error,
                        res.feat_rel_dist,
                        res.feat_exact,
                        res.objective,
                        res.swap_events,
                        rec.mean_degree,
                        res.runtime_ms,
                    ]
                    fh.write(",".join(_fmt(f) for f in fields) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trial CSV to {path}: {exc}") from exc


def _detect_axis(records: list[TrialRecord]) -> str:
    for axis in SWEEP_AXES:
        if len({getattr(rec, axis) for rec in records}) > 1:
            return axis
    return SWEEP_AXES[0]


def sweep_summary(records: list[TrialRecord], axis: str | None = None):
    """Per grid point and method: mean alignment error and its standard error."""
    if not records:
        return None, [], {}
    axis = axis or _detect_axis(records)
    values = sorted({getattr(rec, axis) for rec in records})
    methods = sorted({m for rec in records for m in rec.methods})
    table: dict[str, dict[float, tuple[float, float]]] = {m: {} for m in methods}
    for method in methods:
        for value in values:
            errs = np.array(
                [
                    rec.methods[method].align_error
                    for rec in records
                    if getattr(rec, axis) == value and method in rec.methods
                ]
            )
            se = float(errs.std(ddof=1) / np.sqrt(errs.size)) if errs.size > 1 else 0.0
            table[method][value] = (float(errs.mean()), se)
    return axis, values, table


def emit_plot_data(records: list[TrialRecord], path, axis: str | None = None) -> None:
    """Whitespace table: axis value, then mean and standard error per method."""
    axis, values, table = sweep_summary(records, axis)
    try:
        with open(path, "w") as fh:
            if axis is None:
                return
            methods = sorted(table)
            cols = " ".join(f"{m}_mean {m}_se" for m in methods)
            fh.write(f"# {axis} {cols}\n")
            for value in values:
                row = [f"{value:g}"]
                for m in methods:
                    mean, se = table[m][value]
                    row.extend([repr(mean), repr(se)])
                fh.write(" ".join(row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write plot data to {path}: {exc}") from exc
