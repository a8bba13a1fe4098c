"""Command line interface.

Subcommands:
    generate   sample a correlated pair and write it to files
    align      load a saved pair, run the matchers, write permutations
    sweep      Monte Carlo sweep over sigma | q | m | d
    phase      perfect-recovery rate over a (density, dimension) exponent grid
    validate   run the bound evaluators and empirical validators
    check      print the recovery-condition report

Exit codes: 0 success, 2 parameter validation failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bounds, figures, harness, io as instance_io
from .denoise import denoise
from .generate import degree_stats, sample_correlated_pair
from .matching import align_features, align_linear, count_swap_events
from .params import ModelParams, NoiseParams, ParameterError

EXIT_OK = 0
EXIT_PARAMS = 2
EXIT_IO = 3


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, required=True, help="vertex count")
    parser.add_argument("--d", type=int, required=True, help="feature dimension")
    parser.add_argument("--t", type=int, default=1, help="connection threshold")
    parser.add_argument("--s", type=float, default=None, help="sparsity parameter")
    parser.add_argument("--m", type=float, default=None, help="density parameter")
    parser.add_argument("--sigma", type=float, default=0.0, help="feature noise level")
    parser.add_argument("--q", type=float, default=1.0, help="edge retention probability")
    parser.add_argument("--seed", type=int, default=0, help="base seed")


def _model_from_args(args) -> tuple[ModelParams, NoiseParams]:
    if (args.s is None) == (args.m is None):
        raise ParameterError("exactly one of --s / --m is required")
    params = ModelParams(n=args.n, d=args.d, t=args.t, s=args.s, m=args.m)
    noise = NoiseParams(sigma=args.sigma, q=args.q)
    return params, noise


def _parse_grid(text: str) -> tuple[float, ...]:
    """Parse 'a:b:step' into an inclusive grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ParameterError(f"grid must be 'a:b:step', got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ParameterError(f"grid bounds invalid: {text!r}")
    count = int(round((hi - lo) / step)) + 1
    values = [lo + k * step for k in range(count)]
    return tuple(v for v in values if v <= hi + 1e-9 * max(1.0, abs(hi)))


def _parse_methods(text: str) -> tuple[str, ...]:
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    unknown = set(methods) - set(harness.METHODS)
    if unknown:
        raise ParameterError(f"unknown methods: {sorted(unknown)}")
    if not methods:
        raise ParameterError("at least one method is required")
    return methods


def _cmd_generate(args) -> int:
    params, noise = _model_from_args(args)
    inst = sample_correlated_pair(params, noise, args.seed, perm_mode=args.perm_mode)
    prefix = args.out
    instance_io.write_instance(f"{prefix}.rig", inst.truth, inst.base, params.t)
    instance_io.save_pair_npz(f"{prefix}.npz", inst, params, noise)
    instance_io.write_edge_list(f"{prefix}.edges", inst.first.graph)
    instance_io.write_edge_list(f"{prefix}_prime.edges", inst.second.graph)
    stats = degree_stats(inst.first.graph)
    print(f"wrote {prefix}.rig {prefix}.npz {prefix}.edges {prefix}_prime.edges")
    print(
        f"n={params.n} d={params.d} s={params.s:g} m={params.m:g} t={params.t} "
        f"sigma={noise.sigma:g} q={noise.q:g}"
    )
    print(f"observed degrees: min={stats.minimum} mean={stats.mean:.3f} max={stats.maximum}")
    return EXIT_OK


def _cmd_align(args) -> int:
    inst, params, noise = instance_io.load_pair_npz(args.instance)
    methods = _parse_methods(args.methods)
    print(f"loaded n={params.n} d={params.d} s={params.s:g} t={params.t} "
          f"sigma={noise.sigma:g} q={noise.q:g}")
    for method in methods:
        if method == "gnn":
            z = denoise(inst.first, params.s, params.t)
            z_prime = denoise(inst.second, params.s, params.t)
            result = align_features(z, z_prime, truth=inst.hidden_perm)
        else:
            result = align_linear(
                inst.first.features, inst.second.features, truth=inst.hidden_perm
            )
        out = f"{args.out}.{method}.perm"
        instance_io.write_permutation(out, result.perm)
        line = f"{method}: align_error={result.error:.6f} objective={result.objective:g}"
        if args.swap_events:
            aligned = inst.to_truth_order(
                z_prime.dense(np.float64) if method == "gnn" else inst.second.features
            )
            source = z.dense(np.float64) if method == "gnn" else inst.first.features
            swaps, examined = count_swap_events(source, aligned)
            line += f" swap_events={swaps}/{examined}"
        print(line + f" -> {out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    params, noise = _model_from_args(args)
    base = harness.TrialSpec(
        params=params,
        noise=noise,
        seed=args.seed,
        methods=_parse_methods(args.methods),
        perm_mode=args.perm_mode,
        count_swaps=args.swap_events,
        denoise_s=args.misspecified_s,
    )
    sweep = harness.SweepSpec(
        base=base, axis=args.axis, grid=_parse_grid(args.grid), replicates=args.replicates
    )
    records = harness.run_sweep(sweep, workers=args.threads)
    harness.write_csv(records, f"{args.out}.csv")
    harness.emit_plot_data(records, f"{args.out}.dat", axis=args.axis)
    outputs = [f"{args.out}.csv", f"{args.out}.dat"]
    if not args.no_figures:
        figures.render_sweep_figure(records, f"{args.out}.png", axis=args.axis)
        outputs.append(f"{args.out}.png")
    print(f"{len(records)} trials -> " + " ".join(outputs))
    return EXIT_OK


def _cmd_phase(args) -> int:
    params, noise = _model_from_args(args)
    base = harness.TrialSpec(
        params=params, noise=noise, seed=args.seed, methods=("gnn",),
        perm_mode=args.perm_mode,
    )
    cells = harness.phase_diagram(
        _parse_grid(args.alpha_grid),
        _parse_grid(args.beta_grid),
        base,
        replicates=args.replicates,
        workers=args.threads,
    )
    path = f"{args.out}.csv"
    try:
        with open(path, "w") as fh:
            fh.write("alpha,beta,m,d,s,valid,recovery_rate,margin_ratio,reason\n")
            for c in cells:
                fh.write(
                    f"{c.alpha!r},{c.beta!r},{c.m!r},{c.d},"
                    f"{'' if c.s is None else repr(c.s)},{int(c.valid)},"
                    f"{'' if c.recovery_rate is None else repr(c.recovery_rate)},"
                    f"{'' if c.margin_ratio is None else repr(c.margin_ratio)},"
                    f"{c.reason}\n"
                )
    except OSError as exc:
        raise OSError(f"cannot write phase grid to {path}: {exc}") from exc
    outputs = [path]
    if not args.no_figures:
        figures.render_phase_figure(cells, f"{args.out}.png")
        outputs.append(f"{args.out}.png")
    skipped = sum(not c.valid for c in cells)
    print(f"{len(cells)} cells ({skipped} invalid) -> " + " ".join(outputs))
    return EXIT_OK


def _cmd_validate(args) -> int:
    params, noise = _model_from_args(args)
    reports = [
        bounds.recovery_condition(params, noise),
        bounds.feat_failure_bound(params, noise),
        bounds.match_failure_bound(params, noise),
        bounds.uniqueness_check(params, trials=args.trials, seed=args.seed),
    ]
    if params.m is not None and params.n >= (12 * params.t) ** params.t * params.m:
        reports.append(
            bounds.degree_event_check(params, noise, trials=args.trials, seed=args.seed)
        )
    else:
        print("note: skipping degree concentration (n below (12t)^t * m)")
    tail_u = min(args.tail_u, np.sqrt(params.d) / 16.0)
    reports.append(
        bounds.gaussian_inner_tail_check(
            params.d, tail_u, trials=max(args.trials, 10**4), seed=args.seed
        )
    )
    reports.append(
        bounds.lazy_walk_tail_check(
            n_steps=args.walk_steps,
            p=args.walk_p,
            u_grid=np.arange(0.0, np.sqrt(args.walk_p * args.walk_steps) * 3 + 1e-9, 1.0),
            trials=max(args.trials * 100, 10**4),
            seed=args.seed,
        )
    )
    try:
        with open(f"{args.out}.csv", "a") as fh:
            if fh.tell() == 0:
                fh.write(bounds.report_csv_header() + "\n")
            for rep in reports:
                fh.write(bounds.report_csv_row(rep) + "\n")
    except OSError as exc:
        raise OSError(f"cannot append validation rows to {args.out}.csv: {exc}") from exc
    failed = 0
    for rep in reports:
        print(f"{rep.name}: value={rep.value:g} verdict={rep.verdict}")
        failed += rep.verdict == "fail"
    print(f"reports appended to {args.out}.csv")
    return EXIT_OK if failed == 0 else 1


def _cmd_check(args) -> int:
    params, noise = _model_from_args(args)
    report = bounds.recovery_condition(params, noise, margin_factor=args.margin_factor)
    for key, value in report.terms.items():
        print(f"{key}: {value:g}")
    print(f"threshold (log n + log d): {report.threshold:g}")
    print(f"margin ratio: {report.margin_ratio:g}")
    print(f"verdict (margin factor {args.margin_factor:g}): {report.verdict}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rigalign",
        description="Random intersection graph alignment experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a correlated pair and write it to files")
    _add_model_args(p)
    p.add_argument("--perm-mode", choices=("uniform", "identity"), default="uniform")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("align", help="align a saved pair and export permutations")
    p.add_argument("--instance", required=True, help="pair file written by generate (.npz)")
    p.add_argument("--methods", default="gnn,linear")
    p.add_argument("--swap-events", action="store_true")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("sweep", help="Monte Carlo sweep along one parameter axis")
    _add_model_args(p)
    p.add_argument("--axis", choices=harness.SWEEP_AXES, required=True)
    p.add_argument("--grid", required=True, help="a:b:step (inclusive)")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--methods", default="gnn,linear")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--perm-mode", choices=("uniform", "identity"), default="uniform")
    p.add_argument("--swap-events", action="store_true")
    p.add_argument("--misspecified-s", type=float, default=None,
                   help="denoise with this scale instead of the true s")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("phase", help="perfect-recovery rates over an exponent grid")
    _add_model_args(p)
    p.add_argument("--alpha-grid", required=True, help="a:b:step for m = n**alpha")
    p.add_argument("--beta-grid", required=True, help="a:b:step for d = n**beta")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--perm-mode", choices=("uniform", "identity"), default="uniform")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=_cmd_phase)

    p = sub.add_parser("validate", help="run bound evaluators and empirical validators")
    _add_model_args(p)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tail-u", type=float, default=0.5)
    p.add_argument("--walk-steps", type=int, default=200)
    p.add_argument("--walk-p", type=float, default=0.25)
    p.add_argument("--out", required=True, help="output path prefix (rows appended)")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("check", help="evaluate the recovery condition")
    _add_model_args(p)
    p.add_argument("--margin-factor", type=float, default=1.0)
    p.set_defaults(func=_cmd_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
