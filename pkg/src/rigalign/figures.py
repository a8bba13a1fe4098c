"""Figure rendering for sweep and phase-diagram reports.

Figures are written straight to files (Agg backend, no display); the CSV and
plot-data tables next to them remain the primary machine-readable output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import PhaseCell, TrialRecord, sweep_summary

__all__ = ["render_sweep_figure", "render_phase_figure"]

_AXIS_LABEL = {
    "sigma": "feature noise level",
    "q": "edge retention probability",
    "m": "density parameter",
    "d": "feature dimension",
}


def render_sweep_figure(records: list[TrialRecord], path, axis: str | None = None) -> None:
    """Alignment error (and feature distance where available) along the sweep axis."""
    axis, values, table = sweep_summary(records, axis)
    fig, (ax_err, ax_feat) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    if axis is not None:
        for method in sorted(table):
            means = [table[method][v][0] for v in values]
            ses = [table[method][v][1] for v in values]
            ax_err.errorbar(values, means, yerr=ses, marker="o", capsize=3, label=method)
        ax_err.legend()
    ax_err.set_xlabel(_AXIS_LABEL.get(axis, axis or ""))
    ax_err.set_ylabel("alignment error")
    ax_err.set_ylim(-0.02, 1.02)

    # feature relative distance exists only for the denoising pipeline
    by_value: dict[float, list[float]] = {}
    for rec in records:
        res = rec.methods.get("gnn")
        if res is not None and res.feat_rel_dist is not None:
            by_value.setdefault(getattr(rec, axis), []).append(res.feat_rel_dist)
    if by_value:
        xs = sorted(by_value)
        means = [float(np.mean(by_value[x])) for x in xs]
        ses = [
            float(np.std(by_value[x], ddof=1) / np.sqrt(len(by_value[x])))
            if len(by_value[x]) > 1
            else 0.0
            for x in xs
        ]
        ax_feat.errorbar(xs, means, yerr=ses, marker="s", capsize=3, color="tab:green")
    ax_feat.set_xlabel(_AXIS_LABEL.get(axis, axis or ""))
    ax_feat.set_ylabel("feature relative distance")
    fig.tight_layout()
    try:
        fig.savefig(path, dpi=150)
    except OSError as exc:
        raise OSError(f"cannot write sweep figure to {path}: {exc}") from exc
    finally:
        plt.close(fig)


def render_phase_figure(cells: list[PhaseCell], path, margin_level: float = 1.0) -> None:
    """Recovery-rate heatmap over (alpha, beta) with the margin contour overlaid.

    Invalid cells are left blank; the dashed contour marks where the signal
    condition's margin ratio crosses margin_level.
    """
    alphas = sorted({c.alpha for c in cells})
    betas = sorted({c.beta for c in cells})
    a_index = {a: k for k, a in enumerate(alphas)}
    b_index = {b: k for k, b in enumerate(betas)}
    rate = np.full((len(betas), len(alphas)), np.nan)
    margin = np.full((len(betas), len(alphas)), np.nan)
    for cell in cells:
        row, col = b_index[cell.beta], a_index[cell.alpha]
        if cell.valid:
            rate[row, col] = cell.recovery_rate
            margin[row, col] = cell.margin_ratio
    fig, ax = plt.subplots(figsize=(5.4, 4.4))
    mesh = ax.imshow(
        rate,
        origin="lower",
        aspect="auto",
        vmin=0.0,
        vmax=1.0,
        cmap="Blues",
        extent=(min(alphas), max(alphas), min(betas), max(betas)),
    )
    fig.colorbar(mesh, ax=ax, label="perfect recovery rate")
    if np.isfinite(margin).sum() >= 4 and len(alphas) > 1 and len(betas) > 1:
        finite = np.nan_to_num(margin, nan=-np.inf)
        if finite.min() < margin_level < finite.max():
            ax.contour(
                alphas,
                betas,
                finite,
                levels=[margin_level],
                colors="crimson",
                linestyles="dashed",
            )
    ax.set_xlabel("density exponent (m = n**alpha)")
    ax.set_ylabel("dimension exponent (d = n**beta)")
    fig.tight_layout()
    try:
        fig.savefig(path, dpi=150)
    except OSError as exc:
        raise OSError(f"cannot write phase figure to {path}: {exc}") from exc
    finally:
        plt.close(fig)
