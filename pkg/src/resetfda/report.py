"""Plot-data emission: plain CSV series, rendering left to other tools."""

from __future__ import annotations

import os

import numpy as np

from .bspline import design_matrix
from .distfit import ScoreDistribution, gumbel_pdf, gumbel_quantile, transform_scores
from .fpca import FpcaModel, explained_variance

__all__ = ["write_report"]

GRID_POINTS = 1001


def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) if isinstance(v, int) else repr(float(v))
                              for v in row) + "\n")


def write_report(outdir, model: FpcaModel, dist: ScoreDistribution,
                 recon_errors: list[tuple[int, float]], q: int) -> None:
    """Emit the standard report bundle into ``outdir``.

    Files: variance table, mean and weight functions on a 1001-point
    grid, per-curve reconstruction RMSE, score histograms (raw and
    transformed), and the fitted density samples.
    """
    os.makedirs(outdir, exist_ok=True)
    u = np.linspace(0.0, 1.0, GRID_POINTS)
    phi = design_matrix(model.spec, u)

    table = explained_variance(model, q)
    _write_csv(os.path.join(outdir, "variance.csv"),
               ["component", "percent", "cumulative_percent"],
               [(j + 1, float(table.percentages[j]), float(table.cumulative[j]))
                for j in range(q)])

    _write_csv(os.path.join(outdir, "mean_function.csv"),
               ["u", "current"],
               zip(u.tolist(), (phi @ model.mean_coefs).tolist()))

    weights = phi @ model.weight_coefs[:q].T
    _write_csv(os.path.join(outdir, "weight_functions.csv"),
               ["u"] + [f"component_{j + 1}" for j in range(q)],
               (tuple([float(u[i])] + [float(v) for v in weights[i]])
                for i in range(GRID_POINTS)))

    _write_csv(os.path.join(outdir, "reconstruction_errors.csv"),
               ["cycle_id", "rmse"],
               [(cid, float(r)) for cid, r in recon_errors])

    xi = model.scores[:, 0]
    counts, edges = np.histogram(xi, bins=30)
    _write_csv(os.path.join(outdir, "score_histogram.csv"),
               ["bin_left", "bin_right", "count"],
               [(float(edges[i]), float(edges[i + 1]), int(counts[i]))
                for i in range(counts.size)])

    y = transform_scores(xi)
    counts, edges = np.histogram(y, bins=30)
    _write_csv(os.path.join(outdir, "transformed_score_histogram.csv"),
               ["bin_left", "bin_right", "count"],
               [(float(edges[i]), float(edges[i + 1]), int(counts[i]))
                for i in range(counts.size)])

    lo = gumbel_quantile(5e-4, dist.mu, dist.beta)
    hi = gumbel_quantile(1 - 5e-4, dist.mu, dist.beta)
    grid = np.linspace(lo, hi, GRID_POINTS)
    _write_csv(os.path.join(outdir, "fitted_density.csv"),
               ["y", "density"],
               zip(grid.tolist(), gumbel_pdf(grid, dist.mu, dist.beta).tolist()))
