"""Command-line pipeline: fit, simulate, validate, generate.

Exit codes: 0 success, 1 usage, 2 I/O (missing or corrupt files),
3 data problems, 4 numerical failures, 5 model-format mismatch.
The environment variable RESETFDA_THREADS caps BLAS thread counts.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .bspline import BasisSpec, design_matrix, gram_matrix, make_knots
from .curves import (RawCurve, RawDataset, RegisteredCurve, load_dataset,
                     register, save_dataset)
from .distfit import (ScoreDistribution, fit_score_distribution, gumbel_cdf,
                      ks_test, sample_scores, transform_scores)
from .errors import DataError, ModelFormatError, NumericError
from .fpca import FpcaModel, fit_fpca, reconstruct
from .modelfile import (FORMAT_VERSION, ModelFile, file_sha256, load_model,
                        provenance_timestamp, save_model)
from .psmooth import default_lambda_grid, fit_all, select_lambda
from .report import write_report
from . import simgen

__all__ = ["main", "run_fit", "run_simulate", "run_validate", "FitResult"]

EXIT_IO = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_FORMAT = 5

VRESET_QUANTILE_PROBS = np.linspace(0.0, 1.0, 201)


@dataclass
class FitResult:
    spec: BasisSpec
    lam: float
    penalty_order: int
    criterion: str
    selection: object
    model: FpcaModel
    distribution: ScoreDistribution
    registered: list[RegisteredCurve]
    recon_errors: list[tuple[int, float]]
    q: int
    log_current: bool


def _maybe_log(dataset: RawDataset, log_current: bool) -> RawDataset:
    if not log_current:
        return dataset
    curves = []
    for c in dataset.curves:
        if np.any(c.currents <= 0):
            raise DataError(f"cycle {c.cycle_id}: non-positive current, "
                            "cannot log-transform")
        curves.append(RawCurve(cycle_id=c.cycle_id, voltages=c.voltages,
                               currents=np.log10(c.currents), v_reset=c.v_reset))
    return RawDataset(curves=curves, metadata=dict(dataset.metadata))


def _reconstruction_errors(registered, model: FpcaModel, q: int):
    coef_rows = reconstruct(model, model.scores[:, :q], q)
    errors = []
    for curve, coefs in zip(registered, coef_rows):
        fitted = design_matrix(model.spec, curve.args) @ coefs
        rmse = float(np.sqrt(np.mean((curve.currents - fitted) ** 2)))
        errors.append((curve.cycle_id, rmse))
    return errors


def run_fit(dataset: RawDataset, *, n_knots: int = 17, degree: int = 3,
            penalty_order: int = 2, lam: float | None = None,
            lambda_grid=None, criterion: str = "gcv", q: int = 4,
            log_current: bool = False, bootstrap_ks: bool = False,
            seed: int = 0) -> FitResult:
    """The whole estimation pipeline on an in-memory dataset."""
    dataset = _maybe_log(dataset, log_current)
    registered = [register(c) for c in dataset.curves]
    spec = BasisSpec(make_knots((0.0, 1.0), n_knots, degree))

    if lam is not None:
        selection = None
        chosen = float(lam)
    else:
        grid = default_lambda_grid() if lambda_grid is None else lambda_grid
        selection = select_lambda(registered, spec, grid, penalty_order, criterion)
        chosen = selection.chosen

    if q < 1:
        raise DataError("q must be at least 1")
    coefs = fit_all(registered, spec, chosen, penalty_order)
    gram = gram_matrix(spec)
    q_cap = min(len(registered) - 1, spec.dimension)
    model = fit_fpca(coefs, gram, min(max(q, 4), q_cap))
    try:
        distribution = fit_score_distribution(model.scores[:, 0],
                                              bootstrap_ks=bootstrap_ks, seed=seed)
    except ValueError as exc:
        raise DataError(str(exc)) from exc

    return FitResult(
        spec=spec, lam=chosen, penalty_order=penalty_order,
        criterion=criterion if lam is None else "fixed",
        selection=selection, model=model, distribution=distribution,
        registered=registered, recon_errors=_reconstruction_errors(registered, model, 1),
        q=min(q, model.q_max), log_current=log_current)


def _build_model_file(result: FitResult, dataset: RawDataset, *,
                      step: float, input_path=None) -> ModelFile:
    model = result.model
    scores = model.scores
    stats = {
        f"component_{j + 1}": {
            "mean": float(scores[:, j].mean()),
            "sd": float(scores[:, j].std(ddof=1)),
            "min": float(scores[:, j].min()),
            "max": float(scores[:, j].max()),
        }
        for j in range(model.q_max)
    }
    vresets = np.sort([c.v_reset for c in dataset.curves])
    quantiles = np.quantile(vresets, VRESET_QUANTILE_PROBS)
    provenance = {
        "tool": "resetfda",
        "tool_version": __version__,
        "timestamp": provenance_timestamp(),
        "input_sha256": file_sha256(input_path) if input_path else "",
        "n_curves": len(dataset.curves),
    }
    return ModelFile(
        degree=result.spec.degree,
        n_knots=result.spec.knots.interior.size,
        lam=result.lam,
        penalty_order=result.penalty_order,
        criterion=result.criterion,
        log_current=result.log_current,
        step=step,
        mean_coefs=model.mean_coefs,
        eigenvalues=model.eigenvalues,
        total_variance=model.total_variance,
        weight_coefs=model.weight_coefs,
        score_stats=stats,
        score_distribution=result.distribution,
        vreset_probs=VRESET_QUANTILE_PROBS,
        vreset_quantiles=quantiles,
        provenance=provenance,
    )


def run_simulate(model: ModelFile, n: int, seed: int) -> RawDataset | None:
    """Sample n curves from a stored model; None when n is 0."""
    rng = np.random.default_rng(seed)
    xi = sample_scores(model.score_distribution, n, rng)
    spec = BasisSpec(make_knots((0.0, 1.0), model.n_knots, model.degree))
    b1 = model.weight_coefs[0]

    curves = []
    for i in range(n):
        v_reset_raw = float(np.interp(rng.uniform(), model.vreset_probs,
                                      model.vreset_quantiles))
        k = max(int(round(v_reset_raw / model.step)), spec.dimension + 1)
        v_reset = k * model.step
        u = np.arange(1, k + 1) / k
        coefs = model.mean_coefs + xi[i] * b1
        currents = design_matrix(spec, u) @ coefs
        if model.log_current:
            currents = 10.0 ** currents
        curves.append(RawCurve(cycle_id=i, voltages=u * v_reset,
                               currents=currents, v_reset=v_reset))
    if not curves:
        return None
    return RawDataset(curves=curves, metadata={"generator": "resetfda.simulate",
                                               "seed": seed})


def run_validate(dataset: RawDataset, model: ModelFile):
    """Project a dataset onto a stored model and score the fit."""
    dataset = _maybe_log(dataset, model.log_current)
    registered = [register(c) for c in dataset.curves]
    spec = BasisSpec(make_knots((0.0, 1.0), model.n_knots, model.degree))
    coefs = fit_all(registered, spec, model.lam, model.penalty_order)
    gram = gram_matrix(spec)

    centered = coefs.A - model.mean_coefs
    scores = centered @ gram.matrix @ model.weight_coefs.T
    recon = model.mean_coefs + scores[:, :1] @ model.weight_coefs[:1]
    errors = []
    for curve, row in zip(registered, recon):
        fitted = design_matrix(spec, curve.args) @ row
        errors.append((curve.cycle_id,
                       float(np.sqrt(np.mean((curve.currents - fitted) ** 2)))))

    dist = model.score_distribution
    y = transform_scores(scores[:, 0])
    d, pvalue = ks_test(y, lambda x: gumbel_cdf(x, dist.mu, dist.beta))
    return errors, d, pvalue


# ---------------------------------------------------------------- commands

def _cmd_fit(args) -> int:
    dataset = load_dataset(args.input)
    grid = None
    if args.lambda_grid:
        lo, hi, num = args.lambda_grid.split(":")
        grid = np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(num))
    result = run_fit(dataset, n_knots=args.knots, degree=args.degree,
                     penalty_order=args.penalty_order, lam=args.lam,
                     lambda_grid=grid, criterion=args.criterion, q=args.q,
                     log_current=args.log_current,
                     bootstrap_ks=args.bootstrap_ks, seed=args.seed)
    model_file = _build_model_file(result, dataset, step=args.step,
                                   input_path=args.input)
    save_model(model_file, args.model_out)
    if args.report_dir:
        write_report(args.report_dir, result.model, result.distribution,
                     result.recon_errors, result.q)

    dist = result.distribution
    print(f"fitted {len(dataset.curves)} curves: lambda={result.lam:g} "
          f"({result.criterion})")
    pct = 100.0 * result.model.eigenvalues / result.model.total_variance
    print("explained variance %: " + ", ".join(f"{v:.4f}" for v in pct[:result.q]))
    print(f"gumbel mu={dist.mu:.6g} beta={dist.beta:.6g} "
          f"KS D={dist.ks_statistic:.4g} p={dist.ks_pvalue:.4g}")
    print(f"model written to {args.model_out}")
    return 0


def _cmd_simulate(args) -> int:
    model = load_model(args.model)
    dataset = run_simulate(model, args.n, args.seed)
    if dataset is None:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("cycle_id,voltage_V,current_A\n")
    else:
        save_dataset(dataset, args.out)
    print(f"wrote {args.n} simulated curves to {args.out}")
    return 0


def _cmd_validate(args) -> int:
    model = load_model(args.model)
    dataset = load_dataset(args.input)
    errors, d, pvalue = run_validate(dataset, model)
    rmse = np.array([e for _, e in errors])
    decision = "accept" if pvalue >= 0.05 else "reject"
    print(f"reconstruction RMSE: mean={rmse.mean():.6g} max={rmse.max():.6g}")
    print(f"score KS: D={d:.4g} p={pvalue:.4g} -> {decision} Gumbel at 5%")
    if args.report_dir:
        os.makedirs(args.report_dir, exist_ok=True)
        with open(os.path.join(args.report_dir, "validation_errors.csv"),
                  "w", encoding="utf-8") as fh:
            fh.write("cycle_id,rmse\n")
            for cid, e in errors:
                fh.write(f"{cid},{float(e)!r}\n")
    return 0


def _cmd_generate(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    config = config_from_dict(doc)
    dataset = simgen.generate_dataset(config)
    save_dataset(dataset, args.out)
    print(f"wrote {config.n_curves} generated curves to {args.out}")
    return 0


_MEANS = {"powerlaw_plateau": simgen.powerlaw_plateau_mean}
_WEIGHTS = {"legendre": lambda order: simgen.legendre_mode(order)}
_SCORES = {
    "gaussian": lambda sd: simgen.gaussian_scores(sd),
    "gumbel_reciprocal": lambda mu, beta: simgen.gumbel_reciprocal_scores(mu, beta),
}
_VRESET = {"uniform": lambda lo, hi: simgen.uniform_vreset(lo, hi)}


def _from_registry(registry: dict, node: dict, what: str):
    node = dict(node)
    kind = node.pop("kind", None)
    if kind not in registry:
        raise DataError(f"unknown {what} kind {kind!r}; "
                        f"choose from {sorted(registry)}")
    return registry[kind](**node)


def config_from_dict(doc: dict) -> simgen.GeneratorConfig:
    """Build a GeneratorConfig from the declarative config document."""
    try:
        modes = [
            (_from_registry(_WEIGHTS, m["weight"], "weight"),
             _from_registry(_SCORES, m["scores"], "scores"))
            for m in doc.get("modes", [])
        ]
        return simgen.GeneratorConfig(
            n_curves=doc["n_curves"],
            mean=_from_registry(_MEANS, doc["mean"], "mean"),
            modes=modes,
            noise_sigma=doc.get("noise_sigma", 0.0),
            vreset_law=_from_registry(_VRESET, doc.get(
                "vreset", {"kind": "uniform", "lo": 0.4, "hi": 0.8}), "vreset"),
            step=doc.get("step", 1e-3),
            seed=doc.get("seed", 0),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad generator config: {exc}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resetfda",
        description="Stochastic modeling of RRAM reset current-voltage curves")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="estimate the model from a dataset")
    fit.add_argument("input")
    fit.add_argument("--model-out", default="model.json")
    fit.add_argument("--report-dir", default=None)
    fit.add_argument("--knots", type=int, default=17)
    fit.add_argument("--degree", type=int, default=3)
    fit.add_argument("--penalty-order", type=int, default=2)
    fit.add_argument("--lambda", dest="lam", type=float, default=None)
    fit.add_argument("--lambda-grid", default=None, metavar="LO:HI:NUM")
    fit.add_argument("--criterion", choices=("cv", "gcv"), default="gcv")
    fit.add_argument("--q", type=int, default=4)
    fit.add_argument("--log-current", action="store_true")
    fit.add_argument("--step", type=float, default=1e-3)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--bootstrap-ks", action="store_true")
    fit.set_defaults(func=_cmd_fit)

    sim = sub.add_parser("simulate", help="sample curves from a stored model")
    sim.add_argument("model")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=_cmd_simulate)

    val = sub.add_parser("validate", help="score a dataset against a model")
    val.add_argument("input")
    val.add_argument("model")
    val.add_argument("--report-dir", default=None)
    val.set_defaults(func=_cmd_validate)

    gen = sub.add_parser("generate", help="synthesize a dataset from a config")
    gen.add_argument("config")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_generate)
    return parser


@contextlib.contextmanager
def _thread_limit():
    threads = os.environ.get("RESETFDA_THREADS")
    if threads:
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=int(threads)):
            yield
    else:
        yield


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with _thread_limit():
            return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ModelFormatError as exc:
        print(f"model format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
