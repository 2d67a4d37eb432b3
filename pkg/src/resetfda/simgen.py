"""Synthetic reset-curve generator with known ground truth.

Curves are built as mean(u) + sum of weight_fn(u) * score draws on the
registered domain, then mapped back onto a per-curve voltage grid by
drawing the reset voltage.  Per-curve random substreams keep results
identical regardless of generation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import legendre

from .curves import RawCurve, RawDataset
from .errors import DataError

__all__ = [
    "GeneratorConfig",
    "generate_curve",
    "generate_dataset",
    "powerlaw_plateau_mean",
    "legendre_mode",
    "gaussian_scores",
    "gumbel_reciprocal_scores",
    "uniform_vreset",
]

MeanFn = Callable[[np.ndarray], np.ndarray]
ScoreSampler = Callable[[np.random.Generator], float]
VresetLaw = Callable[[np.random.Generator], float]


def powerlaw_plateau_mean(scale: float = 1e-4, power: float = 1.7,
                          knee: float = 0.55) -> MeanFn:
    """Smooth monotone rise that saturates toward the reset point."""
    def mean(u):
        u = np.asarray(u, dtype=float)
        return scale * u ** power / (u ** power + knee ** power)
    return mean


def legendre_mode(j: int):
    """j-th shifted Legendre polynomial, normalized on [0, 1].

    Distinct orders are exactly orthonormal, so they serve as
    ground-truth weight functions.
    """
    if j < 1:
        raise ValueError("mode order must be >= 1")
    coefs = np.zeros(j + 1)
    coefs[j] = 1.0

    def mode(u):
        u = np.asarray(u, dtype=float)
        return np.sqrt(2 * j + 1) * legendre.legval(2.0 * u - 1.0, coefs)
    return mode


def gaussian_scores(sd: float) -> ScoreSampler:
    return lambda rng: float(rng.normal(0.0, sd))


def gumbel_reciprocal_scores(mu: float, beta: float) -> ScoreSampler:
    """xi = 1/y - 1 with y ~ Gumbel(mu, beta), the fitted score law."""
    def draw(rng):
        y = 0.0
        while y == 0.0:
            y = mu - beta * np.log(-np.log(rng.uniform(1e-300, 1.0)))
        return float(1.0 / y - 1.0)
    return draw


def uniform_vreset(lo: float, hi: float) -> VresetLaw:
    if not 0 < lo <= hi:
        raise ValueError("reset-voltage support must be positive")
    return lambda rng: float(rng.uniform(lo, hi))


@dataclass
class GeneratorConfig:
    """Everything needed to synthesize one dataset reproducibly."""

    n_curves: int
    mean: MeanFn
    modes: Sequence[tuple[Callable, ScoreSampler]] = ()
    noise_sigma: float = 0.0
    vreset_law: VresetLaw = field(default_factory=lambda: uniform_vreset(0.4, 0.8))
    step: float = 1e-3
    seed: int = 0
    min_points: int = 25

    def __post_init__(self):
        if self.n_curves < 2:
            raise ValueError("need at least two curves")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.step <= 0:
            raise ValueError("step must be positive")
        self._validate_modes()

    def _validate_modes(self, tol: float = 1e-6):
        # trapezoid check on a fine grid; modes must be orthonormal
        if not self.modes:
            return
        u = np.linspace(0.0, 1.0, 8001)
        vals = np.stack([np.asarray(fn(u), dtype=float) for fn, _ in self.modes])
        inner = np.stack([
            [np.trapezoid(vals[a] * vals[b], u) for b in range(len(self.modes))]
            for a in range(len(self.modes))])
        if np.max(np.abs(inner - np.eye(len(self.modes)))) > tol:
            raise ValueError("mode weight functions are not orthonormal on [0,1]")


def _curve_rng(config: GeneratorConfig, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([config.seed, index]))


def generate_curve(config: GeneratorConfig, index: int) -> RawCurve:
    """Synthesize curve ``index`` from its own derived random substream.

    Draw order is fixed: reset voltage, one score per mode, then the
    observation noise vector.
    """
    rng = _curve_rng(config, index)
    v_reset_raw = config.vreset_law(rng)
    k = int(round(v_reset_raw / config.step))
    if k < config.min_points:
        raise DataError(f"curve {index}: only {k} sampling points (min "
                        f"{config.min_points})")
    v_reset = k * config.step
    u = np.arange(1, k + 1) / k
    currents = np.asarray(config.mean(u), dtype=float).copy()
    for weight_fn, sampler in config.modes:
        currents += sampler(rng) * np.asarray(weight_fn(u), dtype=float)
    if config.noise_sigma > 0:
        currents += rng.normal(0.0, config.noise_sigma, k)
    return RawCurve(cycle_id=index, voltages=u * v_reset,
                    currents=currents, v_reset=v_reset)


def generate_dataset(config: GeneratorConfig) -> RawDataset:
    """All curves from one master seed; metadata records the settings."""
    curves = [generate_curve(config, i) for i in range(config.n_curves)]
    metadata = {
        "generator": "resetfda.simgen",
        "n_curves": config.n_curves,
        "n_modes": len(config.modes),
        "noise_sigma": config.noise_sigma,
        "step": config.step,
        "seed": config.seed,
    }
    return RawDataset(curves=curves, metadata=metadata)
