import numpy as np
import pytest

from resetfda import BasisSpec, RegisteredCurve, make_knots

# verdict lines recorded by the acceptance tests, replayed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def cubic17() -> BasisSpec:
    """The default production basis: cubic, 17 equally spaced knots."""
    return BasisSpec(make_knots((0.0, 1.0), 17, 3))


@pytest.fixture
def small_basis() -> BasisSpec:
    return BasisSpec(make_knots((0.0, 1.0), 5, 3))


def curve_from_function(fn, k: int, cycle_id: int = 0, noise_sigma: float = 0.0,
                        seed: int = 0, v_reset: float = 1.0) -> RegisteredCurve:
    """Registered curve sampled at the canonical grid j/k, j=1..k."""
    u = np.arange(1, k + 1) / k
    y = np.asarray(fn(u), dtype=float)
    if noise_sigma > 0:
        y = y + np.random.default_rng(seed).normal(0.0, noise_sigma, k)
    return RegisteredCurve(cycle_id=cycle_id, args=u, currents=y, v_reset=v_reset)
