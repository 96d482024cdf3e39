import numpy as np
import pytest

from robinstab.model import build_model
from robinstab.sim import paper_scenario, simulate
from robinstab.spectral import compute_spectrum, benchmark_params


@pytest.fixture(scope="session")
def params():
    return benchmark_params()


@pytest.fixture(scope="session")
def spectrum(params):
    return compute_spectrum(params, 30)


@pytest.fixture(scope="session")
def model2(spectrum, params):
    return build_model(spectrum, params, 2)


@pytest.fixture(scope="session")
def undisturbed_runs():
    """Benchmark runs with d = 0 for both actuation modes, keyed by actuation."""
    return {act: (sc.design, simulate(sc))
            for act in ("both", "left")
            for sc in [paper_scenario(actuation=act, disturbance=False)]}


def random_params(rng):
    from robinstab.spectral import PlantParams
    return PlantParams(a=rng.uniform(0.05, 2.0), b=rng.uniform(-2, 5), c=rng.uniform(-2, 2),
                       theta1=rng.uniform(0.05, np.pi / 2 - 0.05),
                       theta2=rng.uniform(0.05, np.pi / 2 - 0.05), h_m=0.5, h_M=3.5)


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
