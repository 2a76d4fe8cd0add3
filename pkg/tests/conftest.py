import numpy as np
import pytest

from ebm_anomaly.types import BmTopology, Laterals, ModelParams


def random_params(rng, n, m, semi=False, scale=1.0, temperature=1.0, effective_temperature=1.0):
    top = BmTopology(n, m, Laterals.VISIBLE_VISIBLE if semi else Laterals.NONE)
    w_vv = None
    if semi:
        upper = np.triu(rng.normal(0, scale, (n, n)), 1)
        w_vv = upper + upper.T
    return ModelParams(
        topology=top,
        w_vh=rng.normal(0, scale, (n, m)),
        b_v=rng.normal(0, scale, n),
        b_h=rng.normal(0, scale, m),
        w_vv=w_vv,
        temperature=temperature,
        effective_temperature=effective_temperature,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
