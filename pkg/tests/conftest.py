import numpy as np
import pytest

from labourflow import scenario


@pytest.fixture(scope="session")
def small_fixture(tmp_path_factory):
    """Small synthetic input set: (5 regions, 6 industries, 4 occupations),
    600 agents, 620 positions."""
    out = tmp_path_factory.mktemp("fixture_small")
    path = scenario.generate_synthetic((5, 6, 4), 600, 620, seed=7, out_dir=out)
    return scenario.load_scenario(path)


@pytest.fixture(scope="session")
def full_scale_fixture(tmp_path_factory):
    """Full-size synthetic input set: (21 regions, 21 industries,
    9 occupations), 3500 agents, 3600 positions."""
    out = tmp_path_factory.mktemp("fixture_full")
    path = scenario.generate_synthetic((21, 21, 9), 3500, 3600, seed=0, out_dir=out)
    return scenario.load_scenario(path)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance suite's one-line-per-criterion verdicts, which
    output capture would otherwise swallow on success."""
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "CRITERION_LINES", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
