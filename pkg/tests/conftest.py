import numpy as np
import pytest

from amgeig.fem import ProblemSpec, assemble_problem, structured_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def poisson_pairs():
    """Interior Laplace pairs on structured meshes, keyed by n."""
    cache = {}

    def get(n, kind="laplace"):
        if (n, kind) not in cache:
            A, M, _ = assemble_problem(structured_mesh(n), ProblemSpec(kind))
            cache[n, kind] = (A, M)
        return cache[n, kind]

    return get


_acceptance_lines = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    status = "PASS" if report.passed else "FAIL"
    _acceptance_lines.append(f"criterion {props['criterion']} [{status}] {props.get('detail', '')}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
