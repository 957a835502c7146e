import numpy as np
import pytest

from nykpca.kernels import KernelSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gaussian_data():
    """60 points in 4-D with a Gaussian kernel whose spectrum is well separated."""
    X = np.random.default_rng(7).standard_normal((60, 4))
    return X, KernelSpec.gaussian(0.2)


def random_psd(rng, p, rank=None):
    B = rng.standard_normal((p, rank or p))
    return B @ B.T


_criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        detail = "; ".join(f"{k}={v}" for k, v in report.user_properties)
        _criteria.append((label, item.name, status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, name, status, detail in _criteria:
        line = f"criterion {label:<4s} {status}  {name}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
