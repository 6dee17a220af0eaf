import numpy as np
import pytest

# (number, description, outcome, detail) for every test marked ``criterion``
_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(number, description): acceptance criterion covered by the test"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    number, description = marker.args
    detail = dict(item.user_properties).get("detail", "")
    _CRITERIA.append((number, description, "PASS" if rep.passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, outcome, detail in sorted(_CRITERIA):
        line = f"criterion {number}: {outcome}  {description}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_metzler(rng, n, scale=1.0, shift=0.0):
    A = rng.uniform(0.0, scale, size=(n, n))
    np.fill_diagonal(A, rng.uniform(-2.0 * scale, 0.0, size=n) + shift)
    return A
