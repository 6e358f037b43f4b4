import numpy as np
import pytest

from isirate.generators import FgmExpParams, gen_fgm_exponential


@pytest.fixture(scope="session")
def fgm_independent_1e5():
    return gen_fgm_exponential(10**5, FgmExpParams(rate=1, refractory=0.5, alpha=0, seed=11))


@pytest.fixture(scope="session")
def fgm_independent_1e4():
    return gen_fgm_exponential(10**4, FgmExpParams(rate=1, refractory=0.5, alpha=0, seed=12))


@pytest.fixture(scope="session")
def fgm_dependent_1e4():
    return gen_fgm_exponential(10**4, FgmExpParams(rate=1, refractory=0.5, alpha=1, seed=13))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance summary --------------------------------------------------------

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        _ACCEPTANCE[props["criterion"]] = (report.outcome, props.get("title", ""),
                                           props.get("measured", ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        outcome, title, measured = _ACCEPTANCE[number]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {number}: {verdict}  {title}"
        if measured:
            line += f"  [{measured}]"
        terminalreporter.write_line(line)
