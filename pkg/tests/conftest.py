import re
from collections import OrderedDict

import pytest

from rotor_annulus.core import Integrals, Mode, PhysicalParams

# outcome per acceptance criterion, filled as the tests report
_CRITERIA = OrderedDict()
_TITLES = {}
_NAME = re.compile(r"test_c(\d\d)")


@pytest.fixture
def double_irrational():
    """eta1=1, eta2=2: irrational gamma, U empty, z > 0 on the circle."""
    return PhysicalParams(0.5, 1.0, 2.0, Mode.DOUBLE_ROTOR), Integrals(1.8, 1.0, 8.0)


@pytest.fixture
def double_rational():
    """eta1=eta2=1: gamma = 1/3, U empty."""
    return PhysicalParams(0.5, 1.0, 1.0, Mode.DOUBLE_ROTOR), Integrals(0.0, 1.0, 8.0)


@pytest.fixture
def double_partial_u():
    """eta1=eta2=0.9 at F/E=3.9: U is a proper nonempty subset."""
    return PhysicalParams(0.5, 0.9, 0.9, Mode.DOUBLE_ROTOR), Integrals(0.0, 1.0, 3.9)


def pytest_collection_modifyitems(items):
    for item in items:
        m = _NAME.match(item.name)
        if m and item.module.__name__.endswith("test_acceptance"):
            k = int(m.group(1))
            _CRITERIA.setdefault(k, [])
            doc = (item.function.__doc__ or "").strip().splitlines()
            _TITLES.setdefault(k, doc[0] if doc else item.name)


def pytest_runtest_logreport(report):
    m = _NAME.search(report.nodeid.split("::")[-1])
    if not m or "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _CRITERIA.setdefault(int(m.group(1)), []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    ran = {k: v for k, v in _CRITERIA.items() if v}
    if not ran:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ran):
        verdict = "PASS" if all(ran[k]) else "FAIL"
        tr.write_line(f"criterion {k:2d}: {verdict}  {_TITLES.get(k, '')}")
