import pytest
from hypothesis import HealthCheck, settings

from igo.cycles import find_all_cycles
from igo.multistability import construct_multistable

from models import REF_RECIPE

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def ref_model():
    return construct_multistable(REF_RECIPE)


@pytest.fixture(scope="session")
def ref_cycles(ref_model):
    return find_all_cycles(ref_model, (1.999, 2.001), 40_001)


@pytest.fixture
def criterion():
    """Record a one-line verdict for the acceptance summary and assert it."""

    def record(label: str, passed: bool, detail: str = ""):
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip())
        assert passed, f"{label}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
