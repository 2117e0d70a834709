import pytest

from igo.verify import SUITES, TABLE1, VerifyCheck, run_suite


def test_line_format():
    assert VerifyCheck("x", True, "ok").line() == "PASS  x  ok"
    assert VerifyCheck("y", False).line() == "FAIL  y"


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope")


@pytest.mark.parametrize("name", ["psi", "bounds", "dd"])
def test_oracle_suites_pass(name):
    checks = run_suite(name)
    assert checks and all(c.passed for c in checks), [c.line() for c in checks if not c.passed]


def test_table_suite_rows():
    checks = run_suite("table1")
    assert len(checks) == len(TABLE1) + 1
    by_name = {c.name.split()[0]: c.passed for c in checks}
    assert by_name["p_5"] and by_name["p_6"] and by_name["p_8"] and by_name["q_9"]


def test_cm_suite_constants():
    checks = run_suite("cm")
    assert [c.passed for c in checks[:3]] == [True] * 3
    assert "zeta(11)" in checks[3].name


def test_suite_names():
    assert set(SUITES) == {"psi", "table1", "cm", "bounds", "dd"}
