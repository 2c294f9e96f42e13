import pytest

from irs_sense.selftest import CHECKS, run_all


@pytest.mark.trivial
@pytest.mark.parametrize("name,check", CHECKS, ids=[c[0] for c in CHECKS])
def test_trivial(name, check):
    check()


def test_run_all_reports_no_failures(capsys):
    assert run_all(verbose=True) == 0
    assert "checks passed" in capsys.readouterr().out
