"""The twelve acceptance criteria at their stated tolerances, one line each."""

import pytest

from dhg import verify


@pytest.mark.parametrize("number", sorted(verify.CRITERIA))
def test_criterion(number, capsys):
    result = verify.run_criterion(number)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
