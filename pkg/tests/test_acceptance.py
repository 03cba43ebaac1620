"""Acceptance criteria at dim and 2 dim; each prints one pass/fail line plus its checks."""
import pytest

from rabigates.acceptance import CRITERIA


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, record_criterion):
    result = CRITERIA[number]()
    record_criterion(result)
    assert result.passed, result.report()
