"""The fourteen acceptance criteria, one test each.

Each result line is also collected and printed in the terminal summary.
"""

import pytest

from sirtail import acceptance

RESULT_LINES = {}


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number):
    result = acceptance.CRITERIA[number](seed=acceptance.DEFAULT_SEED, n_jobs=1)
    RESULT_LINES[number] = result.line()
    print(result.line())
    assert result.number == number
    assert result.passed, result.line()
