"""The twelve acceptance checks at their stated tolerances, one report line each."""

import pytest

from conftest import ACCEPTANCE_LINES

from folschwarz.acceptance import CRITERIA, run_criterion

SLOW = {2, 3, 11}


@pytest.mark.parametrize(
    "number",
    [pytest.param(n, marks=pytest.mark.slow) if n in SLOW else n for n in sorted(CRITERIA)],
)
def test_acceptance_criterion(number):
    result = run_criterion(number)
    print(result.line())
    ACCEPTANCE_LINES.append(result.line())
    assert result.passed, result.line()
