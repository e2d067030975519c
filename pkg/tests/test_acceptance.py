"""Acceptance battery: one test per criterion, each printing a single PASS/FAIL line.

The criteria and their tolerances live in :mod:`esakit.battery`; the slow Monte
Carlo criteria (C4, C5) take several minutes each.
"""

import pytest

from esakit.battery import CRITERIA


@pytest.mark.acceptance
@pytest.mark.parametrize("criterion", CRITERIA, ids=[fn.key for fn in CRITERIA])
def test_criterion(criterion, capsys):
    res = criterion()
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.detail
