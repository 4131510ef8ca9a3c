"""Acceptance gate: run the full verification suite once and report each
criterion on its own pass/fail line."""

import pytest

from mixvol.verify import CRITERIA, run_suite


@pytest.fixture(scope="module")
def suite_result():
    return run_suite("full", seed=7, echo=None)


@pytest.mark.parametrize("index", range(len(CRITERIA)),
                         ids=[f"criterion-{i + 1:02d}" for i in
                              range(len(CRITERIA))])
def test_criterion(suite_result, index):
    row = suite_result["criteria"][index]
    status = "PASS" if row["passed"] else "FAIL"
    print(f"criterion {row['criterion']:02d} {row['name']}: {status} "
          f"({row['detail']})")
    assert row["passed"], f"{row['name']}: {row['detail']}"


def test_suite_reports_overall_pass(suite_result):
    assert suite_result["passed"] is True
    assert suite_result["schema"] == 1
