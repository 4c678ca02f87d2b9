import pytest

from fibdyn.fibpoly import FibMap
from fibdyn.report import FINITE_COMPONENT, Component
from fibdyn.padic import Ball
from fibdyn.verify import (SUITES, Check, growth_level_problem, run_suite)


def test_check_keeps_first_counterexample():
    c = Check("x")
    c.record(True, a=1)
    c.record(False, a=2)
    c.record(False, a=3)
    assert not c.passed and c.cases == 3 and c.counterexample == {"a": 2}


@pytest.mark.parametrize("name,params", [
    ("periodicity", {"max_l": 5}),
    ("valuation", {"max_l": 6}),
    ("derivatives", {"max_l": 4}),
    ("oracles", {"max_m": 120}),
    ("gaussian", {}),
    ("addition-law", {"max_index": 20}),
    ("digit-pair-parity", {"max_q": 4096}),
    ("lift-laws", {"ms": (16,), "level": 9}),
    ("catalog", {"max_case_m": 400, "partition_max_m": 40, "agreement_max_m": 40}),
])
def test_small_suites_pass(name, params):
    res = run_suite(name, **params)
    assert res.passed, res.to_record()
    assert all(c.cases > 0 for c in res.checks)
    assert "elapsed_seconds" in res.to_record(timing=True)
    assert "elapsed_seconds" not in res.to_record()


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("nonsense")
    assert set(SUITES) == {"periodicity", "valuation", "derivatives", "oracles", "gaussian",
                           "addition-law", "digit-pair-parity", "lift-laws", "catalog"}


def test_growth_level_problem_detects_wrong_levels():
    good = Component(FINITE_COMPONENT, 4, (Ball(1, 4), Ball(11, 4)), "M_0")
    assert growth_level_problem(16, good) is None
    late = Component(FINITE_COMPONENT, 5, (Ball(1, 5), Ball(11, 5), Ball(17, 5), Ball(27, 5)), "late")
    assert growth_level_problem(16, late)["reason"] == "already strongly grows one level lower"
    bogus = Component(FINITE_COMPONENT, 4, (Ball(1, 4), Ball(3, 4)), "bogus")
    assert growth_level_problem(16, bogus)["reason"] == "not a single cycle"
