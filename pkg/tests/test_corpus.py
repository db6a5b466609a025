from fractions import Fraction

import numpy as np
import pytest

from lagcrit.classify import Verdict
from lagcrit.corpus import corpus_cases, get_case, run_case, septic_value
from lagcrit.exprcalc import evaluate
from lagcrit.kkt import kkt_residual
from lagcrit.problemfile import parse_problem


class TestFixtures:
    def test_five_cases(self):
        assert len(corpus_cases()) == 5
        assert len({c.id for c in corpus_cases()}) == 5

    def test_unknown_case(self):
        with pytest.raises(KeyError):
            get_case("nope")

    def test_expected_points_are_stationary(self, cases):
        for case in cases.values():
            for e in case.expected_points:
                r = kkt_residual(case.problem, e.x, e.lam)
                assert np.max(np.abs(r)) <= 1e-8, case.id
                assert evaluate(case.problem.objective, e.x) == pytest.approx(e.f_value, abs=1e-9)

    def test_septic_values_exact(self):
        assert septic_value(Fraction(0)) == 0
        assert float(septic_value(Fraction(1))) == pytest.approx(0.4511, abs=1e-4)
        assert float(septic_value(Fraction(3, 2))) == pytest.approx(0.3525, abs=1e-4)
        assert float(septic_value(Fraction(3))) == pytest.approx(2.6035, abs=1e-4)

    def test_counterexample_annotation(self, cases):
        case = cases["local-not-global-3d"]
        assert evaluate(case.problem.objective, [4, 1, 0]) == -11
        assert case.expected_points[0].verdict is Verdict.STRICT_LOCAL_MIN

    def test_exported_file_round_trips(self, cases):
        for case in cases.values():
            p = parse_problem(case.problem_file())
            assert p == case.problem


@pytest.mark.parametrize("case_id", [c.id for c in corpus_cases()])
def test_run_case_passes(case_id):
    result = run_case(get_case(case_id))
    failed = [f"{c.name}: {c.detail}" for c in result.checks if not c.passed]
    assert not failed
