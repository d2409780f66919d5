import pytest

from hana_jscc.config import Condition
from hana_jscc.errors import TrendValidationError
from hana_jscc.evaluation import trends

from .conftest import ORDERED_PSNR, make_report


def test_sign_test_p_value():
    assert trends.sign_test_p_value(3, 0) == 1 / 8
    assert trends.sign_test_p_value(0, 0) == 1.0
    assert trends.sign_test_p_value(0, 2) == 1.0
    assert trends.sign_test_p_value(2, 2) == pytest.approx(11 / 16)


def test_all_hypotheses_pass(ordered_report):
    verdicts = trends.compare_trends(ordered_report)

    assert [verdict.hypothesis for verdict in verdicts] == ["a", "b", "c", "d"]
    assert all(verdict.verdict == trends.Verdict.PASS for verdict in verdicts)


def test_compare_pair(ordered_report):
    comparison = trends.compare_pair(ordered_report.to_frame(), Condition.HANA, Condition.HANA_NO_DISTILL)

    assert comparison.mean_diff == pytest.approx(2.0)
    assert comparison.wins == 8
    assert comparison.losses == 0
    assert comparison.p_value == 1 / 256
    assert comparison.verdict == trends.Verdict.PASS


def test_reversed_order_fails(ordered_report):
    comparison = trends.compare_pair(ordered_report.to_frame(), Condition.DIRECT, Condition.PERFECT)

    assert comparison.verdict == trends.Verdict.FAIL
    assert comparison.losses == 8


def test_identical_conditions_are_inconclusive():
    report = make_report(lambda *_: 25.0, [Condition.HANA, Condition.HANA_NO_DISTILL])

    (verdict,) = trends.compare_trends(report, ["c"])

    assert verdict.verdict == trends.Verdict.INCONCLUSIVE
    assert verdict.comparisons[0].ties == 8


def test_chain_fails_on_any_link():
    psnr = {**ORDERED_PSNR, Condition.NAIVE_FT: 19.0}
    report = make_report(lambda condition, *_: psnr[condition], list(Condition))

    verdicts = {verdict.hypothesis: verdict for verdict in trends.compare_trends(report, ["a"])}

    assert verdicts["a"].verdict == trends.Verdict.FAIL
    assert [c.verdict for c in verdicts["a"].comparisons] == [trends.Verdict.PASS, trends.Verdict.FAIL]


def _direct_report(means_by_sigma):
    sigma_e = sorted(means_by_sigma)
    return make_report(
        lambda condition, snr, sigma, seed: means_by_sigma[sigma][seed],
        [Condition.DIRECT],
        snr_db=(6.0,),
        sigma_e=sigma_e,
    )


def test_monotonic_degradation():
    report = _direct_report({0.01: [30.0, 30.0], 0.02: [29.0, 29.0], 0.03: [28.0, 28.0]})

    verdict, detail = trends.check_monotonic_degradation(report.to_frame())

    assert verdict == trends.Verdict.PASS
    assert detail == "non-increasing"


def test_one_inversion_within_noise():
    report = _direct_report({0.01: [30.0, 32.0], 0.02: [30.5, 32.5], 0.03: [28.0, 29.0]})

    verdict, detail = trends.check_monotonic_degradation(report.to_frame())

    assert verdict == trends.Verdict.PASS
    assert "one inversion" in detail


def test_inversions_fail():
    report = _direct_report(
        {0.01: [30.0, 30.0], 0.02: [31.0, 31.0], 0.03: [30.0, 30.0], 0.04: [32.0, 32.0]}
    )

    verdict, _ = trends.check_monotonic_degradation(report.to_frame())

    assert verdict == trends.Verdict.FAIL


def test_single_sigma_is_inconclusive():
    report = _direct_report({0.05: [30.0, 30.0]})

    verdict, _ = trends.check_monotonic_degradation(report.to_frame())

    assert verdict == trends.Verdict.INCONCLUSIVE


def test_missing_condition():
    report = make_report(lambda *_: 25.0, [Condition.HANA])

    with pytest.raises(TrendValidationError, match="hana_no_distill"):
        trends.compare_trends(report, ["c"])


def test_hypotheses_for():
    assert trends.hypotheses_for([Condition.DIRECT]) == ["d"]
    assert trends.hypotheses_for([Condition.HANA, Condition.HANA_NO_DISTILL, Condition.NAIVE_FT]) == [
        "b",
        "c",
    ]
    assert trends.hypotheses_for(list(Condition)) == ["a", "b", "c", "d"]


def test_verdict_table(ordered_report):
    table = trends.verdict_table(trends.compare_trends(ordered_report))

    assert list(table.columns) == ["hypothesis", "description", "verdict", "detail"]
    assert list(table["verdict"]) == ["pass"] * 4


def test_adaptor_hypothesis_uses_large_estimation_errors():
    def psnr(condition, snr, sigma, seed):
        if condition == Condition.NAIVE_FT:
            return 25.0
        return 20.0 if sigma < 0.05 else 25.5

    report = make_report(
        psnr, [Condition.HANA_NO_DISTILL, Condition.NAIVE_FT], sigma_e=(0.01, 0.05, 0.1)
    )

    (verdict,) = trends.compare_trends(report, ["b"])

    assert verdict.verdict == trends.Verdict.PASS
    assert verdict.comparisons[0].wins == 8
    assert verdict.comparisons[0].mean_diff == pytest.approx(0.5)


def test_adaptor_hypothesis_without_large_errors_is_inconclusive():
    report = make_report(lambda *_: 25.0, [Condition.HANA_NO_DISTILL, Condition.NAIVE_FT], sigma_e=(0.01, 0.02))

    (verdict,) = trends.compare_trends(report, ["b"])

    assert verdict.verdict == trends.Verdict.INCONCLUSIVE
    assert verdict.detail == "no cells at the compared sigma_e"
