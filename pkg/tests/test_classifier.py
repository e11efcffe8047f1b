"""
SKT Limit Classifier - テスト
判定規則・収束率の当てはめ・実際の α 掃引
"""

import numpy as np
import pytest

from skt_core_engine.skt_types import SweepReport, Verdict
from skt_core_engine.skt_errors import DegenerateFit, PreconditionError
from skt_core_engine.skt_classifier import (BranchSelector, ClassifierThresholds, LimitClassifier,
                                            classify, fit_rate)
from skt_core_engine.skt_continuation import ContinuationProcessor
from skt_core_engine.skt_limits import shoot_LS2
from skt_core_engine.skt_numerics import eigen_weighted
from skt_core_engine.skt_territory import center_slope_sign


def _report(alphas, **series):
    metrics = []
    for k, alpha in enumerate(alphas):
        entry = {"alpha": alpha}
        for name, values in series.items():
            entry[name] = values[k]
        metrics.append(entry)
    return SweepReport(lam=20.0, alphas=list(alphas), metrics=metrics)


ALPHAS = [10.0, 100.0, 1000.0, 10000.0]


def test_small_coexistence_verdict():
    report = _report(ALPHAS, alpha_sup_u=[1.5, 1.2, 1.1, 1.1], alpha_sup_w=[0.2, 0.05, 0.01, 0.001],
                     overlap=[0.9, 0.95, 0.99, 0.999])
    assert classify(report) is Verdict.SMALL_COEXISTENCE


def test_complete_segregation_verdict():
    report = _report(ALPHAS, alpha_sup_u=[10.0, 100.0, 1000.0, 10000.0],
                     alpha_sup_w=[10.0, 100.0, 1000.0, 10000.0], overlap=[0.5, 0.2, 0.05, 0.01])
    assert classify(report) is Verdict.COMPLETE_SEGREGATION


def test_undetermined_verdict():
    report = _report(ALPHAS, alpha_sup_u=[10.0, 100.0, 1000.0, 10000.0],
                     alpha_sup_w=[1.0, 10.0, 100.0, 1000.0], overlap=[0.5, 0.5, 0.5, 0.5])
    assert classify(report) is Verdict.UNDETERMINED


def test_large_gap_is_not_coexistence():
    """α|u|_inf が有界でも u と v が離れていれば共存とはいえない"""
    report = _report(ALPHAS, alpha_sup_u=[1.5, 1.2, 1.1, 1.1], alpha_sup_w=[1.0, 1.0, 1.0, 1.0],
                     overlap=[0.5, 0.5, 0.5, 0.5])
    assert classify(report) is Verdict.UNDETERMINED


def test_classify_needs_three_alphas():
    report = _report(ALPHAS[:2], alpha_sup_u=[1.0, 1.0], alpha_sup_w=[0.0, 0.0], overlap=[1.0, 1.0])
    with pytest.raises(PreconditionError):
        classify(report)


def test_fit_rate_recovers_power():
    alphas = [20.0, 50.0, 100.0, 500.0, 1000.0]
    report = _report(alphas, dist_to_limit_U=[3.0 / a for a in alphas])
    assert fit_rate(report, "dist_to_limit_U") == pytest.approx(1.0, abs=1e-10)
    report = _report(alphas, dist_to_limit_U=[0.5 / a ** 2 for a in alphas])
    assert fit_rate(report, "dist_to_limit_U") == pytest.approx(2.0, abs=1e-10)


def test_fit_rate_degenerate():
    alphas = [20.0, 50.0, 100.0, 500.0]
    with pytest.raises(DegenerateFit):
        fit_rate(_report(alphas, dist_to_limit_U=[1.0, 1.0, 1.0, 1.0]), "dist_to_limit_U")
    with pytest.raises(PreconditionError):
        fit_rate(_report(alphas[:3], dist_to_limit_U=[1.0, 0.1, 0.01]), "dist_to_limit_U")
    # 欠けた指標は数えない
    with pytest.raises(PreconditionError):
        fit_rate(_report(alphas, dist_to_limit_U=[1.0, 0.1, 0.01, 0.0]), "dist_to_limit_U")


def test_threshold_validation():
    with pytest.raises(PreconditionError):
        ClassifierThresholds(coexistence_factor=1.0).validate()
    with pytest.raises(PreconditionError):
        ClassifierThresholds(segregation_overlap=0.0).validate()


def test_selector_scaling():
    assert BranchSelector().scaling().value == "coexistence"
    assert BranchSelector(kind="segregation", j=2, sign="+").scaling().value == "segregation"
    assert BranchSelector(kind="segregation", j=2, sign="+").as_dict() == {
        "kind": "segregation", "j": 2, "sign": "+"}


def test_sweep_preconditions(lambda_params31, grid31):
    classifier = LimitClassifier(lambda_params31, grid31)
    seed = ContinuationProcessor(lambda_params31, grid31).trivial_point(5.0)
    with pytest.raises(PreconditionError):
        classifier.alpha_sweep(20.0, [50.0, 20.0], seed)
    with pytest.raises(PreconditionError):
        classifier.alpha_sweep(20.0, [], seed)
    lam2 = eigen_weighted(grid31, lambda_params31.m, 2)[1].value
    with pytest.raises(PreconditionError):
        classifier.alpha_sweep(lam2, [20.0, 50.0], seed)


def test_sweep_below_principal_eigenvalue(lambda_params31, grid31):
    """λ <= λ1 では正値解がないので空の報告を返す"""
    classifier = LimitClassifier(lambda_params31, grid31)
    seed = ContinuationProcessor(lambda_params31, grid31).trivial_point(5.0)
    report = classifier.alpha_sweep(5.0, [20.0, 50.0, 100.0], seed)
    assert report.points == []
    assert report.verdict is Verdict.UNDETERMINED
    assert any(note.startswith("NoPositiveSolution") for note in report.notes)


def test_coexistence_sweep(short_primary_branch):
    """λ1 近くの共存解は α -> ∞ で αu -> U（小さい共存）"""
    _, branch = short_primary_branch
    seed = branch.points[2]
    classifier = LimitClassifier(branch.params, branch.grid)
    alphas = [20.0, 40.0, 80.0, 160.0, 320.0, 640.0]
    report = classifier.alpha_sweep(seed.param, alphas, seed)
    assert report.alphas == alphas
    assert len(report.points) == len(alphas)
    for point in report.points:
        assert point.residual < 1e-8
    assert report.verdict is Verdict.SMALL_COEXISTENCE
    distance = report.metric_series("dist_to_limit_U")
    assert distance[-1] < distance[0]
    assert 0.5 < report.fitted_rate < 1.5
    stats = classifier.get_sweep_statistics()
    assert stats["sweeps"] == 1
    assert stats["coexistence_ratio"] == 1.0
    print(f"fitted rate p = {report.fitted_rate:.3f}, notes = {report.notes}")


@pytest.mark.slow
def test_coexistence_sweep_at_lambda_20(pitchfork_family):
    """λ = 20 の主枝：|αu - U| は単調に減り、α = 10^4 で相対 5% 以内"""
    processor, primary = pitchfork_family["processor"], pitchfork_family["primary"]
    seed = processor.point_at(primary, 20.0)
    classifier = LimitClassifier(primary.params, primary.grid)
    report = classifier.alpha_sweep(20.0, [20.0, 50.0, 100.0, 500.0, 1e4], seed)
    distance = report.metric_series("dist_to_limit_U")
    assert all(b < a for a, b in zip(distance, distance[1:]))
    U = classifier.limits.U(20.0).values
    assert distance[-1] / np.max(U) < 0.05
    assert report.verdict is Verdict.SMALL_COEXISTENCE


@pytest.mark.slow
def test_segregation_sweep_on_upper_child(pitchfork_family):
    """λ = 43.0673 の j = 2 上側の枝：uv -> 0、(u, v) -> (w+, w-)"""
    lam = 43.0673
    processor = pitchfork_family["processor"]
    seeds = []
    for child in pitchfork_family["children"]:
        if child is None:
            continue
        params = child.params_array()
        if params.min() <= lam <= params.max():
            seeds.append(processor.point_at(child, lam))
    upper = [p for p in seeds if center_slope_sign(p.uv.u - p.uv.v) > 0]
    assert upper
    classifier = LimitClassifier(processor.params, processor.grid)
    selector = BranchSelector(kind="segregation", j=2, sign="+")
    report = classifier.alpha_sweep(lam, [20.0, 100.0, 1e3, 1e4], upper[0], selector)
    overlap = report.metric_series("sup_uv")
    assert overlap[-1] < overlap[0]
    distance = report.metric_series("dist_to_segregation")
    reference = shoot_LS2(lam, 2, "+", b1=processor.params.b1, c2=processor.params.c2,
                          grid=processor.grid).w
    print(f"segregation distances: {distance}")
    assert distance[-1] < distance[0]
    assert distance[-1] / np.max(np.abs(reference)) < 0.1
    assert report.verdict is Verdict.COMPLETE_SEGREGATION
