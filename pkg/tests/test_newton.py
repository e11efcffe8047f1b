"""
SKT Nonlinear Solver - テスト
"""

import numpy as np
import pytest

from skt_core_engine.skt_types import NewtonConfig
from skt_core_engine.skt_errors import (LineSearchFailure, MaxIterExceeded, NewtonError,
                                        PreconditionError, SingularJacobian)
from skt_core_engine.skt_newton import fd_jacobian_check, newton_solve


def _square_root_problem(target):
    def residual(x):
        return x * x - target

    def jacobian(x):
        return np.diag(2.0 * x)

    return residual, jacobian


def test_converges_quadratically():
    residual, jacobian = _square_root_problem(np.array([2.0, 3.0, 5.0]))
    report = newton_solve(residual, jacobian, np.array([1.0, 1.0, 1.0]))
    assert report.converged
    assert report.criterion == "residual"
    np.testing.assert_allclose(report.final_state, np.sqrt([2.0, 3.0, 5.0]), rtol=1e-12)
    assert report.final_residual <= 1e-10
    assert report.det_sign == 1
    # 履歴は単調に減る
    assert all(b < a for a, b in zip(report.history, report.history[1:]))
    print(f"iterations = {report.iterations}, history = {report.history}")


def test_already_converged_start():
    residual, jacobian = _square_root_problem(np.array([4.0]))
    report = newton_solve(residual, jacobian, np.array([2.0]))
    assert report.iterations == 0
    assert report.converged


def test_max_iterations_carries_report():
    residual, jacobian = _square_root_problem(np.array([2.0]))
    with pytest.raises(MaxIterExceeded) as info:
        newton_solve(residual, jacobian, np.array([100.0]), NewtonConfig(max_iter=2))
    report = info.value.report
    assert not report.converged
    assert report.criterion == "max-iter"
    assert report.final_state[0] < 100.0


def test_singular_jacobian():
    residual, jacobian = _square_root_problem(np.array([-1.0]))
    with pytest.raises(SingularJacobian) as info:
        newton_solve(residual, jacobian, np.array([0.0]))
    assert isinstance(info.value, NewtonError)
    assert info.value.report.criterion == "singular"


def test_line_search_failure_outside_admissible_region():
    """許容域 x >= 1 の外に根があると直線探索が失敗する"""
    residual, jacobian = _square_root_problem(np.array([0.25]))
    with pytest.raises(LineSearchFailure):
        newton_solve(residual, jacobian, np.array([1.0]),
                     admissible=lambda x: bool(np.all(x >= 1.0)))


def test_inadmissible_start():
    residual, jacobian = _square_root_problem(np.array([2.0]))
    with pytest.raises(PreconditionError):
        newton_solve(residual, jacobian, np.array([0.5]), admissible=lambda x: bool(np.all(x >= 1.0)))


def test_roundoff_criterion():
    """残差が丸め誤差の下限まで落ちれば roundoff で収束とみなす"""
    residual, jacobian = _square_root_problem(np.array([2.0]))
    cfg = NewtonConfig(tol_residual=1e-30)
    report = newton_solve(residual, jacobian, np.array([1.0]), cfg, noise_floor=lambda x: 1e-8)
    assert report.converged
    assert report.criterion == "roundoff"
    assert report.tolerance == pytest.approx(1e-8)
    assert abs(report.final_state[0] - np.sqrt(2.0)) < 1e-7


def test_invalid_config():
    with pytest.raises(PreconditionError):
        NewtonConfig(damping=1.5).validate()


def test_fd_check_detects_wrong_jacobian():
    residual, jacobian = _square_root_problem(np.array([2.0, 3.0]))
    x = np.array([1.5, 0.7])
    assert fd_jacobian_check(residual, jacobian, x) < 1e-8
    assert fd_jacobian_check(residual, lambda y: np.diag(3.0 * y), x) > 0.1
