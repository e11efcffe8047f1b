"""
SKT Nonlinear Solver
SKT 連続体解析 - 減衰 Newton 法（Armijo 直線探索付き）
"""

from typing import Callable, Optional

import numpy as np
from typing_extensions import TypeAlias

try:
    from .skt_types import NewtonConfig, NewtonReport
    from .skt_errors import (DegenerateDiscriminant, LineSearchFailure, MaxIterExceeded,
                             NegativeDiscriminant, PreconditionError, SingularJacobian, SingularMatrix)
    from .skt_numerics import MatrixLike, factorize, _as_csc
    from .skt_logging import get_logger, kv
except ImportError:
    import sys
    import os
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_types import NewtonConfig, NewtonReport
    from skt_errors import (DegenerateDiscriminant, LineSearchFailure, MaxIterExceeded,
                            NegativeDiscriminant, PreconditionError, SingularJacobian, SingularMatrix)
    from skt_numerics import MatrixLike, factorize, _as_csc
    from skt_logging import get_logger, kv

logger = get_logger(__name__)

ResidualFn: TypeAlias = Callable[[np.ndarray], np.ndarray]
JacobianFn: TypeAlias = Callable[[np.ndarray], MatrixLike]


def _sup(x: np.ndarray) -> float:
    return float(np.max(np.abs(x), initial=0.0))


def _safe_residual(residual_fn: ResidualFn, x: np.ndarray) -> Optional[np.ndarray]:
    """許容域外（判別式負）なら None"""
    try:
        r = np.asarray(residual_fn(x), dtype=float)
    except NegativeDiscriminant:
        return None
    if not np.all(np.isfinite(r)):
        return None
    return r


def newton_solve(residual_fn: ResidualFn, jacobian_fn: JacobianFn, x0: np.ndarray,
                 cfg: Optional[NewtonConfig] = None,
                 admissible: Optional[Callable[[np.ndarray], bool]] = None,
                 noise_floor: Optional[Callable[[np.ndarray], float]] = None) -> NewtonReport:
    """
    F(x) = 0 を Newton 法で解く。

    収束判定は |F|_inf <= tol_residual、または丸め誤差下限
    （直前のステップが √eps (1 + |x|_inf) 以下かつ |F|_inf <= noise_floor(x)）。
    失敗時は NewtonError 系の例外に最終反復を載せて送出する。
    """
    cfg = cfg or NewtonConfig()
    cfg.validate()
    x = np.array(x0, dtype=float, copy=True)
    if admissible is not None and not admissible(x):
        raise PreconditionError("initial iterate is not admissible")
    F = _safe_residual(residual_fn, x)
    if F is None:
        raise PreconditionError("residual undefined at the initial iterate")
    fnorm = _sup(F)
    history = [fnorm]
    last_step = np.inf
    root_eps = np.sqrt(np.finfo(float).eps)

    def report(converged: bool, iterations: int, criterion: str, lu=None) -> NewtonReport:
        det_sign = lu.det_sign if lu is not None else 0
        floor = noise_floor(x) if noise_floor is not None else 0.0
        return NewtonReport(
            converged=converged, iterations=iterations, final_residual=fnorm,
            final_state=x.copy(), det_sign=det_sign, criterion=criterion,
            tolerance=max(cfg.tol_residual, floor), history=list(history), factorization=lu,
        )

    def finish(iterations: int, criterion: str) -> NewtonReport:
        try:
            lu = factorize(jacobian_fn(x))
        except (SingularMatrix, DegenerateDiscriminant):
            lu = None
        logger.debug(kv("newton converged", iters=iterations, res=fnorm, by=criterion))
        return report(True, iterations, criterion, lu)

    for iteration in range(cfg.max_iter + 1):
        if fnorm <= cfg.tol_residual:
            return finish(iteration, "residual")
        if noise_floor is not None and last_step <= root_eps * (1.0 + _sup(x)) \
                and fnorm <= noise_floor(x):
            return finish(iteration, "roundoff")
        if iteration == cfg.max_iter:
            break

        try:
            lu = factorize(jacobian_fn(x))
        except (SingularMatrix, DegenerateDiscriminant) as exc:
            raise SingularJacobian(f"singular Jacobian at iteration {iteration}: {exc}",
                                   report(False, iteration, "singular")) from exc
        dx = lu.solve(-F)

        t = 1.0
        while True:
            trial = x + t * dx
            ok = admissible is None or admissible(trial)
            F_trial = _safe_residual(residual_fn, trial) if ok else None
            if F_trial is not None:
                trial_norm = _sup(F_trial)
                if not cfg.line_search or trial_norm <= (1.0 - cfg.armijo * t) * fnorm:
                    break
                if noise_floor is not None and trial_norm <= noise_floor(trial):
                    break
            t *= cfg.damping
            if t < cfg.min_step:
                raise LineSearchFailure(
                    f"no acceptable step at iteration {iteration} (res={fnorm:.3e})",
                    report(False, iteration, "line-search"))

        last_step = t * _sup(dx)
        x = trial
        F = F_trial
        fnorm = trial_norm
        history.append(fnorm)
        logger.debug(kv("newton step", it=iteration + 1, res=fnorm, t=t))

    raise MaxIterExceeded(f"no convergence in {cfg.max_iter} iterations (res={fnorm:.3e})",
                          report(False, cfg.max_iter, "max-iter"))


def fd_jacobian_check(residual_fn: ResidualFn, jacobian_fn: JacobianFn, x: np.ndarray,
                      step: float = 1e-6) -> float:
    """中心差分 Jacobian との列ごとの最大相対誤差"""
    x = np.asarray(x, dtype=float)
    analytic = _as_csc(jacobian_fn(x)).toarray()
    worst = 0.0
    for j in range(x.size):
        h = step * max(1.0, abs(x[j]))
        plus = x.copy()
        minus = x.copy()
        plus[j] += h
        minus[j] -= h
        column = (np.asarray(residual_fn(plus)) - np.asarray(residual_fn(minus))) / (2.0 * h)
        scale = max(_sup(analytic[:, j]), 1e-300)
        worst = max(worst, _sup(column - analytic[:, j]) / scale)
    if worst > 1e-3:
        logger.warning(kv("fd check large", max_rel_error=worst))
    return worst
