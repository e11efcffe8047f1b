"""
SKT Limit Classifier
SKT 連続体解析 - α 掃引と極限挙動の判定

固定 λ で α を増やしながら解を追い、
  SmallCoexistence     : α|u|_inf が有界で u ≈ v（ともに O(1/α)、αu -> U）
  CompleteSegregation  : uv -> 0（u -> w_+, v -> w_-）
のどちらに近づくかを判定し、収束率 p（metric ~ C α^{-p}）を推定する。
"""

from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

try:
    from .skt_types import (BranchPoint, Grid, ModelParams, NewtonConfig, Scaling, ShootingSolution,
                            SweepReport, Verdict)
    from .skt_errors import (DegenerateFit, LimitError, NewtonError, PreconditionError,
                             SweepBroken)
    from .skt_model import SKTSystem
    from .skt_newton import newton_solve
    from .skt_continuation import ContinuationProcessor, ContinuationSettings
    from .skt_limits import LimitSolver, shoot_LS2
    from .skt_numerics import eigen_weighted
    from .skt_territory import analyze_territory, first_hump_sign
    from .skt_logging import get_logger, kv
except ImportError:
    import sys
    import os
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_types import (BranchPoint, Grid, ModelParams, NewtonConfig, Scaling, ShootingSolution,
                           SweepReport, Verdict)
    from skt_errors import (DegenerateFit, LimitError, NewtonError, PreconditionError,
                            SweepBroken)
    from skt_model import SKTSystem
    from skt_newton import newton_solve
    from skt_continuation import ContinuationProcessor, ContinuationSettings
    from skt_limits import LimitSolver, shoot_LS2
    from skt_numerics import eigen_weighted
    from skt_territory import analyze_territory, first_hump_sign
    from skt_logging import get_logger, kv

logger = get_logger(__name__)

MAX_SUBSTEP_DEPTH = 4


@dataclass
class ClassifierThresholds:
    """判定しきい値"""
    coexistence_factor: float = 2.0     # 最後の 1 桁で α|u|_inf の変動比がこれ未満
    coexistence_gap: float = 0.1        # |αu - αv|_inf / |αu|_inf がこれ未満
    segregation_overlap: float = 0.05   # |uv|_inf / (|u|_inf |v|_inf) がこれ未満

    def validate(self) -> None:
        if self.coexistence_factor <= 1 or self.coexistence_gap <= 0 or self.segregation_overlap <= 0:
            raise PreconditionError("classifier thresholds must be positive (factor > 1)")


@dataclass
class BranchSelector:
    """掃引する解の種類。segregation では LS2 の (j, sign) で比較相手を選ぶ"""
    kind: str = "coexistence"
    j: Optional[int] = None
    sign: Optional[str] = None

    def scaling(self) -> Scaling:
        return Scaling.SEGREGATION if self.kind == "segregation" else Scaling.COEXISTENCE

    def as_dict(self) -> Dict:
        return {"kind": self.kind, "j": self.j, "sign": self.sign}


class LimitClassifier:
    """α 掃引と極限判定"""

    def __init__(self, params: ModelParams, grid: Grid,
                 thresholds: Optional[ClassifierThresholds] = None,
                 newton: Optional[NewtonConfig] = None, limits: Optional[LimitSolver] = None):
        self.params = params
        self.grid = grid
        self.thresholds = thresholds or ClassifierThresholds()
        self.thresholds.validate()
        self.newton = newton or NewtonConfig()
        self.limits = limits or LimitSolver(grid, params.m, self.newton)
        self.sweep_history = deque(maxlen=50)

    # --- 1 点の補正 ---------------------------------------------------------

    def _solve_at(self, lam: float, alpha: float, scaling: Scaling, x0: np.ndarray) -> np.ndarray:
        system = SKTSystem(self.params.with_alpha(alpha).with_lambda(lam), self.grid, scaling)
        rep = newton_solve(lambda x: system.residual(x, lam), lambda x: system.jacobian(x, lam), x0,
                           self.newton, admissible=system.admissible, noise_floor=system.noise_floor)
        return rep.final_state

    def _advance(self, lam: float, alpha_from: float, alpha_to: float, scaling: Scaling,
                 x: np.ndarray, depth: int = 0) -> np.ndarray:
        """α_from -> α_to。失敗したら log α で分割して再試行"""
        try:
            return self._solve_at(lam, alpha_to, scaling, x)
        except (NewtonError, PreconditionError):
            if depth >= MAX_SUBSTEP_DEPTH:
                raise
        middle = float(np.sqrt(alpha_from * alpha_to))
        logger.debug(kv("alpha substep", lam=lam, alpha=middle, depth=depth + 1))
        x = self._advance(lam, alpha_from, middle, scaling, x, depth + 1)
        return self._advance(lam, middle, alpha_to, scaling, x, depth + 1)

    def _point(self, lam: float, alpha: float, scaling: Scaling, x: np.ndarray) -> BranchPoint:
        params = self.params.with_alpha(alpha).with_lambda(lam)
        settings = ContinuationSettings(scaling=scaling, newton=self.newton)
        processor = ContinuationProcessor(params, self.grid, settings)
        return processor.make_point(x, lam, None)

    # --- 指標 -----------------------------------------------------------------

    def _reference(self, lam: float, selector: BranchSelector, first_point: BranchPoint):
        """比較対象の極限プロファイル（U または w）"""
        if selector.kind == "coexistence":
            try:
                return self.limits.U(lam).values
            except LimitError as exc:
                logger.info(kv("no coexistence limit", lam=lam, reason=str(exc)))
                return None
        if not self.grid.is_symmetric() or np.ptp(self.params.m) > 0:
            return None
        w = first_point.uv.u - first_point.uv.v
        j = selector.j or len(analyze_territory(first_point.uv, self.grid).pattern)
        if selector.sign is not None:
            sign = selector.sign
        else:
            found = first_hump_sign(w)
            sign = "+" if found >= 0 else "-"
            if j % 2 == 0:
                # 偶数 j は w'(0) の符号で分類するので両方試して左端のこぶの符号で選ぶ
                for candidate in ("+", "-"):
                    try:
                        sol = self._shoot(lam, j, candidate)
                    except LimitError:
                        continue
                    if first_hump_sign(sol.w) == found:
                        return sol.w
                return None
        try:
            return self._shoot(lam, j, sign).w
        except LimitError as exc:
            logger.info(kv("no segregation limit", lam=lam, j=j, reason=str(exc)))
            return None

    def _shoot(self, lam: float, j: int, sign: str) -> ShootingSolution:
        ell = 0.5 * self.grid.length
        return shoot_LS2(lam, j, sign, ell=ell, m_const=float(self.params.m[0]), b1=self.params.b1,
                         c2=self.params.c2, grid=self.grid)

    def _metrics(self, point: BranchPoint, alpha: float, reference: Optional[np.ndarray],
                 selector: BranchSelector) -> Dict[str, float]:
        u, v = point.uv.u, point.uv.v
        sup_u = float(np.max(np.abs(u)))
        sup_v = float(np.max(np.abs(v)))
        entry = {
            "alpha": alpha,
            "sup_uv": float(np.max(np.abs(u * v))),
            "alpha_sup_w": alpha * float(np.max(np.abs(u - v))),
            "alpha_sup_u": alpha * sup_u,
            "overlap": (float(np.max(np.abs(u * v))) / (sup_u * sup_v)
                        if sup_u > 0 and sup_v > 0 else 0.0),
            "ratio_min": float(np.min(u / v)) if np.all(v > 0) else float("nan"),
            "ratio_max": float(np.max(u / v)) if np.all(v > 0) else float("nan"),
        }
        if reference is not None and selector.kind == "coexistence":
            entry["dist_to_limit_U"] = float(np.max(np.abs(alpha * u - reference)))
        elif reference is not None:
            entry["dist_to_segregation"] = float(np.max(np.abs(u - np.maximum(reference, 0.0))) +
                                                 np.max(np.abs(v - np.maximum(-reference, 0.0))))
        return entry

    # --- 掃引 -----------------------------------------------------------------

    def alpha_sweep(self, lam: float, alphas: List[float], seed: BranchPoint,
                    selector: Optional[BranchSelector] = None) -> SweepReport:
        """seed（最小の α で収束済み）から α を増やしながら解を追う"""
        selector = selector or BranchSelector()
        alphas = [float(a) for a in alphas]
        if not alphas or any(a <= 0 for a in alphas) or any(b <= a for a, b in zip(alphas, alphas[1:])):
            raise PreconditionError("alphas must be positive and strictly increasing")
        pairs = eigen_weighted(self.grid, self.params.m, 10) if np.all(self.params.m > 0) else []
        for pair in pairs:
            if abs(lam - pair.value) <= 1e-8 * pair.value:
                raise PreconditionError(f"lambda={lam} coincides with lambda_{pair.index}")
        report = SweepReport(lam=lam, selector=selector.as_dict())
        if pairs and lam <= pairs[0].value:
            report.notes.append("NoPositiveSolution: lambda <= lambda_1")
            return report

        scaling = selector.scaling()
        factors = scaling.factors(seed.alpha)
        x = seed.state.scaled(*factors).to_vector()
        previous_alpha = seed.alpha
        if abs(seed.param - lam) > 1e-12 * max(1.0, lam) or abs(previous_alpha - alphas[0]) > 0:
            try:
                x = self._advance(lam, previous_alpha, alphas[0], scaling, x)
            except (NewtonError, PreconditionError) as exc:
                raise SweepBroken(f"seed could not be moved to alpha={alphas[0]}: {exc}",
                                  report) from exc
            previous_alpha = alphas[0]

        reference = None
        for alpha in alphas:
            try:
                x = self._advance(lam, previous_alpha, alpha, scaling, x)
            except (NewtonError, PreconditionError) as exc:
                report.notes.append(f"broken at alpha={alpha:g}")
                raise SweepBroken(f"sweep broke at alpha={alpha:g}: {exc}", report) from exc
            point = self._point(lam, alpha, scaling, x)
            if reference is None:
                reference = self._reference(lam, selector, point)
            report.alphas.append(alpha)
            report.points.append(point)
            report.metrics.append(self._metrics(point, alpha, reference, selector))
            previous_alpha = alpha
            logger.info(kv("sweep point", lam=lam, alpha=alpha, sup_u=point.norms[2]))

        if len(report.alphas) >= 3:
            report.verdict = self.classify(report)
        metric = "dist_to_limit_U" if selector.kind == "coexistence" else "dist_to_segregation"
        try:
            report.fitted_rate = fit_rate(report, metric)
        except (DegenerateFit, PreconditionError) as exc:
            report.notes.append(f"rate not fitted: {exc}")
        report.notes.append("convergence along the sampled alpha sequence only")
        self.sweep_history.append({"lam": lam, "verdict": report.verdict.value,
                                   "points": len(report.points)})
        return report

    def classify(self, report: SweepReport) -> Verdict:
        return classify(report, self.thresholds)

    def get_sweep_statistics(self) -> Dict[str, float]:
        """掃引履歴の統計"""
        if not self.sweep_history:
            return {"sweeps": 0, "coexistence_ratio": 0.0}
        coexist = sum(1 for s in self.sweep_history if s["verdict"] == Verdict.SMALL_COEXISTENCE.value)
        return {"sweeps": len(self.sweep_history),
                "coexistence_ratio": coexist / len(self.sweep_history)}


def classify(report: SweepReport, thresholds: Optional[ClassifierThresholds] = None) -> Verdict:
    """最後の 1 桁の α で判定する"""
    thresholds = thresholds or ClassifierThresholds()
    if len(report.alphas) < 3:
        raise PreconditionError("classification needs at least 3 alpha values")
    alphas = np.asarray(report.alphas)
    top = alphas >= alphas[-1] / 10.0
    scaled_u = report.metric_series("alpha_sup_u")[top]
    last = report.metrics[-1]
    gap = last["alpha_sup_w"] / last["alpha_sup_u"] if last["alpha_sup_u"] > 0 else np.inf
    if scaled_u.min() > 0 and scaled_u.max() / scaled_u.min() < thresholds.coexistence_factor \
            and gap < thresholds.coexistence_gap:
        return Verdict.SMALL_COEXISTENCE
    overlap = report.metric_series("overlap")
    if overlap[-1] < thresholds.segregation_overlap and overlap[-1] < overlap[-2]:
        return Verdict.COMPLETE_SEGREGATION
    return Verdict.UNDETERMINED


def fit_rate(report: SweepReport, metric: str) -> float:
    """log metric を log α に最小二乗で当てはめ、metric ~ C α^{-p} の p を返す"""
    values = report.metric_series(metric)
    alphas = np.asarray(report.alphas, dtype=float)
    keep = np.isfinite(values) & (values > 0)
    if np.count_nonzero(keep) < 4:
        raise PreconditionError(f"need at least 4 positive samples of {metric}")
    values, alphas = values[keep], alphas[keep]
    if values.max() / values.min() < 10.0:
        raise DegenerateFit(f"{metric} spans less than one decade")
    slope, _ = np.polyfit(np.log(alphas), np.log(values), 1)
    return float(-slope)
