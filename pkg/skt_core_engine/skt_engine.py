"""
SKT Core Engine - Main Integration Module
SKT 連続体解析 - メイン統合モジュール
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

try:
    from .skt_types import (Branch, BranchPoint, ContinuationMode, Grid, LimitField, ModelParams,
                            SweepReport)
    from .skt_errors import PreconditionError, SeedFailure
    from .skt_continuation import ContinuationProcessor, ContinuationSettings, to_d_mode
    from .skt_limits import LimitSolver
    from .skt_classifier import BranchSelector, ClassifierThresholds, LimitClassifier
    from .skt_utils import BranchMonitor
    from .skt_logging import get_logger, kv
except ImportError:
    # 開発時の直接実行用フォールバック
    import sys
    import os
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_types import (Branch, BranchPoint, ContinuationMode, Grid, LimitField, ModelParams,
                           SweepReport)
    from skt_errors import PreconditionError, SeedFailure
    from skt_continuation import ContinuationProcessor, ContinuationSettings, to_d_mode
    from skt_limits import LimitSolver
    from skt_classifier import BranchSelector, ClassifierThresholds, LimitClassifier
    from skt_utils import BranchMonitor
    from skt_logging import get_logger, kv

logger = get_logger(__name__)


class SKTCoreEngine:
    """SKT 連続体解析 コアエンジン - 統合クラス"""

    def __init__(self, params: ModelParams, grid: Grid, settings: Optional[ContinuationSettings] = None,
                 thresholds: Optional[ClassifierThresholds] = None):
        self.params = params
        self.grid = grid
        self.settings = settings or ContinuationSettings()
        self.settings.validate()

        # システムコンポーネントの初期化
        self.continuation = ContinuationProcessor(params, grid, self.settings)
        self.limit_solver = LimitSolver(grid, params.m, self.settings.newton)
        self.classifier = LimitClassifier(params, grid, thresholds, self.settings.newton,
                                          self.limit_solver)
        self.branch_monitor = BranchMonitor()

        self.branches: Dict[str, Branch] = {}

    def _remember(self, branches: List[Branch]) -> List[Branch]:
        for branch in branches:
            self.branches[branch.id] = branch
        return branches

    def run_lambda_diagram(self, window: Tuple[float, float], max_depth: int = 1,
                           include_trivial: bool = True) -> List[Branch]:
        """λ 分岐図：自明解、主枝 C、ピッチフォークからの子枝"""
        branches = []
        if include_trivial:
            branches.append(self.continuation.trivial_branch(window))
        seed = self.continuation.seed_primary_branch(window=window)
        branches.extend(self.continuation.trace_family(seed, window, max_depth=max_depth))
        for branch in branches:
            report = self.branch_monitor.check_branch_health(branch)
            if report['status'] != 'healthy':
                logger.warning(kv("branch health", id=branch.id, status=report['status'],
                                  issues=len(report['warnings']) + len(report['errors'])))
        return self._remember(branches)

    def run_d_diagram(self, window: Tuple[float, float], max_depth: int = 1) -> List[Branch]:
        """d 分岐図。d = 1/λ の窓に写して λ で追跡し、最後に d-mode へ変換する"""
        lo, hi = window
        if not 0 < lo < hi:
            raise PreconditionError(f"d window must satisfy 0 < low < high, got {window}")
        lam_window = (1.0 / hi, 1.0 / lo)
        try:
            seed = self.continuation.seed_primary_branch(window=lam_window)
        except SeedFailure as exc:
            raise SeedFailure(f"d window {window} does not contain d_1: {exc}") from exc
        family = self.continuation.trace_family(seed, lam_window, max_depth=max_depth)
        return self._remember([to_d_mode(branch) for branch in family])

    def run_diagram(self, mode: ContinuationMode, window: Tuple[float, float],
                    max_depth: int = 1) -> List[Branch]:
        if mode is ContinuationMode.D:
            return self.run_d_diagram(window, max_depth)
        return self.run_lambda_diagram(window, max_depth)

    def point_on(self, branch: Branch, param: float) -> BranchPoint:
        if branch.mode is not ContinuationMode.LAMBDA:
            raise PreconditionError("profiles are read from lambda-mode branches")
        return self.continuation.point_at(branch, param)

    def sweep(self, lam: float, alphas: Sequence[float], branch: Branch,
              selector: Optional[BranchSelector] = None) -> SweepReport:
        """branch 上の λ の解から α 掃引を始める"""
        seed = self.point_on(branch, lam)
        return self.classifier.alpha_sweep(lam, list(alphas), seed, selector)

    def limits(self, lam: float) -> List[LimitField]:
        return self.limit_solver.profiles(lam)

    def get_health_status(self) -> Dict[str, Any]:
        return {bid: self.branch_monitor.check_branch_health(b) for bid, b in self.branches.items()}


def create_skt_engine(config) -> SKTCoreEngine:
    """RunConfig からエンジンを作成"""
    grid = config.grid()
    return SKTCoreEngine(config.params(grid), grid, config.continuation_settings(), config.thresholds())
