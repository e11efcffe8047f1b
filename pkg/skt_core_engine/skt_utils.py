"""
SKT Utility Functions and Helper Classes
SKT 連続体解析 - ユーティリティ関数
"""

from typing import Any, Dict, Tuple

import numpy as np

try:
    from .skt_types import Branch, Grid, ModelParams
    from .skt_model import check_apriori, residual_wz
except ImportError:
    import sys
    import os
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_types import Branch, Grid, ModelParams
    from skt_model import check_apriori, residual_wz


def create_lambda_scenario_params(n: int = 511, alpha: float = 20.0) -> Tuple[ModelParams, Grid]:
    """λ を分岐パラメータとする基準設定（Ω = (-0.5, 0.5)、m ≡ 1）"""
    grid = Grid(-0.5, 0.5, n)
    return ModelParams.on_grid(grid, alpha, b1=3.0, b2=2.0, c1=2.0, c2=1.0, m=1.0), grid


def create_d_scenario_params(n: int = 511, alpha: float = 20.0) -> Tuple[ModelParams, Grid]:
    """d を分岐パラメータとする基準設定"""
    grid = Grid(-0.5, 0.5, n)
    return ModelParams.on_grid(grid, alpha, b1=1.0, b2=2.0, c1=1.0, c2=1.0, m=1.0), grid


class BranchMonitor:
    """枝の健全性チェック"""

    def __init__(self, residual_tol: float = 1e-9, max_rejected_ratio: float = 0.5):
        self.alert_thresholds = {
            'residual': residual_tol,
            'rejected_ratio': max_rejected_ratio,
            'step_floor': 1e-8,
        }

    def check_point(self, branch: Branch, index: int) -> Dict[str, Any]:
        """1 点の残差と事前評価"""
        point = branch.points[index]
        params = branch.params.with_lambda(point.param)
        res = float(np.max(np.abs(residual_wz(params, point.state, branch.grid))))
        return {'residual': res, 'violations': check_apriori(params, point.uv, branch.grid)}

    def check_branch_health(self, branch: Branch) -> Dict[str, Any]:
        """枝のヘルスチェック"""
        health_report = {
            'status': 'healthy',
            'warnings': [],
            'errors': [],
            'recommendations': []
        }
        if not branch.points:
            health_report['errors'].append('Branch has no points')
            health_report['status'] = 'critical'
            return health_report

        # 残差
        worst = max(p.residual for p in branch.points)
        if worst > self.alert_thresholds['residual']:
            health_report['errors'].append(f'Residual {worst:.3e} above tolerance')
            health_report['recommendations'].append('Re-correct points with a tighter Newton tolerance')

        # 正値性
        nonpositive = [p.param for p in branch.points if 'nonpositive' in p.flags]
        if nonpositive:
            health_report['warnings'].append(f'{len(nonpositive)} points lost positivity')

        # L2 事前評価（λ モードのみ意味を持つ）
        if branch.mode.value == 'lambda':
            violations = 0
            for k in range(len(branch.points)):
                if branch.points[k].param > 0 and self.check_point(branch, k)['violations']:
                    violations += 1
            if violations:
                health_report['errors'].append(f'A priori bounds violated at {violations} points')

        # 刻み幅の縮退
        params = branch.params_array()
        if params.size > 1:
            steps = np.abs(np.diff(params))
            floor = self.alert_thresholds['step_floor'] * max(1.0, float(np.max(np.abs(params))))
            if np.min(steps) < floor:
                health_report['warnings'].append('Parameter steps collapse somewhere on the branch')
                health_report['recommendations'].append('Lower ds or inspect a possible fold')

        rejected = int(branch.meta.get('rejected_steps', 0))
        if rejected > self.alert_thresholds['rejected_ratio'] * max(1, len(branch.points)):
            health_report['warnings'].append(f'{rejected} rejected steps')
            health_report['recommendations'].append('Reduce ds_max')

        if health_report['errors']:
            health_report['status'] = 'critical'
        elif len(health_report['warnings']) > 2:
            health_report['status'] = 'warning'
        elif health_report['warnings']:
            health_report['status'] = 'caution'
        return health_report
