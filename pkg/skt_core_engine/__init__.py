"""
SKT Package Initialization
SKT 連続体解析パッケージの初期化
"""

from .skt_errors import (
    SKTError, PreconditionError, InvalidDomain, SingularMatrix, ConvergenceFailure,
    NegativeDiscriminant, DegenerateDiscriminant,
    NewtonError, MaxIterExceeded, LineSearchFailure, SingularJacobian,
    ContinuationError, SeedFailure, StepFailure, SwitchFailure,
    LimitError, NoPositiveSolution, IterationStall, NoSolutionInClass, BisectionFailure,
    SandwichViolation, NewtonFailure,
    SweepBroken, DegenerateFit,
    ConfigError, ParseError, ValidationError, SchemaMismatch, EmptyData, UsageError
)
from .skt_types import (
    ContinuationMode, Scaling, BifurcationKind, LimitKind, Verdict,
    Grid, BandedMatrix, EigenPair, ModelParams, StateUV, StateWZ,
    NewtonConfig, NewtonReport, BranchPoint, BifurcationRecord, Branch,
    LimitField, ShootingSolution, SweepReport, TerritoryInfo
)
from .skt_numerics import (
    build_grid, discrete_laplacian, laplacian_solve, factorize, LUFactorization,
    solve_banded, is_spd, spd_solve, eigen_weighted, norms, weighted_integral
)
from .skt_model import (
    wz_from_uv, uv_from_wz, residual_uv, residual_d, residual_wz, jacobian_wz, dparam_wz,
    residual_scaled_WZ, jacobian_scaled_WZ, residual_limit_WZ, jacobian_limit_WZ,
    apriori_bounds, check_apriori, SKTSystem
)
from .skt_newton import newton_solve, fd_jacobian_check
from .skt_continuation import (
    ContinuationSettings, ContinuationProcessor, to_d_mode, from_d_mode, monitor_eigenvalues
)
from .skt_limits import (
    solve_sublinear, solve_Z0, limit_U, solve_logistic, solve_Zj,
    shoot_LS2, grid_solve_LS2, LimitSolver
)
from .skt_territory import analyze_territory, is_reflection_of
from .skt_classifier import (
    ClassifierThresholds, BranchSelector, LimitClassifier, classify, fit_rate
)
from .skt_utils import BranchMonitor, create_lambda_scenario_params, create_d_scenario_params
from .skt_engine import SKTCoreEngine, create_skt_engine

# 設定・入出力（tomllib / tomli が無い環境ではコア計算だけ使える）
try:
    from .skt_config import (
        RunConfig, DomainConfig, ModelConfig, ContinuationConfig, SweepConfig, OutputConfig,
        parse_config, load_config
    )
    from .skt_io import (
        write_branch, read_branch, read_branches, write_profile, read_profile,
        write_manifest, write_sweep_report
    )
    from .skt_svg import emit_svg
    from .skt_cli import cli_dispatch
    CLI_AVAILABLE = True
except ImportError:
    CLI_AVAILABLE = False

__version__ = "1.0.0"
__author__ = "SKT Continuation Toolkit"

# パッケージレベルのエクスポート
__all__ = [
    # Errors
    'SKTError', 'PreconditionError', 'InvalidDomain', 'SingularMatrix', 'ConvergenceFailure',
    'NegativeDiscriminant', 'DegenerateDiscriminant',
    'NewtonError', 'MaxIterExceeded', 'LineSearchFailure', 'SingularJacobian',
    'ContinuationError', 'SeedFailure', 'StepFailure', 'SwitchFailure',
    'LimitError', 'NoPositiveSolution', 'IterationStall', 'NoSolutionInClass', 'BisectionFailure',
    'SandwichViolation', 'NewtonFailure', 'SweepBroken', 'DegenerateFit',
    'ConfigError', 'ParseError', 'ValidationError', 'SchemaMismatch', 'EmptyData', 'UsageError',

    # Core Types
    'ContinuationMode', 'Scaling', 'BifurcationKind', 'LimitKind', 'Verdict',
    'Grid', 'BandedMatrix', 'EigenPair', 'ModelParams', 'StateUV', 'StateWZ',
    'NewtonConfig', 'NewtonReport', 'BranchPoint', 'BifurcationRecord', 'Branch',
    'LimitField', 'ShootingSolution', 'SweepReport', 'TerritoryInfo',

    # Numerics / Model / Solver
    'build_grid', 'discrete_laplacian', 'laplacian_solve', 'factorize', 'LUFactorization',
    'solve_banded', 'is_spd', 'spd_solve', 'eigen_weighted', 'norms', 'weighted_integral',
    'wz_from_uv', 'uv_from_wz', 'residual_uv', 'residual_d', 'residual_wz', 'jacobian_wz',
    'dparam_wz', 'residual_scaled_WZ', 'jacobian_scaled_WZ', 'residual_limit_WZ',
    'jacobian_limit_WZ', 'apriori_bounds', 'check_apriori', 'SKTSystem',
    'newton_solve', 'fd_jacobian_check',

    # Processors
    'ContinuationSettings', 'ContinuationProcessor', 'to_d_mode', 'from_d_mode',
    'monitor_eigenvalues',
    'solve_sublinear', 'solve_Z0', 'limit_U', 'solve_logistic', 'solve_Zj',
    'shoot_LS2', 'grid_solve_LS2', 'LimitSolver',
    'analyze_territory', 'is_reflection_of',
    'ClassifierThresholds', 'BranchSelector', 'LimitClassifier', 'classify', 'fit_rate',

    # Utilities
    'BranchMonitor', 'create_lambda_scenario_params', 'create_d_scenario_params',

    # Main Engine
    'SKTCoreEngine', 'create_skt_engine'
]

# 設定・入出力（条件付きエクスポート）
if CLI_AVAILABLE:
    __all__.extend([
        'RunConfig', 'DomainConfig', 'ModelConfig', 'ContinuationConfig', 'SweepConfig',
        'OutputConfig', 'parse_config', 'load_config',
        'write_branch', 'read_branch', 'read_branches', 'write_profile', 'read_profile',
        'write_manifest', 'write_sweep_report', 'emit_svg', 'cli_dispatch'
    ])
