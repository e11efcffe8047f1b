"""
SKT Error Hierarchy
SKT 連続体解析 - 例外階層

全ての公開操作はここで定義された例外のみを送出する。
CLI は ConfigError / UsageError を終了コード 2、その他の SKTError を 1 に対応させる。
"""

from typing import Any, Optional


class SKTError(Exception):
    """パッケージ全体の基底例外"""


class PreconditionError(SKTError, ValueError):
    """公開操作の事前条件違反"""


# --- numerics-kernel -------------------------------------------------------

class InvalidDomain(PreconditionError):
    """区間・格子の不正 (a >= b または n < 3)"""


class SingularMatrix(SKTError):
    """LU 分解のピボットが行スケールに対して小さすぎる"""


class ConvergenceFailure(SKTError):
    """逆反復が収束しない、または解が再検証で残差を満たさない"""


# --- model-core ------------------------------------------------------------

class NegativeDiscriminant(SKTError):
    """(w-ε)^2 + 4z < 0 となる節点がある"""

    def __init__(self, node: int, value: float):
        super().__init__(f"negative discriminant at node {node}: {value:.3e}")
        self.node = node
        self.value = value


class DegenerateDiscriminant(SKTError):
    """判別式が下限 1e-12 を下回り Jacobian が定義できない"""

    def __init__(self, node: int, value: float):
        super().__init__(f"degenerate discriminant at node {node}: {value:.3e}")
        self.node = node
        self.value = value


# --- nonlinear-solver ------------------------------------------------------

class NewtonError(SKTError):
    """Newton 反復の失敗（最終反復状態を保持）"""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class MaxIterExceeded(NewtonError):
    pass


class LineSearchFailure(NewtonError):
    pass


class SingularJacobian(NewtonError):
    pass


# --- continuation-engine ---------------------------------------------------

class ContinuationError(SKTError):
    """分岐追跡の失敗"""


class SeedFailure(ContinuationError):
    pass


class StepFailure(ContinuationError):
    """連続ステップ半減の上限到達。partial に途中までの Branch を保持"""

    def __init__(self, message: str, partial: Any = None):
        super().__init__(message)
        self.partial = partial


class SwitchFailure(ContinuationError):
    pass


# --- limiting-systems ------------------------------------------------------

class LimitError(SKTError):
    """極限問題ソルバーの失敗"""


class NoPositiveSolution(LimitError):
    pass


class IterationStall(LimitError):
    pass


class NoSolutionInClass(LimitError):
    pass


class BisectionFailure(LimitError):
    pass


class SandwichViolation(LimitError):
    def __init__(self, message: str, nodes: Optional[list] = None):
        super().__init__(message)
        self.nodes = nodes or []


class NewtonFailure(LimitError):
    pass


# --- limit-classifier ------------------------------------------------------

class SweepBroken(SKTError):
    """α 掃引の途中失敗。partial に途中までの SweepReport を保持"""

    def __init__(self, message: str, partial: Any = None):
        super().__init__(message)
        self.partial = partial


class DegenerateFit(SKTError):
    pass


# --- cli-io ----------------------------------------------------------------

class ConfigError(SKTError):
    """設定ファイルの構文・値エラー"""


class ParseError(ConfigError):
    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.line = line
        self.key = key


class ValidationError(ConfigError):
    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class SchemaMismatch(SKTError):
    pass


class EmptyData(SKTError):
    pass


class UsageError(SKTError):
    pass
