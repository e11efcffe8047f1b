"""
SKT Limiting Systems
SKT 連続体解析 - α -> ∞ の極限問題ソルバー

  Z0     : -ΔZ = λ m (√(4Z+1) - 1)/2        （共存極限、U = (√(4Z0+1) - 1)/2）
  ζ0, Ψ  : -Δζ = m √ζ,  Ψ = √ζ0            （λ -> ∞ の漸近形）
  θ_λ    : -Δθ = θ(λm - θ)                    （ロジスティック方程式）
  Z_j(s) : -ΔZ = (λ_j m/2)(√(4Z+ξ^2) - ξ), ξ = 1 - sΦ_j
  LS2    : -Δw = λ m w - b1 w_+^2 + c2 w_-^2  （すみ分け極限、射撃法と格子 Newton）
"""

from dataclasses import replace
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

try:
    from .skt_types import (BandedMatrix, EigenPair, Grid, LimitField, LimitKind, ModelParams,
                            NewtonConfig, ShootingSolution, StateWZ)
    from .skt_errors import (BisectionFailure, ConvergenceFailure, IterationStall, NewtonError,
                             NewtonFailure, NoPositiveSolution, NoSolutionInClass,
                             PreconditionError, SandwichViolation)
    from .skt_numerics import (apply_laplacian, build_grid, eigen_weighted, laplacian_solve,
                               weighted_integral)
    from .skt_model import residual_limit_WZ
    from .skt_newton import newton_solve
    from .skt_territory import center_slope_sign, first_hump_sign
    from .skt_logging import get_logger, kv
except ImportError:
    import sys
    import os
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_types import (BandedMatrix, EigenPair, Grid, LimitField, LimitKind, ModelParams,
                           NewtonConfig, ShootingSolution, StateWZ)
    from skt_errors import (BisectionFailure, ConvergenceFailure, IterationStall, NewtonError,
                            NewtonFailure, NoPositiveSolution, NoSolutionInClass,
                            PreconditionError, SandwichViolation)
    from skt_numerics import (apply_laplacian, build_grid, eigen_weighted, laplacian_solve,
                              weighted_integral)
    from skt_model import residual_limit_WZ
    from skt_newton import newton_solve
    from skt_territory import center_slope_sign, first_hump_sign
    from skt_logging import get_logger, kv

logger = get_logger(__name__)

SANDWICH_GUARANTEED = 0.1
MONOTONE_GAP_TOL = 1e-10
MONOTONE_MAX_SWEEPS = 10000
SHOOT_ENDPOINT_RTOL = 1e-10
SIMPLE_ZERO_RTOL = 1e-6
END_ZERO_RTOL = 1e-9         # 端点からこれ以内（ℓ 比）の零点は境界条件とみなす


def _check_weight(grid: Grid, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (grid.n,):
        raise PreconditionError(f"m has {m.size} values, grid has {grid.n}")
    if np.any(m < 0) or not np.any(m > 0):
        raise PreconditionError("m must be non-negative and not identically zero")
    return m


def _tridiagonal(grid: Grid, diag_extra: np.ndarray) -> BandedMatrix:
    """-A + diag(diag_extra)"""
    inv_h2 = 1.0 / grid.h ** 2
    off = np.full(grid.n - 1, inv_h2)
    return BandedMatrix.from_diagonals(grid.n, {-1: off, 0: diag_extra - 2.0 * inv_h2, 1: off})


def _noise_floor(grid: Grid) -> Callable[[np.ndarray], float]:
    lap_norm = 4.0 / grid.h ** 2

    def floor(x: np.ndarray) -> float:
        return 16.0 * np.finfo(float).eps * lap_norm * max(1.0, float(np.max(np.abs(x), initial=0.0)))

    return floor


def _newton(grid: Grid, residual: Callable, jacobian: Callable, x0: np.ndarray,
            cfg: Optional[NewtonConfig], admissible: Optional[Callable] = None) -> np.ndarray:
    """直線探索付きで失敗したら全ステップ Newton（単調収束する問題用）"""
    cfg = cfg or NewtonConfig()
    floor = _noise_floor(grid)
    try:
        return newton_solve(residual, jacobian, x0, cfg, admissible, floor).final_state
    except NewtonError as first:
        plain = replace(cfg, line_search=False)
        try:
            return newton_solve(residual, jacobian, x0, plain, admissible, floor).final_state
        except NewtonError as exc:
            raise NewtonFailure(f"limit Newton failed: {exc}") from first


def _principal(grid: Grid, m: np.ndarray) -> EigenPair:
    return eigen_weighted(grid, m, 1)[0]


# --- ζ0 / Ψ --------------------------------------------------------------------

def solve_sublinear(grid: Grid, m: np.ndarray, kind: LimitKind = LimitKind.ZETA0) -> LimitField:
    """
    -Δζ = m √ζ の正値解を単調反復で求める。

    上解 C A^{-1} m（C = |A^{-1} m|_inf）と下解 δΦ1^2 から出発し、
    両側の反復列の差が 1e-10 以下になったら Newton で仕上げる。
    """
    if kind not in (LimitKind.ZETA0, LimitKind.PSI):
        raise PreconditionError(f"solve_sublinear handles zeta0/Psi, got {kind}")
    m = _check_weight(grid, m)
    potential = laplacian_solve(grid, m)
    upper = float(np.max(potential)) * potential

    phi = _principal(grid, np.ones(grid.n)).vector
    delta = 1.0
    for _ in range(200):
        lower = delta * phi ** 2
        if np.all(apply_laplacian(grid, lower) <= m * np.sqrt(lower) + 1e-14) and np.all(lower <= upper):
            break
        delta *= 0.25
    else:
        raise IterationStall("no positive sub-solution found")

    sweeps = 0
    gap = np.inf
    while sweeps < MONOTONE_MAX_SWEEPS:
        new_lower = laplacian_solve(grid, m * np.sqrt(lower))
        new_upper = laplacian_solve(grid, m * np.sqrt(upper))
        slack = 1e-13 * np.max(upper)
        if np.any(new_lower < lower - slack) or np.any(new_upper > upper + slack):
            raise IterationStall("monotone iteration lost monotonicity")
        lower, upper = new_lower, new_upper
        sweeps += 1
        gap = float(np.max(upper - lower))
        if gap <= MONOTONE_GAP_TOL * max(1.0, float(np.max(upper))):
            break
    else:
        raise IterationStall(f"gap {gap:.3e} after {sweeps} sweeps")

    zeta = 0.5 * (lower + upper)

    def residual(q):
        return -apply_laplacian(grid, q) + m * np.sqrt(q)

    def jacobian(q):
        return _tridiagonal(grid, m / (2.0 * np.sqrt(q)))

    try:
        polished = newton_solve(residual, jacobian, zeta, NewtonConfig(max_iter=20),
                                admissible=lambda q: bool(np.all(q > 0)),
                                noise_floor=_noise_floor(grid)).final_state
        if np.all(polished >= lower - 1e-9) and np.all(polished <= upper + 1e-9):
            zeta = polished
    except NewtonError:
        logger.debug(kv("zeta0 polish skipped", gap=gap))

    info = {"sweeps": sweeps, "gap": gap}
    logger.debug(kv("zeta0", sweeps=sweeps, sup=float(np.max(zeta))))
    if kind is LimitKind.PSI:
        return LimitField(kind=LimitKind.PSI, param=0.0, values=np.sqrt(zeta), info=info)
    return LimitField(kind=LimitKind.ZETA0, param=0.0, values=zeta, info=info)


# --- Z0 / U --------------------------------------------------------------------

def _z0_residual(grid: Grid, m: np.ndarray, lam: float):
    def residual(Z):
        return -apply_laplacian(grid, Z) + 0.5 * lam * m * (np.sqrt(4.0 * Z + 1.0) - 1.0)

    def jacobian(Z):
        return _tridiagonal(grid, lam * m / np.sqrt(4.0 * Z + 1.0))

    return residual, jacobian


def solve_Z0(lam: float, grid: Grid, m: np.ndarray, initial: Optional[np.ndarray] = None,
             zeta0: Optional[np.ndarray] = None, cfg: Optional[NewtonConfig] = None) -> LimitField:
    """共存極限 Z0(λ)。上解 λ^2 ζ0 からの Newton は単調に収束する"""
    m = _check_weight(grid, m)
    lam1 = _principal(grid, m).value if np.all(m > 0) else None
    if lam1 is not None and lam <= lam1:
        raise NoPositiveSolution(f"lambda={lam:.6g} <= lambda_1={lam1:.6g}")
    if zeta0 is None:
        zeta0 = solve_sublinear(grid, m).values
    x0 = lam ** 2 * zeta0 if initial is None else np.asarray(initial, dtype=float)
    residual, jacobian = _z0_residual(grid, m, lam)

    def admissible(Z):
        return bool(np.all(4.0 * Z + 1.0 > 0))

    try:
        Z = _newton(grid, residual, jacobian, x0, cfg, admissible)
    except NewtonFailure:
        if lam1 is None:
            raise
        Z = None
    # 下から出発すると自明解や符号変化解に落ちることがある
    if Z is None or np.max(Z) <= 1e-12 or np.min(Z) < 0:
        if lam1 is not None:
            Z = _z0_by_continuation(lam, lam1, grid, m, cfg)
    if np.max(Z) <= 1e-12:
        raise NoPositiveSolution(f"Z0 collapsed to zero at lambda={lam:.6g}")
    return LimitField(kind=LimitKind.Z0, param=lam, values=Z, info={"lambda_1": lam1})


def _z0_by_continuation(lam: float, lam1: float, grid: Grid, m: np.ndarray,
                        cfg: Optional[NewtonConfig]) -> np.ndarray:
    """λ1 の近くの分岐振幅から λ まで自然連続法で進む"""
    pair = _principal(grid, m)
    phi = pair.vector
    start = lam1 * 1.02
    s = ((start - lam1) * weighted_integral(grid, m * phi ** 2)
         / (start * weighted_integral(grid, m * phi ** 3)))
    Z = s * phi
    steps = np.geomspace(start, lam, max(8, int(np.ceil(20 * np.log(lam / start)))))
    previous = start
    for value in steps:
        residual, jacobian = _z0_residual(grid, m, value)
        Z = _newton(grid, residual, jacobian, Z * (value / previous) ** 2, cfg,
                    lambda q: bool(np.all(4.0 * q + 1.0 > 0)))
        previous = value
    logger.debug(kv("Z0 by continuation", lam=lam, steps=len(steps)))
    return Z


def limit_U(lam: float, grid: Grid, m: np.ndarray, **kwargs) -> LimitField:
    """U = (√(4Z0+1) - 1)/2（-Δ[(1+U)U] = λ m U の正値解）"""
    Z = solve_Z0(lam, grid, m, **kwargs).values
    U = 2.0 * Z / (np.sqrt(4.0 * Z + 1.0) + 1.0)
    # 極限系 (ε = 0) の残差で (W, Z) = (0, Z0) を再検証する。b, c は ε = 0 で消える
    params = ModelParams.on_grid(grid, 0.0, 1.0, 1.0, 1.0, 1.0, m=m, lam=lam)
    residual = float(np.max(np.abs(residual_limit_WZ(params, StateWZ(np.zeros(grid.n), Z), grid))))
    cfg = kwargs.get("cfg") or NewtonConfig()
    tolerance = 2.0 * max(cfg.tol_residual, _noise_floor(grid)(Z))
    if residual > tolerance:
        raise ConvergenceFailure(f"limit U fails the limit-system residual: "
                                 f"{residual:.3e} > {tolerance:.3e}")
    return LimitField(kind=LimitKind.U, param=lam, values=U,
                      info={"residual": residual, "tolerance": tolerance})


# --- θ_λ -----------------------------------------------------------------------

def solve_logistic(lam: float, grid: Grid, m: np.ndarray,
                   cfg: Optional[NewtonConfig] = None) -> LimitField:
    m = _check_weight(grid, m)
    lam1 = _principal(grid, m).value if np.all(m > 0) else None
    if lam1 is not None and lam <= lam1:
        raise NoPositiveSolution(f"lambda={lam:.6g} <= lambda_1={lam1:.6g}")

    def residual(theta):
        return -apply_laplacian(grid, theta) + theta * (lam * m - theta)

    def jacobian(theta):
        return _tridiagonal(grid, lam * m - 2.0 * theta)

    theta = _newton(grid, residual, jacobian, np.full(grid.n, lam * float(np.max(m))), cfg)
    if np.max(theta) <= 1e-12:
        raise NoPositiveSolution(f"logistic solution collapsed at lambda={lam:.6g}")
    return LimitField(kind=LimitKind.THETA, param=lam, values=theta)


# --- Z_j(s) --------------------------------------------------------------------

def solve_Zj(j: int, s: float, grid: Grid, m: np.ndarray, cfg: Optional[NewtonConfig] = None,
             cache: Optional[Dict] = None) -> LimitField:
    """
    ξ = 1 - sΦ_j とした Z_j(s)。Z0(λ_j) から s について連続的に追跡する。

    (1+|s|)^2 Z0(λ_j/(1+|s|)) < Z_j(s) < (1-|s|)^2 Z0(λ_j/(1-|s|)) を確認し、
    |s| <= 0.1 で破れたら SandwichViolation。
    """
    m = _check_weight(grid, m)
    if j < 2:
        raise PreconditionError("solve_Zj needs j >= 2")
    if not abs(s) < 1.0:
        raise PreconditionError("|s| must be < 1")
    cache = {} if cache is None else cache
    pairs = eigen_weighted(grid, m, j)
    lam_j, phi_j = pairs[-1].value, pairs[-1].vector
    zeta0 = cache.get("zeta0")
    if zeta0 is None:
        zeta0 = solve_sublinear(grid, m).values
        cache["zeta0"] = zeta0

    def z0(lam):
        return solve_Z0(lam, grid, m, zeta0=zeta0, cfg=cfg).values

    Z = z0(lam_j)
    count = max(1, int(np.ceil(abs(s) / 0.02)))
    for step in range(1, count + 1):
        s_k = s * step / count
        xi = 1.0 - s_k * phi_j

        def residual(q, xi=xi):
            return -apply_laplacian(grid, q) + 0.5 * lam_j * m * (np.sqrt(4.0 * q + xi * xi) - xi)

        def jacobian(q, xi=xi):
            return _tridiagonal(grid, lam_j * m / np.sqrt(4.0 * q + xi * xi))

        Z = _newton(grid, residual, jacobian, Z, cfg,
                    lambda q, xi=xi: bool(np.all(4.0 * q + xi * xi > 0)))

    info = {"lambda_j": lam_j, "s": s, "sandwich": True}
    if s != 0.0:
        a = abs(s)
        lower_lam = lam_j / (1.0 + a)
        lam1 = pairs[0].value
        lower = (1.0 + a) ** 2 * z0(lower_lam) if lower_lam > lam1 else np.zeros(grid.n)
        upper = (1.0 - a) ** 2 * z0(lam_j / (1.0 - a))
        bad = np.nonzero((Z <= lower) | (Z >= upper))[0]
        if bad.size:
            info["sandwich"] = False
            if a <= SANDWICH_GUARANTEED:
                raise SandwichViolation(f"Z_j({s}) leaves the comparison bounds at {bad.size} nodes",
                                        nodes=bad.tolist())
            logger.warning(kv("sandwich violated", j=j, s=s, nodes=int(bad.size)))
    return LimitField(kind=LimitKind.ZJ, param=s, values=Z, info=info)


# --- LS2：射撃法 -----------------------------------------------------------------

def _ls2_rhs(lam: float, m_const: float, b1: float, c2: float):
    def rhs(_x, y):
        w, dw = y
        return [dw, -lam * m_const * w + b1 * max(w, 0.0) ** 2 - c2 * min(w, 0.0) ** 2]
    return rhs


def _interior_events(sol, ell: float) -> np.ndarray:
    events = sol.t_events[0]
    tiny = END_ZERO_RTOL * ell
    return (events > -ell + tiny) & (events < ell - tiny)


def _count_zeros(sol, ell: float) -> int:
    return int(np.sum(_interior_events(sol, ell)))


def check_shot_zeros(sol, j: int, ell: float) -> int:
    """内部零点がちょうど j-1 個で、どれも単純（|w'| >= 1e-6 |w'|_inf）であることを確かめる"""
    zeros = _count_zeros(sol, ell)
    if zeros != j - 1:
        raise BisectionFailure(f"trajectory has {zeros} interior zeros, expected {j - 1}")
    if zeros:
        slope_sup = float(np.max(np.abs(sol.sol(np.linspace(-ell, ell, 2049))[1])))
        slopes = np.abs(sol.y_events[0][_interior_events(sol, ell), 1])
        if np.any(slopes < SIMPLE_ZERO_RTOL * slope_sup):
            raise BisectionFailure(f"degenerate interior zero: |w'| = {float(np.min(slopes)):.3e}")
    return zeros


def _integrate(slope: float, lam: float, ell: float, m_const: float, b1: float, c2: float):
    def crossing(_x, y):
        return y[0]

    return solve_ivp(_ls2_rhs(lam, m_const, b1, c2), (-ell, ell), [0.0, slope], method="RK45",
                     rtol=1e-12, atol=1e-14 * max(1.0, abs(slope)), dense_output=True,
                     events=crossing)


def _shoot_first_sign(first_sign: int, lam: float, j: int, ell: float, m_const: float,
                      b1: float, c2: float):
    lm = lam * m_const
    if j == 1:
        coefficients = [b1 if first_sign > 0 else c2]
    else:
        coefficients = [b1, c2]
    sigma_max = min(np.sqrt(lm ** 3 / (3.0 * b ** 2)) for b in coefficients)

    def zeros_at(sigma):
        return _count_zeros(_integrate(first_sign * sigma, lam, ell, m_const, b1, c2), ell)

    lo, hi = 1e-8 * sigma_max, sigma_max * (1.0 - 1e-9)
    lo_zeros, hi_zeros = zeros_at(lo), zeros_at(hi)
    if lo_zeros < j:
        raise BisectionFailure(f"small-slope bracket end does not reach {j} zeros")
    if hi_zeros >= j:
        raise BisectionFailure("large-slope bracket end still oscillates too fast")
    # 零点数が j と j-1 の境目まで二分し、最後は w(ℓ) の符号変化で詰める
    while not (lo_zeros == j and hi_zeros == j - 1) and hi - lo > 1e-12 * sigma_max:
        mid = 0.5 * (lo + hi)
        zeros = zeros_at(mid)
        if zeros >= j:
            lo, lo_zeros = mid, zeros
        else:
            hi, hi_zeros = mid, zeros

    def endpoint(sigma):
        return _integrate(first_sign * sigma, lam, ell, m_const, b1, c2).y[0, -1]

    f_lo, f_hi = endpoint(lo), endpoint(hi)
    if f_lo == 0.0 or f_hi == 0.0:
        sigma = lo if f_lo == 0.0 else hi
    elif f_lo * f_hi < 0:
        eps = np.finfo(float).eps
        sigma = brentq(endpoint, lo, hi, xtol=eps * lo, rtol=4 * eps)
    else:
        raise BisectionFailure(f"w(ell) keeps its sign across the zero-count boundary "
                               f"(slopes {lo:.6g}, {hi:.6g})")
    return first_sign * sigma, _integrate(first_sign * sigma, lam, ell, m_const, b1, c2)


def shoot_LS2(lam: float, j: int, sign: str, ell: float = 0.5, m_const: float = 1.0,
              b1: float = 1.0, c2: float = 1.0, grid: Optional[Grid] = None) -> ShootingSolution:
    """
    w'' = -λ m w + b1 w_+^2 - c2 w_-^2, w(±ℓ) = 0 で零点 j-1 個の解。

    偶数 j では sign '+' は w'(0) > 0、奇数 j では左端に接するこぶが正を意味する。
    """
    if sign not in ("+", "-"):
        raise PreconditionError(f"sign must be '+' or '-', got {sign!r}")
    if j < 1 or ell <= 0 or m_const <= 0 or b1 <= 0 or c2 <= 0:
        raise PreconditionError("need j >= 1 and positive ell, m, b1, c2")
    lam_j = (j * np.pi / (2.0 * ell)) ** 2 / m_const
    if lam <= lam_j:
        raise NoSolutionInClass(f"lambda={lam:.6g} <= lambda_{j}={lam_j:.6g}")
    want = 1 if sign == "+" else -1

    def center_sign(sol) -> int:
        slope = sol.sol(0.0)[1]
        return int(np.sign(slope))

    if j % 2 == 1:
        slope, sol = _shoot_first_sign(want, lam, j, ell, m_const, b1, c2)
    else:
        slope, sol = _shoot_first_sign(1, lam, j, ell, m_const, b1, c2)
        if center_sign(sol) != want:
            slope, sol = _shoot_first_sign(-1, lam, j, ell, m_const, b1, c2)
            if center_sign(sol) != want:
                raise NoSolutionInClass(f"no j={j} solution with w'(0) sign {sign}")

    grid = grid or build_grid(-ell, ell, 511)
    w = sol.sol(grid.x)[0]
    amplitude = max(1.0, float(np.max(np.abs(w))))
    residual = abs(float(sol.y[0, -1]))
    if residual > SHOOT_ENDPOINT_RTOL * amplitude:
        raise BisectionFailure(f"endpoint residual {residual:.3e} too large")
    zeros = check_shot_zeros(sol, j, ell)
    derivative = sol.sol(0.0)[1]
    center = 0 if abs(derivative) < 1e-8 * abs(slope) else int(np.sign(derivative))
    logger.info(kv("shoot", lam=lam, j=j, sign=sign, slope=slope, zeros=zeros))
    dense = sol.sol
    return ShootingSolution(lam=lam, j=j, sign=sign, slope0=slope, zeros=zeros, sign_at_center=center,
                            x=grid.x, w=w, endpoint_residual=residual,
                            profile=lambda points: dense(np.asarray(points))[0])


# --- LS2：格子 Newton ------------------------------------------------------------

def grid_solve_LS2(lam: float, j: int, sign: str, grid: Grid, m: np.ndarray, b1: float, c2: float,
                   cfg: Optional[NewtonConfig] = None) -> np.ndarray:
    """格子上で LS2 を Newton 法で解く（λ_j 近傍の分岐振幅から λ まで連続）"""
    m = _check_weight(grid, m)
    pairs = eigen_weighted(grid, m, j)
    lam_j, phi = pairs[-1].value, pairs[-1].vector
    want = 1.0 if sign == "+" else -1.0

    def system(value):
        def residual(w):
            return -apply_laplacian(grid, w) + value * m * w - b1 * np.maximum(w, 0.0) ** 2 \
                + c2 * np.minimum(w, 0.0) ** 2

        def jacobian(w):
            return _tridiagonal(grid, value * m - 2.0 * b1 * np.maximum(w, 0.0)
                               + 2.0 * c2 * np.minimum(w, 0.0))

        return residual, jacobian

    def amplitude(value, direction):
        shape = direction * phi
        denominator = b1 * weighted_integral(grid, np.maximum(shape, 0.0) ** 3) + \
            c2 * weighted_integral(grid, np.maximum(-shape, 0.0) ** 3)
        return (value - lam_j) * weighted_integral(grid, m * phi ** 2) / denominator

    def solve_from(direction):
        if lam <= lam_j:
            residual, jacobian = system(lam)
            return _newton(grid, residual, jacobian, 1e-3 * direction * phi, cfg)
        start = min(lam, lam_j * 1.01)
        w = amplitude(start, direction) * direction * phi
        count = max(1, int(np.ceil(40 * np.log(lam / start))))
        for value in np.geomspace(start, lam, count + 1):
            residual, jacobian = system(value)
            w = _newton(grid, residual, jacobian, w, cfg)
        return w

    def matches(w):
        found = center_slope_sign(w) if j % 2 == 0 else first_hump_sign(w)
        return found * want > 0

    for direction in (want, -want):
        w = solve_from(direction)
        if np.max(np.abs(w)) <= 1e-8:
            raise NoSolutionInClass(f"grid solve collapsed to the trivial solution at lambda={lam:.6g}")
        if matches(w):
            return w
    raise NoSolutionInClass(f"no grid solution with j={j}, sign {sign}")


class LimitSolver:
    """極限問題ソルバー（ζ0 をキャッシュして再利用する）"""

    def __init__(self, grid: Grid, m: np.ndarray, cfg: Optional[NewtonConfig] = None):
        self.grid = grid
        self.m = _check_weight(grid, m)
        self.cfg = cfg
        self._cache: Dict = {}

    @property
    def zeta0(self) -> np.ndarray:
        if "zeta0" not in self._cache:
            self._cache["zeta0"] = solve_sublinear(self.grid, self.m).values
        return self._cache["zeta0"]

    def Z0(self, lam: float) -> LimitField:
        return solve_Z0(lam, self.grid, self.m, zeta0=self.zeta0, cfg=self.cfg)

    def U(self, lam: float) -> LimitField:
        return limit_U(lam, self.grid, self.m, zeta0=self.zeta0, cfg=self.cfg)

    def Psi(self) -> LimitField:
        return LimitField(kind=LimitKind.PSI, param=0.0, values=np.sqrt(self.zeta0))

    def theta(self, lam: float) -> LimitField:
        return solve_logistic(lam, self.grid, self.m, self.cfg)

    def Zj(self, j: int, s: float) -> LimitField:
        return solve_Zj(j, s, self.grid, self.m, self.cfg, cache=self._cache)

    def profiles(self, lam: float) -> List[LimitField]:
        """λ における全極限プロファイル（存在しないものは省く）"""
        fields = [LimitField(kind=LimitKind.ZETA0, param=0.0, values=self.zeta0), self.Psi()]
        for factory in (self.Z0, self.U, self.theta):
            try:
                fields.append(factory(lam))
            except NoPositiveSolution as exc:
                logger.info(kv("limit skipped", lam=lam, reason=str(exc)))
        return fields
