"""
SKT Limiting Systems - テスト
Z0, U, ζ0/Ψ, θ_λ, Z_j(s), LS2（射撃法と格子 Newton）
"""

import dataclasses

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from skt_core_engine import skt_limits
from skt_core_engine.skt_types import Grid, LimitKind
from skt_core_engine.skt_errors import (BisectionFailure, ConvergenceFailure, NoPositiveSolution,
                                        NoSolutionInClass, PreconditionError)
from skt_core_engine.skt_limits import (LimitSolver, check_shot_zeros, grid_solve_LS2, limit_U,
                                        shoot_LS2, solve_logistic, solve_sublinear, solve_Z0,
                                        solve_Zj)
from skt_core_engine.skt_numerics import apply_laplacian, eigen_weighted
from skt_core_engine.skt_territory import center_slope_sign, first_hump_sign, is_reflection_of


@pytest.fixture
def ones63(grid63):
    return np.ones(grid63.n)


def test_sublinear_limit(grid63, ones63):
    """-Δζ = √ζ、Ψ = √ζ0"""
    zeta = solve_sublinear(grid63, ones63)
    assert zeta.kind is LimitKind.ZETA0
    assert np.all(zeta.values > 0)
    residual = apply_laplacian(grid63, zeta.values) - np.sqrt(zeta.values)
    assert np.max(np.abs(residual)) < 1e-8
    psi = solve_sublinear(grid63, ones63, kind=LimitKind.PSI)
    np.testing.assert_allclose(psi.values, np.sqrt(zeta.values), rtol=1e-9)
    # 対称区間・定数 m なら解も対称
    np.testing.assert_allclose(zeta.values, zeta.values[::-1], rtol=1e-8)


def test_Z0_and_U(grid63, ones63):
    lam = 2.0 * np.pi ** 2
    Z = solve_Z0(lam, grid63, ones63)
    assert Z.kind is LimitKind.Z0
    assert np.all(Z.values > 0)
    residual = apply_laplacian(grid63, Z.values) - 0.5 * lam * (np.sqrt(4.0 * Z.values + 1.0) - 1.0)
    assert np.max(np.abs(residual)) < 1e-8 * max(1.0, np.max(Z.values))
    U = limit_U(lam, grid63, ones63)
    # (1 + U) U = Z0
    np.testing.assert_allclose((1.0 + U.values) * U.values, Z.values, rtol=1e-10)
    print(f"Z0(2π^2)(0) = {np.max(Z.values):.8f}, U(0) = {np.max(U.values):.8f}")


def test_Z0_below_principal_eigenvalue(grid63, ones63):
    with pytest.raises(NoPositiveSolution):
        solve_Z0(5.0, grid63, ones63)


def test_Z0_from_small_start(grid63, ones63):
    """0.1 Φ1 から出発しても同じ Z0 に収束する"""
    lam = 2.0 * np.pi ** 2
    phi = eigen_weighted(grid63, ones63, 1)[0].vector
    reference = solve_Z0(lam, grid63, ones63).values
    other = solve_Z0(lam, grid63, ones63, initial=0.1 * phi).values
    np.testing.assert_allclose(other, reference, rtol=1e-7, atol=1e-9 * np.max(reference))


def test_Z0_grows_with_lambda(grid63, ones63):
    solver = LimitSolver(grid63, ones63)
    low = solver.Z0(15.0).values
    high = solver.Z0(30.0).values
    assert np.all(high > low)


def test_logistic(grid63, ones63):
    lam = 20.0
    theta = solve_logistic(lam, grid63, ones63)
    assert theta.kind is LimitKind.THETA
    assert np.all(theta.values > 0)
    assert np.max(theta.values) < lam
    residual = -apply_laplacian(grid63, theta.values) + theta.values * (lam - theta.values)
    assert np.max(np.abs(residual)) < 1e-8
    with pytest.raises(NoPositiveSolution):
        solve_logistic(5.0, grid63, ones63)


def test_Zj_sandwich(grid63, ones63):
    solver = LimitSolver(grid63, ones63)
    for s in (0.05, -0.05):
        field = solver.Zj(2, s)
        assert field.kind is LimitKind.ZJ
        assert field.info["sandwich"]
        assert np.all(field.values > 0)
    lam2 = eigen_weighted(grid63, ones63, 2)[1].value
    assert field.info["lambda_j"] == pytest.approx(lam2)


def test_Zj_at_zero_is_Z0(grid63, ones63):
    solver = LimitSolver(grid63, ones63)
    lam2 = eigen_weighted(grid63, ones63, 2)[1].value
    np.testing.assert_allclose(solver.Zj(2, 0.0).values, solver.Z0(lam2).values, rtol=1e-9)


def test_Zj_preconditions(grid63, ones63):
    with pytest.raises(PreconditionError):
        solve_Zj(1, 0.1, grid63, ones63)
    with pytest.raises(PreconditionError):
        solve_Zj(2, 1.0, grid63, ones63)


def test_profiles_skip_missing(grid63, ones63):
    solver = LimitSolver(grid63, ones63)
    kinds = [field.kind for field in solver.profiles(5.0)]
    assert kinds == [LimitKind.ZETA0, LimitKind.PSI]
    kinds = [field.kind for field in solver.profiles(20.0)]
    assert kinds == [LimitKind.ZETA0, LimitKind.PSI, LimitKind.Z0, LimitKind.U, LimitKind.THETA]


def test_shoot_LS2_two_humps():
    """j = 2, λ = 43.0673：零点 1 個、w'(0) の符号で枝を選ぶ"""
    grid = Grid(-0.5, 0.5, 255)
    plus = shoot_LS2(43.0673, 2, "+", grid=grid)
    minus = shoot_LS2(43.0673, 2, "-", grid=grid)
    assert plus.zeros == 1 and minus.zeros == 1
    assert plus.sign_at_center == 1 and minus.sign_at_center == -1
    assert plus.endpoint_residual < 1e-8 * max(1.0, np.max(np.abs(plus.w)))
    assert center_slope_sign(plus.w) == 1
    # b1 = c2 なら方程式は w -> -w で不変
    np.testing.assert_allclose(minus.w, -plus.w, atol=1e-6 * np.max(np.abs(plus.w)))
    print(f"w'(-ℓ) = {plus.slope0:.10f}")


def test_shoot_LS2_odd_class_uses_first_hump():
    grid = Grid(-0.5, 0.5, 255)
    sol = shoot_LS2(100.0, 3, "-", grid=grid)
    assert sol.zeros == 2
    assert first_hump_sign(sol.w) == -1
    assert sol.slope0 < 0


def test_shoot_LS2_no_solution():
    """λ <= (jπ/(2ℓ))^2/m では解がない"""
    with pytest.raises(NoSolutionInClass):
        shoot_LS2((2.0 * np.pi) ** 2 - 0.1, 2, "+")
    with pytest.raises(PreconditionError):
        shoot_LS2(50.0, 2, "x")


def test_shooting_agrees_with_grid_newton():
    """射撃法と格子 Newton は O(h^2) の差で一致する"""
    grid = Grid(-0.5, 0.5, 255)
    m = np.ones(grid.n)
    shot = shoot_LS2(43.0673, 2, "+", grid=grid)
    w = grid_solve_LS2(43.0673, 2, "+", grid, m, 1.0, 1.0)
    scale = np.max(np.abs(shot.w))
    gap = np.max(np.abs(w - shot.w)) / scale
    print(f"relative sup gap at n=255: {gap:.2e}")
    assert gap < 1e-2
    assert center_slope_sign(w) == 1


@pytest.mark.slow
def test_shooting_agreement_improves_with_grid():
    gaps = []
    for n in (255, 511, 1023):
        grid = Grid(-0.5, 0.5, n)
        shot = shoot_LS2(43.0673, 2, "+", grid=grid)
        w = grid_solve_LS2(43.0673, 2, "+", grid, np.ones(n), 1.0, 1.0)
        gaps.append(np.max(np.abs(w - shot.w)))
    # h を半分にすると差は概ね 1/4
    assert gaps[1] < 0.5 * gaps[0]
    assert gaps[2] < 0.5 * gaps[1]


def _trajectory(rhs, y0):
    def crossing(_x, y):
        return y[0]

    return solve_ivp(rhs, (-0.5, 0.5), y0, rtol=1e-12, atol=1e-14, dense_output=True,
                     events=crossing)


def test_shot_zero_count_must_match_class():
    """sin(1.5π(x+ℓ)) は内部に単純零点を 1 個だけ持つ"""
    sol = _trajectory(lambda _x, y: [y[1], -(1.5 * np.pi) ** 2 * y[0]], [0.0, 1.0])
    assert check_shot_zeros(sol, 2, 0.5) == 1
    with pytest.raises(BisectionFailure):
        check_shot_zeros(sol, 3, 0.5)
    with pytest.raises(BisectionFailure):
        check_shot_zeros(sol, 1, 0.5)


def test_shot_rejects_degenerate_zero():
    """w = x^3 は x = 0 で符号を変えるが、w'(0) = 0 なので単純零点ではない"""
    sol = _trajectory(lambda x, y: [y[1], 6.0 * x], [-0.125, 0.75])
    with pytest.raises(BisectionFailure, match="degenerate"):
        check_shot_zeros(sol, 2, 0.5)


@pytest.mark.parametrize("j, sign", [(1, "+"), (2, "+"), (3, "-")])
def test_shoot_endpoint_residual(j, sign):
    sol = shoot_LS2(100.0, j, sign)
    assert sol.zeros == j - 1
    assert sol.endpoint_residual <= 1e-10 * max(1.0, np.max(np.abs(sol.w)))


def test_limit_U_reports_limit_residual(grid63, ones63):
    U = limit_U(2.0 * np.pi ** 2, grid63, ones63)
    assert U.info["residual"] <= U.info["tolerance"]
    assert U.info["tolerance"] < 1e-6


def test_limit_U_rejects_unconverged_Z0(grid63, ones63, monkeypatch):
    lam = 2.0 * np.pi ** 2
    exact = solve_Z0(lam, grid63, ones63)
    loose = dataclasses.replace(exact, values=exact.values * (1.0 + 1e-4 * np.cos(np.pi * grid63.x)))
    monkeypatch.setattr(skt_limits, "solve_Z0", lambda *args, **kwargs: loose)
    with pytest.raises(ConvergenceFailure):
        limit_U(lam, grid63, ones63)


def test_Z0_is_unique_from_five_starts(grid63, ones63):
    """どの許容な初期値から出発しても同じ Z0 に収束する"""
    lam = 2.0 * np.pi ** 2
    zeta0 = solve_sublinear(grid63, ones63).values
    phi = eigen_weighted(grid63, ones63, 1)[0].vector
    starts = [0.25 * lam ** 2 * zeta0, 4.0 * lam ** 2 * zeta0, 0.1 * phi, 50.0 * phi,
              np.full(grid63.n, 10.0)]
    reference = solve_Z0(lam, grid63, ones63).values
    for initial in starts:
        found = solve_Z0(lam, grid63, ones63, initial=initial).values
        np.testing.assert_allclose(found, reference, atol=1e-8 * np.max(reference))


def test_LS2_reflection_with_unequal_coefficients():
    """b1 != c2 でも j = 2 の 2 つの枝は w-(x) = w+(-x)"""
    grid = Grid(-0.5, 0.5, 255)
    plus = shoot_LS2(43.0673, 2, "+", b1=3.0, c2=1.0, grid=grid)
    minus = shoot_LS2(43.0673, 2, "-", b1=3.0, c2=1.0, grid=grid)
    assert is_reflection_of(minus.w, plus.w, grid, tol=1e-8)
    # 係数が違うので w -> -w の対称性はない
    assert np.max(plus.w) != pytest.approx(-np.min(plus.w), rel=1e-3)


@pytest.mark.slow
def test_large_lambda_asymptotics():
    """λ = 10^4 で Z0/λ^2 -> ζ0、U/λ -> Ψ（相対誤差 2% 以内）"""
    grid = Grid(-0.5, 0.5, 255)
    solver = LimitSolver(grid, np.ones(grid.n))
    lam = 1e4
    zeta0, psi = solver.zeta0, solver.Psi().values
    Z = solver.Z0(lam).values
    U = solver.U(lam).values
    assert np.max(np.abs(Z / lam ** 2 - zeta0)) / np.max(zeta0) < 0.02
    assert np.max(np.abs(U / lam - psi)) / np.max(psi) < 0.02


@pytest.mark.slow
@pytest.mark.parametrize("j", [2, 3])
def test_Zj_sandwich_small_s(j):
    grid = Grid(-0.5, 0.5, 127)
    solver = LimitSolver(grid, np.ones(grid.n))
    fields = {}
    for s in (0.01, -0.01, 0.05, -0.05, 0.1, -0.1):
        field = solver.Zj(j, s)
        assert field.info["sandwich"]
        assert np.all(field.values > 0)
        fields[s] = field.values
    if j == 2:
        # Φ2 は奇関数なので (s, x) -> (-s, -x) で不変
        for s in (0.01, 0.05, 0.1):
            assert is_reflection_of(fields[s], fields[-s], grid, tol=1e-8)


@pytest.mark.slow
def test_shooting_three_humps_unequal_coefficients():
    """j = 3, λ = 91.5836, b1 = 3, c2 = 1：射撃法と格子 Newton の差は O(h^2) で縮む"""
    lam = 91.5836
    gaps = []
    for n in (255, 511, 1023):
        grid = Grid(-0.5, 0.5, n)
        shot = shoot_LS2(lam, 3, "+", b1=3.0, c2=1.0, grid=grid)
        assert shot.zeros == 2
        assert first_hump_sign(shot.w) == 1
        w = grid_solve_LS2(lam, 3, "+", grid, np.ones(n), 3.0, 1.0)
        gaps.append(np.max(np.abs(w - shot.w)) / np.max(np.abs(shot.w)))
    print(f"relative gaps: {gaps}")
    assert gaps[1] < 0.5 * gaps[0]
    assert gaps[2] < 0.5 * gaps[1]
