"""
SKT Model Core - テスト
(u, v) <-> (w, z) 変換、残差の恒等式、Jacobian の差分チェック
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skt_core_engine.skt_types import Grid, ModelParams, Scaling, StateUV, StateWZ
from skt_core_engine.skt_errors import NegativeDiscriminant, PreconditionError
from skt_core_engine.skt_model import (SKTSystem, apriori_bounds, check_apriori, jacobian_limit_WZ,
                                       jacobian_scaled_WZ, jacobian_wz, residual_d,
                                       residual_limit_WZ, residual_scaled_WZ, residual_uv,
                                       residual_wz, uv_from_wz, wz_from_uv)
from skt_core_engine.skt_newton import fd_jacobian_check
from skt_core_engine.skt_limits import solve_logistic

nonnegative = st.floats(min_value=0.0, max_value=50.0, allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(u=st.lists(nonnegative, min_size=1, max_size=8), v=st.lists(nonnegative, min_size=1, max_size=8),
       eps=st.floats(min_value=1e-4, max_value=10.0))
def test_transform_inverts_on_nonnegative_states(u, v, eps):
    """u, v >= 0 なら逆変換は一意で元に戻る"""
    size = min(len(u), len(v))
    uv = StateUV(u=np.array(u[:size]), v=np.array(v[:size]))
    back = uv_from_wz(wz_from_uv(uv, eps), eps)
    scale = 1.0 + eps + max(np.max(uv.u), np.max(uv.v))
    np.testing.assert_allclose(back.u, uv.u, atol=1e-12 * scale)
    np.testing.assert_allclose(back.v, uv.v, atol=1e-12 * scale)


def test_negative_discriminant():
    with pytest.raises(NegativeDiscriminant) as info:
        uv_from_wz(StateWZ(w=np.zeros(3), z=np.array([0.0, -1.0, 0.0])), 0.05)
    assert info.value.node == 1
    assert info.value.value < 0


def test_residual_identity(lambda_params31, grid31, random_state):
    """r1_wz = r1_uv - r2_uv、r2_wz = ε r1_uv"""
    p = lambda_params31.with_lambda(17.0)
    u, v = random_state
    uv = StateUV(u, v)
    r1, r2 = residual_uv(p, uv, grid31)
    r = residual_wz(p, wz_from_uv(uv, p.eps), grid31)
    scale = 1.0 / grid31.h ** 2
    np.testing.assert_allclose(r[0::2], r1 - r2, atol=1e-11 * scale)
    np.testing.assert_allclose(r[1::2], p.eps * r1, atol=1e-11 * scale)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1), lam=st.floats(min_value=1.0, max_value=100.0),
       amplitude=st.floats(min_value=0.01, max_value=3.0))
def test_residual_identity_on_random_states(seed, lam, amplitude):
    """r1_wz = r1_uv - r2_uv、r2_wz = ε r1_uv は任意の正値状態で丸め誤差の範囲で成り立つ"""
    grid = Grid(-0.5, 0.5, 31)
    p = ModelParams.on_grid(grid, 20.0, b1=3.0, b2=2.0, c1=2.0, c2=1.0, m=1.0, lam=lam)
    rng = np.random.default_rng(seed)
    bump = np.cos(np.pi * grid.x)
    uv = StateUV(amplitude * bump * rng.uniform(0.1, 1.0, grid.n),
                 amplitude * bump * rng.uniform(0.1, 1.0, grid.n))
    r1, r2 = residual_uv(p, uv, grid)
    r = residual_wz(p, wz_from_uv(uv, p.eps), grid)
    scale = max(1.0, p.alpha * amplitude ** 2) / grid.h ** 2
    np.testing.assert_allclose(r[0::2], r1 - r2, atol=1e-11 * scale)
    np.testing.assert_allclose(r[1::2], p.eps * r1, atol=1e-11 * scale)


def test_diffusion_form_identity(lambda_params31, grid31, random_state):
    """(d, u/λ, v/λ) の残差は (λ, u, v) の残差の 1/λ^2 倍"""
    lam = 23.0
    p = lambda_params31.with_lambda(lam)
    u, v = random_state
    r1, r2 = residual_uv(p, StateUV(u, v), grid31)
    d1, d2 = residual_d(p, 1.0 / lam, StateUV(u / lam, v / lam), grid31)
    np.testing.assert_allclose(d1, r1 / lam ** 2, atol=1e-12 / grid31.h ** 2)
    np.testing.assert_allclose(d2, r2 / lam ** 2, atol=1e-12 / grid31.h ** 2)


def test_semitrivial_logistic_state(grid31):
    """u = θ_λ/b1, v ≡ 0 は (u, v) 形式の解"""
    p = ModelParams.on_grid(grid31, 5.0, b1=2.0, b2=1.0, c1=1.0, c2=1.0, m=1.0, lam=20.0)
    theta = solve_logistic(20.0, grid31, p.m).values
    r1, r2 = residual_uv(p, StateUV(theta / p.b1, np.zeros(grid31.n)), grid31)
    assert np.max(np.abs(r1)) < 1e-8
    assert np.all(r2 == 0.0)


def test_jacobian_matches_finite_differences(lambda_params31, grid31, random_state):
    p = lambda_params31.with_lambda(15.0)
    u, v = random_state
    x = wz_from_uv(StateUV(u, v), p.eps).to_vector()

    def residual(y):
        return residual_wz(p, StateWZ.from_vector(y), grid31)

    def jacobian(y):
        return jacobian_wz(p, StateWZ.from_vector(y), grid31)

    error = fd_jacobian_check(residual, jacobian, x)
    print(f"max relative FD error = {error:.2e}")
    assert error < 1e-5


def test_limit_jacobian_matches_finite_differences(lambda_params31, grid31, random_state):
    p = lambda_params31.with_lambda(30.0)
    U, V = random_state
    x = StateWZ(w=U - V, z=(1.0 + V) * U).to_vector()

    def residual(y):
        return residual_limit_WZ(p, StateWZ.from_vector(y), grid31)

    def jacobian(y):
        return jacobian_limit_WZ(p, StateWZ.from_vector(y), grid31)

    assert fd_jacobian_check(residual, jacobian, x) < 1e-5


def test_scaled_system_matches_scaled_residual(lambda_params31, grid31, random_state):
    """coexistence スケールの SKTSystem は (W, Z) = (αw, α^2 z) の方程式そのもの"""
    lam = 12.0
    p = lambda_params31.with_lambda(lam)
    u, v = random_state
    state = wz_from_uv(StateUV(u / p.alpha, v / p.alpha), p.eps)
    system = SKTSystem(lambda_params31, grid31, Scaling.COEXISTENCE)
    x = system.pack(state)
    scaled_state = StateWZ.from_vector(x)
    scale = 1.0 / grid31.h ** 2
    np.testing.assert_allclose(system.residual(x, lam), residual_scaled_WZ(p, scaled_state, grid31),
                               atol=1e-10 * scale)
    np.testing.assert_allclose(system.jacobian(x, lam).to_dense(),
                               jacobian_scaled_WZ(p, scaled_state, grid31).to_dense(),
                               atol=1e-10 * scale)
    # U = αu は ε = 1 の逆変換で得られる
    np.testing.assert_allclose(uv_from_wz(scaled_state, 1.0).u, u, atol=1e-10)


def test_zero_eps_is_the_limit_system(lambda_params31, grid31, random_state):
    p = lambda_params31.with_lambda(40.0)
    U, V = random_state
    state = StateWZ(w=U - V, z=(1.0 + V) * U)
    np.testing.assert_array_equal(residual_scaled_WZ(p, state, grid31, eps=0.0),
                                  residual_limit_WZ(p, state, grid31))
    with pytest.raises(PreconditionError):
        residual_scaled_WZ(p, state, grid31, eps=-1.0)


def test_system_scalings_roundtrip(lambda_params31, grid31, random_state):
    u, v = random_state
    state = wz_from_uv(StateUV(u, v), lambda_params31.eps)
    for scaling in Scaling:
        system = SKTSystem(lambda_params31, grid31, scaling)
        x = system.pack(state)
        assert system.admissible(x)
        back = system.uv(x)
        np.testing.assert_allclose(back.u, u, atol=1e-10)
        np.testing.assert_allclose(back.v, v, atol=1e-10)


def test_system_needs_positive_alpha(grid31):
    p = ModelParams.on_grid(grid31, 0.0, b1=1.0, b2=1.0, c1=1.0, c2=1.0)
    with pytest.raises(PreconditionError):
        SKTSystem(p, grid31)


def test_params_validation(grid31):
    with pytest.raises(PreconditionError):
        ModelParams.on_grid(grid31, 1.0, b1=0.0, b2=1.0, c1=1.0, c2=1.0)
    with pytest.raises(PreconditionError):
        ModelParams.on_grid(grid31, 1.0, b1=1.0, b2=1.0, c1=1.0, c2=1.0, m=0.0)
    p = ModelParams.on_grid(grid31, 4.0, b1=1.0, b2=1.0, c1=1.0, c2=1.0, m=lambda x: 1.0 + x)
    assert p.eps == pytest.approx(0.25)
    np.testing.assert_allclose(p.m, 1.0 + grid31.x)


def test_apriori_bounds(lambda_params31, grid31):
    p = lambda_params31.with_lambda(20.0)
    l2_u, l2_v, M1, M2 = apriori_bounds(p, grid31)
    assert l2_u == pytest.approx(20.0 * np.sqrt(grid31.h * grid31.n) / 3.0)
    assert l2_v == pytest.approx(20.0 * np.sqrt(grid31.h * grid31.n) / 1.0)
    assert M1 > 0 and M2 > 0
    small = StateUV(np.full(grid31.n, 1e-3), np.full(grid31.n, 1e-3))
    assert check_apriori(p, small, grid31) == []
    huge = StateUV(np.full(grid31.n, 1e3), np.zeros(grid31.n))
    violations = check_apriori(p, huge, grid31)
    assert any(v.startswith("l2_u") for v in violations)
