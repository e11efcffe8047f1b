#!/usr/bin/env python3
"""
SKT Bifurcation Demo
SKT 連続体解析 - 分岐図・極限プロファイル・α 掃引のデモ

  python scripts/demo_bifurcation.py [--n 127] [--out out/demo]
"""

import argparse
import os
import sys

import numpy as np

# スクリプトディレクトリから実行時のパス修正
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from skt_core_engine import (SKTCoreEngine, BranchSelector, analyze_territory,  # noqa: E402
                             create_lambda_scenario_params, emit_svg, shoot_LS2, write_branch,
                             write_sweep_report)


def run_diagram(engine: SKTCoreEngine, window, out: str):
    """λ 分岐図（自明解・主枝・二次分岐枝）"""
    print("🌿 λ 分岐図の追跡")
    print("=" * 50)
    branches = engine.run_lambda_diagram(window, max_depth=1)
    for branch in branches:
        write_branch(branch, os.path.join(out, "branches"))
        params = branch.params_array()
        print(f"  {branch.id:>4}: {len(branch):4d} 点  λ ∈ [{params.min():.4g}, {params.max():.4g}]")
        for record in branch.bifurcations:
            print(f"        ↳ {record.kind.value} at λ = {record.param_at:.6g}")
    emit_svg("diagram", branches, os.path.join(out, "plots", "diagram.svg"))
    return branches


def run_limits(engine: SKTCoreEngine, lams):
    """極限プロファイルの要約"""
    print("\n📐 極限プロファイル")
    for lam in lams:
        summary = ", ".join(f"{f.kind.value}={np.max(f.values):.4g}" for f in engine.limits(lam))
        print(f"  λ = {lam:g}: {summary}")


def run_sweep(engine: SKTCoreEngine, primary, lam: float, alphas, out: str):
    """主枝上の解から α 掃引"""
    print(f"\n🔬 α 掃引 (λ = {lam:g})")
    report = engine.sweep(lam, alphas, primary, BranchSelector())
    for entry in report.metrics:
        print(f"  α = {entry['alpha']:>8g}: α|u|_inf = {entry.get('alpha_sup_u', float('nan')):.5g}, "
              f"overlap = {entry.get('overlap', float('nan')):.3g}")
    print(f"  判定: {report.verdict.value} (収束率 p ≈ {report.fitted_rate:.3g})")
    write_sweep_report(report, os.path.join(out, "sweeps", f"sweep_C_{lam:g}.json"))


def run_segregation(engine: SKTCoreEngine, lam: float):
    """完全分離極限の射撃解とすみ分けパターン"""
    print(f"\n⚔️  完全分離極限 (j = 2, λ = {lam:g})")
    for sign in ("+", "-"):
        sol = shoot_LS2(lam, 2, sign, grid=engine.grid)
        print(f"  {sign}: w'(-ℓ) = {sol.slope0:.8g}, 零点 {sol.zeros}, 端点残差 {sol.endpoint_residual:.1e}")
    for branch in engine.branches.values():
        if branch.id.startswith("S2") and len(branch) > 0:
            point = min(branch.points, key=lambda p: abs(p.param - lam))
            info = analyze_territory(point.uv, engine.grid)
            print(f"  {branch.id}: λ = {point.param:.5g} パターン {info.pattern}, 重なり {info.overlap:.3g}")


def main():
    parser = argparse.ArgumentParser(description="SKT continuation demo")
    parser.add_argument("--n", type=int, default=127, help="interior nodes")
    parser.add_argument("--out", default=os.path.join("out", "demo"))
    args = parser.parse_args()

    print("🚀 SKT Core Engine Demo")
    params, grid = create_lambda_scenario_params(n=args.n)
    engine = SKTCoreEngine(params, grid)
    print(f"  Ω = ({grid.a}, {grid.b}), n = {grid.n}, α = {params.alpha:g}")

    branches = run_diagram(engine, (9.5, 100.0), args.out)
    run_limits(engine, [20.0, 100.0])
    run_sweep(engine, branches[1], 20.0, [20.0, 50.0, 100.0, 500.0], args.out)
    run_segregation(engine, 43.0673)

    print(f"\n✅ 出力: {args.out}")


if __name__ == "__main__":
    main()
