"""
SKT Persistence
SKT 連続体解析 - 枝・プロファイル・マニフェストの入出力

- 枝：CSV（要約、17 桁固定）+ JSON サイドカー（全節点状態、最短往復表現）
- プロファイル：CSV（x と任意の列）
- マニフェスト：設定の sha256、バージョン、UTC 時刻、argv
先頭行のマジック + semver が一致しなければ SchemaMismatch。
"""

import hashlib
import json
import os
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

try:
    from .skt_types import (BifurcationKind, BifurcationRecord, Branch, BranchPoint, ContinuationMode,
                            Grid, ModelParams, StateUV, StateWZ, SweepReport)
    from .skt_errors import SchemaMismatch
    from .skt_logging import get_logger, kv
except ImportError:
    import sys
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from skt_types import (BifurcationKind, BifurcationRecord, Branch, BranchPoint, ContinuationMode,
                           Grid, ModelParams, StateUV, StateWZ, SweepReport)
    from skt_errors import SchemaMismatch
    from skt_logging import get_logger, kv

logger = get_logger(__name__)

SCHEMA_VERSION = "1.0.0"
BRANCH_CSV_MAGIC = f"# skt-branch-csv {SCHEMA_VERSION}"
BRANCH_JSON_MAGIC = "skt-branch-json"
PROFILE_CSV_MAGIC = f"# skt-profile-csv {SCHEMA_VERSION}"
N_CSV_EIGS = 6
BRANCH_COLUMNS = (["index", "param", "l2_u", "l2_v", "sup_u", "sup_v"]
                  + [f"eig{k}" for k in range(1, N_CSV_EIGS + 1)] + ["det_sign", "flags"])


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def canonical_json_bytes(obj: Any) -> bytes:
    """キー順固定・インデント固定の JSON（同じ入力なら同じバイト列）"""
    text = json.dumps(obj, sort_keys=True, ensure_ascii=True, indent=1, separators=(",", ": "))
    return (text + "\n").encode("utf-8")


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _jsonable(value: Any) -> Any:
    """numpy 型や Enum を JSON に載る形へ"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if hasattr(value, "value") and not isinstance(value, (str, bytes)):
        return _jsonable(value.value)
    if value is None or isinstance(value, str):
        return value
    return str(value)


# --- 枝 -----------------------------------------------------------------------

def _point_to_dict(point: BranchPoint) -> Dict[str, Any]:
    eigs = np.asarray(point.eigs, dtype=complex)
    return {
        "param": float(point.param),
        "w": point.state.w.tolist(),
        "z": point.state.z.tolist(),
        "u": point.uv.u.tolist(),
        "v": point.uv.v.tolist(),
        "norms": [float(v) for v in point.norms],
        "tangent": None if point.tangent is None else np.asarray(point.tangent, dtype=float).tolist(),
        "eigs": [[float(e.real), float(e.imag)] for e in eigs],
        "det_sign": int(point.det_sign),
        "alpha": float(point.alpha),
        "residual": float(point.residual),
        "flags": list(point.flags),
        "info": _jsonable(point.info),
    }


def _point_from_dict(data: Dict[str, Any]) -> BranchPoint:
    eigs = np.array([complex(re, im) for re, im in data["eigs"]], dtype=complex)
    tangent = None if data["tangent"] is None else np.array(data["tangent"], dtype=float)
    return BranchPoint(
        param=float(data["param"]),
        state=StateWZ(w=np.array(data["w"], dtype=float), z=np.array(data["z"], dtype=float)),
        uv=StateUV(u=np.array(data["u"], dtype=float), v=np.array(data["v"], dtype=float)),
        norms=tuple(float(v) for v in data["norms"]),
        tangent=tangent, eigs=eigs, det_sign=int(data["det_sign"]), alpha=float(data["alpha"]),
        residual=float(data["residual"]), flags=list(data["flags"]), info=dict(data["info"]),
    )


def branch_to_dict(branch: Branch) -> Dict[str, Any]:
    params = branch.params.as_dict()
    return {
        "schema": BRANCH_JSON_MAGIC,
        "version": SCHEMA_VERSION,
        "id": branch.id,
        "mode": branch.mode.value,
        "grid": {"a": branch.grid.a, "b": branch.grid.b, "n": branch.grid.n},
        "params": params,
        "parent": None if branch.parent is None else [branch.parent[0], float(branch.parent[1])],
        "meta": _jsonable(branch.meta),
        "points": [_point_to_dict(p) for p in branch.points],
        "bifurcations": [
            {
                "param_at": float(r.param_at),
                "kernel": np.asarray(r.kernel, dtype=float).tolist(),
                "kind": r.kind.value,
                "localization_width": float(r.localization_width),
                "index": int(r.index),
                "crossings": int(r.crossings),
                "point": _point_to_dict(r.point),
            }
            for r in branch.bifurcations
        ],
    }


def branch_from_dict(data: Dict[str, Any]) -> Branch:
    if data.get("schema") != BRANCH_JSON_MAGIC:
        raise SchemaMismatch(f"not a branch document (schema={data.get('schema')!r})")
    if str(data.get("version", "")).split(".")[0] != SCHEMA_VERSION.split(".")[0]:
        raise SchemaMismatch(f"unsupported branch schema version {data.get('version')!r}")
    try:
        grid = Grid(float(data["grid"]["a"]), float(data["grid"]["b"]), int(data["grid"]["n"]))
        p = data["params"]
        params = ModelParams(alpha=float(p["alpha"]), b1=float(p["b1"]), b2=float(p["b2"]),
                             c1=float(p["c1"]), c2=float(p["c2"]), m=np.array(p["m"], dtype=float),
                             lam=float(p["lam"]))
        points = [_point_from_dict(item) for item in data["points"]]
        records = [
            BifurcationRecord(param_at=float(r["param_at"]), kernel=np.array(r["kernel"], dtype=float),
                              kind=BifurcationKind(r["kind"]),
                              localization_width=float(r["localization_width"]),
                              point=_point_from_dict(r["point"]), index=int(r["index"]),
                              crossings=int(r["crossings"]))
            for r in data["bifurcations"]
        ]
        parent = None if data["parent"] is None else (str(data["parent"][0]), float(data["parent"][1]))
        return Branch(id=str(data["id"]), mode=ContinuationMode(data["mode"]), params=params, grid=grid,
                      parent=parent, points=points, bifurcations=records, meta=dict(data["meta"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"malformed branch document: {exc}") from exc


def branch_csv_lines(branch: Branch) -> List[str]:
    lines = [BRANCH_CSV_MAGIC, ",".join(BRANCH_COLUMNS)]
    for index, point in enumerate(branch.points):
        eigs = np.asarray(point.eigs, dtype=complex)
        real = [_fmt(e.real) for e in eigs[:N_CSV_EIGS]]
        real += ["nan"] * (N_CSV_EIGS - len(real))
        row = [str(index), _fmt(point.param)] + [_fmt(v) for v in point.norms] + real
        row += [str(int(point.det_sign)), ";".join(point.flags)]
        lines.append(",".join(row))
    return lines


def write_branch(branch: Branch, directory: str) -> Tuple[str, str]:
    """<id>.csv と <id>.json を書き出し、両パスを返す"""
    os.makedirs(directory, exist_ok=True)
    csv_path = os.path.join(directory, f"{branch.id}.csv")
    json_path = os.path.join(directory, f"{branch.id}.json")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(branch_csv_lines(branch)) + "\n")
    with open(json_path, "wb") as handle:
        handle.write(canonical_json_bytes(branch_to_dict(branch)))
    logger.info(kv("branch written", id=branch.id, points=len(branch.points), path=json_path))
    return csv_path, json_path


def _check_csv(path: str, magic: str) -> List[str]:
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or lines[0].strip() != magic:
        raise SchemaMismatch(f"{path}: expected header {magic!r}")
    if len(lines) < 2:
        raise SchemaMismatch(f"{path}: missing column header")
    return lines


def read_branch_csv(path: str) -> List[Dict[str, Any]]:
    """要約 CSV の各行を辞書で返す"""
    lines = _check_csv(path, BRANCH_CSV_MAGIC)
    if lines[1].split(",") != BRANCH_COLUMNS:
        raise SchemaMismatch(f"{path}: unexpected columns")
    rows = []
    for number, line in enumerate(lines[2:], start=3):
        cells = line.split(",")
        if len(cells) != len(BRANCH_COLUMNS):
            raise SchemaMismatch(f"{path}: line {number} has {len(cells)} cells")
        row = {"index": int(cells[0]), "det_sign": int(cells[-2]),
               "flags": [f for f in cells[-1].split(";") if f]}
        for name, cell in zip(BRANCH_COLUMNS[1:-2], cells[1:-2]):
            row[name] = float(cell)
        rows.append(row)
    return rows


def read_branch(path: str) -> Branch:
    """JSON サイドカー（または隣の CSV から辿る）から Branch を復元"""
    root, ext = os.path.splitext(path)
    if ext == ".csv":
        rows = read_branch_csv(path)
        path = root + ".json"
    else:
        rows = None
    try:
        with open(path, "rb") as handle:
            data = json.loads(handle.read().decode("utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaMismatch(f"{path}: cannot read branch document: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaMismatch(f"{path}: branch document must be an object")
    branch = branch_from_dict(data)
    if rows is not None and len(rows) != len(branch.points):
        raise SchemaMismatch(f"{path}: CSV and JSON disagree on the number of points")
    return branch


def read_branches(directory: str) -> List[Branch]:
    """ディレクトリ内の全ての枝（ファイル名順）"""
    names = sorted(f for f in os.listdir(directory) if f.endswith(".json") and f != "manifest.json")
    return [read_branch(os.path.join(directory, name)) for name in names]


# --- プロファイル ---------------------------------------------------------------

def write_profile(path: str, x: np.ndarray, columns: Dict[str, np.ndarray]) -> str:
    """x と列（u, v や Z0, U など）を CSV に書く"""
    x = np.asarray(x, dtype=float)
    names = list(columns)
    values = [np.asarray(columns[name], dtype=float) for name in names]
    if any(v.shape != x.shape for v in values):
        raise ValueError("profile columns must match x")
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    lines = [PROFILE_CSV_MAGIC, ",".join(["x"] + names)]
    for i in range(x.size):
        lines.append(",".join([_fmt(x[i])] + [_fmt(v[i]) for v in values]))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
    return path


def read_profile(path: str) -> Dict[str, np.ndarray]:
    lines = _check_csv(path, PROFILE_CSV_MAGIC)
    names = lines[1].split(",")
    data = []
    for number, line in enumerate(lines[2:], start=3):
        cells = line.split(",")
        if len(cells) != len(names):
            raise SchemaMismatch(f"{path}: line {number} has {len(cells)} cells")
        data.append([float(c) for c in cells])
    table = np.array(data, dtype=float).reshape(-1, len(names))
    return {name: table[:, k].copy() for k, name in enumerate(names)}


# --- マニフェスト -----------------------------------------------------------------

def utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def write_manifest(directory: str, config_text: str, subcommand: str, argv: Sequence[str],
                   version: str, started: str, finished: Optional[str] = None,
                   outputs: Optional[List[str]] = None, status: str = "ok") -> str:
    """実行記録。データファイルとは別に置き、決定性の対象外"""
    os.makedirs(directory, exist_ok=True)
    manifest = {
        "config_sha256": sha256_bytes(config_text.encode("utf-8")),
        "version": version,
        "subcommand": subcommand,
        "argv": list(argv),
        "started_utc": started,
        "finished_utc": finished or utc_now(),
        "status": status,
        "outputs": sorted(os.path.relpath(p, directory) for p in (outputs or [])),
    }
    path = os.path.join(directory, "manifest.json")
    with open(path, "wb") as handle:
        handle.write(canonical_json_bytes(manifest))
    return path


# --- α 掃引 ------------------------------------------------------------------------

def sweep_report_to_dict(report: SweepReport) -> Dict[str, Any]:
    return {
        "schema": "skt-sweep-json",
        "version": SCHEMA_VERSION,
        "lambda": float(report.lam),
        "alphas": [float(a) for a in report.alphas],
        "metrics": _jsonable(report.metrics),
        "verdict": report.verdict.value,
        "fitted_rate": float(report.fitted_rate),
        "selector": _jsonable(report.selector),
        "notes": list(report.notes),
    }


def write_sweep_report(report: SweepReport, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(canonical_json_bytes(sweep_report_to_dict(report)))
    return path
