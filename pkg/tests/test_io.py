"""
SKT Persistence - テスト
"""

import json
import os

import numpy as np
import pytest

from skt_core_engine.skt_types import SweepReport, Verdict
from skt_core_engine.skt_errors import SchemaMismatch
from skt_core_engine.skt_io import (BRANCH_COLUMNS, canonical_json_bytes, read_branch, read_branch_csv,
                                    read_branches, read_profile, sha256_bytes, write_branch,
                                    write_manifest, write_profile, write_sweep_report)


def test_branch_round_trip(short_primary_branch, tmp_path):
    _, branch = short_primary_branch
    csv_path, json_path = write_branch(branch, str(tmp_path))
    assert os.path.basename(csv_path) == f"{branch.id}.csv"
    loaded = read_branch(json_path)
    assert loaded.id == branch.id
    assert loaded.mode is branch.mode
    assert loaded.grid == branch.grid
    np.testing.assert_array_equal(loaded.params_array(), branch.params_array())
    for old, new in zip(branch.points, loaded.points):
        np.testing.assert_array_equal(new.uv.u, old.uv.u)
        np.testing.assert_array_equal(new.state.z, old.state.z)
        assert new.det_sign == old.det_sign
    # CSV から辿っても同じ
    again = read_branch(csv_path)
    assert len(again) == len(branch)


def test_branch_csv_rows(short_primary_branch, tmp_path):
    _, branch = short_primary_branch
    csv_path, _ = write_branch(branch, str(tmp_path))
    with open(csv_path, encoding="utf-8") as handle:
        header = handle.read().splitlines()[1]
    assert header.split(",") == BRANCH_COLUMNS
    rows = read_branch_csv(csv_path)
    assert [row["index"] for row in rows] == list(range(len(branch)))
    assert rows[0]["param"] == branch.points[0].param
    assert rows[0]["sup_u"] == branch.points[0].norms[2]


def test_branch_files_are_deterministic(short_primary_branch, tmp_path):
    _, branch = short_primary_branch
    _, first = write_branch(branch, str(tmp_path / "a"))
    _, second = write_branch(branch, str(tmp_path / "b"))
    with open(first, "rb") as f1, open(second, "rb") as f2:
        assert f1.read() == f2.read()


def test_truncated_json(short_primary_branch, tmp_path):
    _, branch = short_primary_branch
    _, json_path = write_branch(branch, str(tmp_path))
    with open(json_path, "rb") as handle:
        data = handle.read()
    with open(json_path, "wb") as handle:
        handle.write(data[: len(data) // 2])
    with pytest.raises(SchemaMismatch):
        read_branch(json_path)


def test_wrong_schema(tmp_path):
    path = tmp_path / "other.json"
    path.write_text(json.dumps({"schema": "something-else"}))
    with pytest.raises(SchemaMismatch):
        read_branch(str(path))
    csv = tmp_path / "other.csv"
    csv.write_text("# skt-branch-csv 9.9.9\nindex\n")
    with pytest.raises(SchemaMismatch):
        read_branch_csv(str(csv))


def test_read_branches_skips_manifest(short_primary_branch, tmp_path):
    _, branch = short_primary_branch
    write_branch(branch, str(tmp_path))
    write_manifest(str(tmp_path), "", "trace", ["trace"], "1.0.0", "2026-01-01T00:00:00Z")
    branches = read_branches(str(tmp_path))
    assert [b.id for b in branches] == [branch.id]


def test_profile_round_trip(tmp_path):
    x = np.linspace(-0.5, 0.5, 9)
    path = write_profile(str(tmp_path / "p" / "profile.csv"), x, {"u": x ** 2, "v": np.exp(x)})
    table = read_profile(path)
    assert list(table) == ["x", "u", "v"]
    np.testing.assert_array_equal(table["v"], np.exp(x))
    with pytest.raises(ValueError):
        write_profile(str(tmp_path / "bad.csv"), x, {"u": x[:3]})


def test_manifest(tmp_path):
    text = "[domain]\nn = 31\n"
    out = str(tmp_path)
    data_file = os.path.join(out, "eigs", "eigenvalues.csv")
    path = write_manifest(out, text, "eigs", ["eigs", "--k", "3"], "1.0.0",
                          "2026-01-01T00:00:00Z", outputs=[data_file])
    manifest = json.loads(open(path, encoding="utf-8").read())
    assert manifest["config_sha256"] == sha256_bytes(text.encode("utf-8"))
    assert manifest["subcommand"] == "eigs"
    assert manifest["outputs"] == [os.path.join("eigs", "eigenvalues.csv")]
    assert manifest["status"] == "ok"


def test_canonical_json():
    first = canonical_json_bytes({"b": 1.5, "a": [1, 2]})
    second = canonical_json_bytes({"a": [1, 2], "b": 1.5})
    assert first == second
    assert first.endswith(b"\n")


def test_sweep_report(tmp_path):
    report = SweepReport(lam=20.0, alphas=[20.0, 40.0], verdict=Verdict.SMALL_COEXISTENCE,
                         metrics=[{"alpha": 20.0, "overlap": np.float64(0.9)}], fitted_rate=1.0,
                         selector={"kind": "coexistence"}, notes=["ok"])
    path = write_sweep_report(report, str(tmp_path / "sweep" / "report.json"))
    data = json.loads(open(path, encoding="utf-8").read())
    assert data["verdict"] == "SmallCoexistence"
    assert data["metrics"][0]["overlap"] == 0.9
    assert data["alphas"] == [20.0, 40.0]
