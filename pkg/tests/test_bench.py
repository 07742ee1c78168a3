import json

import pandas as pd
import pytest

from conftest import generated
from bench import (AGGREGATE_COLUMNS, BENCH_FORMULATIONS, DESK_GRID, aggregate, grid_rows, load_runs,
                   read_manifest, run_manifest, run_row, store_results, write_aggregate, write_manifest)
from instance import save_instance
from lockmgr import ResultsLock, lock_path_for
from models import get_engine, sqlite_path_from_url
from settings import DEFAULTS

FAST = dict(DEFAULTS, time_limit=30.0)


def _row(**kw):
    row = {"instance": "", "formulation": "arc", "time_limit": "", "cutoff": "",
           "n": "", "k": "", "beta": "", "alpha": "", "gamma": "", "seed": ""}
    row.update({k: str(v) for k, v in kw.items()})
    return row


def test_desk_grid_rows():
    rows = grid_rows(repeats=1)
    cells = sum(1 for n in DESK_GRID["n"] for k in DESK_GRID["k"] if k < n) * len(DESK_GRID["beta"])
    assert len(rows) == cells * 3 * 3 * len(BENCH_FORMULATIONS)
    assert all(r["k"] < r["n"] for r in rows)
    assert len({(r["n"], r["k"], r["beta"], r["seed"]) for r in rows}) == cells


def test_manifest_round_trip(tmp_path):
    path = tmp_path / "grid" / "manifest.csv"
    rows = grid_rows(repeats=1)[:4]
    write_manifest(rows, str(path))
    back = read_manifest(str(path))
    assert len(back) == 4
    assert back[0]["formulation"] == rows[0]["formulation"]
    assert back[0]["n"] == str(rows[0]["n"]) and back[0]["instance"] == ""


def test_manifest_needs_formulation(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("instance,n\nx.txt,5\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_manifest(str(path))


def test_generated_row_runs():
    out = run_row(0, _row(n=6, k=2, beta=0.3, seed=7, alpha="0.5"), settings=FAST)
    assert out["status"] == "optimal"
    assert out["error"] == ""
    assert out["n"] == 6 and out["k"] == 2 and out["alpha"] == "0.5"
    assert out["gap"] == 0.0


def test_instance_file_row_with_alpha_override(tmp_path):
    save_instance(generated(6, k=2, beta=0.3, seed=7), str(tmp_path / "g.txt"))
    out = run_row(1, _row(instance="g.txt", formulation="cf", alpha="0.5"), base_dir=str(tmp_path), settings=FAST)
    assert out["status"] == "optimal"
    assert out["alpha"] == "0.5" and out["k"] == 2


@pytest.mark.parametrize("row", [
    _row(instance="missing.txt"),
    _row(n=6, k=2, beta=0.3, seed=1, formulation="simplex"),
    _row(n=6, k=3, beta=0.3, seed=1),
])
def test_failed_rows_become_error_rows(row, tmp_path):
    out = run_row(5, row, base_dir=str(tmp_path), settings=FAST)
    assert out["status"] == "error"
    assert out["error"]
    assert out["row_index"] == 5


def test_run_manifest_keeps_order(tmp_path):
    rows = [_row(n=6, k=2, beta=0.3, seed=s, formulation=f) for s, f in ((1, "arc"), (2, "cf"), (3, "icc"))]
    rows.append(_row(instance="nope.txt"))
    path = tmp_path / "m.csv"
    write_manifest(rows, str(path))
    results = run_manifest(str(path), workers=2, settings=FAST)
    assert [r["row_index"] for r in results] == [0, 1, 2, 3]
    assert [r["formulation"] for r in results] == ["arc", "cf", "icc", "arc"]
    assert results[-1]["status"] == "error"


def _result(n, k, formulation, status, gap, wall, beta=0.1, alpha="1"):
    return {"row_index": 0, "instance_path": "", "formulation": formulation, "n": n, "k": k, "beta": beta,
            "alpha": alpha, "gamma": "1", "seed": 0, "status": status, "z_ub": None, "z_lb": None, "gap": gap,
            "root_bound": None, "nodes": 1, "wall_time": wall, "cuts": {"cycle": 2}, "error": ""}


def test_aggregate(tmp_path):
    results = [
        _result(8, 4, "arc", "optimal", 0.0, 1.0),
        _result(8, 4, "arc", "time_limit", 50.0, 3.0),
        _result(8, 4, "arc", "time_limit", None, 5.0),
        _result(8, 4, "cf", "optimal", 0.0, 0.5),
        dict(_result(8, 4, "cf", "error", None, 0.0), error="boom"),
    ]
    table = aggregate(results)
    assert list(table.columns) == AGGREGATE_COLUMNS
    arc = table[table["formulation"] == "arc"].iloc[0]
    assert arc["avg_gap_pct"] == 50.0
    assert arc["avg_time_s"] == 3.0
    assert arc["n_optimal"] == 1
    assert table[table["formulation"] == "cf"].iloc[0]["n_optimal"] == 1
    path = tmp_path / "out" / "agg.csv"
    write_aggregate(table, str(path))
    assert list(pd.read_csv(path).columns) == AGGREGATE_COLUMNS


def test_aggregate_of_nothing():
    assert list(aggregate([]).columns) == AGGREGATE_COLUMNS


def test_aggregate_skips_infeasible_gap():
    results = [
        _result(8, 4, "icc", "optimal", 0.0, 1.0),
        _result(8, 4, "icc", "time_limit", 20.0, 3.0),
        _result(8, 4, "icc", "infeasible", None, 2.0),
    ]
    row = aggregate(results).iloc[0]
    assert row["avg_gap_pct"] == 10.0
    assert row["avg_time_s"] == 2.0
    assert row["n_optimal"] == 1


def test_store_and_load(tmp_path):
    engine = get_engine(str(tmp_path / "runs.db"))
    results = [_result(8, 4, "arc", "optimal", 0.0, 1.0), dict(_result(8, 4, "cf", "error", None, 0.0), error="x")]
    batch = store_results(results, engine)
    other = store_results(results[:1], engine)
    runs = load_runs(engine, batch)
    assert len(runs) == 2
    assert set(runs["status"]) == {"optimal", "error"}
    assert json.loads(runs.iloc[0]["cuts_json"]) == {"cycle": 2}
    assert len(load_runs(engine)) == 3
    assert len(load_runs(engine, other)) == 1


def test_results_lock(tmp_path):
    db = str(tmp_path / "runs.db")
    assert sqlite_path_from_url(f"sqlite:///{db}") == db
    with ResultsLock(db) as lock:
        assert lock.holder()
        with open(lock_path_for(db), encoding="utf-8") as fh:
            assert "pid" in json.load(fh)
