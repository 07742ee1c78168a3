"""
Benchmark: manifest (CSV) draaien, runs opslaan, per cel (n, K, beta, alpha) middelen.

Een manifestregel verwijst naar een instantiebestand of geeft generatorparameters
(n, k, beta, seed, alpha, gamma). Mislukte regels worden foutregels; de run gaat door.
"""
from __future__ import annotations

import os, json, uuid, itertools, logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Optional

import pandas as pd
from sqlalchemy import text

from instance import GeneratorParams, format_fraction, generate_instance, load_instance
from gamma_lift import as_fraction
from solver import FORMULATIONS, solve_instance
from milp_core import gap_percent
from settings import bench_defaults, load_settings
from models import SolveRun, get_engine, get_session, sqlite_path_from_url
from db_init import init_db
from lockmgr import ResultsLock

log = logging.getLogger(__name__)

MANIFEST_COLUMNS = ["instance", "formulation", "time_limit", "cutoff", "n", "k", "beta", "alpha", "gamma", "seed"]
AGGREGATE_COLUMNS = ["n", "K", "beta", "alpha", "formulation", "avg_gap_pct", "avg_time_s", "n_optimal"]

DESK_GRID = {"n": (8, 12, 20), "k": (4, 8), "beta": (0.1, 0.3),
             "alpha": ("0.1", "0.5", "1"), "gamma": ("0.9", "1", "1.1")}
FULL_GRID = {"n": (50, 75, 100), "k": (4, 8, 12, 16), "beta": (0.1, 0.3),
             "alpha": ("0.1", "0.5", "1"), "gamma": ("0.9", "1", "1.1")}
BENCH_FORMULATIONS = ("arc", "icc", "icc+", "licc+", "cf")


# ---------- Manifest ----------
def grid_rows(full: bool = False, repeats: int = 5, formulations=BENCH_FORMULATIONS,
              base_seed: int = 0) -> list:
    """Een regel per (graaf, alpha, gamma, formulering); vijf grafen per (n, K, beta)."""
    grid = FULL_GRID if full else DESK_GRID
    rows = []
    seed = base_seed
    for n, k, beta in itertools.product(grid["n"], grid["k"], grid["beta"]):
        if k >= n:
            continue
        for _ in range(repeats):
            for alpha, gamma, form in itertools.product(grid["alpha"], grid["gamma"], formulations):
                rows.append({"instance": "", "formulation": form, "time_limit": "", "cutoff": "",
                             "n": n, "k": k, "beta": beta, "alpha": alpha, "gamma": gamma, "seed": seed})
            seed += 1
    return rows


def write_manifest(rows: list, path: str):
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    pd.DataFrame(rows, columns=MANIFEST_COLUMNS).to_csv(path, index=False)


def read_manifest(path: str) -> list:
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    if "formulation" not in df.columns:
        raise ValueError(f"manifest {path} mist de kolom 'formulation'")
    for col in MANIFEST_COLUMNS:
        if col not in df.columns:
            df[col] = ""
    return [{k: (v or "").strip() for k, v in rec.items()} for rec in df[MANIFEST_COLUMNS].to_dict("records")]


# ---------- Eén regel ----------
def _opt_float(raw: str) -> Optional[float]:
    return float(raw) if raw else None


def _instance_for(row: dict, base_dir: str) -> tuple:
    """(instance, pad of None)."""
    if row["instance"]:
        path = row["instance"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        inst = load_instance(path)
        if row["alpha"] or row["gamma"]:
            inst = replace(inst, alpha=as_fraction(row["alpha"]) if row["alpha"] else inst.alpha,
                           gamma=as_fraction(row["gamma"]) if row["gamma"] else inst.gamma)
        return inst, row["instance"]
    params = GeneratorParams(
        n=int(row["n"]), k=int(row["k"]), beta=float(row["beta"]), seed=int(row["seed"] or 0),
        alpha=as_fraction(row["alpha"] or "1"), gamma=as_fraction(row["gamma"] or "1"),
    )
    return generate_instance(params), None


def run_row(index: int, row: dict, base_dir: str = ".", settings: Optional[dict] = None) -> dict:
    """Draai één manifestregel; fouten komen als status 'error' terug, nooit als exceptie."""
    out = {"row_index": index, "instance_path": row.get("instance", ""), "formulation": row.get("formulation", ""),
           "n": None, "k": None, "beta": None, "alpha": None, "gamma": None,
           "seed": None,
           "status": "error", "z_ub": None, "z_lb": None, "gap": None, "root_bound": None,
           "nodes": 0, "wall_time": 0.0, "cuts": {}, "error": ""}
    try:
        out["seed"] = int(row["seed"]) if row.get("seed") else None
        if row["formulation"] not in FORMULATIONS:
            raise ValueError(f"onbekende formulering {row['formulation']!r}")
        inst, _ = _instance_for(row, base_dir)
        out.update(n=inst.node_count,
                   k=int(row["k"]) if row["k"] else round(inst.arc_count / inst.node_count),
                   beta=float(row["beta"]) if row["beta"] else None,
                   alpha=format_fraction(inst.alpha), gamma=format_fraction(inst.gamma))
        report = solve_instance(inst, row["formulation"], time_limit=_opt_float(row["time_limit"]),
                                cutoff=_opt_float(row["cutoff"]), settings=settings)
        out.update(status=report.status, z_ub=report.z_ub, z_lb=report.z_lb,
                   gap=gap_percent(report.z_ub, report.z_lb), root_bound=report.root_bound,
                   nodes=report.nodes, wall_time=report.wall_time, cuts=dict(report.cuts_by_kind))
    except Exception as e:
        log.warning("manifestregel %d mislukt: %s", index, e)
        out["error"] = f"{type(e).__name__}: {e}"
    return out


def run_manifest(path: str, workers: Optional[int] = None, settings: Optional[dict] = None) -> list:
    """Alle regels, resultaten in manifestvolgorde (ook bij meerdere workers)."""
    settings = settings or load_settings()
    workers = workers or bench_defaults(settings)["workers"]
    rows = read_manifest(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    log.info("bench: %d regels, %d worker(s)", len(rows), workers)
    if workers <= 1:
        return [run_row(i, r, base_dir, settings) for i, r in enumerate(rows)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ir: run_row(ir[0], ir[1], base_dir, settings), enumerate(rows)))


# ---------- Opslag ----------
def _finite(value):
    if value is None:
        return None
    value = float(value)
    return value if value == value and abs(value) != float("inf") else None


def store_results(results: list, engine=None, batch: Optional[str] = None) -> str:
    """Schrijf resultaten weg onder de resultatenlock; geeft de batch-id terug."""
    engine = engine or get_engine()
    init_db(engine)
    batch = batch or uuid.uuid4().hex[:12]
    with ResultsLock(sqlite_path_from_url(str(engine.url))):
        session = get_session(engine)
        try:
            for r in results:
                session.add(SolveRun(
                    batch=batch, row_index=r["row_index"], instance_path=r["instance_path"] or "",
                    n=r["n"], k=r["k"], beta=r["beta"], alpha=r["alpha"], gamma=r["gamma"], seed=r["seed"],
                    formulation=r["formulation"], status=r["status"],
                    z_ub=_finite(r["z_ub"]), z_lb=_finite(r["z_lb"]), gap=r["gap"], root_bound=_finite(r["root_bound"]),
                    nodes=r["nodes"], wall_time=r["wall_time"], cuts_json=json.dumps(r["cuts"], sort_keys=True),
                    error=r["error"],
                ))
            session.commit()
        finally:
            session.close()
    log.info("bench: %d runs opgeslagen in batch %s", len(results), batch)
    return batch


def load_runs(engine=None, batch: Optional[str] = None) -> pd.DataFrame:
    engine = engine or get_engine()
    init_db(engine)
    query = "SELECT * FROM solve_run"
    params = {}
    if batch:
        query += " WHERE batch = :batch"
        params["batch"] = batch
    query += " ORDER BY id"
    with engine.connect() as conn:
        return pd.read_sql(text(query), conn, params=params)


# ---------- Aggregatie ----------
def aggregate(results) -> pd.DataFrame:
    """
    Gemiddelde gap (%) en totale tijd per (n, K, beta, alpha, formulering), plus het
    aantal optimaal opgeloste runs. Runs zonder incumbent tellen als 100 % gap,
    behalve bewezen onhaalbare runs; die en foutregels tellen niet mee.
    """
    df = results if isinstance(results, pd.DataFrame) else pd.DataFrame(results)
    if df.empty:
        return pd.DataFrame(columns=AGGREGATE_COLUMNS)
    df = df[df["status"] != "error"].copy()
    if df.empty:
        return pd.DataFrame(columns=AGGREGATE_COLUMNS)
    df["gap"] = df["gap"].astype(float)
    # bewezen onhaalbaar: gap blijft NaN en valt buiten het gemiddelde
    open_runs = df["status"] != "infeasible"
    df.loc[open_runs, "gap"] = df.loc[open_runs, "gap"].fillna(100.0)
    df["optimal"] = (df["status"] == "optimal").astype(int)
    df["beta"] = df["beta"].astype(float).round(6)
    out = (df.groupby(["n", "k", "beta", "alpha", "formulation"], sort=True, dropna=False)
             .agg(avg_gap_pct=("gap", "mean"), avg_time_s=("wall_time", "mean"), n_optimal=("optimal", "sum"))
             .reset_index()
             .rename(columns={"k": "K"}))
    out["avg_gap_pct"] = out["avg_gap_pct"].round(2)
    out["avg_time_s"] = out["avg_time_s"].round(2)
    out["n_optimal"] = out["n_optimal"].astype(int)
    return out[AGGREGATE_COLUMNS]


def write_aggregate(table: pd.DataFrame, path: str):
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    table.to_csv(path, index=False, float_format="%.2f")
