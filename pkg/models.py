from __future__ import annotations

import os, datetime
from pathlib import Path
from typing import Optional

from sqlalchemy import Column, Integer, String, Float, Text, DateTime, Index, create_engine
from sqlalchemy.orm import declarative_base, sessionmaker, Session

from settings import load_settings, bench_defaults

# ---------- Base ----------
Base = declarative_base()

# ---------- Tabellen ----------

class SolveRun(Base):
    """Eén regel uit een bench-manifest: instantie, formulering en uitkomst (of foutmelding)."""
    __tablename__ = "solve_run"
    id = Column(Integer, primary_key=True)
    batch = Column(String, nullable=False, default="")
    row_index = Column(Integer, nullable=False, default=0)
    instance_path = Column(String, nullable=False, default="")
    n = Column(Integer)
    k = Column(Integer)
    beta = Column(Float)
    alpha = Column(String)          # breuk als tekst, bv. "1/2"
    gamma = Column(String)
    seed = Column(Integer)
    formulation = Column(String, nullable=False)
    status = Column(String, nullable=False, default="error")   # optimal | infeasible | time_limit | node_limit | numerical | error
    z_ub = Column(Float)
    z_lb = Column(Float)
    gap = Column(Float)
    root_bound = Column(Float)
    nodes = Column(Integer, default=0)
    wall_time = Column(Float, default=0.0)
    cuts_json = Column(Text, default="{}")
    error = Column(Text, default="")
    created = Column(DateTime, default=lambda: datetime.datetime.now(datetime.timezone.utc))

    @property
    def failed(self) -> bool:
        return self.status == "error"

# ---------- Indexes ----------
Index("ix_solve_run_batch", SolveRun.batch, SolveRun.row_index)
Index("ix_solve_run_cell", SolveRun.n, SolveRun.k, SolveRun.beta, SolveRun.alpha)


# ---------- Engine & Session helpers ----------
_DEF_DB_PATH = Path(__file__).resolve().parent / "glcip_results.db"

def _db_url(db_path: Optional[str] = None) -> str:
    if db_path:
        return db_path if "://" in db_path else f"sqlite:///{db_path}"
    return f"sqlite:///{_DEF_DB_PATH}"

def sqlite_path_from_url(url: str) -> str:
    """
    Filesystem-pad van een sqlite-URL, anders "".
    - sqlite:////tmp/x.db → /tmp/x.db
    - sqlite:///x.db      → x.db
    """
    if not url or not url.startswith("sqlite:///"):
        return ""
    return url[len("sqlite:///"):].replace("\\", "/")

def get_engine(db_path: Optional[str] = None):
    """
    Volgorde:
    1) expliciet db_path (bestandsnaam of URL)
    2) settings -> results_db
    3) fallback SQLite naast de code
    """
    url = _db_url(db_path) if db_path else ""
    if not url:
        configured = bench_defaults(load_settings())["results_db"].strip()
        url = _db_url(configured or None)

    engine = create_engine(url, future=True, pool_pre_ping=True)

    # SQLite pragmas
    if url.startswith("sqlite:"):
        path = sqlite_path_from_url(url)
        if path and os.path.dirname(path):
            os.makedirs(os.path.dirname(path), exist_ok=True)
        try:
            with engine.begin() as conn:
                conn.exec_driver_sql("PRAGMA journal_mode=WAL;")
                conn.exec_driver_sql("PRAGMA synchronous=NORMAL;")
        except Exception:
            pass

    return engine

def get_session(engine=None) -> Session:
    engine = engine or get_engine()
    SessionLocal = sessionmaker(bind=engine, future=True, expire_on_commit=False)
    return SessionLocal()
