import logging

from sqlalchemy import inspect, text

from models import Base

log = logging.getLogger(__name__)

# kolommen die later bij solve_run zijn gekomen: naam -> SQL-type met default
_LATE_COLUMNS = {
    "root_bound": "REAL",
    "seed": "INTEGER",
    "cuts_json": "TEXT DEFAULT '{}'",
    "error": "TEXT DEFAULT ''",
    "batch": "TEXT NOT NULL DEFAULT ''",
    "row_index": "INTEGER NOT NULL DEFAULT 0",
}


def _migrate_schema(engine):
    """Lichte, idempotente migraties voor bestaande resultaatbestanden."""
    insp = inspect(engine)
    if "solve_run" not in insp.get_table_names():
        return
    cols = {c["name"] for c in insp.get_columns("solve_run")}
    with engine.begin() as conn:
        for name, decl in _LATE_COLUMNS.items():
            if name not in cols:
                log.info("migratie: kolom solve_run.%s toegevoegd", name)
                conn.execute(text(f"ALTER TABLE solve_run ADD COLUMN {name} {decl}"))
        conn.exec_driver_sql("CREATE INDEX IF NOT EXISTS ix_solve_run_batch ON solve_run (batch, row_index)")
        conn.exec_driver_sql("CREATE INDEX IF NOT EXISTS ix_solve_run_cell ON solve_run (n, k, beta, alpha)")


def init_db(engine):
    _migrate_schema(engine)
    Base.metadata.create_all(engine)
    return engine
