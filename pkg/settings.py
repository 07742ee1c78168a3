from __future__ import annotations

import os, json, configparser, logging
from typing import Optional

log = logging.getLogger(__name__)

APP_NAME = "glcip"

# ---------- Defaults ----------
DEFAULTS: dict = {
    # LP / MIP toleranties
    "lp_feasibility_tol": 1e-7,
    "lp_optimality_tol": 1e-7,
    "integrality_tol": 1e-6,
    "cut_violation_eps": 1e-4,
    "bland_stall_threshold": 50,
    "refactor_interval": 50,
    "lp_max_iterations": 20000,
    # separatiebeleid
    "icc_root_rounds": 200,
    "icc_root_time": 300.0,
    "separation_time": 5.0,
    "licc_plus_gap": 40.0,
    "cf_fractional_gap": 10.0,
    "tree_cut_rounds": 20,
    "root_cut_rounds": 500,
    "combine_licc_icc": False,
    # runs
    "time_limit": 60.0,
    "node_limit": 1_000_000,
    "results_db": "",
    "bench_workers": 1,
    "debug_checks": False,
}

_SETTINGS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "settings.json")
_CONFIG_INI = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config.ini")


def settings_path() -> str:
    """GLCIP_SETTINGS wint van settings.json naast de code."""
    return (os.environ.get("GLCIP_SETTINGS") or "").strip() or _SETTINGS


def _read_json(path: str) -> dict:
    if not os.path.exists(path):
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f) or {}
        if not isinstance(data, dict):
            raise ValueError("verwacht een JSON-object")
        return data
    except Exception as e:
        log.warning("settings-bestand %s genegeerd: %s", path, e)
        return {}


def _read_ini() -> dict:
    """config.ini [solver] (compat); waarden worden naar het type van de default gecast."""
    if not os.path.exists(_CONFIG_INI):
        return {}
    cp = configparser.ConfigParser()
    try:
        cp.read(_CONFIG_INI, encoding="utf-8")
    except configparser.Error as e:
        log.warning("config.ini genegeerd: %s", e)
        return {}
    if not cp.has_section("solver"):
        return {}
    out = {}
    for key, raw in cp.items("solver"):
        if key not in DEFAULTS:
            continue
        default = DEFAULTS[key]
        try:
            if isinstance(default, bool):
                out[key] = cp.getboolean("solver", key)
            elif isinstance(default, int):
                out[key] = int(raw)
            elif isinstance(default, float):
                out[key] = float(raw)
            else:
                out[key] = raw.strip()
        except ValueError:
            log.warning("config.ini: ongeldige waarde voor %s: %r", key, raw)
    return out


def load_settings(path: Optional[str] = None) -> dict:
    """
    Volgorde (laatste wint):
    1) ingebouwde defaults
    2) config.ini     -> [solver] (compat)
    3) settings.json  (of GLCIP_SETTINGS)
    """
    data = dict(DEFAULTS)
    data.update(_read_ini())
    data.update({k: v for k, v in _read_json(path or settings_path()).items() if k in DEFAULTS})
    return data


def save_settings(data: dict, path: Optional[str] = None):
    """Schrijf alleen bekende sleutels terug; onbekende worden stil overgeslagen."""
    target = path or settings_path()
    current = _read_json(target)
    current.update({k: v for k, v in data.items() if k in DEFAULTS})
    with open(target, "w", encoding="utf-8") as f:
        json.dump(current, f, ensure_ascii=False, indent=2)


# ---------- Getypeerde deelverzamelingen ----------
def solver_tolerances(settings: Optional[dict] = None) -> dict:
    s = settings or load_settings()
    return {
        "feasibility": float(s["lp_feasibility_tol"]),
        "optimality": float(s["lp_optimality_tol"]),
        "integrality": float(s["integrality_tol"]),
        "cut_eps": float(s["cut_violation_eps"]),
        "bland_stall": int(s["bland_stall_threshold"]),
        "refactor": int(s["refactor_interval"]),
        "max_iter": int(s["lp_max_iterations"]),
        "debug_checks": bool(s["debug_checks"]),
    }


def separation_policy(settings: Optional[dict] = None) -> dict:
    s = settings or load_settings()
    return {
        "icc_root_rounds": int(s["icc_root_rounds"]),
        "icc_root_time": float(s["icc_root_time"]),
        "separation_time": float(s["separation_time"]),
        "licc_plus_gap": float(s["licc_plus_gap"]),
        "cf_fractional_gap": float(s["cf_fractional_gap"]),
        "tree_cut_rounds": int(s["tree_cut_rounds"]),
        "root_cut_rounds": int(s["root_cut_rounds"]),
        "combine_licc_icc": bool(s["combine_licc_icc"]),
    }


def bench_defaults(settings: Optional[dict] = None) -> dict:
    s = settings or load_settings()
    return {
        "time_limit": float(s["time_limit"]),
        "node_limit": int(s["node_limit"]),
        "results_db": str(s["results_db"] or ""),
        "workers": max(1, int(s["bench_workers"])),
    }
