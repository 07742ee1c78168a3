import json

import settings
from settings import DEFAULTS, bench_defaults, load_settings, save_settings, separation_policy, solver_tolerances


def test_json_overrides_defaults(tmp_path, monkeypatch):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"time_limit": 5, "licc_plus_gap": 25.0, "onbekend": 1}), encoding="utf-8")
    monkeypatch.setenv("GLCIP_SETTINGS", str(path))
    s = load_settings()
    assert s["time_limit"] == 5
    assert "onbekend" not in s
    assert separation_policy(s)["licc_plus_gap"] == 25.0
    assert bench_defaults(s)["time_limit"] == 5.0


def test_broken_json_falls_back(tmp_path, monkeypatch):
    path = tmp_path / "s.json"
    path.write_text("[1, 2", encoding="utf-8")
    monkeypatch.setenv("GLCIP_SETTINGS", str(path))
    monkeypatch.setattr(settings, "_CONFIG_INI", str(tmp_path / "none.ini"))
    assert load_settings() == DEFAULTS


def test_ini_values_are_typed(tmp_path, monkeypatch):
    ini = tmp_path / "config.ini"
    ini.write_text("[solver]\nseparation_time = 2.5\nbench_workers = 3\ncombine_licc_icc = yes\nbogus = 1\n",
                   encoding="utf-8")
    monkeypatch.setattr(settings, "_CONFIG_INI", str(ini))
    monkeypatch.setenv("GLCIP_SETTINGS", str(tmp_path / "missing.json"))
    s = load_settings()
    assert s["separation_time"] == 2.5
    assert bench_defaults(s)["workers"] == 3
    assert separation_policy(s)["combine_licc_icc"] is True


def test_save_keeps_only_known_keys(tmp_path):
    path = str(tmp_path / "s.json")
    save_settings({"time_limit": 10.0, "x": 1}, path)
    with open(path, encoding="utf-8") as fh:
        assert json.load(fh) == {"time_limit": 10.0}


def test_tolerances():
    tol = solver_tolerances(dict(DEFAULTS, debug_checks=True))
    assert tol["debug_checks"] is True
    assert tol["cut_eps"] == DEFAULTS["cut_violation_eps"]
