"""
Config precedence tests for ies.

Verifies: env > project YAML > user YAML > built-in defaults.
Env vars override ONLY when explicitly set in os.environ.
Uses tmp_path and monkeypatch; no real FS outside the temp dir.
"""

from pathlib import Path

import pytest


def _write_yaml(directory: Path, content: str) -> Path:
    """Write a config.yaml inside *directory*/.ies/ and return the file path."""
    from ies.constants import LOCAL_DIR_NAME

    cfg_dir = directory / LOCAL_DIR_NAME
    cfg_dir.mkdir(parents=True, exist_ok=True)
    cfg_file = cfg_dir / "config.yaml"
    cfg_file.write_text(content, encoding="utf-8")
    return cfg_file


@pytest.fixture
def fake_home(tmp_path, monkeypatch):
    home = tmp_path / "fakehome"
    home.mkdir()
    monkeypatch.setattr(Path, "home", staticmethod(lambda: home))
    return home


# ------------------------------------------------------------------
# 1. YAML wins when env is absent
# ------------------------------------------------------------------


def test_yaml_wins_when_env_missing(tmp_path, fake_home):
    """Project YAML overrides defaults when no env vars are set."""
    _write_yaml(
        tmp_path,
        "rel_gap_tol: 1.0e-6\nbranching: pseudo-cost\nworkers: 3\nmax_nodes: 77\nout_dir: results\n",
    )

    from ies.config import load_config

    cfg = load_config(project_root=tmp_path)

    assert cfg.rel_gap_tol == 1e-6
    assert cfg.branching == "pseudo-cost"
    assert cfg.workers == 3
    assert cfg.limits.max_nodes == 77
    assert cfg.out_dir == Path("results")


def test_solver_section_groups_solver_keys(tmp_path, fake_home):
    _write_yaml(tmp_path, "solver:\n  feas_tol: 1.0e-8\n  node_order: depth-first\n  time_limit_s: 30\n")

    from ies.config import load_config

    cfg = load_config(project_root=tmp_path)

    assert cfg.feas_tol == 1e-8
    assert cfg.node_order == "depth-first"
    assert cfg.limits.time_limit_s == 30.0


# ------------------------------------------------------------------
# 2. Env overrides YAML when present
# ------------------------------------------------------------------


def test_env_overrides_yaml_when_present(tmp_path, fake_home, monkeypatch):
    """Explicitly-set env var beats YAML value."""
    _write_yaml(tmp_path, "rel_gap_tol: 1.0e-3\nworkers: 2\n")
    monkeypatch.setenv("IES_REL_GAP_TOL", "1e-5")
    monkeypatch.setenv("IES_WORKERS", "8")

    from ies.config import load_config

    cfg = load_config(project_root=tmp_path)

    assert cfg.rel_gap_tol == 1e-5
    assert cfg.workers == 8


def test_project_yaml_overrides_user_yaml(tmp_path, fake_home):
    _write_yaml(fake_home, "max_cut_rounds: 50\nheuristic_every: 4\n")
    _write_yaml(tmp_path, "max_cut_rounds: 90\n")

    from ies.config import load_config

    cfg = load_config(project_root=tmp_path)

    assert cfg.max_cut_rounds == 90
    assert cfg.heuristic_every == 4


# ------------------------------------------------------------------
# 3. Built-in defaults when no YAML and no env
# ------------------------------------------------------------------


def test_defaults_only_when_no_yaml_no_env(tmp_path, fake_home):
    """With no YAML and no env, defaults apply."""
    from ies.config import load_config

    cfg = load_config(project_root=tmp_path)

    assert cfg.rel_gap_tol == 1e-4
    assert cfg.feas_tol == 1e-6
    assert cfg.branching == "most-fractional"
    assert cfg.node_order == "best-first"
    assert cfg.workers == 1
    assert cfg.out_dir == Path("out")
    assert cfg.limits.max_nodes == 5000
    assert cfg.limits.time_limit_s is None


# ------------------------------------------------------------------
# 4. Invalid values fall back instead of failing
# ------------------------------------------------------------------


def test_invalid_yaml_values_keep_defaults(tmp_path, fake_home):
    _write_yaml(tmp_path, "rel_gap_tol: -1\nbranching: random\nworkers: many\n")

    from ies.config import load_config

    cfg = load_config(project_root=tmp_path)

    assert cfg.rel_gap_tol == 1e-4
    assert cfg.branching == "most-fractional"
    assert cfg.workers == 1


def test_invalid_env_values_are_ignored(tmp_path, fake_home, monkeypatch):
    monkeypatch.setenv("IES_MAX_NODES", "lots")
    monkeypatch.setenv("IES_NODE_ORDER", "sideways")

    from ies.config import load_config

    cfg = load_config(project_root=tmp_path)

    assert cfg.limits.max_nodes == 5000
    assert cfg.node_order == "best-first"


def test_minimums_are_enforced(tmp_path, fake_home, monkeypatch):
    monkeypatch.setenv("IES_MAX_CUT_ROUNDS", "1")
    monkeypatch.setenv("IES_WORKERS", "0")

    from ies.config import load_config

    cfg = load_config(project_root=tmp_path)

    assert cfg.max_cut_rounds == 5
    assert cfg.workers == 1


def test_malformed_yaml_is_ignored(tmp_path, fake_home):
    _write_yaml(tmp_path, "rel_gap_tol: [unclosed\n")

    from ies.config import load_config

    cfg = load_config(project_root=tmp_path)

    assert cfg.rel_gap_tol == 1e-4


def test_null_max_nodes_in_yaml_disables_limit(tmp_path, fake_home):
    _write_yaml(tmp_path, "max_nodes: null\n")

    from ies.config import load_config

    cfg = load_config(project_root=tmp_path)

    assert cfg.limits.max_nodes is None


# ------------------------------------------------------------------
# 5. SolveOptions derived from config
# ------------------------------------------------------------------


def test_solve_options_follow_config_and_overrides(tmp_path, fake_home, monkeypatch):
    monkeypatch.setenv("IES_TIME_LIMIT_S", "12.5")

    from ies.config import load_config

    cfg = load_config(project_root=tmp_path)
    opts = cfg.solve_options(rel_gap_tol=1e-7, max_nodes=None)

    assert opts.rel_gap_tol == 1e-7
    assert opts.max_nodes == 5000
    assert opts.time_limit_s == 12.5
    assert opts.branching == cfg.branching


def test_solve_options_merge_limit_overrides(tmp_path, fake_home, monkeypatch):
    from ies.config import load_config

    cfg = load_config(project_root=tmp_path)

    assert cfg.solve_options(max_nodes=-3).max_nodes == 5000
    assert cfg.solve_options(max_nodes="x").max_nodes == 5000
    opts = cfg.solve_options(max_nodes=40, time_limit_s="3")
    assert opts.max_nodes == 40
    assert opts.time_limit_s == 3.0
