"""Configuration for ies: solver tolerances, search limits, output directory, workers."""

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from ies.constants import LOCAL_DIR_NAME
from ies.limits import SearchLimits, merge_search_limits

try:
    import yaml
except ImportError:
    yaml = None  # type: ignore[assignment]

# Defaults (mirror env defaults)
_DEFAULT_REL_GAP_TOL = 1e-4
_DEFAULT_FEAS_TOL = 1e-6
_DEFAULT_MAX_NODES = 5000
_DEFAULT_BRANCHING = "most-fractional"
_DEFAULT_NODE_ORDER = "best-first"
_DEFAULT_MAX_CUT_ROUNDS = 400
_DEFAULT_HEURISTIC_EVERY = 25
_DEFAULT_TIGHTNESS_TOL = 1e-4
_DEFAULT_WORKERS = 1
_DEFAULT_OUT_DIR = Path("out")

_MIN_TOL = 1e-12
_MIN_MAX_CUT_ROUNDS = 5
_MIN_HEURISTIC_EVERY = 1
_MIN_WORKERS = 1

BRANCHING_RULES = ("most-fractional", "pseudo-cost")
NODE_ORDERS = ("best-first", "depth-first")


@dataclass
class IesConfig:
    """Runtime configuration for the solver, the runner and report output."""

    rel_gap_tol: float = _DEFAULT_REL_GAP_TOL
    feas_tol: float = _DEFAULT_FEAS_TOL
    branching: str = _DEFAULT_BRANCHING
    node_order: str = _DEFAULT_NODE_ORDER
    max_cut_rounds: int = _DEFAULT_MAX_CUT_ROUNDS
    heuristic_every: int = _DEFAULT_HEURISTIC_EVERY
    tightness_tol: float = _DEFAULT_TIGHTNESS_TOL
    workers: int = _DEFAULT_WORKERS
    out_dir: Path = _DEFAULT_OUT_DIR
    limits: SearchLimits = field(
        default_factory=lambda: SearchLimits(max_nodes=_DEFAULT_MAX_NODES)
    )

    def solve_options(self, **overrides: Any):
        """Build SolveOptions from this config; non-None overrides win.

        Search limit overrides go through merge_search_limits, so a negative or
        non-numeric max_nodes / time_limit_s leaves the configured limit in place.
        """
        from ies.solver import SolveOptions

        limits = merge_search_limits(
            self.limits,
            max_nodes=overrides.pop("max_nodes", None),
            time_limit_s=overrides.pop("time_limit_s", None),
        )
        opts = SolveOptions(
            rel_gap_tol=self.rel_gap_tol,
            feas_tol=self.feas_tol,
            max_nodes=limits.max_nodes,
            time_limit_s=limits.time_limit_s,
            branching=self.branching,
            node_order=self.node_order,
            max_cut_rounds=self.max_cut_rounds,
            heuristic_every=self.heuristic_every,
        )
        known = {f.name for f in fields(opts)}
        applied = {k: v for k, v in overrides.items() if k in known and v is not None}
        return replace(opts, **applied) if applied else opts


def _load_yaml(path: Path) -> dict[str, Any]:
    """Load YAML from path. Return {} if file missing, invalid, or yaml unavailable."""
    if yaml is None:
        return {}
    if not path.is_file():
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
        return data if isinstance(data, dict) else {}
    except Exception:
        return {}


def _positive_float(val: Any, default: float) -> float:
    try:
        out = float(val)
    except (TypeError, ValueError):
        return default
    return max(_MIN_TOL, out) if out > 0 else default


def _apply_yaml(config: dict[str, Any], key: str, default: Any) -> Any:
    """Get value from config dict if present and valid; else return default."""
    if key not in config:
        return default
    val = config[key]
    if key in ("rel_gap_tol", "feas_tol", "tightness_tol"):
        return _positive_float(val, default)
    if key == "branching":
        return val if val in BRANCHING_RULES else default
    if key == "node_order":
        return val if val in NODE_ORDERS else default
    if key == "max_cut_rounds":
        try:
            return max(_MIN_MAX_CUT_ROUNDS, int(val))
        except (TypeError, ValueError):
            return default
    if key == "heuristic_every":
        try:
            return max(_MIN_HEURISTIC_EVERY, int(val))
        except (TypeError, ValueError):
            return default
    if key == "workers":
        try:
            return max(_MIN_WORKERS, int(val))
        except (TypeError, ValueError):
            return default
    if key == "out_dir":
        if val is None:
            return default
        return Path(val) if isinstance(val, (str, Path)) else default
    return default


def _limits_from_dict(data: dict[str, Any] | None, base: SearchLimits) -> SearchLimits:
    """Apply max_nodes / time_limit_s from a YAML mapping on top of *base*."""
    if not data or not isinstance(data, dict):
        return base
    out = base
    if "max_nodes" in data:
        v = data.get("max_nodes")
        if v is None:
            out = replace(out, max_nodes=None)
        else:
            try:
                out = replace(out, max_nodes=max(1, int(v)))
            except (TypeError, ValueError):
                pass
    if "time_limit_s" in data:
        v = data.get("time_limit_s")
        if v is None:
            out = replace(out, time_limit_s=None)
        else:
            try:
                out = replace(out, time_limit_s=max(0.0, float(v)))
            except (TypeError, ValueError):
                pass
    return out


_KEYS = (
    "rel_gap_tol",
    "feas_tol",
    "branching",
    "node_order",
    "max_cut_rounds",
    "heuristic_every",
    "tightness_tol",
    "workers",
    "out_dir",
)


def _apply_layer(cfg: IesConfig, layer: dict[str, Any]) -> IesConfig:
    """Apply one YAML layer. A ``solver:`` section may group the solver keys."""
    flat = dict(layer)
    section = layer.get("solver")
    if isinstance(section, dict):
        flat.update(section)
    updates = {key: _apply_yaml(flat, key, getattr(cfg, key)) for key in _KEYS}
    cfg = replace(cfg, **updates)
    return replace(cfg, limits=_limits_from_dict(flat, cfg.limits))


def _apply_env(cfg: IesConfig) -> IesConfig:
    """Override config from IES_* environment variables (only when set)."""
    env = os.environ
    if "IES_REL_GAP_TOL" in env:
        cfg = replace(cfg, rel_gap_tol=_positive_float(env["IES_REL_GAP_TOL"], cfg.rel_gap_tol))
    if "IES_FEAS_TOL" in env:
        cfg = replace(cfg, feas_tol=_positive_float(env["IES_FEAS_TOL"], cfg.feas_tol))
    if "IES_TIGHTNESS_TOL" in env:
        cfg = replace(
            cfg, tightness_tol=_positive_float(env["IES_TIGHTNESS_TOL"], cfg.tightness_tol)
        )
    if "IES_BRANCHING" in env:
        val = env["IES_BRANCHING"].strip().lower()
        if val in BRANCHING_RULES:
            cfg = replace(cfg, branching=val)
    if "IES_NODE_ORDER" in env:
        val = env["IES_NODE_ORDER"].strip().lower()
        if val in NODE_ORDERS:
            cfg = replace(cfg, node_order=val)
    if "IES_MAX_CUT_ROUNDS" in env:
        try:
            n = max(_MIN_MAX_CUT_ROUNDS, int(env["IES_MAX_CUT_ROUNDS"]))
            cfg = replace(cfg, max_cut_rounds=n)
        except ValueError:
            pass
    if "IES_HEURISTIC_EVERY" in env:
        try:
            n = max(_MIN_HEURISTIC_EVERY, int(env["IES_HEURISTIC_EVERY"]))
            cfg = replace(cfg, heuristic_every=n)
        except ValueError:
            pass
    if "IES_WORKERS" in env:
        try:
            cfg = replace(cfg, workers=max(_MIN_WORKERS, int(env["IES_WORKERS"])))
        except ValueError:
            pass
    if "IES_MAX_NODES" in env:
        try:
            n = max(1, int(env["IES_MAX_NODES"]))
            cfg = replace(cfg, limits=replace(cfg.limits, max_nodes=n))
        except ValueError:
            pass
    if "IES_TIME_LIMIT_S" in env:
        try:
            s = max(0.0, float(env["IES_TIME_LIMIT_S"]))
            cfg = replace(cfg, limits=replace(cfg.limits, time_limit_s=s))
        except ValueError:
            pass
    if "IES_OUT_DIR" in env:
        env_out = env["IES_OUT_DIR"].strip()
        if env_out:
            cfg = replace(cfg, out_dir=Path(env_out).expanduser())
    return cfg


def load_config(project_root: Path | None = None) -> IesConfig:
    """
    Load IesConfig with precedence (highest first):
    1. Environment variables (IES_*)
    2. .ies/config.yaml in project root (if present)
    3. ~/.ies/config.yaml
    4. Built-in defaults
    """
    cfg = IesConfig()

    # 3. User config
    user_cfg = _load_yaml(Path.home() / LOCAL_DIR_NAME / "config.yaml")
    if user_cfg:
        cfg = _apply_layer(cfg, user_cfg)

    # 2. Project config (overrides user)
    root = project_root if project_root is not None else Path.cwd()
    proj_cfg = _load_yaml(root / LOCAL_DIR_NAME / "config.yaml")
    if proj_cfg:
        cfg = _apply_layer(cfg, proj_cfg)

    # 1. Env overrides (only when the key is explicitly set in the environment)
    return _apply_env(cfg)
