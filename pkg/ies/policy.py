"""YAML policy file loading and merging with CLI overrides.

A policy file (``.ies/policy.yaml``) keeps check thresholds under version
control. CLI flags always take precedence.
"""

from dataclasses import fields, replace
from pathlib import Path

from ies.checks import CheckPolicy

try:
    import yaml
except ImportError:
    yaml = None  # type: ignore[assignment]


def load_policy(path: Path) -> CheckPolicy:
    """Load a ``CheckPolicy`` from a YAML file.

    Expected structure::

        check:
          tol: 1.0e-5
          max_gap: 1.0e-3
          expect_status: optimal

    Raises ``FileNotFoundError`` if *path* does not exist, or
    ``RuntimeError`` if PyYAML is not installed.
    """
    if yaml is None:
        raise RuntimeError("PyYAML is required to load policy files")
    if not path.is_file():
        raise FileNotFoundError(f"Policy file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        return CheckPolicy()
    section = data.get("check")
    if not isinstance(section, dict):
        return CheckPolicy()
    return _policy_from_dict(section)


def _policy_from_dict(data: dict) -> CheckPolicy:
    """Build a ``CheckPolicy`` from a flat dict, ignoring unknown keys."""
    field_names = {f.name for f in fields(CheckPolicy)}
    return CheckPolicy(**{k: v for k, v in data.items() if k in field_names})


def merge_policy(file_policy: CheckPolicy, cli_overrides: dict) -> CheckPolicy:
    """Merge *file_policy* with *cli_overrides*. CLI values win when not None."""
    field_names = {f.name for f in fields(CheckPolicy)}
    applied = {k: v for k, v in cli_overrides.items() if k in field_names and v is not None}
    return replace(file_policy, **applied)
