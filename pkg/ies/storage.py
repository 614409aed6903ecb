"""
Output directory layout for a solved run.

<out_dir>/ holds costs.csv, unit_output.csv, gas_state.csv, coupling.csv,
tightness.csv and summary.json; a fleet comparison adds carbon_report.{csv,json}.
Every file is written to a temp file first and moved into place.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any

import pandas as pd

SUMMARY_JSON = "summary.json"
COSTS_CSV = "costs.csv"
UNIT_OUTPUT_CSV = "unit_output.csv"
GAS_STATE_CSV = "gas_state.csv"
COUPLING_CSV = "coupling.csv"
TIGHTNESS_CSV = "tightness.csv"
RUN_FILES = (COSTS_CSV, UNIT_OUTPUT_CSV, GAS_STATE_CSV, COUPLING_CSV, TIGHTNESS_CSV, SUMMARY_JSON)

FLOAT_FORMAT = "%.10g"

logger = logging.getLogger(__name__)


def prepare_out_dir(path: Path | str) -> Path:
    """Create the output directory if needed. Raises OSError when it cannot be written."""
    out = Path(path).expanduser()
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    return out


def _atomic_write_text(path: Path, text: str) -> None:
    """Write text to path atomically (temp file then rename)."""
    fd, tmp = tempfile.mkstemp(
        dir=path.parent,
        prefix=path.name + ".",
        suffix=".tmp",
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except Exception:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_json(path: Path, data: dict) -> None:
    """Sorted keys, no timestamps: identical data gives identical bytes."""
    _atomic_write_text(path, json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True) + "\n")


def write_table(frame: pd.DataFrame, path: Path, *, index: bool = False) -> None:
    _atomic_write_text(path, frame.to_csv(index=index, float_format=FLOAT_FORMAT, lineterminator="\n"))


def load_summary(run_dir: Path | str) -> dict[str, Any]:
    """Load summary.json. Raises FileNotFoundError if the run directory has none."""
    path = Path(run_dir) / SUMMARY_JSON
    if not path.is_file():
        raise FileNotFoundError(f"No {SUMMARY_JSON} in {run_dir}")
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def load_table(run_dir: Path | str, name: str) -> pd.DataFrame:
    path = Path(run_dir) / name
    if not path.is_file():
        raise FileNotFoundError(f"No {name} in {run_dir}")
    return pd.read_csv(path)


def missing_files(run_dir: Path | str) -> list[str]:
    run_dir = Path(run_dir)
    return [name for name in RUN_FILES if not (run_dir / name).is_file()]
