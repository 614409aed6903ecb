"""Shared constants: output schema version, physical constants, and local directory name."""

from pathlib import Path

# Version of summary.json and carbon_report.json (single source of truth).
SCHEMA_VERSION = "0.1"

# 1 MBTU of natural gas is taken as 28.3 m³.
MBTU_TO_M3 = 28.3

# Lower heating values (MJ/kg).
Q_H2 = 119.96
Q_CH4 = 50.00

# Methanation: CO2 + 4 H2 -> CH4 + 2 H2O.
H2_PER_CH4 = 4.0

# Ideal-gas density of CO2 at normal conditions (t/m³); a 1:1 molar ratio makes
# one m³ of CH4 absorb one m³ of CO2.
CO2_DENSITY_T_PER_M3 = 1.977e-3

# Default directory name for configs and check policies.
# This can (and should) be overridden by the user.
LOCAL_DIR_NAME = Path(".ies")

# Statuses reported by branch_and_bound, in order of decreasing certainty.
STATUSES = ("optimal", "gap-limit", "node-limit", "time-limit", "infeasible")


def default_counts() -> dict[str, int]:
    """Empty program counts as written to summary.json."""
    return {
        "variables": 0,
        "binaries": 0,
        "linear": 0,
        "cones": 0,
        "direction_pairs": 0,
    }
