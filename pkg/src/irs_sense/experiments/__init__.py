"""Scenario configuration, seeded sweeps, figure recipes and the command line."""

from .config import (
    CRB,
    DETECTION,
    JOINT_BF,
    NO_OPTIMIZATION,
    OBJECTIVES,
    REFLECTIVE_ONLY,
    SCHEMES,
    SNR,
    TRANSMIT_ONLY,
    ConfigError,
    ScenarioConfig,
    load_config,
    save_config,
)
from .figures import FIGURE_TAGS, figure_recipe, reproduce_figure, run_recipe
from .sweep import (
    AggregateRow,
    SweepResult,
    SweepRow,
    aggregate,
    cell_seed,
    read_csv,
    resolve_threads,
    rows_to_csv,
    run_sweep,
)

__all__ = [
    "CRB", "DETECTION", "JOINT_BF", "NO_OPTIMIZATION", "OBJECTIVES", "REFLECTIVE_ONLY", "SCHEMES", "SNR",
    "TRANSMIT_ONLY", "ConfigError", "ScenarioConfig", "load_config", "save_config",
    "FIGURE_TAGS", "figure_recipe", "reproduce_figure", "run_recipe",
    "AggregateRow", "SweepResult", "SweepRow", "aggregate", "cell_seed", "read_csv", "resolve_threads",
    "rows_to_csv", "run_sweep",
]
