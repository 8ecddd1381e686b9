from reflectbench.analysis.chance import (
    CHANCE_TASKS,
    POLICIES,
    ChanceEstimate,
    UnsupportedTask,
    estimate_chance,
    simulate_scores,
)
from reflectbench.analysis.report import (
    REFERENCE_CHANCE,
    SuiteReport,
    aggregate,
    build_report,
    chance_threshold,
    collect,
    report_csv,
    write_report,
)

__all__ = [
    "CHANCE_TASKS",
    "POLICIES",
    "REFERENCE_CHANCE",
    "ChanceEstimate",
    "SuiteReport",
    "UnsupportedTask",
    "aggregate",
    "build_report",
    "chance_threshold",
    "collect",
    "estimate_chance",
    "report_csv",
    "simulate_scores",
    "write_report",
]
