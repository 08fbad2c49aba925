"""Simulation laboratory: failure regions, effectiveness measures, statistics."""

from .measures import (
    DEFAULT_CAP,
    RUN_CSV_FIELDS,
    Campaign,
    RunRecord,
    e_measure,
    failure_counts,
    parallel_map,
    p_measure,
    run_campaign,
    run_f,
    run_fm,
    run_n,
    write_runs_csv,
)
from .regions import (
    Ball,
    Box,
    FailurePattern,
    FailureProfile,
    InfeasiblePlacement,
    PatternKind,
    ProfileSpec,
    Strip,
    is_failure,
    place_regions,
)
from .stats import (
    CampaignStats,
    MannWhitneyResult,
    a12_effect_size,
    improvement_percent,
    mann_whitney_u,
    required_runs,
    summarize,
)

__all__ = [
    "Ball",
    "Box",
    "Campaign",
    "CampaignStats",
    "DEFAULT_CAP",
    "FailurePattern",
    "FailureProfile",
    "InfeasiblePlacement",
    "MannWhitneyResult",
    "PatternKind",
    "ProfileSpec",
    "RUN_CSV_FIELDS",
    "RunRecord",
    "Strip",
    "a12_effect_size",
    "e_measure",
    "failure_counts",
    "parallel_map",
    "improvement_percent",
    "is_failure",
    "mann_whitney_u",
    "p_measure",
    "place_regions",
    "required_runs",
    "run_campaign",
    "run_f",
    "run_fm",
    "run_n",
    "summarize",
    "write_runs_csv",
]
