"""
Parallel bootstrap simulator

Deterministic simulation and analytic planning of parallel bootstrap
variance estimation: four distribution strategies on a virtual
message-passing fabric, checked against closed-form cost models and a
sequential oracle.
"""

from .bootstrap import (
    CostParams,
    Dataset,
    ExperimentConfig,
    StrategyKind,
    SummaryStats,
    VarianceEstimate,
    pool_stats,
    sequential_bootstrap_oracle,
    summarize_means,
    variance_from_stats,
)
from .costmodel import CostBreakdown, PlanQuery, plan, predict
from .strategies import StrategyReport, run_dbsa, run_dbsr, run_ddrs, run_fsd, run_strategy

__version__ = "1.0.0"
__all__ = [
    "CostParams",
    "Dataset",
    "ExperimentConfig",
    "StrategyKind",
    "SummaryStats",
    "VarianceEstimate",
    "pool_stats",
    "sequential_bootstrap_oracle",
    "summarize_means",
    "variance_from_stats",
    "CostBreakdown",
    "PlanQuery",
    "plan",
    "predict",
    "StrategyReport",
    "run_dbsa",
    "run_dbsr",
    "run_ddrs",
    "run_fsd",
    "run_strategy",
]
