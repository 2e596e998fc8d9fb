"""
Closed-form cost models and the strategy planner.

Communication time is total data volume over bandwidth, latency ignored:
``t_comm = (bytes_data_out + bytes_results_back) / B``. Computation time is
sample points over compute speed, ``t_comp = points / S``. Byte counts and
peak floats are exact integers and match what the fabric measures for the
same configuration.

The planner keeps the strategies whose root and worker peaks fit a per-process
memory cap and picks the one with the smallest ``t_comm + t_comp``; ties go to
DBSA, then DDRS, DBSR, FSD.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence

from core.bootstrap import CostParams, ExperimentConfig, StrategyKind
from core.constants import DDRS_PAIR_FLOATS, FLOAT_BYTES, STATS_PAYLOAD_FLOATS
from core.errors import ConfigurationError

logger = logging.getLogger(__name__)

PLAN_PREFERENCE = (StrategyKind.DBSA, StrategyKind.DDRS, StrategyKind.DBSR, StrategyKind.FSD)


@dataclass(frozen=True)
class StrategyProfile:
    """Asymptotic row of the strategy comparison table."""
    name: str
    communication: str
    memory: str
    use_case: str


PROFILES: Dict[StrategyKind, StrategyProfile] = {
    StrategyKind.FSD: StrategyProfile(
        "Full Sample Distribution", "O(DN)", "O(DN) (root)", "Impractical"
    ),
    StrategyKind.DBSR: StrategyProfile(
        "Data Broadcast & Sample Return", "O(DN)", "O(D + DN/P)", "Small D, small N"
    ),
    StrategyKind.DBSA: StrategyProfile(
        "Data Broadcast & Statistic Aggregation", "O(D)", "O(D + DN/P)",
        "General purpose, large N",
    ),
    StrategyKind.DDRS: StrategyProfile(
        "Distributed Data & RNG Synchronization", "O(NP)", "O(D/P)",
        "Memory-constrained, large D",
    ),
}


@dataclass(frozen=True)
class CostBreakdown:
    """Predicted traffic, time and memory of one strategy."""
    kind: StrategyKind
    bytes_data_out: int
    bytes_results_back: int
    t_comm: float
    t_comp: float
    peak_floats_root: int
    peak_floats_worker: int
    bytes_verification: int = 0
    points_root: int = 0
    points_worker: int = 0
    # computation time if S is per process and the work divides over P
    t_comp_parallel: float = 0.0

    @property
    def comm_bytes(self) -> int:
        return self.bytes_data_out + self.bytes_results_back

    @property
    def total_time(self) -> float:
        return self.t_comm + self.t_comp

    @property
    def peak_floats(self) -> int:
        return max(self.peak_floats_root, self.peak_floats_worker)

    @property
    def profile(self) -> StrategyProfile:
        return PROFILES[self.kind]

    def to_dict(self) -> Dict[str, object]:
        out = asdict(self)
        out["kind"] = self.kind.value
        out["comm_bytes"] = self.comm_bytes
        out["total_time"] = self.total_time
        out["communication_complexity"] = self.profile.communication
        out["memory_complexity"] = self.profile.memory
        out["use_case"] = self.profile.use_case
        return out


def predict(kind: StrategyKind, config: ExperimentConfig, params: CostParams) -> CostBreakdown:
    """Exact byte, memory and point counts plus modeled times for one strategy."""
    config.validate_for(kind)
    D = config.dataset_size
    N = config.num_resamples
    P = config.num_processes
    per_rank = config.resamples_per_rank
    workers = P - 1
    has_workers = P > 1

    verification = 0
    if kind is StrategyKind.FSD:
        data_out = FLOAT_BYTES * D * per_rank * workers
        results = FLOAT_BYTES * per_rank * workers
        peak_root = D + N * D
        peak_worker = per_rank * D if has_workers else 0
        points_root, points_worker = N * D, 0
        comp_points = N * D + per_rank * D
        parallel_points = comp_points
    elif kind in (StrategyKind.DBSR, StrategyKind.DBSA):
        data_out = FLOAT_BYTES * D * workers
        if kind is StrategyKind.DBSR:
            results = FLOAT_BYTES * D * per_rank * workers
        else:
            results = FLOAT_BYTES * STATS_PAYLOAD_FLOATS * workers
        peak_worker = D + per_rank * D if has_workers else 0
        peak_root = D + per_rank * D
        if kind is StrategyKind.DBSA and has_workers:
            # one received (m1, m2) pair on top of the dataset
            peak_root = max(peak_root, D + STATS_PAYLOAD_FLOATS)
        points_root = per_rank * D
        points_worker = per_rank * D if has_workers else 0
        comp_points = per_rank * D
        parallel_points = comp_points
    elif kind is StrategyKind.DDRS:
        data_out = 0
        results = FLOAT_BYTES * N * workers
        verification = FLOAT_BYTES * N * workers
        shard = config.shard_size
        peak_root = shard + DDRS_PAIR_FLOATS + (DDRS_PAIR_FLOATS if has_workers else 0)
        peak_worker = shard + DDRS_PAIR_FLOATS if has_workers else 0
        points_root = N * D
        points_worker = N * D if has_workers else 0
        comp_points = N * D
        parallel_points = N * D / P
    else:
        raise ConfigurationError(f"Unknown strategy: {kind}")

    return CostBreakdown(
        kind=kind,
        bytes_data_out=data_out,
        bytes_results_back=results,
        bytes_verification=verification,
        t_comm=(data_out + results) / params.bandwidth,
        t_comp=comp_points / params.compute_speed,
        t_comp_parallel=parallel_points / params.compute_speed,
        peak_floats_root=peak_root,
        peak_floats_worker=peak_worker,
        points_root=points_root,
        points_worker=points_worker,
    )


def predict_all(config: ExperimentConfig, params: CostParams) -> Dict[StrategyKind, CostBreakdown]:
    """Breakdowns for every strategy the configuration admits, in table order."""
    out: Dict[StrategyKind, CostBreakdown] = {}
    for kind in StrategyKind:
        try:
            out[kind] = predict(kind, config, params)
        except ConfigurationError as exc:
            logger.warning(f"{kind.name} not applicable: {exc}")
    return out


def comm_reduction(kind: StrategyKind, config: ExperimentConfig, params: CostParams) -> Optional[float]:
    """Baseline (DBSR) communication bytes divided by ``kind``'s; None when undefined."""
    baseline = predict(StrategyKind.DBSR, config, params).comm_bytes
    own = predict(kind, config, params).comm_bytes
    if own == 0:
        return None
    return baseline / own


@dataclass(frozen=True)
class PlanQuery:
    config: ExperimentConfig
    params: CostParams
    memory_cap_floats: int

    def __post_init__(self):
        if self.memory_cap_floats < 1:
            raise ConfigurationError(
                f"memory_cap_floats must be at least 1, got {self.memory_cap_floats}"
            )


@dataclass
class PlanResult:
    """Planner outcome; ``chosen`` is None when nothing fits the cap."""
    chosen: Optional[StrategyKind]
    breakdown: Optional[CostBreakdown]
    rationale: str
    memory_cap_floats: int
    breakdowns: Dict[StrategyKind, CostBreakdown] = field(default_factory=dict)
    feasible: Dict[StrategyKind, bool] = field(default_factory=dict)
    notes: Dict[StrategyKind, str] = field(default_factory=dict)

    @property
    def is_feasible(self) -> bool:
        return self.chosen is not None

    def to_dict(self) -> Dict[str, object]:
        return {
            "chosen": self.chosen.value if self.chosen else None,
            "feasible": {k.value: v for k, v in self.feasible.items()},
            "memory_cap_floats": self.memory_cap_floats,
            "objective": "t_comm + t_comp",
            "rationale": self.rationale,
            "breakdowns": {k.value: b.to_dict() for k, b in self.breakdowns.items()},
            "notes": {k.value: v for k, v in self.notes.items()},
        }


def plan(query: PlanQuery) -> PlanResult:
    """Cheapest strategy that fits the per-process memory cap."""
    cap = query.memory_cap_floats
    breakdowns = predict_all(query.config, query.params)
    feasible: Dict[StrategyKind, bool] = {}
    notes: Dict[StrategyKind, str] = {}

    for kind in StrategyKind:
        breakdown = breakdowns.get(kind)
        if breakdown is None:
            feasible[kind] = False
            notes[kind] = f"{kind.name}: not applicable (num_processes must divide dataset_size)"
            continue
        fits = breakdown.peak_floats_root <= cap and breakdown.peak_floats_worker <= cap
        feasible[kind] = fits
        notes[kind] = (
            f"{kind.name}: needs {breakdown.peak_floats_root} floats at root, "
            f"{breakdown.peak_floats_worker} per worker; cap {cap} -> "
            f"{'fits' if fits else 'exceeds cap'}"
        )

    candidates = [k for k in PLAN_PREFERENCE if feasible[k]]
    if not candidates:
        rationale = "No strategy fits the memory cap.\n" + "\n".join(notes[k] for k in StrategyKind)
        logger.warning(f"Planner found no feasible strategy under cap {cap}")
        return PlanResult(None, None, rationale, cap, breakdowns, feasible, notes)

    chosen = min(candidates, key=lambda k: (breakdowns[k].total_time, PLAN_PREFERENCE.index(k)))
    best = breakdowns[chosen]
    others = ", ".join(
        f"{k.name} {breakdowns[k].total_time:.6g} s" for k in candidates if k is not chosen
    )
    rationale = (
        f"Objective t_comm + t_comp. {chosen.name} ({PROFILES[chosen].use_case}) "
        f"fits the cap with {best.peak_floats} floats/process and costs "
        f"{best.total_time:.6g} s (t_comm {best.t_comm:.6g} s, t_comp {best.t_comp:.6g} s)."
    )
    if others:
        rationale += f" Other feasible: {others}."
    logger.info(f"Planner chose {chosen.name} under cap {cap}")
    return PlanResult(chosen, best, rationale, cap, breakdowns, feasible, notes)


SWEEP_FIELDS = {"N": "num_resamples", "D": "dataset_size", "P": "num_processes"}


def sweep(
    config: ExperimentConfig,
    params: CostParams,
    vary: str,
    values: Iterable[int],
    kinds: Sequence[StrategyKind] = tuple(StrategyKind),
) -> List[Dict[str, object]]:
    """Prediction rows with one of N, D or P varied; invalid points are skipped."""
    if vary not in SWEEP_FIELDS:
        raise ConfigurationError(f"Can only vary one of {sorted(SWEEP_FIELDS)}, got {vary!r}")
    rows: List[Dict[str, object]] = []
    for value in values:
        try:
            point = replace(config, **{SWEEP_FIELDS[vary]: int(value)})
        except ConfigurationError as exc:
            logger.warning(f"Skipping {vary}={value}: {exc}")
            continue
        for kind in kinds:
            try:
                b = predict(kind, point, params)
            except ConfigurationError as exc:
                logger.warning(f"Skipping {kind.name} at {vary}={value}: {exc}")
                continue
            rows.append({
                vary: int(value),
                "strategy": kind.value,
                "comm_bytes": b.comm_bytes,
                "t_comm": b.t_comm,
                "t_comp": b.t_comp,
                "total_time": b.total_time,
                "peak_floats": b.peak_floats,
            })
    return rows
