#!/usr/bin/env python3
"""
Parallel Bootstrap Simulator - command line

Runs the four distributed bootstrap strategies (FSD, DBSR, DBSA, DDRS) on the
virtual message-passing fabric, evaluates their closed-form cost models,
checks measured against predicted costs and recommends a strategy for a
memory cap.

Subcommands:
- simulate  one strategy, measured ledger plus prediction and oracle
- predict   closed-form costs of one strategy
- plan      cheapest strategy under a per-process memory cap
- verify    all four strategies, measured vs predicted vs oracle
- sweep     predictions over a range of N, D or P

Without --data a deterministic standard-normal dataset of D points is
generated from --seed (SplitMix64 + Box-Muller), so every run is reproducible
without fixture files. --data reads raw little-endian float32 values, no header.

Exit codes: 0 success, 2 usage, 3 infeasible, 4 verification mismatch.
"""

import functools
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import click

from core.bootstrap import CostParams, Dataset, ExperimentConfig, StrategyKind
from core.costmodel import PlanQuery, comm_reduction, plan, predict, sweep
from core.errors import ConfigurationError, InfeasibleError, SynchronizationFault
from core.reporting import (
    failed_row,
    simulation_document,
    to_csv,
    to_json,
    to_text,
    verification_document,
    verification_row,
)
from core.settings import OUTPUT_FORMATS, Settings, load_settings
from core.strategies import run_strategy, stream_matched_oracle

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_MISMATCH = 4

STRATEGY_CHOICE = click.Choice([k.value for k in StrategyKind], case_sensitive=False)


@dataclass(frozen=True)
class RunSpec:
    """Everything one subcommand invocation needs."""
    subcommand: str
    strategy: Optional[StrategyKind]
    config: ExperimentConfig
    params: CostParams
    memory_cap: Optional[int]
    data_path: Optional[str]
    output_format: str
    deterministic: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "subcommand": self.subcommand,
            "strategy": self.strategy.value if self.strategy else None,
            "D": self.config.dataset_size,
            "N": self.config.num_resamples,
            "P": self.config.num_processes,
            "seed": self.config.seed,
            "B": self.params.bandwidth,
            "S": self.params.compute_speed,
            "memory_cap": self.memory_cap,
            "data_path": self.data_path,
        }


def experiment_options(func):
    """Experiment, cost and output flags shared by every subcommand."""
    options = [
        click.option("--D", "--dataset-size", "dataset_size", type=int, default=None,
                     help="Dataset size D (4-byte sample points)."),
        click.option("--N", "--num-resamples", "num_resamples", type=int, default=None,
                     help="Number of bootstrap resamples N."),
        click.option("--P", "--num-processes", "num_processes", type=int, default=None,
                     help="Number of virtual processes P (must divide N)."),
        click.option("--seed", type=int, default=None, help="Global 64-bit seed (default 205)."),
        click.option("--B", "--bandwidth", "bandwidth", type=float, default=None,
                     help="Bandwidth B in bytes/s."),
        click.option("--S", "--compute-speed", "compute_speed", type=float, default=None,
                     help="Compute speed S in sample points/s."),
        click.option("--format", "output_format", type=click.Choice(OUTPUT_FORMATS), default=None,
                     help="Output format (env BOOTSIM_OUTPUT_FORMAT sets the default)."),
        click.option("--deterministic", is_flag=True,
                     help="Omit the timestamp so identical runs give identical output."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def handle_errors(func):
    """Map library errors onto the documented exit codes."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except ConfigurationError as exc:
            raise click.UsageError(str(exc), ctx=ctx) from exc
        except InfeasibleError as exc:
            click.echo(to_json({
                "error": "infeasible",
                "strategy": exc.kind,
                "rank": exc.rank,
                "requested_floats": exc.requested,
                "memory_cap": exc.cap,
                "message": str(exc),
            }))
            ctx.exit(EXIT_INFEASIBLE)
        except SynchronizationFault as exc:
            click.echo(to_json({
                "error": "synchronization_fault",
                "sample": exc.sample,
                "observed_count": exc.observed,
                "expected_count": exc.expected,
                "message": str(exc),
            }))
            ctx.exit(EXIT_MISMATCH)
    return wrapper


def build_spec(settings: Settings, subcommand: str, *, strategy=None, memory_cap=None,
               data_path=None, dataset_size=None, num_resamples=None, num_processes=None,
               seed=None, bandwidth=None, compute_speed=None, output_format=None,
               deterministic=False, **_ignored) -> RunSpec:
    """Flags over settings; validates the experiment."""
    pick = lambda flag, default: default if flag is None else flag  # noqa: E731
    config = ExperimentConfig(
        dataset_size=pick(dataset_size, settings.dataset_size),
        num_resamples=pick(num_resamples, settings.num_resamples),
        num_processes=pick(num_processes, settings.num_processes),
        seed=pick(seed, settings.seed),
    )
    params = CostParams(pick(bandwidth, settings.bandwidth), pick(compute_speed, settings.compute_speed))
    kind = StrategyKind.parse(strategy) if strategy else None
    if kind is not None:
        config.validate_for(kind)
    if memory_cap is not None and memory_cap < 1:
        raise ConfigurationError(f"--memory-cap must be positive, got {memory_cap}")
    return RunSpec(
        subcommand=subcommand,
        strategy=kind,
        config=config,
        params=params,
        memory_cap=memory_cap,
        data_path=data_path,
        output_format=pick(output_format, settings.output_format),
        deterministic=deterministic,
    )


def load_dataset(spec: RunSpec) -> Dataset:
    if spec.data_path:
        return Dataset.from_file(spec.data_path, expected_size=spec.config.dataset_size)
    return Dataset.synthetic(spec.config.dataset_size, spec.config.seed)


def emit(spec: RunSpec, doc: Dict[str, Any], rows: List[Dict[str, Any]], columns=None) -> None:
    if spec.output_format == "json":
        click.echo(to_json(doc))
    elif spec.output_format == "csv":
        click.echo(to_csv(rows), nl=False)
    else:
        click.echo(to_text(rows, columns) if columns else to_text(rows))


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="YAML file overriding config/defaults.yaml.")
@click.option("--log-level", default="WARNING",
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
@click.pass_context
def cli(ctx, config_path, log_level):
    """Simulate and plan parallel bootstrap variance estimation."""
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    try:
        ctx.obj = load_settings(config_path)
    except ConfigurationError as exc:
        raise click.UsageError(str(exc), ctx=ctx) from exc


@cli.command()
@click.option("--strategy", type=STRATEGY_CHOICE, required=True)
@click.option("--memory-cap", type=int, default=None, help="Per-process cap in floats.")
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Raw little-endian float32 input of length D.")
@experiment_options
@click.pass_obj
@handle_errors
def simulate(settings: Settings, **flags):
    """Run one strategy on the fabric and report measured vs predicted costs."""
    spec = build_spec(settings, "simulate", **flags)
    data = load_dataset(spec)
    report = run_strategy(spec.strategy, data, spec.config, spec.params, spec.memory_cap)
    oracle = stream_matched_oracle(spec.strategy, data, spec.config)
    doc = simulation_document(spec.to_dict(), report, oracle, spec.deterministic)
    row = verification_row(report, oracle, settings.oracle_rel_tol)
    emit(spec, doc, [row])


@cli.command(name="predict")
@click.option("--strategy", type=STRATEGY_CHOICE, required=True)
@experiment_options
@click.pass_obj
@handle_errors
def predict_cmd(settings: Settings, **flags):
    """Closed-form communication, computation and memory of one strategy."""
    spec = build_spec(settings, "predict", **flags)
    breakdown = predict(spec.strategy, spec.config, spec.params)
    row = breakdown.to_dict()
    row["comm_reduction_vs_dbsr"] = comm_reduction(spec.strategy, spec.config, spec.params)
    doc = {"spec": spec.to_dict(), "predicted": row}
    emit(spec, doc, [row], columns=("kind", "comm_bytes", "t_comm", "t_comp",
                                    "peak_floats_root", "peak_floats_worker", "use_case"))


@cli.command(name="plan")
@click.option("--memory-cap", type=int, required=True, help="Per-process cap in floats.")
@experiment_options
@click.pass_obj
@handle_errors
def plan_cmd(settings: Settings, **flags):
    """Recommend the cheapest strategy that fits the memory cap."""
    spec = build_spec(settings, "plan", **flags)
    result = plan(PlanQuery(spec.config, spec.params, spec.memory_cap))
    doc = {"spec": spec.to_dict(), **result.to_dict()}
    rows = []
    for kind in StrategyKind:
        breakdown = result.breakdowns.get(kind)
        row = breakdown.to_dict() if breakdown else {"kind": kind.value}
        row["feasible"] = result.feasible[kind]
        row["chosen"] = kind is result.chosen
        rows.append(row)
    if spec.output_format == "text":
        click.echo(result.rationale)
    emit(spec, doc, rows, columns=("kind", "feasible", "chosen", "peak_floats_root",
                                   "peak_floats_worker", "comm_bytes", "total_time"))
    if not result.is_feasible:
        click.get_current_context().exit(EXIT_INFEASIBLE)


def _verify_one(kind: StrategyKind, data: Dataset, spec: RunSpec, settings: Settings,
                skew: Optional[Dict[int, int]]) -> Dict[str, Any]:
    try:
        spec.config.validate_for(kind)
    except ConfigurationError as exc:
        return failed_row(kind.value, "not_applicable", str(exc))
    predicted_bytes = predict(kind, spec.config, spec.params).comm_bytes
    try:
        report = run_strategy(kind, data, spec.config, spec.params, spec.memory_cap,
                              stream_skew=skew if kind is StrategyKind.DDRS else None)
    except InfeasibleError as exc:
        if spec.memory_cap is None:
            raise
        logger.warning(f"{kind.name} infeasible under cap {spec.memory_cap}: {exc}")
        return failed_row(kind.value, "infeasible", str(exc), predicted_bytes)
    except SynchronizationFault as exc:
        return failed_row(kind.value, "sync_fault", str(exc), predicted_bytes)
    oracle = stream_matched_oracle(kind, data, spec.config)
    # pooled (m1, m2) differs from the rank-major oracle only by summation order
    tolerance = settings.pooled_rel_tol if kind is StrategyKind.DBSA else settings.oracle_rel_tol
    return verification_row(report, oracle, tolerance)


@cli.command()
@click.option("--memory-cap", type=int, default=None,
              help="Per-process cap in floats; strategies over it are marked infeasible.")
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Strategies run on independent fabrics in this many threads.")
@click.option("--desync-rank", type=int, default=None, hidden=True,
              help="Advance this DDRS rank's stream by one step (fault injection).")
@experiment_options
@click.pass_obj
@handle_errors
def verify(settings: Settings, jobs: int, desync_rank: Optional[int], **flags):
    """Run all four strategies and check bytes, memory, points and estimates."""
    spec = build_spec(settings, "verify", **flags)
    num_processes = spec.config.num_processes
    if desync_rank is not None and not 0 <= desync_rank < num_processes:
        raise ConfigurationError(
            f"--desync-rank must be in [0, {num_processes}), got {desync_rank}"
        )
    data = load_dataset(spec)
    skew = {desync_rank: 1} if desync_rank is not None else None
    kinds = list(StrategyKind)
    run_one = functools.partial(_verify_one, data=data, spec=spec,
                                settings=settings, skew=skew)
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        rows = list(pool.map(run_one, kinds))
    doc = verification_document(spec.to_dict(), rows, spec.deterministic)
    emit(spec, doc, rows)
    if not doc["ok"]:
        click.get_current_context().exit(EXIT_MISMATCH)


@cli.command(name="sweep")
@click.option("--vary", type=click.Choice(["N", "D", "P"]), required=True)
@click.option("--values", "values_text", required=True, help="Comma-separated values, e.g. 100,1000,10000.")
@experiment_options
@click.pass_obj
@handle_errors
def sweep_cmd(settings: Settings, vary: str, values_text: str, **flags):
    """Predicted costs of all strategies while one parameter varies."""
    spec = build_spec(settings, "sweep", **flags)
    try:
        values = [int(v) for v in values_text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"--values must be comma-separated integers: {exc}") from exc
    rows = sweep(spec.config, spec.params, vary, values)
    doc = {"spec": spec.to_dict(), "vary": vary, "rows": rows}
    emit(spec, doc, rows, columns=(vary, "strategy", "comm_bytes", "t_comm", "t_comp",
                                   "total_time", "peak_floats"))


def main():
    cli(prog_name="parallel_bootstrap_cli")


if __name__ == "__main__":
    main()
