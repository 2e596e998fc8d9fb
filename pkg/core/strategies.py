"""
The four distributed bootstrap protocols, run on the virtual fabric.

FSD   root draws every resample and ships N/P of them to each process.
DBSR  root sends the dataset to everyone; every rank resamples N/P times and
      workers ship their full resamples back.
DBSA  as DBSR, but every rank reduces its resamples to (m1, m2) and only that
      pair travels back.
DDRS  data is sharded D/P per rank; all ranks follow one synchronized index
      stream and send a per-sample (partial sum, partial count) to the root.

FSD uses the rank-0 substream for all resamples, DBSR/DBSA give each rank its
own substream, DDRS uses the single stream ``rng_new(seed)`` on every rank.
The root always orders sample means rank-major, then by local sample index.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from core.bootstrap import (
    CostParams,
    Dataset,
    ExperimentConfig,
    StrategyKind,
    SummaryStats,
    VarianceEstimate,
    pool_stats,
    resample_means,
    sequential_bootstrap_oracle,
    summarize_means,
    variance_from_stats,
)
from core.constants import (
    CHANNEL_DATA_OUT,
    CHANNEL_RESULTS_BACK,
    CHANNEL_VERIFICATION,
    DDRS_PAIR_FLOATS,
    DEFAULT_BANDWIDTH,
    DEFAULT_COMPUTE_SPEED,
    MAX_EXACT_COUNT,
    ROOT_RANK,
    STATS_PAYLOAD_FLOATS,
)
from core.costmodel import CostBreakdown, predict
from core.errors import ConfigurationError, InfeasibleError, ProtocolError, SynchronizationFault
from core.prng import RngState, advance, draw_indices, rank_substream, rng_new
from core.simnet import Fabric, FabricLedger, VirtualProcess

logger = logging.getLogger(__name__)


@dataclass
class StrategyReport:
    """Estimate plus measured and predicted costs of one strategy run."""
    kind: StrategyKind
    estimate: VarianceEstimate
    measured_bytes: int
    measured_bytes_by_channel: Dict[str, int]
    measured_peak_floats_per_rank: List[int]
    measured_points_per_rank: List[int]
    predicted: CostBreakdown
    ledger: FabricLedger = field(repr=False)

    def mismatches(self) -> List[str]:
        """Every measured counter that differs from its prediction."""
        p = self.predicted
        problems = []
        expected_channels = {
            CHANNEL_DATA_OUT: p.bytes_data_out,
            CHANNEL_RESULTS_BACK: p.bytes_results_back,
            CHANNEL_VERIFICATION: p.bytes_verification,
        }
        for channel, expected in expected_channels.items():
            measured = self.measured_bytes_by_channel.get(channel, 0)
            if measured != expected:
                problems.append(f"{channel} bytes: measured {measured}, predicted {expected}")
        for rank, (peak, points) in enumerate(
            zip(self.measured_peak_floats_per_rank, self.measured_points_per_rank)
        ):
            want_peak = p.peak_floats_root if rank == ROOT_RANK else p.peak_floats_worker
            want_points = p.points_root if rank == ROOT_RANK else p.points_worker
            if peak != want_peak:
                problems.append(f"rank {rank} peak floats: measured {peak}, predicted {want_peak}")
            if points != want_points:
                problems.append(f"rank {rank} points: measured {points}, predicted {want_points}")
        return problems

    @property
    def matches_prediction(self) -> bool:
        return not self.mismatches()


def _resolve_fabric(config: ExperimentConfig, fabric: Optional[Fabric],
                    memory_cap_floats: Optional[int]) -> Fabric:
    if fabric is None:
        return Fabric(config.num_processes, memory_cap_floats)
    if fabric.num_processes != config.num_processes:
        raise ConfigurationError(
            f"Fabric has {fabric.num_processes} processes, config asks for {config.num_processes}"
        )
    return fabric


def _check_dataset(data: Dataset, config: ExperimentConfig) -> None:
    if len(data) != config.dataset_size:
        raise ConfigurationError(
            f"Dataset holds {len(data)} points but dataset_size is {config.dataset_size}"
        )


def _execute(kind: StrategyKind, fabric: Fabric, program, config: ExperimentConfig,
             params: Optional[CostParams]) -> StrategyReport:
    try:
        ledger = fabric.run(program)
    except InfeasibleError as exc:
        raise InfeasibleError(exc.rank, exc.requested, exc.cap, kind.name) from exc
    estimate = fabric.results[ROOT_RANK]
    if not isinstance(estimate, VarianceEstimate):
        raise ProtocolError(f"{kind.name} root returned {estimate!r} instead of an estimate")
    params = params or CostParams(DEFAULT_BANDWIDTH, DEFAULT_COMPUTE_SPEED)
    channels = dict(ledger.bytes_by_channel)
    report = StrategyReport(
        kind=kind,
        estimate=estimate,
        measured_bytes=channels[CHANNEL_DATA_OUT] + channels[CHANNEL_RESULTS_BACK],
        measured_bytes_by_channel=channels,
        measured_peak_floats_per_rank=ledger.peak_floats_per_rank,
        measured_points_per_rank=ledger.points_per_rank,
        predicted=predict(kind, config, params),
        ledger=ledger,
    )
    logger.info(
        f"{kind.name} finished: estimate {estimate.value!r}, "
        f"{report.measured_bytes} bytes measured, {report.predicted.comm_bytes} predicted"
    )
    return report


def _draw_resamples(values: np.ndarray, state: RngState, count: int) -> np.ndarray:
    size = int(values.size)
    samples = np.empty((count, size), dtype=np.float64)
    for k in range(count):
        idx, state = draw_indices(state, size, size)
        samples[k] = values[idx]
    return samples


def run_fsd(
    data: Dataset,
    config: ExperimentConfig,
    fabric: Optional[Fabric] = None,
    params: Optional[CostParams] = None,
    memory_cap_floats: Optional[int] = None,
) -> StrategyReport:
    """Full sample distribution: the root generates and ships every resample."""
    _check_dataset(data, config)
    fabric = _resolve_fabric(config, fabric, memory_cap_floats)
    D = config.dataset_size
    N = config.num_resamples
    P = config.num_processes
    share = config.resamples_per_rank

    async def program(proc: VirtualProcess):
        if proc.is_root:
            proc.account_alloc(D)
            proc.account_alloc(N * D)
            samples = _draw_resamples(data.values, rank_substream(config.seed, ROOT_RANK), N)
            proc.account_points(N * D)
            for dest in range(1, P):
                for k in range(dest * share, (dest + 1) * share):
                    proc.send(dest, samples[k], CHANNEL_DATA_OUT)
            proc.account_free((P - 1) * share * D)
            means = [float(np.mean(samples[k])) for k in range(share)]
            proc.account_free(share * D)
            for source in range(1, P):
                remote = await proc.recv(source)
                means.extend(float(m) for m in remote)
            proc.account_free(D)
            return variance_from_stats(summarize_means(means))

        received = []
        for _ in range(share):
            received.append(await proc.recv(ROOT_RANK))
            proc.account_alloc(D)
        means = [float(np.mean(sample)) for sample in received]
        proc.account_free(share * D)
        proc.send(ROOT_RANK, means, CHANNEL_RESULTS_BACK)
        return None

    return _execute(StrategyKind.FSD, fabric, program, config, params)


async def _replicate_and_resample(proc: VirtualProcess, data: Dataset,
                                  config: ExperimentConfig) -> np.ndarray:
    """Dataset to every rank, then N/P resamples from the rank's own substream."""
    D = config.dataset_size
    share = config.resamples_per_rank
    if proc.is_root:
        values = data.values
        proc.account_alloc(D)
        for dest in range(1, proc.num_processes):
            proc.send(dest, values, CHANNEL_DATA_OUT)
    else:
        values = await proc.recv(ROOT_RANK)
        proc.account_alloc(D)
    proc.account_alloc(share * D)
    samples = _draw_resamples(values, rank_substream(config.seed, proc.rank), share)
    proc.account_points(share * D)
    return samples


def run_dbsr(
    data: Dataset,
    config: ExperimentConfig,
    fabric: Optional[Fabric] = None,
    params: Optional[CostParams] = None,
    memory_cap_floats: Optional[int] = None,
) -> StrategyReport:
    """Data broadcast, full resamples returned to the root."""
    _check_dataset(data, config)
    fabric = _resolve_fabric(config, fabric, memory_cap_floats)
    D = config.dataset_size
    share = config.resamples_per_rank

    async def program(proc: VirtualProcess):
        samples = await _replicate_and_resample(proc, data, config)
        if not proc.is_root:
            for sample in samples:
                proc.send(ROOT_RANK, sample, CHANNEL_RESULTS_BACK)
            proc.account_free(share * D)
            proc.account_free(D)
            return None

        means = [float(np.mean(sample)) for sample in samples]
        proc.account_free(share * D)
        for source in range(1, proc.num_processes):
            for _ in range(share):
                sample = await proc.recv(source)
                proc.account_alloc(D)
                means.append(float(np.mean(sample)))
                proc.account_free(D)
        proc.account_free(D)
        return variance_from_stats(summarize_means(means))

    return _execute(StrategyKind.DBSR, fabric, program, config, params)


def run_dbsa(
    data: Dataset,
    config: ExperimentConfig,
    fabric: Optional[Fabric] = None,
    params: Optional[CostParams] = None,
    memory_cap_floats: Optional[int] = None,
) -> StrategyReport:
    """Data broadcast, only (m1, m2) returned to the root."""
    _check_dataset(data, config)
    fabric = _resolve_fabric(config, fabric, memory_cap_floats)
    D = config.dataset_size
    share = config.resamples_per_rank

    async def program(proc: VirtualProcess):
        samples = await _replicate_and_resample(proc, data, config)
        local = summarize_means([float(np.mean(sample)) for sample in samples])
        proc.account_free(share * D)
        if not proc.is_root:
            proc.send(ROOT_RANK, local.as_payload(), CHANNEL_RESULTS_BACK)
            proc.account_free(D)
            return None

        parts = [local]
        for source in range(1, proc.num_processes):
            payload = await proc.recv(source)
            proc.account_alloc(STATS_PAYLOAD_FLOATS)
            parts.append(SummaryStats(m1=float(payload[0]), m2=float(payload[1]), count=share))
            proc.account_free(STATS_PAYLOAD_FLOATS)
        proc.account_free(D)
        return variance_from_stats(pool_stats(parts))

    return _execute(StrategyKind.DBSA, fabric, program, config, params)


def run_ddrs(
    local_shards: Sequence[Dataset],
    config: ExperimentConfig,
    fabric: Optional[Fabric] = None,
    params: Optional[CostParams] = None,
    memory_cap_floats: Optional[int] = None,
    stream_skew: Optional[Dict[int, int]] = None,
) -> StrategyReport:
    """
    Distributed data with a synchronized index stream.

    ``stream_skew`` maps a rank to a number of generator steps to skip before
    the first sample; any non-empty skew desynchronizes that rank and is
    reported as a ``SynchronizationFault`` by the root.
    """
    config.validate_for(StrategyKind.DDRS)
    P = config.num_processes
    D = config.dataset_size
    N = config.num_resamples
    shard_size = config.shard_size
    if len(local_shards) != P:
        raise ConfigurationError(f"DDRS needs {P} shards, got {len(local_shards)}")
    for rank, shard in enumerate(local_shards):
        if len(shard) != shard_size:
            raise ConfigurationError(
                f"Shard {rank} holds {len(shard)} points, expected {shard_size}"
            )
    if D >= MAX_EXACT_COUNT:
        raise ConfigurationError(
            f"dataset_size {D} is too large for exact float counts (limit {MAX_EXACT_COUNT})"
        )
    fabric = _resolve_fabric(config, fabric, memory_cap_floats)
    skew = dict(stream_skew or {})

    async def program(proc: VirtualProcess):
        shard = local_shards[proc.rank].values
        lo = proc.rank * shard_size
        hi = lo + shard_size
        proc.account_alloc(shard_size)
        state = rng_new(config.seed)
        if skew.get(proc.rank):
            state = advance(state, skew[proc.rank])

        means = []
        for sample in range(N):
            idx, state = draw_indices(state, D, D)
            proc.account_points(D)
            mine = (idx >= lo) & (idx < hi)
            partial_sum = float(np.sum(shard[idx[mine] - lo]))
            partial_count = int(np.count_nonzero(mine))
            proc.account_alloc(DDRS_PAIR_FLOATS)

            if not proc.is_root:
                proc.send(ROOT_RANK, [partial_sum], CHANNEL_RESULTS_BACK)
                proc.send(ROOT_RANK, [partial_count], CHANNEL_VERIFICATION)
                proc.account_free(DDRS_PAIR_FLOATS)
                continue

            global_sum = partial_sum
            global_count = partial_count
            for source in range(1, P):
                remote_sum = await proc.recv(source)
                remote_count = await proc.recv(source)
                proc.account_alloc(DDRS_PAIR_FLOATS)
                global_sum += float(remote_sum[0])
                global_count += int(remote_count[0])
                proc.account_free(DDRS_PAIR_FLOATS)
            proc.account_free(DDRS_PAIR_FLOATS)
            if global_count != D:
                fault = SynchronizationFault(sample, global_count, D)
                logger.error(str(fault))
                raise fault
            means.append(global_sum / D)

        proc.account_free(shard_size)
        if proc.is_root:
            return variance_from_stats(summarize_means(means))
        return None

    return _execute(StrategyKind.DDRS, fabric, program, config, params)


def run_strategy(
    kind: StrategyKind,
    data: Dataset,
    config: ExperimentConfig,
    params: Optional[CostParams] = None,
    memory_cap_floats: Optional[int] = None,
    stream_skew: Optional[Dict[int, int]] = None,
) -> StrategyReport:
    """Run ``kind`` on a fresh fabric; DDRS receives ``data`` pre-sharded."""
    config.validate_for(kind)
    if kind is StrategyKind.DDRS:
        _check_dataset(data, config)
        return run_ddrs(data.shards(config.num_processes), config, params=params,
                        memory_cap_floats=memory_cap_floats, stream_skew=stream_skew)
    runners = {
        StrategyKind.FSD: run_fsd,
        StrategyKind.DBSR: run_dbsr,
        StrategyKind.DBSA: run_dbsa,
    }
    return runners[kind](data, config, params=params, memory_cap_floats=memory_cap_floats)


def stream_matched_oracle(kind: StrategyKind, data: Dataset, config: ExperimentConfig) -> VarianceEstimate:
    """Sequential estimate drawn with the same stream discipline as ``kind``."""
    if kind is StrategyKind.FSD:
        return sequential_bootstrap_oracle(data, config, rank_substream(config.seed, ROOT_RANK))
    if kind is StrategyKind.DDRS:
        return sequential_bootstrap_oracle(data, config, rng_new(config.seed))
    _check_dataset(data, config)
    means: List[float] = []
    for rank in range(config.num_processes):
        block, _ = resample_means(
            data.values, rank_substream(config.seed, rank), config.resamples_per_rank
        )
        means.extend(float(m) for m in block)
    return variance_from_stats(summarize_means(means))
