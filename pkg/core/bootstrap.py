"""
Bootstrap domain types, the sequential oracle and the summary-statistic algebra.

The estimator throughout is the variance of the bootstrap sample mean, in the
population convention (divisor = number of resamples). Sample means of the N
resamples are reduced through (m1, m2) = (mean of means, mean of squared
means), and Var = m2 - m1**2. Reductions sum left to right in sequence order
so every strategy and the oracle share one canonical summation order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from core.constants import FLOAT_BYTES, MASK64, SYNTHETIC_DATA_STREAM
from core.errors import AggregationError, ConfigurationError, DomainError
from core.prng import RngState, draw_indices, rank_substream, rng_new, standard_normal

logger = logging.getLogger(__name__)

_EPS = float(np.finfo(np.float64).eps)


class StrategyKind(Enum):
    """The four distribution strategies, in comparison-table order."""
    FSD = "fsd"
    DBSR = "dbsr"
    DBSA = "dbsa"
    DDRS = "ddrs"

    @classmethod
    def parse(cls, value: Union[str, "StrategyKind"]) -> "StrategyKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigurationError(f"Unknown strategy: {value}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """One bootstrap experiment: D points, N resamples, P processes, a global seed."""
    dataset_size: int
    num_resamples: int
    num_processes: int
    seed: int

    def __post_init__(self):
        for name in ("dataset_size", "num_resamples", "num_processes"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
        if not 0 <= self.seed <= MASK64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned value, got {self.seed}")
        if self.num_resamples % self.num_processes:
            raise ConfigurationError(
                f"num_processes ({self.num_processes}) must divide "
                f"num_resamples ({self.num_resamples})"
            )

    @property
    def resamples_per_rank(self) -> int:
        return self.num_resamples // self.num_processes

    @property
    def shard_size(self) -> int:
        return self.dataset_size // self.num_processes

    def validate_for(self, kind: StrategyKind) -> None:
        """Strategy-specific divisibility rules."""
        if kind is StrategyKind.DDRS and self.dataset_size % self.num_processes:
            raise ConfigurationError(
                f"DDRS needs num_processes ({self.num_processes}) to divide "
                f"dataset_size ({self.dataset_size})"
            )


@dataclass(frozen=True)
class CostParams:
    """Bandwidth B in bytes/s and compute speed S in sample points/s."""
    bandwidth: float
    compute_speed: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ConfigurationError(f"bandwidth must be positive, got {self.bandwidth}")
        if not self.compute_speed > 0:
            raise ConfigurationError(f"compute_speed must be positive, got {self.compute_speed}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Sample points held in double precision, accounted at 4 bytes each."""
    values: np.ndarray
    element_width: int = field(default=FLOAT_BYTES, init=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64).ravel()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def byte_size(self) -> int:
        return self.element_width * len(self)

    def shard(self, rank: int, num_processes: int) -> "Dataset":
        """Contiguous D/P slice owned by ``rank``."""
        if len(self) % num_processes:
            raise ConfigurationError(
                f"Cannot shard {len(self)} points evenly over {num_processes} processes"
            )
        if not 0 <= rank < num_processes:
            raise DomainError(f"Rank {rank} outside [0, {num_processes})")
        size = len(self) // num_processes
        return Dataset(self.values[rank * size:(rank + 1) * size])

    def shards(self, num_processes: int) -> list:
        return [self.shard(r, num_processes) for r in range(num_processes)]

    @classmethod
    def concatenate(cls, parts: Iterable["Dataset"]) -> "Dataset":
        return cls(np.concatenate([p.values for p in parts]))

    @classmethod
    def from_file(cls, path: Union[str, Path], expected_size: Optional[int] = None) -> "Dataset":
        """Raw little-endian float32 array, no header; widened to double."""
        raw = np.fromfile(Path(path), dtype="<f4")
        if expected_size is not None and raw.size != expected_size:
            raise ConfigurationError(
                f"{path} holds {raw.size} float32 values, expected {expected_size}"
            )
        if raw.size == 0:
            raise ConfigurationError(f"{path} holds no sample points")
        logger.info(f"Loaded {raw.size} sample points from {path}")
        return cls(raw.astype(np.float64))

    def to_file(self, path: Union[str, Path]) -> None:
        self.values.astype("<f4").tofile(Path(path))

    @classmethod
    def synthetic(cls, size: int, seed: int) -> "Dataset":
        """Deterministic standard-normal data from the reserved data stream."""
        if size < 1:
            raise ConfigurationError(f"Synthetic dataset size must be positive, got {size}")
        values, _ = standard_normal(rank_substream(seed, SYNTHETIC_DATA_STREAM), size)
        return cls(values)


@dataclass(frozen=True)
class SummaryStats:
    """(m1, m2) over ``count`` sample means."""
    m1: float
    m2: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise DomainError(f"SummaryStats count must be at least 1, got {self.count}")

    def as_payload(self) -> np.ndarray:
        return np.array([self.m1, self.m2], dtype=np.float64)


@dataclass(frozen=True)
class VarianceEstimate:
    value: float

    def __post_init__(self):
        if not self.value >= 0.0:
            raise DomainError(f"Variance estimate must be non-negative, got {self.value}")

    def __float__(self) -> float:
        return self.value


def _left_to_right_sum(values: Sequence[float]) -> float:
    total = 0.0
    for v in values:
        total += v
    return total


def summarize_means(means: Sequence[float]) -> SummaryStats:
    """(mean, mean of squares) of the sample means, summed in sequence order."""
    values = [float(m) for m in means]
    if not values:
        raise DomainError("summarize_means needs at least one sample mean")
    n = len(values)
    c = values[0]
    if all(v == c for v in values):
        return SummaryStats(m1=c, m2=c * c, count=n)
    m1 = _left_to_right_sum(values) / n
    m2 = _left_to_right_sum([v * v for v in values]) / n
    return SummaryStats(m1=m1, m2=m2, count=n)


def pool_stats(parts: Sequence[SummaryStats]) -> SummaryStats:
    """Unweighted mean of per-process (m1, m2); shares must be equal."""
    parts = list(parts)
    if not parts:
        raise DomainError("pool_stats needs at least one part")
    if len(parts) == 1:
        return parts[0]
    counts = {p.count for p in parts}
    if len(counts) != 1:
        raise AggregationError(
            f"Cannot pool unequal shares without weights: counts {[p.count for p in parts]}"
        )
    total = sum(p.count for p in parts)
    first = parts[0]
    if all(p.m1 == first.m1 and p.m2 == first.m2 for p in parts):
        return SummaryStats(m1=first.m1, m2=first.m2, count=total)
    k = len(parts)
    return SummaryStats(
        m1=_left_to_right_sum([p.m1 for p in parts]) / k,
        m2=_left_to_right_sum([p.m2 for p in parts]) / k,
        count=total,
    )


def variance_from_stats(stats: SummaryStats) -> VarianceEstimate:
    """
    m2 - m1**2, clamped at zero.

    A difference within the summation error of m2 (about 4 * count * eps * m2
    for left-to-right sums) is not resolvable and reads as 0.0. A difference
    below -1e-12 * max(1, |m2|) cannot come from round-off and raises
    DomainError.
    """
    raw = stats.m2 - stats.m1 * stats.m1
    allowance = 1e-12 * max(1.0, abs(stats.m2))
    if raw < -allowance:
        logger.error(f"m2 - m1^2 = {raw!r} is below the round-off allowance {allowance!r}")
        raise DomainError(
            f"Inconsistent summary statistics: m2={stats.m2!r} is below m1^2={stats.m1 * stats.m1!r}"
        )
    noise_floor = 4.0 * stats.count * _EPS * abs(stats.m2)
    if raw <= noise_floor:
        return VarianceEstimate(0.0)
    return VarianceEstimate(raw)


def resample_means(values: np.ndarray, state: RngState, count: int) -> Tuple[np.ndarray, RngState]:
    """
    Means of ``count`` resamples of ``values``.

    Resample k uses the k-th block of len(values) indices of the stream, so
    all indices of sample 0 are drawn before any of sample 1.
    """
    size = int(values.size)
    means = np.empty(count, dtype=np.float64)
    for k in range(count):
        idx, state = draw_indices(state, size, size)
        means[k] = np.mean(values[idx])
    return means, state


def sequential_bootstrap_oracle(
    data: Dataset,
    config: ExperimentConfig,
    state: Optional[RngState] = None,
) -> VarianceEstimate:
    """
    Serial bootstrap on one logical process.

    Draws N resamples of size D from a single stream, ``rng_new(config.seed)``
    unless another ``state`` is given, and returns the population variance of
    the N sample means.
    """
    if len(data) != config.dataset_size:
        raise ConfigurationError(
            f"Dataset holds {len(data)} points but dataset_size is {config.dataset_size}"
        )
    stream = rng_new(config.seed) if state is None else state
    means, _ = resample_means(data.values, stream, config.num_resamples)
    return variance_from_stats(summarize_means(means))
