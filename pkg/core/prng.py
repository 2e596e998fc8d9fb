"""
Bit-reproducible SplitMix64 streams.

Every stream is a plain 64-bit counter advanced by a fixed odd increment, so a
``RngState`` is a value: advancing it returns a new state and two states with
equal counters produce identical output forever. Scalar functions work on
Python ints; the block functions evaluate many steps at once with numpy
``uint64`` arithmetic and are bit-identical to the same number of scalar steps.

Index reduction is a plain modulo with exactly one generator step per index.
Synchronized consumers (every rank of a distributed resampling run) rely on
that fixed rate to stay aligned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core.constants import (
    DOUBLE_UNIT,
    MASK64,
    SPLITMIX_GAMMA,
    SPLITMIX_MIX1,
    SPLITMIX_MIX2,
)
from core.errors import DomainError

_GAMMA64 = np.uint64(SPLITMIX_GAMMA)
_MIX1_64 = np.uint64(SPLITMIX_MIX1)
_MIX2_64 = np.uint64(SPLITMIX_MIX2)
_SHIFT30 = np.uint64(30)
_SHIFT27 = np.uint64(27)
_SHIFT31 = np.uint64(31)
_SHIFT11 = np.uint64(11)


@dataclass(frozen=True)
class RngState:
    """Counter of one SplitMix64 stream."""
    state: int

    def __post_init__(self):
        if not 0 <= self.state <= MASK64:
            raise DomainError(f"RngState must be a 64-bit unsigned value, got {self.state}")


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * SPLITMIX_MIX1) & MASK64
    z = ((z ^ (z >> 27)) * SPLITMIX_MIX2) & MASK64
    return z ^ (z >> 31)


def rng_new(seed: int) -> RngState:
    """Stream whose counter starts at ``seed``."""
    if not 0 <= seed <= MASK64:
        raise DomainError(f"Seed must be a 64-bit unsigned value, got {seed}")
    return RngState(seed)


def rng_next_u64(state: RngState) -> Tuple[int, RngState]:
    """One SplitMix64 step: (output, advanced state)."""
    advanced = (state.state + SPLITMIX_GAMMA) & MASK64
    return _mix(advanced), RngState(advanced)


def rng_bounded_index(state: RngState, bound: int) -> Tuple[int, RngState]:
    """Index in [0, bound) from exactly one generator step."""
    if bound < 1:
        raise DomainError(f"Index bound must be positive, got {bound}")
    value, state = rng_next_u64(state)
    return value % bound, state


def rank_substream(seed: int, rank: int) -> RngState:
    """Independent stream for one process rank, derived from the global seed."""
    if rank < 0:
        raise DomainError(f"Rank must be non-negative, got {rank}")
    if not 0 <= seed <= MASK64:
        raise DomainError(f"Seed must be a 64-bit unsigned value, got {seed}")
    salted = seed ^ (((rank + 1) * SPLITMIX_GAMMA) & MASK64)
    mixed, _ = rng_next_u64(RngState(salted))
    return rng_new(mixed)


def advance(state: RngState, steps: int) -> RngState:
    """State after ``steps`` generator steps, without producing outputs."""
    if steps < 0:
        raise DomainError(f"Cannot advance a stream by {steps} steps")
    return RngState((state.state + steps * SPLITMIX_GAMMA) & MASK64)


def draw_u64(state: RngState, count: int) -> Tuple[np.ndarray, RngState]:
    """Next ``count`` outputs as a uint64 array."""
    if count < 0:
        raise DomainError(f"Cannot draw {count} values")
    if count == 0:
        return np.empty(0, dtype=np.uint64), state
    # uint64 array arithmetic wraps modulo 2**64
    with np.errstate(over="ignore"):
        steps = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(state.state) + steps * _GAMMA64
        z = (z ^ (z >> _SHIFT30)) * _MIX1_64
        z = (z ^ (z >> _SHIFT27)) * _MIX2_64
        z = z ^ (z >> _SHIFT31)
    return z, advance(state, count)


def draw_indices(state: RngState, bound: int, count: int) -> Tuple[np.ndarray, RngState]:
    """Next ``count`` indices in [0, bound), one step each."""
    if bound < 1:
        raise DomainError(f"Index bound must be positive, got {bound}")
    raw, state = draw_u64(state, count)
    return (raw % np.uint64(bound)).astype(np.intp), state


def uniform_doubles(state: RngState, count: int) -> Tuple[np.ndarray, RngState]:
    """Doubles in (0, 1): top 53 bits scaled, an exact 0 remapped to 2**-53."""
    raw, state = draw_u64(state, count)
    u = (raw >> _SHIFT11).astype(np.float64) * DOUBLE_UNIT
    u[u == 0.0] = DOUBLE_UNIT
    return u, state


def standard_normal(state: RngState, count: int) -> Tuple[np.ndarray, RngState]:
    """
    Box-Muller standard normals.

    Uniforms are consumed in pairs (u1, u2); each pair yields
    sqrt(-2 ln u1) cos(2 pi u2) followed by sqrt(-2 ln u1) sin(2 pi u2).
    An odd ``count`` drops the last sine value but still consumes its pair.
    """
    if count < 0:
        raise DomainError(f"Cannot draw {count} normals")
    pairs = (count + 1) // 2
    u, state = uniform_doubles(state, 2 * pairs)
    u1 = u[0::2]
    u2 = u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * math.pi * u2
    out = np.empty(2 * pairs, dtype=np.float64)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count], state
