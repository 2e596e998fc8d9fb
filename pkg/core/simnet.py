"""
Virtual message-passing fabric.

P virtual processes run ``async def`` rank programs under a deterministic
cooperative scheduler: at every scheduling point the live ranks are visited in
ascending order and each runnable rank runs until it blocks on a receive or
finishes. No event loop, threads or clocks are involved, so a run is a pure
function of the programs and their inputs.

The fabric keeps the ledger the cost models are checked against:

- bytes per (source, dest) link and per channel, 4 bytes per payload value
  (headers are not accounted);
- resident and peak accounted floats per process, declared by the programs
  through ``account_alloc`` / ``account_free``;
- sample points processed per process.

Deadlock is detected by quiescence: no rank can run and at least one is
blocked.
"""
from __future__ import annotations

import inspect
import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Any, Awaitable, Callable, Deque, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.constants import CHANNEL_DATA_OUT, CHANNELS, FLOAT_BYTES
from core.errors import AccountingError, DeadlockError, InfeasibleError, ProtocolError

logger = logging.getLogger(__name__)

RankProgram = Callable[["VirtualProcess"], Awaitable[Any]]


@dataclass(frozen=True, eq=False)
class Message:
    """One point-to-point transfer."""
    source: int
    dest: int
    payload: np.ndarray
    channel: str = CHANNEL_DATA_OUT

    @property
    def accounted_bytes(self) -> int:
        return FLOAT_BYTES * int(self.payload.size)


@dataclass
class ProcessLedger:
    """Final counters of one virtual process."""
    rank: int
    floats_peak: int
    points_processed: int
    messages_sent: int
    messages_received: int


@dataclass
class FabricLedger:
    """Byte, memory and computation counters of one fabric run."""
    num_processes: int
    bytes_by_link: Dict[Tuple[int, int], int] = field(default_factory=dict)
    bytes_by_channel: Dict[str, int] = field(default_factory=lambda: {c: 0 for c in CHANNELS})
    total_bytes: int = 0
    per_process: List[ProcessLedger] = field(default_factory=list)

    def credit(self, message: Message) -> None:
        nbytes = message.accounted_bytes
        link = (message.source, message.dest)
        self.bytes_by_link[link] = self.bytes_by_link.get(link, 0) + nbytes
        self.bytes_by_channel[message.channel] = self.bytes_by_channel.get(message.channel, 0) + nbytes
        self.total_bytes += nbytes

    def link_bytes(self, source: int, dest: int) -> int:
        return self.bytes_by_link.get((source, dest), 0)

    def channel_bytes(self, channel: str) -> int:
        return self.bytes_by_channel.get(channel, 0)

    @property
    def peak_floats_per_rank(self) -> List[int]:
        return [p.floats_peak for p in self.per_process]

    @property
    def points_per_rank(self) -> List[int]:
        return [p.points_processed for p in self.per_process]


class _ReceiveWait:
    """Yielded to the scheduler by a rank that has nothing to receive yet."""

    def __init__(self, rank: int, source: int):
        self.rank = rank
        self.source = source

    def __await__(self):
        yield self


class VirtualProcess:
    """One rank: inbox per source, memory and computation counters."""

    def __init__(self, rank: int, fabric: "Fabric"):
        self.logger = logging.getLogger(__name__)
        self.rank = rank
        self._fabric = fabric
        self.inbox: Dict[int, Deque[Message]] = defaultdict(deque)
        self.floats_resident = 0
        self.floats_peak = 0
        self.points_processed = 0
        self.messages_sent = 0
        self.messages_received = 0

    @property
    def num_processes(self) -> int:
        return self._fabric.num_processes

    @property
    def is_root(self) -> bool:
        return self.rank == 0

    def send(self, dest: int, payload: Sequence[float], channel: str = CHANNEL_DATA_OUT) -> None:
        """Eager, non-blocking send; the payload is copied."""
        self._fabric.deliver(self.rank, dest, payload, channel)
        self.messages_sent += 1

    async def recv(self, source: int) -> np.ndarray:
        """Next payload from ``source`` in FIFO order; yields while none is pending."""
        self._fabric.check_rank(source)
        while not self.inbox[source]:
            await _ReceiveWait(self.rank, source)
        message = self.inbox[source].popleft()
        self.messages_received += 1
        return message.payload

    def account_alloc(self, floats: int) -> None:
        if floats < 0:
            raise AccountingError(f"rank {self.rank}: cannot allocate {floats} floats")
        resident = self.floats_resident + floats
        cap = self._fabric.memory_cap_floats
        if cap is not None and resident > cap:
            self.logger.error(f"rank {self.rank}: {resident} floats exceeds cap {cap}")
            raise InfeasibleError(self.rank, resident, cap)
        self.floats_resident = resident
        self.floats_peak = max(self.floats_peak, resident)

    def account_free(self, floats: int) -> None:
        if floats < 0 or floats > self.floats_resident:
            raise AccountingError(
                f"rank {self.rank}: cannot free {floats} floats with "
                f"{self.floats_resident} resident"
            )
        self.floats_resident -= floats

    def account_points(self, points: int) -> None:
        if points < 0:
            raise AccountingError(f"rank {self.rank}: negative point count {points}")
        self.points_processed += points

    def snapshot(self) -> ProcessLedger:
        return ProcessLedger(
            rank=self.rank,
            floats_peak=self.floats_peak,
            points_processed=self.points_processed,
            messages_sent=self.messages_sent,
            messages_received=self.messages_received,
        )


class Fabric:
    """
    A single-use fabric of ``num_processes`` virtual processes.

    ``run`` executes one program per rank (the same coroutine function for
    every rank; it branches on ``proc.rank``) and returns the ledger. Rank
    return values are kept in ``results``.
    """

    def __init__(self, num_processes: int, memory_cap_floats: Optional[int] = None):
        self.logger = logging.getLogger(__name__)
        if num_processes < 1:
            raise ProtocolError(f"A fabric needs at least one process, got {num_processes}")
        if memory_cap_floats is not None and memory_cap_floats < 1:
            raise ProtocolError(f"Memory cap must be positive, got {memory_cap_floats}")
        self.num_processes = num_processes
        self.memory_cap_floats = memory_cap_floats
        self.processes = [VirtualProcess(r, self) for r in range(num_processes)]
        self.ledger = FabricLedger(num_processes=num_processes)
        self.results: List[Any] = [None] * num_processes
        self._started = False

    def check_rank(self, rank: int) -> None:
        if not 0 <= rank < self.num_processes:
            raise ProtocolError(f"Invalid rank {rank} for a fabric of {self.num_processes}")

    def deliver(self, source: int, dest: int, payload: Sequence[float], channel: str) -> None:
        self.check_rank(source)
        self.check_rank(dest)
        if source == dest:
            raise ProtocolError(f"rank {source} cannot send to itself")
        if channel not in CHANNELS:
            raise ProtocolError(f"Unknown channel {channel!r}; expected one of {CHANNELS}")
        data = np.array(payload, dtype=np.float64).ravel()
        data.setflags(write=False)
        message = Message(source=source, dest=dest, payload=data, channel=channel)
        self.processes[dest].inbox[source].append(message)
        self.ledger.credit(message)
        self.logger.debug(f"{source} -> {dest} [{channel}] {message.accounted_bytes} bytes")

    def run(self, program: RankProgram) -> FabricLedger:
        if self._started:
            raise ProtocolError("A fabric runs exactly one program; create a new one")
        self._started = True
        self.logger.info(f"Fabric starting {self.num_processes} virtual processes")

        coros = []
        for proc in self.processes:
            coro = program(proc)
            if not inspect.iscoroutine(coro):
                raise ProtocolError("Rank programs must be coroutine functions (async def)")
            coros.append(coro)

        waiting: Dict[int, Optional[int]] = {r: None for r in range(self.num_processes)}
        live = list(range(self.num_processes))
        try:
            while live:
                progressed = False
                for rank in list(live):
                    source = waiting[rank]
                    if source is not None and not self.processes[rank].inbox[source]:
                        continue
                    progressed = True
                    try:
                        wait = coros[rank].send(None)
                    except StopIteration as stop:
                        self.results[rank] = stop.value
                        waiting[rank] = None
                        live.remove(rank)
                        continue
                    if not isinstance(wait, _ReceiveWait):
                        raise ProtocolError(
                            f"rank {rank} awaited {wait!r}; only fabric receives may block"
                        )
                    waiting[rank] = wait.source
                if not progressed:
                    blocked = {r: waiting[r] for r in live}
                    error = DeadlockError(blocked)
                    self.logger.error(str(error))
                    raise error
        finally:
            for coro in coros:
                coro.close()

        leftovers = [
            (m.source, m.dest)
            for proc in self.processes
            for queue in proc.inbox.values()
            for m in queue
        ]
        if leftovers:
            self.logger.error(f"Unconsumed messages at termination: {leftovers}")
            raise ProtocolError(f"{len(leftovers)} unconsumed message(s) on links {sorted(set(leftovers))}")

        self.ledger.per_process = [proc.snapshot() for proc in self.processes]
        self.logger.info(
            f"Fabric finished: {self.ledger.total_bytes} bytes moved, "
            f"peak floats {self.ledger.peak_floats_per_rank}"
        )
        return self.ledger


def fabric_run(
    num_processes: int,
    program: RankProgram,
    memory_cap_floats: Optional[int] = None,
) -> FabricLedger:
    """Run ``program`` on every rank of a fresh fabric and return its ledger."""
    return Fabric(num_processes, memory_cap_floats).run(program)
