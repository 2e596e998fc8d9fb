"""Exception hierarchy for the bootstrap simulator."""
from __future__ import annotations

from typing import Dict, Optional


class BootstrapSimError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(BootstrapSimError, ValueError):
    """Invalid experiment, cost or run configuration."""


class DomainError(BootstrapSimError, ValueError):
    """An argument lies outside the domain of an operation."""


class AggregationError(BootstrapSimError, ValueError):
    """Summary statistics that cannot be pooled without weighting."""


class ProtocolError(BootstrapSimError, RuntimeError):
    """Misuse of the virtual message-passing fabric."""


class DeadlockError(ProtocolError):
    """Every unfinished rank is blocked on a receive."""

    def __init__(self, blocked: Dict[int, int]):
        self.blocked = dict(blocked)
        waits = ", ".join(f"rank {r} <- rank {s}" for r, s in sorted(self.blocked.items()))
        super().__init__(f"Deadlock: all live ranks blocked on receive ({waits})")


class AccountingError(BootstrapSimError, RuntimeError):
    """Memory accounting went negative."""


class InfeasibleError(BootstrapSimError):
    """A process would exceed its memory cap."""

    def __init__(self, rank: int, requested: int, cap: int, kind: Optional[str] = None):
        self.rank = rank
        self.requested = requested
        self.cap = cap
        self.kind = kind
        prefix = f"{kind}: " if kind else ""
        super().__init__(
            f"{prefix}rank {rank} needs {requested} resident floats, cap is {cap}"
        )


class SynchronizationFault(BootstrapSimError, RuntimeError):
    """Synchronized index streams diverged across ranks."""

    def __init__(self, sample: int, observed: int, expected: int):
        self.sample = sample
        self.observed = observed
        self.expected = expected
        super().__init__(
            f"Synchronization fault at sample {sample}: partial counts sum to "
            f"{observed}, expected {expected}"
        )
