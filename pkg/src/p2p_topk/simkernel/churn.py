"""Departure-only churn: when each peer leaves during a query."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
import numpy.typing as npt

from p2p_topk.simkernel.events import SimulationConfigError

ERR_LIFETIME = "meanLifetimeSeconds must be > 0, got {value}"
ERR_DISTRIBUTION = "unknown churn distribution {value!r}"

_CHURN_STREAM = 4


class ChurnDistribution(StrEnum):
    """Residual lifetime distributions."""

    NONE = "none"
    EXPONENTIAL = "exponential"
    FIXED = "fixed"

    @classmethod
    def parse(cls, value: str) -> ChurnDistribution:
        """Return the distribution named ``value``."""
        try:
            return cls(value)
        except ValueError as exc:
            raise SimulationConfigError(ERR_DISTRIBUTION.format(value=value)) from exc


@dataclass(frozen=True, slots=True)
class ChurnModel:
    """Peer lifetime model.

    Under ``exponential`` a peer's remaining lifetime is exponential with the
    configured mean. Under ``fixed`` every peer lives exactly the mean but
    joined at a uniformly random moment, so what remains is uniform on
    ``[0, mean]``. Departed peers never return within a query.

    Attributes:
        distribution: Lifetime distribution.
        mean_lifetime_seconds: Mean (or fixed) lifetime.
        seed: Seed of the draws.
    """

    distribution: ChurnDistribution = ChurnDistribution.NONE
    mean_lifetime_seconds: float = 3600.0
    seed: int = 0

    def validate(self) -> None:
        """Raise :class:`SimulationConfigError` for unusable parameters."""
        if self.distribution is not ChurnDistribution.NONE and self.mean_lifetime_seconds <= 0:
            raise SimulationConfigError(ERR_LIFETIME.format(value=self.mean_lifetime_seconds))

    @property
    def enabled(self) -> bool:
        """Return ``True`` when peers may depart."""
        return self.distribution is not ChurnDistribution.NONE

    def departure_times(self, node_count: int, originator: int) -> npt.NDArray[np.float64]:
        """Return each peer's departure time in ms; ``inf`` means it stays.

        The originator always stays until the query completes.
        """
        self.validate()
        times = np.full(node_count, math.inf)
        if not self.enabled:
            return times
        rng = np.random.default_rng([self.seed, _CHURN_STREAM])
        mean_ms = self.mean_lifetime_seconds * 1000.0
        if self.distribution is ChurnDistribution.EXPONENTIAL:
            times = rng.exponential(mean_ms, node_count)
        else:
            times = rng.uniform(0.0, mean_ms, node_count)
        times[originator] = math.inf
        return times


__all__ = ["ChurnDistribution", "ChurnModel"]
