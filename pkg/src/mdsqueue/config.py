"""Queue parameters and policy selection."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Policy(Enum):
    """Scheduling policy families.

    MDS:  every batch of k jobs must be served by k distinct servers,
          servers grab the earliest eligible buffered job (exact system,
          simulation only).
    RESERVATION: like MDS, but batches past buffer position t may only
          advance as whole batches (lower-bounding family).
    MKMN: like MDS while at most t batches wait, distinct-server rule
          dropped otherwise (upper-bounding family).
    """

    MDS = "mds"
    RESERVATION = "reservation"
    MKMN = "mkmn"


_POLICY_ALIASES = {
    "mds": Policy.MDS,
    "reservation": Policy.RESERVATION,
    "resv": Policy.RESERVATION,
    "mkmn": Policy.MKMN,
}


def parse_policy(name: str) -> Policy:
    try:
        return _POLICY_ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; expected one of {sorted(_POLICY_ALIASES)}")


@dataclass(frozen=True)
class SystemConfig:
    """Parameters of one queueing system.

    n: number of servers.
    k: jobs per batch (a batch finishes when k of its jobs finish).
    arrival_rate: Poisson batch arrival rate (batches per unit time).
    service_rate: per-server exponential job service rate.
    policy: scheduling family.
    t: buffer-depth parameter of the bounding families (ignored for MDS).
    """

    n: int
    k: int
    arrival_rate: float
    service_rate: float
    policy: Policy
    t: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 1 <= self.k <= self.n:
            raise ValueError("k must satisfy 1 <= k <= n")
        if not self.arrival_rate > 0:
            raise ValueError("arrival_rate must be > 0")
        if not self.service_rate > 0:
            raise ValueError("service_rate must be > 0")
        if self.t < 0:
            raise ValueError("t must be >= 0")
        if self.policy == Policy.MDS and self.t != 0:
            object.__setattr__(self, "t", 0)

    def with_rate(self, arrival_rate: float) -> "SystemConfig":
        return SystemConfig(self.n, self.k, arrival_rate, self.service_rate,
                            self.policy, self.t)

    @property
    def capacity(self) -> float:
        """Batch service capacity n*mu/k; no policy can exceed it."""
        return self.n * self.service_rate / self.k
