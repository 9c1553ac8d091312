"""Analytical performance metrics computed from the stationary chains.

Mean batch latency is obtained by tagging a hypothetical arrival in each
stationary state (arrivals see time averages) and computing its expected
absorption time through a drain chain built from the same event semantics
as the stationary chain:

* Reservation policies: batches arriving after the tagged one can never
  influence it.  A server eligible for the tagged batch (one that has not
  served it) is always reassigned within the tagged batch's prefix of the
  buffer, so future arrivals only occupy servers that are already useless
  to the tagged batch.  The drain chain therefore has no arrival events
  and is a finite DAG in the total job count.
* Relaxed (MkMn) policies: the serving mode depends on how many batches
  wait in total, so arrivals behind the tagged batch matter.  They are
  tracked as a bare counter g (their jobs never occupy modelled servers);
  g is capped at t+1 since only "more than t waiting" changes the rules.

Once every job of the tagged batch is in service its remaining latency is
the maximum of r independent exponentials, added analytically as H_r/mu.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Policy, SystemConfig
from .qbd import StationaryDistribution, solve
from .simulator import run
from .transitions import apply_arrival, apply_completion, in_service_counts

_LATENCY_TAIL = 1e-8


def harmonic(r: int) -> float:
    return sum(1.0 / j for j in range(1, r + 1))


def light_traffic_latency(cfg: SystemConfig) -> float:
    """Latency limit as the arrival rate tends to zero: the expected
    maximum of k unit-rate exponentials, H_k / mu."""
    return harmonic(cfg.k) / cfg.service_rate


class _TaggedLatency:
    """Expected drain time of a tagged batch, memoized across start states.

    Drain states are (z, batches, g): idle servers, the waiting batches up
    to and including the tagged one as (buffered, in_service) pairs, and
    the count of batches behind the tagged one (always 0 for Reservation).
    """

    def __init__(self, cfg: SystemConfig):
        self.cfg = cfg
        self.memo: dict = {}
        self.g_cap = 0 if cfg.policy == Policy.RESERVATION else cfg.t + 1

    def start(self, z: int, batches) -> float:
        cfg = self.cfg
        b = len(batches)
        z2, batches2, buffered = apply_arrival(cfg.policy, cfg.t, cfg.n,
                                               cfg.k, z, list(batches))
        if buffered == 0:
            return harmonic(cfg.k) / cfg.service_rate
        return self._drain(z2, tuple(tuple(x) for x in batches2), 0)

    def _drain(self, z: int, batches: tuple, g: int) -> float:
        tagged = batches[-1]
        if tagged[0] == 0:
            # fully in service: expected max of the outstanding exponentials
            return harmonic(tagged[1]) / self.cfg.service_rate
        key = (z, batches, g)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        # Cycle-free by construction: completions lower the job count and
        # arrivals raise g toward its cap.
        self.memo[key] = value = self._expand(z, batches, g)
        return value

    def _expand(self, z: int, batches: tuple, g: int) -> float:
        cfg = self.cfg
        n, k, t = cfg.n, cfg.k, cfg.t
        mu, lam = cfg.service_rate, cfg.arrival_rate
        b_total = len(batches) + g
        moves = []

        tracked, other = in_service_counts(n, z, batches)
        for i, s_i in enumerate(tracked):
            if s_i > 0:
                z2, b2 = apply_completion(cfg.policy, t, n, k, z,
                                          batches, i + 1, b_total=b_total)
                moves.append((s_i * mu, z2, b2, g))
        if other > 0:
            z2, b2 = apply_completion(cfg.policy, t, n, k, z,
                                      batches, 0, b_total=b_total)
            moves.append((other * mu, z2, b2, g))
        if g < self.g_cap:
            z2, b2, buffered = apply_arrival(cfg.policy, t, n, k, z,
                                             list(batches), occupy_new=False,
                                             b_total=b_total)
            g2 = g + (1 if buffered > 0 else 0)
            # an arrival served entirely by ineligible idle servers leaves
            # the drain state untouched; drop the self-loop
            if not (g2 == g and z2 == z and tuple(map(tuple, b2)) == batches):
                moves.append((lam, z2, b2, g2))

        # first passage: d = (1 + sum_c rate_c * d_c) / total_rate
        total = sum(r for r, *_ in moves)
        acc = 1.0
        for rate, z2, b2, g2 in moves:
            # tagged batch stays last; cleared batches ahead of it drop out
            tagged = b2[-1]
            ahead = tuple((w, s) for w, s in b2[:-1] if w > 0)
            acc += rate * self._drain(z2, ahead + (tuple(tagged),), g2)
        return acc / total if total > 0 else 0.0


@dataclass(frozen=True)
class LatencyResult:
    mean: float          # expected batch latency
    covered_mass: float  # stationary mass behind the per-state average
    states: int          # drain-chain states evaluated


def mean_latency(cfg: SystemConfig, dist: StationaryDistribution | None = None,
                 tail_mass: float = _LATENCY_TAIL) -> LatencyResult:
    """Analytic mean batch latency for Reservation(t) or MkMn(t).

    Averages the tagged-batch drain time over the stationary distribution,
    truncated once the uncovered tail is below tail_mass; the reported
    mean rescales by the covered mass (the tail would only push the true
    value up by O(tail_mass * d_tail))."""
    if cfg.policy == Policy.MDS:
        raise ValueError("the exact MDS queue has no chain; simulate it")
    if dist is None:
        dist = solve(cfg)
    from .statespace import decode_state
    # drain recursion depth scales with the truncation job count
    import sys
    if sys.getrecursionlimit() < 200_000:
        sys.setrecursionlimit(200_000)
    tagged = _TaggedLatency(cfg)
    acc = 0.0
    mass = 0.0
    for state, p in dist.iter_states(tail_mass):
        if p <= 0.0:
            continue
        full = decode_state(state, cfg)
        acc += p * tagged.start(full.z, full.batches)
        mass += p
    return LatencyResult(mean=acc / mass, covered_mass=mass,
                         states=len(tagged.memo))


def waiting_probability(cfg: SystemConfig,
                        dist: StationaryDistribution | None = None,
                        tail_mass: float = 1e-12) -> float:
    """Probability that an arriving batch cannot start all k jobs at once."""
    if cfg.policy == Policy.MDS:
        raise ValueError("the exact MDS queue has no chain; simulate it")
    if dist is None:
        dist = solve(cfg)
    from .statespace import decode_state
    acc = 0.0
    mass = 0.0
    for state, p in dist.iter_states(tail_mass):
        full = decode_state(state, cfg)
        _, _, buffered = apply_arrival(cfg.policy, cfg.t, cfg.n, cfg.k,
                                       full.z, list(full.batches))
        if buffered > 0:
            acc += p
        mass += p
    return acc + (1.0 - mass)  # uncovered tail states always wait


def occupancy_ccdf(occupancy: np.ndarray) -> np.ndarray:
    """P(jobs in system > x) for x = 0..len-1, from a pmf over job counts."""
    return 1.0 - np.cumsum(occupancy)


def throughput_loss(cfg: SystemConfig) -> float:
    """Fractional capacity given up by a bounding policy relative to the
    full service capacity n*mu/k."""
    from .qbd import max_throughput
    return 1.0 - max_throughput(cfg) / cfg.capacity


@dataclass(frozen=True)
class DegradedReadComparison:
    arrival_rate: float
    reconstruction_latency: float  # read the full object from k of n-1 nodes
    repair_latency: float          # read 1/(d-k+1) of it from d of n-1 nodes


def degraded_read_compare(n: int, k: int, d: int, arrival_rate: float,
                          service_rate: float = 1.0, speedup: float | None = None,
                          n_batches: int = 400_000, seed: int = 2024,
                          ) -> DegradedReadComparison:
    """Latency of two degraded-read strategies when one of n nodes is down.

    Reconstruction reads k full-size units from the n-1 live nodes; repair
    reads d units of 1/(d-k+1) the size, i.e. service is `speedup` times
    faster (default d-k+1).  Both are exact queues, hence simulated.
    """
    if not k <= d <= n - 1:
        raise ValueError("need k <= d <= n-1")
    if speedup is None:
        speedup = float(d - k + 1)
    recon = SystemConfig(n - 1, k, arrival_rate, service_rate, Policy.MDS)
    repair = SystemConfig(n - 1, d, arrival_rate, service_rate * speedup, Policy.MDS)
    r1 = run(recon, n_batches, seed)
    r2 = run(repair, n_batches, seed)
    return DegradedReadComparison(arrival_rate=arrival_rate,
                                  reconstruction_latency=r1.mean_latency,
                                  repair_latency=r2.mean_latency)
