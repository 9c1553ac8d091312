"""Compressed chain states and their decoding into full system configurations.

The bounding policies admit a compressed Markov state (w_1..w_t, m): the
buffered-job counts of the first t waiting batches plus the total number of
jobs in the system.  Everything else about the system (idle servers, number
of waiting batches, per-batch in-service counts) is recoverable from that
state, which is what makes the quasi-birth-death analysis possible.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .config import Policy, SystemConfig


class UnreachableStateError(ValueError):
    """Raised when a compressed state does not correspond to any
    configuration the policy can actually visit."""


class ChainState(NamedTuple):
    w: tuple  # buffered-job counts of the first t waiting batches
    m: int    # total jobs in the system


@dataclass(frozen=True)
class FullConfiguration:
    """Decoded snapshot of the whole system.

    batches lists the waiting batches in arrival order as (buffered,
    in_service) pairs; batches whose jobs are all in service (or done)
    are not listed.
    """

    m: int
    z: int              # idle servers
    b: int              # number of waiting batches
    batches: tuple      # ((w_1, s_1), ..., (w_b, s_b))

    def check_against(self, n: int, k: int) -> None:
        total_w = sum(w for w, _ in self.batches)
        total_s = sum(s for w, s in self.batches)
        if self.m != (n - self.z) + total_w:
            raise UnreachableStateError(
                f"job conservation violated: m={self.m}, n-z={n - self.z}, sum w={total_w}")
        if not 0 <= self.z <= n:
            raise UnreachableStateError(f"idle count z={self.z} out of range")
        if total_s > n - self.z:
            raise UnreachableStateError("more in-service jobs than busy servers")
        for w, s in self.batches:
            if not 1 <= w <= k or not 0 <= s <= k - w:
                raise UnreachableStateError(f"batch split (w={w}, s={s}) invalid")


def reservation0_service_count(m: int, cfg: SystemConfig) -> int:
    """Number of jobs in service when the Reservation(0) chain is in state m."""
    if m < 0:
        raise ValueError("m must be >= 0")
    if m <= cfg.n:
        return m
    return cfg.n - ((cfg.n - m) % cfg.k)


def _suffix_index(w: tuple, t: int) -> int:
    """Position q of the last nonzero tracked entry (0 when all zero)."""
    if t == 0 or w[0] == 0:
        return 0
    if w[t - 1] != 0:
        return t
    q = t - 1
    while q > 0 and w[q - 1] == 0:
        q -= 1
    return q


def check_w_vector(w: tuple, cfg: SystemConfig) -> int:
    """Validate the tracked vector shape; returns q (nonzero-prefix length)."""
    t, k = cfg.t, cfg.k
    if len(w) != t:
        raise UnreachableStateError(f"w has length {len(w)}, expected t={t}")
    if any(not 0 <= wi <= k for wi in w):
        raise UnreachableStateError("tracked entry outside {0..k}")
    q = _suffix_index(w, t)
    if any(wi != 0 for wi in w[q:]):
        raise UnreachableStateError("zero-suffix rule violated")
    for i in range(q - 1):
        if w[i] > w[i + 1]:
            raise UnreachableStateError("nonzero prefix must be non-decreasing")
    return q


def decode_state(state: ChainState, cfg: SystemConfig) -> FullConfiguration:
    """Recover the unique full configuration of a compressed chain state.

    Raises UnreachableStateError for states the policy never visits.
    """
    if cfg.policy == Policy.MDS:
        raise ValueError("the exact MDS policy has no compressed representation")
    w, m = state
    n, k, t = cfg.n, cfg.k, cfg.t
    if m < 0:
        raise UnreachableStateError("negative job count")
    q = check_w_vector(tuple(w), cfg)

    if cfg.policy == Policy.MKMN and t == 0:
        # Head waiting batch drains job by job, so it may be partial; the
        # in-service/completed split of the head batch is not identifiable
        # from m and does not affect transitions -- report no completions.
        if m <= n:
            return FullConfiguration(m=m, z=n - m, b=0, batches=())
        r = (m - n) % k
        b = -(-(m - n) // k)
        head_w = r if r else k
        batches = ((head_w, min(k - head_w, n)),) + ((k, 0),) * (b - 1)
        return FullConfiguration(m=m, z=0, b=b, batches=batches)

    tracked_sum = sum(w)
    d = m - tracked_sum  # jobs in service plus jobs buffered in untracked batches
    if d < 0:
        raise UnreachableStateError("fewer jobs than tracked buffered jobs")

    if q < t or d <= n:
        # Untracked batches can only exist once all t tracked slots are used.
        if q < t and d > n:
            raise UnreachableStateError("untracked batches with a free tracked slot")
        j = max(0, -(-(d - n) // k))
        z = n + j * k - d
    elif cfg.policy == Policy.RESERVATION:
        j = -(-(d - n) // k)
        z = n + j * k - d
    else:  # MKMN, t >= 1: untracked batches are whole and all servers busy
        if (d - n) % k != 0:
            raise UnreachableStateError("partial untracked batch under relaxed policy")
        j = (d - n) // k
        z = 0

    if not 0 <= z <= n:
        raise UnreachableStateError(f"idle count z={z} out of range")
    if j >= 1 and z >= k:
        raise UnreachableStateError("k or more idle servers alongside whole waiting batches")

    b = q + j
    batches = []
    for i in range(q):
        s_i = (w[i + 1] - w[i]) if i < q - 1 else (k - z - w[i])
        if s_i < 0:
            raise UnreachableStateError(f"negative in-service count for batch {i + 1}")
        batches.append((w[i], s_i))
    batches.extend([(k, 0)] * j)

    full = FullConfiguration(m=m, z=z, b=b, batches=tuple(batches))
    full.check_against(n, k)
    return full


def encode_configuration(full: FullConfiguration, cfg: SystemConfig) -> ChainState:
    """Compress a full configuration back to (w_1..w_t, m)."""
    w = tuple(full.batches[i][0] if i < full.b else 0 for i in range(cfg.t))
    return ChainState(w=w, m=full.m)


def boundary_max_jobs(cfg: SystemConfig) -> int:
    """Largest m belonging to the boundary block of the QBD partition."""
    if cfg.policy == Policy.RESERVATION:
        return cfg.n - cfg.k + cfg.t * cfg.k
    if cfg.policy == Policy.MKMN:
        return cfg.n + cfg.t * cfg.k
    raise ValueError("MDS has no QBD partition")


def first_level_index(cfg: SystemConfig) -> int:
    """Index j of the first repeating level; level j covers
    m in {n-k+1+j*k, ..., n+j*k}."""
    if cfg.policy == Policy.RESERVATION:
        return cfg.t
    if cfg.policy == Policy.MKMN:
        return cfg.t + 1
    raise ValueError("MDS has no QBD partition")


def _candidate_w_vectors(cfg: SystemConfig):
    """All w vectors satisfying the shape rules (zero suffix, non-decreasing
    nonzero prefix)."""
    k, t = cfg.k, cfg.t
    vectors = [()]
    for _ in range(t):
        extended = []
        for v in vectors:
            if v and v[-1] == 0:
                extended.append(v + (0,))
                continue
            lo = v[-1] if v else 1
            extended.append(v + (0,))
            for x in range(lo, k + 1):
                extended.append(v + (x,))
        vectors = extended
    return [v for v in vectors]


def enumerate_states(cfg: SystemConfig, level_limit: int) -> list:
    """All decodable states up to level_limit levels past the boundary,
    in lexicographic (m, w) order."""
    if level_limit < 1:
        raise ValueError("level_limit must be >= 1")
    m_max = cfg.n + (first_level_index(cfg) + level_limit - 1) * cfg.k
    out = []
    candidates = _candidate_w_vectors(cfg)
    for m in range(m_max + 1):
        for w in candidates:
            state = ChainState(w=w, m=m)
            try:
                decode_state(state, cfg)
            except UnreachableStateError:
                continue
            out.append(state)
    out.sort(key=lambda s: (s.m, s.w))
    return out
