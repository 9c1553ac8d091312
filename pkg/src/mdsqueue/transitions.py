"""Batch-level event semantics of the bounding policies.

These routines act on decoded configurations: the idle-server count z plus
the ordered waiting-batch list ((w_1, s_1), ...).  Jobs in service that do
not belong to a waiting batch form the implicit "other" pool of size
n - z - sum(s_i).

Departure handling uses the in-order eligibility abstraction: a server that
just finished a job of waiting batch i has necessarily served batches
1..i, and a server that finished an "other" job has served none of the
waiting batches.  This is the rate split that makes the compressed chains
Markovian; its fidelity is guarded by the chain-versus-simulation tests.
"""
from __future__ import annotations

from .config import Policy


def in_service_counts(n: int, z: int, batches) -> tuple:
    """(per-waiting-batch in-service counts, other-pool size)."""
    tracked = [s for _, s in batches]
    other = n - z - sum(tracked)
    if other < 0:
        raise ValueError("in-service bookkeeping underflow")
    return tracked, other


def normalize_batches(batches) -> tuple:
    """Drop batches whose buffered jobs are exhausted; their in-service jobs
    fall into the implicit other pool."""
    return tuple((w, s) for w, s in batches if w > 0)


def apply_completion(policy: Policy, t: int, n: int, k: int,
                     z: int, batches, cls: int, b_total: int | None = None):
    """One job completion plus the policy's reassignment.

    cls is the 1-based index of the waiting batch whose in-service job
    finished, or 0 for a job of the other pool.  b_total overrides the
    waiting-batch count when the caller tracks extra batches outside the
    list (the tagged-batch latency chain).  Returns (z, batches); entries
    with w == 0 are kept so callers can see which batch cleared.
    """
    batches = [list(b) for b in batches]
    if b_total is None:
        b_total = len(batches)
    if cls > 0:
        if batches[cls - 1][1] <= 0:
            raise ValueError(f"batch {cls} has no in-service jobs")
        batches[cls - 1][1] -= 1
    z += 1
    i_hat = cls + 1  # earliest waiting batch this server has not served

    if policy == Policy.RESERVATION:
        if t == 0:
            # Whole-batch moves only: wait for k idle servers.
            if z >= k and batches:
                w0 = batches[0][0]
                batches[0][0] = 0
                batches[0][1] += w0
                z -= w0
        elif i_hat <= t and i_hat <= len(batches):
            batches[i_hat - 1][0] -= 1
            batches[i_hat - 1][1] += 1
            z -= 1
            if i_hat == 1 and batches[0][0] == 0 and len(batches) >= t + 1:
                # First batch held a single buffered job: flush idle servers
                # into the (t+1)-th waiting batch.
                take = min(z, batches[t][0])
                batches[t][0] -= take
                batches[t][1] += take
                z -= take
    elif policy == Policy.MKMN:
        if b_total > t:
            # Relaxed mode: any server may serve the first waiting batch.
            batches[0][0] -= 1
            batches[0][1] += 1
            z -= 1
        elif i_hat <= len(batches):
            batches[i_hat - 1][0] -= 1
            batches[i_hat - 1][1] += 1
            z -= 1
    else:
        raise ValueError("exact MDS has no compressed event semantics")

    return z, [tuple(x) for x in batches]


def apply_arrival(policy: Policy, t: int, n: int, k: int,
                  z: int, batches, occupy_new: bool = True,
                  b_total: int | None = None):
    """Arrival of a fresh batch of k jobs.

    Returns (z, batches, new_buffered) where new_buffered is the number of
    the new batch's jobs left in the buffer (0 means it was fully served on
    arrival).  With occupy_new=False the new batch's own jobs neither join
    the waiting list nor occupy servers (used by the tagged-batch latency
    chain, which models batches behind the tagged one as a bare counter);
    side effects on the existing batches are still applied.  b_total
    overrides the waiting-batch count, as in apply_completion.
    """
    batches = [list(b) for b in batches]
    b = len(batches) if b_total is None else b_total

    if policy == Policy.RESERVATION:
        if t == 0:
            assigned = k if (z >= k and b == 0) else 0
        else:
            assigned = min(z, k) if b < t else 0
    elif policy == Policy.MKMN:
        if b < t:
            assigned = min(z, k)
        elif b == t:
            # Flush idle servers into the first waiting batch; the new batch
            # is served only if that clears the first batch entirely.
            if batches:
                take = min(z, batches[0][0])
                batches[0][0] -= take
                batches[0][1] += take
                z -= take
            assigned = min(z, k) if (not batches or batches[0][0] == 0) else 0
        else:
            assigned = 0
    else:
        raise ValueError("exact MDS has no compressed event semantics")

    new_buffered = k - assigned
    if occupy_new:
        z -= assigned
        if new_buffered > 0:
            batches.append((new_buffered, assigned))
    return z, [tuple(x) for x in batches], new_buffered
