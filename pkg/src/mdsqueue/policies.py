"""Reference event handlers for every scheduling policy.

This module is the readable, obviously-correct implementation of the
scheduling rules: explicit per-batch served-server sets, explicit buffer
order, no compression.  The fast array simulator is validated against it,
and the compressed chains are validated against simulations driven by it.

Tie-breaking is deterministic everywhere: idle servers are picked lowest
index first, waiting batches in arrival order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .config import Policy, SystemConfig

IDLE = -1


@dataclass
class Batch:
    batch_id: int
    arrival_time: float
    buffered: int            # jobs still waiting in the buffer
    in_service: int = 0
    completed: int = 0
    served_by: set = field(default_factory=set)
    finish_time: float = -1.0


class SimState:
    """Full system snapshot: per-server assignment plus ordered buffer."""

    def __init__(self, cfg: SystemConfig):
        self.cfg = cfg
        self.servers = [IDLE] * cfg.n  # batch_id being served, or IDLE
        self.batches: dict = {}
        self.buffer: list = []         # batch_ids with buffered > 0, arrival order
        self.next_id = 0

    def idle_servers(self) -> list:
        return [s for s, b in enumerate(self.servers) if b == IDLE]

    def waiting_count(self) -> int:
        return len(self.buffer)

    def total_jobs(self) -> int:
        # Completed jobs have left the system; only buffered plus in-service
        # jobs count.
        return sum(b.buffered + b.in_service for b in self.batches.values())

    def assign(self, batch: Batch, server: int) -> None:
        if self.servers[server] != IDLE:
            raise RuntimeError("assigning to a busy server")
        if batch.buffered <= 0:
            raise RuntimeError("batch has no buffered jobs")
        batch.buffered -= 1
        batch.in_service += 1
        batch.served_by.add(server)
        self.servers[server] = batch.batch_id
        if batch.buffered == 0 and batch.batch_id in self.buffer:
            self.buffer.remove(batch.batch_id)

    def drop_if_done(self, batch: Batch) -> None:
        if batch.buffered == 0 and batch.in_service == 0:
            del self.batches[batch.batch_id]


def on_arrival(state: SimState, now: float) -> Batch:
    """Handle a batch arrival; returns the new Batch record."""
    cfg = state.cfg
    batch = Batch(batch_id=state.next_id, arrival_time=now, buffered=cfg.k)
    state.next_id += 1
    state.batches[batch.batch_id] = batch
    policy, t, k = cfg.policy, cfg.t, cfg.k
    idle = state.idle_servers()

    if policy == Policy.MDS:
        for s in idle:
            if batch.buffered == 0:
                break
            state.assign(batch, s)
    elif policy == Policy.RESERVATION:
        if t == 0:
            # Whole batches only: start service iff k servers are free.
            if len(idle) >= k:
                for s in idle[:k]:
                    state.assign(batch, s)
        elif state.waiting_count() < t:
            for s in idle:
                if batch.buffered == 0:
                    break
                state.assign(batch, s)
    elif policy == Policy.MKMN:
        b = state.waiting_count()
        if b < t:
            for s in idle:
                if batch.buffered == 0:
                    break
                state.assign(batch, s)
        elif b == t:
            # Flush idle servers into the first waiting batch, served-server
            # sets ignored; the new batch starts only if that clears it.
            cleared = True
            if state.buffer:
                first = state.batches[state.buffer[0]]
                for s in idle:
                    if first.buffered == 0:
                        break
                    state.assign(first, s)
                cleared = first.buffered == 0
            if cleared:
                for s in state.idle_servers():
                    if batch.buffered == 0:
                        break
                    state.assign(batch, s)

    if batch.buffered > 0:
        state.buffer.append(batch.batch_id)
    return batch


def on_departure(state: SimState, server: int, now: float) -> Batch:
    """Handle a job completion at `server`; returns the batch whose job
    finished (finish_time is set when its k-th job completes)."""
    cfg = state.cfg
    done = state.batches[state.servers[server]]
    state.servers[server] = IDLE
    done.in_service -= 1
    done.completed += 1
    if done.completed == cfg.k:
        done.finish_time = now
    state.drop_if_done(done)

    policy, t, k = cfg.policy, cfg.t, cfg.k

    if policy == Policy.MDS:
        for bid in state.buffer:
            batch = state.batches[bid]
            if server not in batch.served_by:
                state.assign(batch, server)
                break
    elif policy == Policy.RESERVATION:
        if t == 0:
            idle = state.idle_servers()
            if len(idle) >= k and state.buffer:
                first = state.batches[state.buffer[0]]
                for s in idle[:k]:
                    state.assign(first, s)
        else:
            i_hat = None
            for i, bid in enumerate(state.buffer):
                if server not in state.batches[bid].served_by:
                    i_hat = i + 1
                    break
            overflow = state.batches[state.buffer[t]] if len(state.buffer) > t else None
            if i_hat is not None and i_hat <= t:
                first = state.batches[state.buffer[i_hat - 1]]
                had_one = first.buffered == 1
                state.assign(first, server)
                if i_hat == 1 and had_one and overflow is not None:
                    # The cleared head batch pulls the next reserved batch
                    # into range; idle servers may start on it now.
                    for s in state.idle_servers():
                        if overflow.buffered == 0:
                            break
                        state.assign(overflow, s)
    elif policy == Policy.MKMN:
        if state.waiting_count() > t:
            first = state.batches[state.buffer[0]]
            state.assign(first, server)
        else:
            for bid in state.buffer:
                batch = state.batches[bid]
                if server not in batch.served_by:
                    state.assign(batch, server)
                    break
    return done
