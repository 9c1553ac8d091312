"""User-facing simulation entry points.

run() executes one exact discrete-event simulation and reports batch
latency, time-averaged occupancy and the fraction of arriving batches that
had to wait.  replicate() runs independent seeds (in threads when the
compiled backend is active).  run_reference() drives the readable
policies.py handlers with the exact same random variates as the kernel and
is used to validate the kernel, not for production runs.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..config import Policy, SystemConfig
from .. import policies as _ref
from . import rng as _rng
from .backend import BACKEND
from .kernel import (POLICY_MDS, POLICY_MKMN, POLICY_RESV, STATUS_OK,
                     simulate, simulate_saturated)

_POLICY_CODE = {Policy.MDS: POLICY_MDS, Policy.RESERVATION: POLICY_RESV,
                Policy.MKMN: POLICY_MKMN}
_INITIAL_CAP = 1 << 14
_MAX_CAP = 1 << 23
_OCC_CAP = 4096


def _threads(default: int) -> int:
    env = os.environ.get("MDSQ_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return default


@dataclass
class MetricsReport:
    """Point estimates from one simulation run."""

    config: SystemConfig
    seed: int
    n_batches: int
    warmup: int
    backend: str
    mean_latency: float
    latency_std: float
    waiting_probability: float
    occupancy: np.ndarray     # time-averaged distribution of the job count
    measured_time: float      # length of the measurement window
    latencies: np.ndarray | None = None

    def mean_jobs(self) -> float:
        return float(np.arange(len(self.occupancy)) @ self.occupancy)


def run(cfg: SystemConfig, n_batches: int, seed: int, warmup: int | None = None,
        keep_latencies: bool = False) -> MetricsReport:
    """Simulate n_batches batch arrivals; batches [warmup, n_batches) are
    measured.  warmup defaults to 10% of the horizon."""
    if warmup is None:
        warmup = n_batches // 10
    if not 0 <= warmup < n_batches:
        raise ValueError("need 0 <= warmup < n_batches")
    code = _POLICY_CODE[cfg.policy]
    cap = _INITIAL_CAP
    while True:
        with np.errstate(over="ignore"):
            status, lat, occ_time, t0, t1, counted, waited = simulate(
                cfg.n, cfg.k, code, cfg.t, cfg.arrival_rate, cfg.service_rate,
                seed, n_batches, warmup, cap, _OCC_CAP)
        if status == STATUS_OK:
            break
        cap *= 2
        if cap > _MAX_CAP:
            raise RuntimeError(
                "backlog exceeded the maximum ring capacity; the arrival "
                "rate is likely at or above this policy's capacity")
    lat = lat[warmup:]
    total = occ_time.sum()
    occupancy = occ_time / total if total > 0 else occ_time
    nz = np.nonzero(occupancy)[0]
    if len(nz):
        occupancy = occupancy[:nz[-1] + 1]
    return MetricsReport(
        config=cfg, seed=seed, n_batches=n_batches, warmup=warmup,
        backend=BACKEND,
        mean_latency=float(lat.mean()),
        latency_std=float(lat.std(ddof=1)) if len(lat) > 1 else 0.0,
        waiting_probability=waited / counted if counted else 0.0,
        occupancy=occupancy,
        measured_time=float(t1 - t0),
        latencies=lat.copy() if keep_latencies else None)


def replicate(cfg: SystemConfig, n_batches: int, seeds, warmup: int | None = None):
    """Independent runs, one per seed; returns the list of reports."""
    seeds = list(seeds)
    workers = _threads(min(len(seeds), os.cpu_count() or 1))
    if workers == 1 or BACKEND != "numba":
        return [run(cfg, n_batches, s, warmup) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: run(cfg, n_batches, s, warmup), seeds))


def measure_saturation_throughput(cfg: SystemConfig, n_finish: int,
                                  seed: int, warmup: int | None = None) -> float:
    """Batch completion rate under an infinite backlog (arrival rate is
    irrelevant).  This is a direct estimate of the policy's capacity."""
    if warmup is None:
        warmup = n_finish // 10
    if not 0 < warmup < n_finish:
        raise ValueError("need 0 < warmup < n_finish")
    code = _POLICY_CODE[cfg.policy]
    with np.errstate(over="ignore"):
        status, t0, t1, finished = simulate_saturated(
            cfg.n, cfg.k, code, cfg.t, cfg.service_rate, seed,
            n_finish, warmup, _INITIAL_CAP)
    if status != STATUS_OK:
        raise RuntimeError("saturated run failed (ring capacity)")
    return float((n_finish - warmup) / (t1 - t0))


def run_reference(cfg: SystemConfig, n_batches: int, seed: int):
    """Event-identical replay of the kernel using the readable handlers.

    Consumes the same variate streams in the same order as the kernel, so
    its outputs must match run() bit for bit.  Returns (latencies, events)
    where events counts processed events.
    """
    with np.errstate(over="ignore"):
        return _run_reference(cfg, n_batches, seed)


def _run_reference(cfg: SystemConfig, n_batches: int, seed: int):
    n = cfg.n
    # stream_seed may hand back a plain Python int (compiled backend); the
    # rng entry points require genuine uint64 scalars
    sseeds = [np.uint64(_rng.stream_seed(seed, s)) for s in range(n)]
    arr_seed = np.uint64(_rng.stream_seed(seed, n))
    srv_ct = [0] * n
    arr_ct = 0

    state = _ref.SimState(cfg)
    srv_time = [np.inf] * n
    latencies = np.full(n_batches, -1.0)
    remaining = n_batches
    events = 0
    now = 0.0
    next_arr = _rng.exponential(arr_seed, arr_ct, cfg.arrival_rate)
    arr_ct += 1

    def sync_new_assignments(busy_before):
        # draw a service time for every server newly assigned by a handler,
        # in server order, exactly like the kernel does
        nonlocal srv_ct
        for s in range(n):
            if state.servers[s] != _ref.IDLE and busy_before[s] is None:
                srv_time[s] = now + _rng.exponential(sseeds[s], srv_ct[s],
                                                     cfg.service_rate)
                srv_ct[s] += 1

    while remaining > 0:
        events += 1
        ev_s = -1
        ev_time = next_arr
        for s in range(n):
            if srv_time[s] < ev_time:
                ev_time = srv_time[s]
                ev_s = s
        now = ev_time
        if ev_s < 0:
            before = [b if b != _ref.IDLE else None for b in state.servers]
            _ref.on_arrival(state, now)
            sync_new_assignments(before)
            next_arr = now + _rng.exponential(arr_seed, arr_ct, cfg.arrival_rate)
            arr_ct += 1
        else:
            srv_time[ev_s] = np.inf
            before = [b if b != _ref.IDLE else None for b in state.servers]
            before[ev_s] = None
            done = _ref.on_departure(state, ev_s, now)
            sync_new_assignments(before)
            if done.completed == cfg.k and done.batch_id < n_batches:
                latencies[done.batch_id] = now - done.arrival_time
                remaining -= 1
    return latencies, events
