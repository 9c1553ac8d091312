"""Array-based discrete-event kernel for all three scheduling policies.

One code path serves both backends (compiled or interpreted, see backend).
All mutable state lives in flat numpy arrays:

  batch ring   -- slot = batch_id % capacity; a slot is recycled once its
                  batch finishes.  Per-slot fields: arrival time, buffered /
                  in-service / completed job counts, a served-server bitmask
                  (hence n <= 63), and waiting-list links.
  waiting list -- doubly linked list over slots in arrival order; batches
                  leave it the moment their last buffered job starts.
  servers      -- per-server current batch id and absolute completion time;
                  the next event is found by a linear scan.

Randomness is counter-based (rng module): server s consumes stream s in its
own assignment order and arrivals consume stream n, so results do not
depend on backend or chunking.
"""
from __future__ import annotations

import numpy as np

from .backend import jit
from .rng import exponential, stream_seed

POLICY_MDS = 0
POLICY_RESV = 1
POLICY_MKMN = 2

STATUS_OK = 0
STATUS_RING_FULL = 1

_INF = np.inf


def _wl_append(sid, wl_next, wl_prev, ht):
    # ht = [head, tail, count]
    wl_next[sid] = -1
    wl_prev[sid] = ht[1]
    if ht[1] >= 0:
        wl_next[ht[1]] = sid
    else:
        ht[0] = sid
    ht[1] = sid
    ht[2] += 1


def _wl_remove(sid, wl_next, wl_prev, ht):
    p, q = wl_prev[sid], wl_next[sid]
    if p >= 0:
        wl_next[p] = q
    else:
        ht[0] = q
    if q >= 0:
        wl_prev[q] = p
    else:
        ht[1] = p
    ht[2] -= 1


def _assign(sid, s, now, mu, sseeds,
            b_buf, b_ins, b_served, b_inlist, b_id,
            srv_batch, srv_time, srv_ct, wl_next, wl_prev, ht):
    """Give server s one buffered job of the batch in slot sid."""
    b_buf[sid] -= 1
    b_ins[sid] += 1
    b_served[sid] |= np.uint64(1) << np.uint64(s)
    srv_batch[s] = b_id[sid]
    srv_time[s] = now + exponential(sseeds[s], srv_ct[s], mu)
    srv_ct[s] += 1
    if b_buf[sid] == 0 and b_inlist[sid] == 1:
        _wl_remove(sid, wl_next, wl_prev, ht)
        b_inlist[sid] = 0


def _spawn(bid, now, k, policy, t, n, mu, sseeds,
           b_arr, b_buf, b_ins, b_comp, b_served, b_active, b_inlist, b_id,
           srv_batch, srv_time, srv_ct, wl_next, wl_prev, ht, cap):
    """Create a batch and run the arrival rule.  Returns (status, waited)
    where waited is 1 if any of its jobs stayed in the buffer."""
    sid = bid % cap
    if b_active[sid] == 1:
        return STATUS_RING_FULL, 0
    b_active[sid] = 1
    b_id[sid] = bid
    b_arr[sid] = now
    b_buf[sid] = k
    b_ins[sid] = 0
    b_comp[sid] = 0
    b_served[sid] = np.uint64(0)
    b_inlist[sid] = 0

    if policy == POLICY_MDS:
        for s in range(n):
            if b_buf[sid] == 0:
                break
            if srv_batch[s] < 0:
                _assign(sid, s, now, mu, sseeds, b_buf, b_ins, b_served,
                        b_inlist, b_id, srv_batch, srv_time, srv_ct,
                        wl_next, wl_prev, ht)
    elif policy == POLICY_RESV:
        if t == 0:
            z = 0
            for s in range(n):
                if srv_batch[s] < 0:
                    z += 1
            # whole-batch start: buffer is necessarily empty when z >= k
            if z >= k:
                for s in range(n):
                    if b_buf[sid] == 0:
                        break
                    if srv_batch[s] < 0:
                        _assign(sid, s, now, mu, sseeds, b_buf, b_ins,
                                b_served, b_inlist, b_id, srv_batch,
                                srv_time, srv_ct, wl_next, wl_prev, ht)
        elif ht[2] < t:
            for s in range(n):
                if b_buf[sid] == 0:
                    break
                if srv_batch[s] < 0:
                    _assign(sid, s, now, mu, sseeds, b_buf, b_ins, b_served,
                            b_inlist, b_id, srv_batch, srv_time, srv_ct,
                            wl_next, wl_prev, ht)
    else:  # POLICY_MKMN
        if ht[2] < t:
            for s in range(n):
                if b_buf[sid] == 0:
                    break
                if srv_batch[s] < 0:
                    _assign(sid, s, now, mu, sseeds, b_buf, b_ins, b_served,
                            b_inlist, b_id, srv_batch, srv_time, srv_ct,
                            wl_next, wl_prev, ht)
        elif ht[2] == t:
            # flush idle servers into the head batch, served sets ignored
            cleared = 1
            if ht[0] >= 0:
                hsid = ht[0]
                for s in range(n):
                    if b_buf[hsid] == 0:
                        break
                    if srv_batch[s] < 0:
                        _assign(hsid, s, now, mu, sseeds, b_buf, b_ins,
                                b_served, b_inlist, b_id, srv_batch,
                                srv_time, srv_ct, wl_next, wl_prev, ht)
                if b_buf[hsid] > 0:
                    cleared = 0
            if cleared == 1:
                for s in range(n):
                    if b_buf[sid] == 0:
                        break
                    if srv_batch[s] < 0:
                        _assign(sid, s, now, mu, sseeds, b_buf, b_ins,
                                b_served, b_inlist, b_id, srv_batch,
                                srv_time, srv_ct, wl_next, wl_prev, ht)

    waited = 0
    if b_buf[sid] > 0:
        _wl_append(sid, wl_next, wl_prev, ht)
        b_inlist[sid] = 1
        waited = 1
    return STATUS_OK, waited


def _after_departure(s, now, k, policy, t, n, mu, sseeds,
                     b_buf, b_ins, b_served, b_inlist, b_id,
                     srv_batch, srv_time, srv_ct, wl_next, wl_prev, ht):
    """Run the policy's reassignment rule after server s went idle.
    Returns 1 if (MDS only) no waiting batch was eligible for s."""
    mask = np.uint64(1) << np.uint64(s)
    if policy == POLICY_MDS:
        sid = ht[0]
        while sid >= 0:
            if (b_served[sid] & mask) == np.uint64(0):
                _assign(sid, s, now, mu, sseeds, b_buf, b_ins, b_served,
                        b_inlist, b_id, srv_batch, srv_time, srv_ct,
                        wl_next, wl_prev, ht)
                return 0
            sid = wl_next[sid]
        return 1 if ht[2] > 0 else 0
    if policy == POLICY_RESV:
        if t == 0:
            z = 0
            for u in range(n):
                if srv_batch[u] < 0:
                    z += 1
            if z >= k and ht[0] >= 0:
                hsid = ht[0]
                for u in range(n):
                    if b_buf[hsid] == 0:
                        break
                    if srv_batch[u] < 0:
                        _assign(hsid, u, now, mu, sseeds, b_buf, b_ins,
                                b_served, b_inlist, b_id, srv_batch,
                                srv_time, srv_ct, wl_next, wl_prev, ht)
            return 0
        # general t: find earliest waiting batch not served by s, within
        # the first t positions; also locate the (t+1)-th waiting batch
        i_hat_sid = -1
        pos = 0
        overflow_sid = -1
        sid = ht[0]
        while sid >= 0:
            pos += 1
            if pos > t:
                overflow_sid = sid
                break
            if i_hat_sid < 0 and (b_served[sid] & mask) == np.uint64(0):
                i_hat_sid = sid
            sid = wl_next[sid]
        if i_hat_sid >= 0:
            had_one = b_buf[i_hat_sid] == 1
            first = ht[0] == i_hat_sid
            _assign(i_hat_sid, s, now, mu, sseeds, b_buf, b_ins, b_served,
                    b_inlist, b_id, srv_batch, srv_time, srv_ct,
                    wl_next, wl_prev, ht)
            if first and had_one and overflow_sid >= 0:
                # head batch cleared: the reserved batch moves into range
                for u in range(n):
                    if b_buf[overflow_sid] == 0:
                        break
                    if srv_batch[u] < 0:
                        _assign(overflow_sid, u, now, mu, sseeds, b_buf,
                                b_ins, b_served, b_inlist, b_id, srv_batch,
                                srv_time, srv_ct, wl_next, wl_prev, ht)
        return 0
    # POLICY_MKMN
    if ht[2] > t:
        _assign(ht[0], s, now, mu, sseeds, b_buf, b_ins, b_served,
                b_inlist, b_id, srv_batch, srv_time, srv_ct,
                wl_next, wl_prev, ht)
        return 0
    sid = ht[0]
    while sid >= 0:
        if (b_served[sid] & mask) == np.uint64(0):
            _assign(sid, s, now, mu, sseeds, b_buf, b_ins, b_served,
                    b_inlist, b_id, srv_batch, srv_time, srv_ct,
                    wl_next, wl_prev, ht)
            break
        sid = wl_next[sid]
    return 0


def simulate(n, k, policy, t, lam, mu, seed, n_batches, warmup, cap, occ_cap):
    """Simulate n_batches batch arrivals; metrics cover batches
    [warmup, n_batches).  Returns (status, latencies, occ_time, t0, t1,
    arrivals_counted, arrivals_waited)."""
    latencies = np.full(n_batches, -1.0)
    occ_time = np.zeros(occ_cap + 1)
    b_arr = np.zeros(cap)
    b_buf = np.zeros(cap, np.int64)
    b_ins = np.zeros(cap, np.int64)
    b_comp = np.zeros(cap, np.int64)
    b_served = np.zeros(cap, np.uint64)
    b_active = np.zeros(cap, np.int64)
    b_inlist = np.zeros(cap, np.int64)
    b_id = np.full(cap, -1, np.int64)
    wl_next = np.full(cap, -1, np.int64)
    wl_prev = np.full(cap, -1, np.int64)
    ht = np.array([-1, -1, 0], np.int64)
    srv_batch = np.full(n, -1, np.int64)
    srv_time = np.full(n, _INF)
    srv_ct = np.zeros(n, np.int64)
    sseeds = np.empty(n, np.uint64)
    for s in range(n):
        sseeds[s] = stream_seed(seed, s)
    arr_seed = stream_seed(seed, n)

    now = 0.0
    t0 = -1.0
    t1 = -1.0
    m = 0
    arr_ct = 0
    next_arr = exponential(arr_seed, arr_ct, lam)
    arr_ct += 1
    next_id = 0
    remaining = n_batches
    arrivals_counted = 0
    arrivals_waited = 0

    while remaining > 0:
        ev_s = -1
        ev_time = next_arr
        for s in range(n):
            if srv_time[s] < ev_time:
                ev_time = srv_time[s]
                ev_s = s
        if t0 >= 0.0:
            mm = m if m < occ_cap else occ_cap
            occ_time[mm] += ev_time - now
        now = ev_time

        if ev_s < 0:
            bid = next_id
            next_id += 1
            if bid == warmup:
                t0 = now
            status, waited = _spawn(bid, now, k, policy, t, n, mu, sseeds,
                                    b_arr, b_buf, b_ins, b_comp, b_served,
                                    b_active, b_inlist, b_id, srv_batch,
                                    srv_time, srv_ct, wl_next, wl_prev,
                                    ht, cap)
            if status != STATUS_OK:
                return status, latencies, occ_time, t0, t1, arrivals_counted, arrivals_waited
            m += k
            if warmup <= bid < n_batches:
                arrivals_counted += 1
                arrivals_waited += waited
            next_arr = now + exponential(arr_seed, arr_ct, lam)
            arr_ct += 1
        else:
            s = ev_s
            bid = srv_batch[s]
            sid = bid % cap
            srv_batch[s] = -1
            srv_time[s] = _INF
            b_ins[sid] -= 1
            b_comp[sid] += 1
            m -= 1
            if b_comp[sid] == k:
                b_active[sid] = 0
                if bid < n_batches:
                    latencies[bid] = now - b_arr[sid]
                    remaining -= 1
                    t1 = now
            _after_departure(s, now, k, policy, t, n, mu, sseeds,
                             b_buf, b_ins, b_served, b_inlist, b_id,
                             srv_batch, srv_time, srv_ct, wl_next, wl_prev, ht)
    return STATUS_OK, latencies, occ_time, t0, t1, arrivals_counted, arrivals_waited


def simulate_saturated(n, k, policy, t, mu, seed, n_finish, warmup, cap):
    """Infinite-backlog run: the buffer is topped up so at least t+2
    batches always wait.  Returns (status, t0, t1, finished) where t0/t1
    bracket finishes warmup..n_finish."""
    b_arr = np.zeros(cap)
    b_buf = np.zeros(cap, np.int64)
    b_ins = np.zeros(cap, np.int64)
    b_comp = np.zeros(cap, np.int64)
    b_served = np.zeros(cap, np.uint64)
    b_active = np.zeros(cap, np.int64)
    b_inlist = np.zeros(cap, np.int64)
    b_id = np.full(cap, -1, np.int64)
    wl_next = np.full(cap, -1, np.int64)
    wl_prev = np.full(cap, -1, np.int64)
    ht = np.array([-1, -1, 0], np.int64)
    srv_batch = np.full(n, -1, np.int64)
    srv_time = np.full(n, _INF)
    srv_ct = np.zeros(n, np.int64)
    sseeds = np.empty(n, np.uint64)
    for s in range(n):
        sseeds[s] = stream_seed(seed, s)

    now = 0.0
    t0 = -1.0
    t1 = -1.0
    next_id = 0
    finished = 0
    backlog_floor = t + 2

    while ht[2] < backlog_floor:
        status, _ = _spawn(next_id, now, k, policy, t, n, mu, sseeds,
                           b_arr, b_buf, b_ins, b_comp, b_served, b_active,
                           b_inlist, b_id, srv_batch, srv_time, srv_ct,
                           wl_next, wl_prev, ht, cap)
        if status != STATUS_OK:
            return status, t0, t1, finished
        next_id += 1

    while finished < n_finish:
        ev_s = -1
        ev_time = _INF
        for s in range(n):
            if srv_time[s] < ev_time:
                ev_time = srv_time[s]
                ev_s = s
        if ev_s < 0:
            # every server idle with a topped-up buffer: policy is stuck,
            # which cannot happen for these policies; guard anyway
            return STATUS_RING_FULL, t0, t1, finished
        now = ev_time
        s = ev_s
        bid = srv_batch[s]
        sid = bid % cap
        srv_batch[s] = -1
        srv_time[s] = _INF
        b_ins[sid] -= 1
        b_comp[sid] += 1
        if b_comp[sid] == k:
            b_active[sid] = 0
            finished += 1
            if finished == warmup:
                t0 = now
            if finished == n_finish:
                t1 = now
        stuck = _after_departure(s, now, k, policy, t, n, mu, sseeds,
                                 b_buf, b_ins, b_served, b_inlist, b_id,
                                 srv_batch, srv_time, srv_ct,
                                 wl_next, wl_prev, ht)
        while ht[2] < backlog_floor or stuck == 1:
            status, _ = _spawn(next_id, now, k, policy, t, n, mu, sseeds,
                               b_arr, b_buf, b_ins, b_comp, b_served,
                               b_active, b_inlist, b_id, srv_batch,
                               srv_time, srv_ct, wl_next, wl_prev, ht, cap)
            if status != STATUS_OK:
                return status, t0, t1, finished
            next_id += 1
            stuck = 0
    return STATUS_OK, t0, t1, finished


_wl_append = jit(_wl_append)
_wl_remove = jit(_wl_remove)
_assign = jit(_assign)
_spawn = jit(_spawn)
_after_departure = jit(_after_departure)
simulate = jit(simulate)
simulate_saturated = jit(simulate_saturated)
