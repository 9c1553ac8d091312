"""Quasi-birth-death block matrices for the bounding policies.

Transitions are generated mechanically: decode each compressed state into
its full configuration, apply every possible event (arrival, one completion
per in-service class), and re-encode the outcome.  The resulting chain is
partitioned into a boundary block and repeating levels of k consecutive
job counts.
"""
from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .config import Policy, SystemConfig
from .statespace import (ChainState, UnreachableStateError, boundary_max_jobs,
                         decode_state, first_level_index,
                         reservation0_service_count)
from .transitions import (apply_arrival, apply_completion, in_service_counts,
                          normalize_batches)

_ROWSUM_TOL = 1e-12


class ChainBuildError(RuntimeError):
    """Structural failure while assembling the QBD blocks."""


def state_transitions(state: ChainState, cfg: SystemConfig) -> dict:
    """Outgoing transitions of one compressed state as {target: rate}."""
    full = decode_state(state, cfg)
    n, k, t = cfg.n, cfg.k, cfg.t
    lam, mu = cfg.arrival_rate, cfg.service_rate
    out = {}

    def add(z, batches, m, rate):
        batches = normalize_batches(batches)
        w = tuple(batches[i][0] if i < len(batches) else 0 for i in range(t))
        target = ChainState(w=w, m=m)
        try:
            decode_state(target, cfg)
        except UnreachableStateError as exc:
            raise ChainBuildError(
                f"event from {state} produced undecodable state {target}: {exc}")
        out[target] = out.get(target, 0.0) + rate

    z, batches = full.z, list(full.batches)
    z2, b2, _ = apply_arrival(cfg.policy, t, n, k, z, batches)
    add(z2, b2, state.m + k, lam)

    tracked, other = in_service_counts(n, z, batches)
    for i, s_i in enumerate(tracked):
        if s_i > 0:
            z2, b2 = apply_completion(cfg.policy, t, n, k, z, batches, i + 1)
            add(z2, b2, state.m - 1, s_i * mu)
    if other > 0:
        z2, b2 = apply_completion(cfg.policy, t, n, k, z, batches, 0)
        add(z2, b2, state.m - 1, other * mu)
    return out


def reachable_states(cfg: SystemConfig, m_max: int) -> dict:
    """BFS closure from the empty system, capped at m_max total jobs.

    Returns {state: transitions} for every visited state with m <= m_max;
    transitions of states at the cap are still included (their up-targets
    are simply not expanded).
    """
    start = ChainState(w=(0,) * cfg.t, m=0)
    seen = {}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        if s in seen:
            continue
        trans = state_transitions(s, cfg)
        seen[s] = trans
        for tgt in trans:
            if tgt not in seen and tgt.m <= m_max:
                queue.append(tgt)
    return seen


@dataclass
class QbdBlocks:
    """Generator blocks of a level-independent QBD chain.

    Boundary states own the irregular low-occupancy region; every level j
    covers job counts {n-k+1+j*k, ..., n+j*k} and repeats identically.
    level_offsets stores (m - j*k, w) pairs identifying the states of a
    level in canonical order.
    """

    cfg: SystemConfig
    B0: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    A0: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    boundary_states: list
    level_offsets: list
    first_level: int
    _index: dict = field(default_factory=dict, repr=False)

    @property
    def q_b(self) -> int:
        return len(self.boundary_states)

    @property
    def q_l(self) -> int:
        return len(self.level_offsets)

    def level_states(self, j: int) -> list:
        if j < self.first_level:
            raise ValueError("level index below the first repeating level")
        return [ChainState(w=w, m=off + j * self.cfg.k)
                for off, w in self.level_offsets]

    def state_index(self, state: ChainState) -> tuple:
        """(block, offset): block is 'boundary' or the level index."""
        if not self._index:
            for i, s in enumerate(self.boundary_states):
                self._index[s] = ("boundary", i)
        if state in self._index:
            return self._index[state]
        k = self.cfg.k
        for i, (off, w) in enumerate(self.level_offsets):
            if w == state.w and (state.m - off) % k == 0:
                j = (state.m - off) // k
                if j >= self.first_level:
                    return (j, i)
        raise KeyError(f"{state} is not a reachable state of this chain")

    def dump(self, directory: str) -> None:
        """Write each block as a plain-text matrix file for external checks."""
        os.makedirs(directory, exist_ok=True)
        for name in ("B0", "B1", "B2", "A0", "A1", "A2"):
            mat = getattr(self, name)
            with open(os.path.join(directory, f"{name}.txt"), "w") as fh:
                fh.write(f"{self.q_b} {self.q_l}\n")
                for row in mat:
                    fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def _extract(trans_by_state, rows, cols_by_block):
    """Rate matrix rows -> one block per destination partition."""
    mats = {name: np.zeros((len(rows), len(cols))) for name, cols in cols_by_block.items()}
    lookups = {name: {s: i for i, s in enumerate(cols)} for name, cols in cols_by_block.items()}
    for r, s in enumerate(rows):
        for tgt, rate in trans_by_state[s].items():
            placed = False
            for name, lut in lookups.items():
                if tgt in lut:
                    mats[name][r, lut[tgt]] += rate
                    placed = True
                    break
            if not placed:
                raise ChainBuildError(f"transition {s} -> {tgt} escapes the block partition")
    return mats


def build_qbd(cfg: SystemConfig) -> QbdBlocks:
    """Assemble the six generator blocks for a Reservation(t) or MkMn(t) queue."""
    if cfg.policy == Policy.MDS:
        raise ValueError("the exact MDS queue is not a QBD process; simulate it")
    n, k = cfg.n, cfg.k
    j0 = first_level_index(cfg)
    b_max = boundary_max_jobs(cfg)
    # Boundary, first level, two interior levels for extraction, plus one
    # more so the deepest extracted level has its full fan-out expanded.
    probe_levels = 4
    m_max = n + (j0 + probe_levels) * k
    trans = reachable_states(cfg, m_max)

    def level_members(j):
        lo, hi = n - k + 1 + j * k, n + j * k
        return sorted([s for s in trans if lo <= s.m <= hi],
                      key=lambda s: (s.m, s.w))

    boundary = sorted([s for s in trans if s.m <= b_max], key=lambda s: (s.m, s.w))
    patterns = {j: [(s.m - j * k, s.w) for s in level_members(j)]
                for j in range(j0, j0 + probe_levels)}
    if not (patterns[j0] == patterns[j0 + 1] == patterns[j0 + 2]):
        raise ChainBuildError("level state patterns do not stabilize; "
                              "boundary partition is wrong")
    level_offsets = patterns[j0]

    first = level_members(j0)
    interior = level_members(j0 + 1)
    below = level_members(j0)
    above = level_members(j0 + 2)

    bmats = _extract(trans, boundary, {"B1": boundary, "B2": first})
    fmats = _extract(trans, first, {"B0": boundary, "A1f": first, "A2f": interior})
    imats = _extract(trans, interior, {"A0": below, "A1": interior, "A2": above})
    jmats = _extract(trans, above, {"A0": interior, "A1": above,
                                    "A2": level_members(j0 + 3)})

    B1, B2 = bmats["B1"], bmats["B2"]
    B0 = fmats["B0"]
    A0, A1, A2 = imats["A0"], imats["A1"], imats["A2"]

    for name, got, want in (("A0", jmats["A0"], A0), ("A1", jmats["A1"], A1),
                            ("A2", jmats["A2"], A2), ("A1", fmats["A1f"], A1),
                            ("A2", fmats["A2f"], A2)):
        if not np.allclose(got, want, rtol=0, atol=1e-12):
            raise ChainBuildError(f"level blocks are not shift-invariant ({name})")

    # Generator diagonals: each row's total outflow.
    np.fill_diagonal(B1, np.diag(B1) - (B1.sum(axis=1) + B2.sum(axis=1)))
    np.fill_diagonal(A1, np.diag(A1) - (B0.sum(axis=1) + A1.sum(axis=1) + A2.sum(axis=1)))
    # B0 rows sum to the same value as A0 rows (both are one completion),
    # so the first-level diagonal equals the interior one; verify via row sums.

    for name, rowsum in (("boundary", B1.sum(axis=1) + B2.sum(axis=1)),
                         ("first level", B0.sum(axis=1) + A1.sum(axis=1) + A2.sum(axis=1)),
                         ("interior", A0.sum(axis=1) + A1.sum(axis=1) + A2.sum(axis=1))):
        if np.max(np.abs(rowsum)) > _ROWSUM_TOL:
            raise ChainBuildError(f"{name} generator rows do not sum to zero")

    return QbdBlocks(cfg=cfg, B0=B0, B1=B1, B2=B2, A0=A0, A1=A1, A2=A2,
                     boundary_states=boundary, level_offsets=level_offsets,
                     first_level=j0)


def recurrence_stationary(cfg: SystemConfig, tail_mass: float = 1e-12) -> np.ndarray:
    """Stationary occupancy of Reservation(0) / MkMn(0) from the cut
    balance recurrence; truncated once the geometric tail bound drops
    below tail_mass."""
    if cfg.t != 0 or cfg.policy == Policy.MDS:
        raise ValueError("scalar recurrence exists only for Reservation(0) and MkMn(0)")
    n, k = cfg.n, cfg.k
    lam, mu = cfg.arrival_rate, cfg.service_rate

    def served(m):
        if cfg.policy == Policy.RESERVATION:
            return reservation0_service_count(m, cfg)
        return min(m, n)

    pi = [1.0]
    m = 0
    window = prev_window = None
    while True:
        m += 1
        lo = max(0, m - k)
        pi.append(lam / (served(m) * mu) * sum(pi[lo:m]))
        if m > n and m % k == 0:
            prev_window, window = window, sum(pi[m - k + 1:m + 1])
            if prev_window is not None:
                ratio = window / prev_window
                if ratio >= 1.0:
                    if m > n + 50 * k:
                        raise ValueError("recurrence diverges: system is not "
                                         "positive recurrent at this arrival rate")
                elif window * ratio / (1.0 - ratio) < tail_mass * sum(pi):
                    break
        if m > 10_000_000:
            raise ValueError("recurrence failed to converge")
    arr = np.asarray(pi)
    return arr / arr.sum()
