"""Matrix-analytic machinery for level-independent QBD generators.

Stationary distributions are matrix-geometric: pi_{j+1} = pi_j R where R
is the minimal nonnegative solution of A2 + R A1 + R^2 A0 = 0.  Stability
is decided by the mean-drift condition on the level process.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import QbdBlocks, build_qbd
from .config import Policy, SystemConfig

_R_TOL = 1e-14
_R_MAX_ITER = 200_000


class UnstableChainError(RuntimeError):
    """The chain is not positive recurrent at this arrival rate."""


def solve_rate_matrix(A0: np.ndarray, A1: np.ndarray, A2: np.ndarray,
                      tol: float = _R_TOL) -> np.ndarray:
    """Minimal nonnegative solution R of A2 + R A1 + R^2 A0 = 0.

    Functional iteration R <- -(A2 + R^2 A0) A1^{-1} from R = 0; the
    iterates increase monotonically to the minimal solution.
    """
    inv_a1 = np.linalg.inv(A1)
    R = np.zeros_like(A1)
    for _ in range(_R_MAX_ITER):
        R_next = -(A2 + R @ R @ A0) @ inv_a1
        delta = np.max(np.abs(R_next - R))
        R = R_next
        if delta < tol:
            break
    else:
        raise RuntimeError("rate-matrix iteration did not converge")
    # at the stability boundary the iteration converges to radius 1 from
    # below; allow for that numerically
    if np.max(np.abs(np.linalg.eigvals(R))) >= 1.0 - 1e-9:
        raise UnstableChainError("spectral radius of R is not below one")
    return R


@dataclass(frozen=True)
class DriftCertificate:
    """Mean-drift stability verdict for a QBD level process.

    v is the stationary vector of the within-level generator A0 + A1 + A2;
    the chain is positive recurrent iff up_rate (v A2 1) is strictly below
    down_rate (v A0 1).
    """

    v: np.ndarray
    up_rate: float
    down_rate: float

    @property
    def stable(self) -> bool:
        return self.up_rate < self.down_rate


def drift(A0: np.ndarray, A1: np.ndarray, A2: np.ndarray) -> DriftCertificate:
    A = A0 + A1 + A2
    q = A.shape[0]
    # v A = 0, v 1 = 1: replace one balance column with the normalization.
    M = A.T.copy()
    M[-1, :] = 1.0
    rhs = np.zeros(q)
    rhs[-1] = 1.0
    v = np.linalg.solve(M, rhs)
    one = np.ones(q)
    return DriftCertificate(v=v, up_rate=float(v @ A2 @ one),
                            down_rate=float(v @ A0 @ one))


@dataclass
class StationaryDistribution:
    """Stationary law of a QBD chain in matrix-geometric form."""

    blocks: QbdBlocks
    pi_boundary: np.ndarray
    pi_level1: np.ndarray  # first repeating level
    R: np.ndarray
    residual: float        # max |pi Q| over the verified finite prefix

    def level(self, j: int) -> np.ndarray:
        """Probability vector of repeating level j (j >= first_level)."""
        j0 = self.blocks.first_level
        if j < j0:
            raise ValueError("level index below the first repeating level")
        return self.pi_level1 @ np.linalg.matrix_power(self.R, j - j0)

    def occupancy(self, tail_mass: float = 1e-12) -> np.ndarray:
        """Marginal distribution of the total job count m.

        Truncated once the remaining geometric tail (computed exactly from
        R) drops below tail_mass.
        """
        b = self.blocks
        probs = {}
        for s, p in zip(b.boundary_states, self.pi_boundary):
            probs[s.m] = probs.get(s.m, 0.0) + p
        j = b.first_level
        pi_j = self.pi_level1.copy()
        inv = np.linalg.inv(np.eye(b.q_l) - self.R)
        while float(pi_j @ inv @ np.ones(b.q_l)) > tail_mass:
            for (off, _), p in zip(b.level_offsets, pi_j):
                m = off + j * b.cfg.k
                probs[m] = probs.get(m, 0.0) + p
            pi_j = pi_j @ self.R
            j += 1
        out = np.zeros(max(probs) + 1)
        for m, p in probs.items():
            out[m] = p
        return out

    def iter_states(self, tail_mass: float = 1e-10):
        """Yield (state, probability) pairs until the uncovered geometric
        tail drops below tail_mass."""
        b = self.blocks
        for s, p in zip(b.boundary_states, self.pi_boundary):
            yield s, float(p)
        inv = np.linalg.inv(np.eye(b.q_l) - self.R)
        one = np.ones(b.q_l)
        j = b.first_level
        pi_j = self.pi_level1.copy()
        while float(pi_j @ inv @ one) > tail_mass:
            for s, p in zip(b.level_states(j), pi_j):
                yield s, float(p)
            pi_j = pi_j @ self.R
            j += 1

    def state_probability(self, state) -> float:
        block, i = self.blocks.state_index(state)
        if block == "boundary":
            return float(self.pi_boundary[i])
        return float(self.level(block)[i])

    def mean_jobs(self) -> float:
        """Expected total number of jobs in the system."""
        b = self.blocks
        total = float(sum(p * s.m for s, p in zip(b.boundary_states, self.pi_boundary)))
        k, j0 = b.cfg.k, b.first_level
        offs = np.array([off for off, _ in b.level_offsets], dtype=float)
        I = np.eye(b.q_l)
        inv = np.linalg.inv(I - self.R)
        one = np.ones(b.q_l)
        # sum_j pi_1 R^{j-j0} (offs + j*k) with j from j0 upward
        total += float(self.pi_level1 @ inv @ offs)
        total += k * j0 * float(self.pi_level1 @ inv @ one)
        total += k * float(self.pi_level1 @ inv @ self.R @ inv @ one)
        return total


def stationary(blocks: QbdBlocks) -> StationaryDistribution:
    """Solve the boundary balance equations and return the stationary law."""
    cert = drift(blocks.A0, blocks.A1, blocks.A2)
    if not cert.stable:
        raise UnstableChainError(
            f"arrival rate {blocks.cfg.arrival_rate} is at or above this "
            f"policy's capacity (drift {cert.up_rate:.6g} >= {cert.down_rate:.6g})")
    R = solve_rate_matrix(blocks.A0, blocks.A1, blocks.A2)
    q_b, q_l = blocks.q_b, blocks.q_l

    # Balance for [pi_b, pi_1]:
    #   pi_b B1 + pi_1 B0 = 0
    #   pi_b B2 + pi_1 (A1 + R A0) = 0
    # with normalization pi_b 1 + pi_1 (I - R)^{-1} 1 = 1.
    M = np.zeros((q_b + q_l, q_b + q_l))
    M[:q_b, :q_b] = blocks.B1
    M[q_b:, :q_b] = blocks.B0
    M[:q_b, q_b:] = blocks.B2
    M[q_b:, q_b:] = blocks.A1 + R @ blocks.A0
    sys = M.T.copy()
    rhs = np.zeros(q_b + q_l)
    norm = np.concatenate([np.ones(q_b),
                           np.linalg.inv(np.eye(q_l) - R) @ np.ones(q_l)])
    sys[-1, :] = norm
    rhs[-1] = 1.0
    sol = np.linalg.solve(sys, rhs)
    pi_b, pi_1 = sol[:q_b], sol[q_b:]
    if min(pi_b.min(), pi_1.min()) < -1e-10:
        raise RuntimeError("stationary solve produced negative probabilities")
    pi_b = np.maximum(pi_b, 0.0)
    pi_1 = np.maximum(pi_1, 0.0)

    # Residual check over boundary + three levels.
    pi_2 = pi_1 @ R
    pi_3 = pi_2 @ R
    res = [pi_b @ blocks.B1 + pi_1 @ blocks.B0,
           pi_b @ blocks.B2 + pi_1 @ blocks.A1 + pi_2 @ blocks.A0,
           pi_1 @ blocks.A2 + pi_2 @ blocks.A1 + pi_3 @ blocks.A0]
    residual = max(float(np.max(np.abs(r))) for r in res)
    return StationaryDistribution(blocks=blocks, pi_boundary=pi_b,
                                  pi_level1=pi_1, R=R, residual=residual)


def solve(cfg: SystemConfig) -> StationaryDistribution:
    """Build the chain for cfg and solve it."""
    return stationary(build_qbd(cfg))


def max_throughput(cfg: SystemConfig, tol: float = 1e-9) -> float:
    """Largest batch arrival rate the policy sustains (stability threshold).

    The level blocks depend on the arrival rate only through A2 = lam*I and
    the diagonal of A1, so one chain build suffices: the drift condition is
    checked for rescaled blocks directly.
    """
    if cfg.policy == Policy.MKMN:
        # The relaxed policy keeps every server busy under backlog, so it
        # attains the full service capacity.
        return cfg.capacity
    if cfg.policy == Policy.MDS:
        raise ValueError("the exact MDS queue has no chain; estimate its "
                         "capacity with measure_saturation_throughput")
    blocks = build_qbd(cfg)
    lam0 = cfg.arrival_rate
    A0, A1, A2 = blocks.A0, blocks.A1, blocks.A2
    I = np.eye(blocks.q_l)

    def stable(lam):
        cert = drift(A0, A1 + (lam0 - lam) * I, (lam / lam0) * A2)
        return cert.stable

    hi = cfg.capacity
    lo = tol
    if stable(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
