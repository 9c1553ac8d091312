"""Matrix-geometric solver: R matrix, drift, stationary law, capacity."""
import numpy as np
import pytest

from mdsqueue.config import Policy, SystemConfig
from mdsqueue.qbd import (UnstableChainError, drift, max_throughput, solve,
                          solve_rate_matrix, stationary)
from mdsqueue.chain import build_qbd


class TestRateMatrix:
    def test_scalar_birth_death(self):
        # For M/M/1 viewed as a QBD with 1x1 blocks, R = lam/mu.
        lam, mu = 0.7, 1.3
        A0 = np.array([[mu]])
        A1 = np.array([[-(lam + mu)]])
        A2 = np.array([[lam]])
        R = solve_rate_matrix(A0, A1, A2)
        assert abs(R[0, 0] - lam / mu) < 1e-12

    def test_quadratic_residual_is_tiny(self):
        blocks = build_qbd(SystemConfig(4, 2, 1.2, 1.0, Policy.RESERVATION, 1))
        R = solve_rate_matrix(blocks.A0, blocks.A1, blocks.A2)
        res = blocks.A2 + R @ blocks.A1 + R @ R @ blocks.A0
        assert np.max(np.abs(res)) < 1e-12
        assert np.all(R >= -1e-15)

    def test_unstable_raises(self):
        lam, mu = 2.0, 1.0
        A0 = np.array([[mu]])
        A1 = np.array([[-(lam + mu)]])
        A2 = np.array([[lam]])
        with pytest.raises(UnstableChainError):
            solve_rate_matrix(A0, A1, A2)


class TestDrift:
    def test_mm1_drift(self):
        lam, mu = 0.7, 1.3
        cert = drift(np.array([[mu]]), np.array([[-(lam + mu)]]),
                     np.array([[lam]]))
        assert cert.stable
        assert abs(cert.up_rate - lam) < 1e-12
        assert abs(cert.down_rate - mu) < 1e-12

    def test_threshold_matches_bisection(self):
        cfg = SystemConfig(4, 2, 1.0, 1.0, Policy.RESERVATION, 1)
        lam_star = max_throughput(cfg)
        blocks_lo = build_qbd(cfg.with_rate(lam_star * 0.999))
        blocks_hi = build_qbd(cfg.with_rate(lam_star * 1.001))
        assert drift(blocks_lo.A0, blocks_lo.A1, blocks_lo.A2).stable
        assert not drift(blocks_hi.A0, blocks_hi.A1, blocks_hi.A2).stable


class TestStationary:
    @pytest.mark.parametrize("policy,t", [(Policy.RESERVATION, 0),
                                          (Policy.RESERVATION, 1),
                                          (Policy.RESERVATION, 2),
                                          (Policy.MKMN, 0),
                                          (Policy.MKMN, 1)])
    def test_balance_and_normalization(self, policy, t):
        dist = solve(SystemConfig(4, 2, 1.2, 1.0, policy, t))
        assert dist.residual < 1e-10
        occ = dist.occupancy(tail_mass=1e-13)
        assert abs(occ.sum() - 1.0) < 1e-10
        assert np.all(occ >= 0)

    def test_iter_states_covers_mass(self):
        dist = solve(SystemConfig(4, 2, 1.2, 1.0, Policy.MKMN, 1))
        mass = sum(p for _, p in dist.iter_states(tail_mass=1e-10))
        assert abs(mass - 1.0) < 1e-8

    def test_state_probability_lookup(self):
        dist = solve(SystemConfig(4, 2, 1.0, 1.0, Policy.RESERVATION, 0))
        total = dist.pi_boundary.sum()
        for s in dist.blocks.boundary_states:
            assert dist.state_probability(s) >= 0
        assert 0 < total < 1

    def test_mean_jobs_matches_occupancy_sum(self):
        dist = solve(SystemConfig(10, 5, 1.5, 1.0, Policy.MKMN, 1))
        occ = dist.occupancy(tail_mass=1e-13)
        direct = float(np.arange(len(occ)) @ occ)
        assert abs(dist.mean_jobs() - direct) < 1e-8

    def test_unstable_configuration_raises(self):
        with pytest.raises(UnstableChainError):
            solve(SystemConfig(4, 2, 2.5, 1.0, Policy.RESERVATION, 1))


def resv1_capacity_k2(n):
    """Closed-form stability threshold of Reservation(1) for k = 2."""
    return n * n * (n - 1) / (2 * n * n - 2 * n + 1)


def resv1_capacity_k3(n):
    """Closed-form stability threshold of Reservation(1) for k = 3."""
    num = n * (n - 1) * (n - 2) * (n ** 3 - n ** 2 + n - 2)
    den = (3 * n ** 5 - 12 * n ** 4 + 22 * n ** 3
           - 29 * n ** 2 + 26 * n - 8)
    return num / den


class TestMaxThroughput:
    @pytest.mark.parametrize("n", range(3, 13))
    def test_reservation1_k2_closed_form(self, n):
        cfg = SystemConfig(n, 2, 0.5, 1.0, Policy.RESERVATION, 1)
        assert abs(max_throughput(cfg) - resv1_capacity_k2(n)) < 1e-6

    @pytest.mark.parametrize("n", range(4, 11))
    def test_reservation1_k3_closed_form(self, n):
        cfg = SystemConfig(n, 3, 0.5, 1.0, Policy.RESERVATION, 1)
        assert abs(max_throughput(cfg) - resv1_capacity_k3(n)) < 1e-6

    @pytest.mark.parametrize("t", [0, 1, 2])
    @pytest.mark.parametrize("n,k", [(4, 2), (10, 5)])
    def test_mkmn_attains_full_capacity(self, n, k, t):
        cfg = SystemConfig(n, k, 0.5, 1.0, Policy.MKMN, t)
        assert max_throughput(cfg) == cfg.capacity

    def test_capacity_increases_with_t(self):
        caps = [max_throughput(SystemConfig(10, 5, 0.5, 1.0,
                                            Policy.RESERVATION, t))
                for t in (1, 2, 3)]
        assert caps[0] < caps[1] < caps[2] < 2.0

    def test_mds_capacity_is_not_analytic(self):
        with pytest.raises(ValueError):
            max_throughput(SystemConfig(4, 2, 1.0, 1.0, Policy.MDS, 0))

    def test_scales_with_service_rate(self):
        slow = max_throughput(SystemConfig(5, 2, 0.5, 1.0, Policy.RESERVATION, 1))
        fast = max_throughput(SystemConfig(5, 2, 0.5, 2.0, Policy.RESERVATION, 1))
        assert abs(fast - 2 * slow) < 1e-6
