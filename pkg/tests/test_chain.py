"""QBD block assembly checked against hand-transcribed generators."""
import numpy as np
import pytest

from mdsqueue.chain import (ChainBuildError, build_qbd, reachable_states,
                            recurrence_stationary)
from mdsqueue.config import Policy, SystemConfig
from mdsqueue.qbd import solve
from mdsqueue.statespace import ChainState


def total_variation(p, q):
    size = max(len(p), len(q))
    a = np.zeros(size); a[:len(p)] = p
    b = np.zeros(size); b[:len(q)] = q
    return 0.5 * float(np.abs(a - b).sum())


@pytest.fixture(scope="module")
def resv0_blocks():
    return build_qbd(SystemConfig(4, 2, 1.0, 1.0, Policy.RESERVATION, 0))


@pytest.fixture(scope="module")
def mkmn0_blocks():
    return build_qbd(SystemConfig(4, 2, 1.0, 1.0, Policy.MKMN, 0))


class TestReservation0Blocks:
    """Hand-derived generator for n=4, k=2, lam=mu=1.

    Boundary states are m in {0, 1, 2}; each repeating level holds
    {m = 3+2j, m = 4+2j}.
    """

    @pytest.fixture
    def blocks(self, resv0_blocks):
        return resv0_blocks

    def test_shapes_and_partition(self, blocks):
        assert blocks.q_b == 3 and blocks.q_l == 2
        assert [s.m for s in blocks.boundary_states] == [0, 1, 2]
        assert blocks.level_offsets == [(3, ()), (4, ())]
        assert blocks.first_level == 0

    def test_block_entries(self, blocks):
        lam = mu = 1.0
        B0 = [[0, 0, 3 * mu], [0, 0, 0]]
        B1 = [[-lam, 0, lam],
              [mu, -(mu + lam), 0],
              [0, 2 * mu, -(2 * mu + lam)]]
        B2 = [[0, 0], [lam, 0], [0, lam]]
        A0 = [[0, 3 * mu], [0, 0]]
        A1 = [[-(3 * mu + lam), 0], [4 * mu, -(4 * mu + lam)]]
        A2 = [[lam, 0], [0, lam]]
        for name, want in [("B0", B0), ("B1", B1), ("B2", B2),
                           ("A0", A0), ("A1", A1), ("A2", A2)]:
            np.testing.assert_array_equal(getattr(blocks, name), np.array(want, float),
                                          err_msg=name)


class TestMkMn0Blocks:
    """Hand-derived generator for n=4, k=2, lam=mu=1.

    Boundary states are m in {0..4}; levels hold {m = 3+2j, m = 4+2j}
    from j = 1.
    """

    @pytest.fixture
    def blocks(self, mkmn0_blocks):
        return mkmn0_blocks

    def test_shapes_and_partition(self, blocks):
        assert blocks.q_b == 5 and blocks.q_l == 2
        assert [s.m for s in blocks.boundary_states] == [0, 1, 2, 3, 4]
        assert blocks.first_level == 1

    def test_block_entries(self, blocks):
        lam = mu = 1.0
        B0 = [[0, 0, 0, 0, 4 * mu], [0, 0, 0, 0, 0]]
        B1 = [[-lam, 0, lam, 0, 0],
              [mu, -(mu + lam), 0, lam, 0],
              [0, 2 * mu, -(2 * mu + lam), 0, lam],
              [0, 0, 3 * mu, -(3 * mu + lam), 0],
              [0, 0, 0, 4 * mu, -(4 * mu + lam)]]
        B2 = [[0, 0], [0, 0], [0, 0], [lam, 0], [0, lam]]
        A0 = [[0, 4 * mu], [0, 0]]
        A1 = [[-(4 * mu + lam), 0], [4 * mu, -(4 * mu + lam)]]
        A2 = [[lam, 0], [0, lam]]
        for name, want in [("B0", B0), ("B1", B1), ("B2", B2),
                           ("A0", A0), ("A1", A1), ("A2", A2)]:
            np.testing.assert_array_equal(getattr(blocks, name), np.array(want, float),
                                          err_msg=name)


class TestReservation1Blocks:
    """Level blocks for n=4, k=2, t=1 at lam=mu=1: three states per level,
    offsets (3,(1,)), (4,(1,)), (4,(2,))."""

    def test_level_blocks(self):
        blocks = build_qbd(SystemConfig(4, 2, 1.0, 1.0, Policy.RESERVATION, 1))
        assert blocks.level_offsets == [(3, (1,)), (4, (1,)), (4, (2,))]
        mu = 1.0
        A0 = [[0, mu, 3 * mu], [0, 0, 0], [0, 0, 0]]
        A1 = [[-5, 0, 0], [3 * mu, -4, 0], [4 * mu, 0, -5]]
        A2 = np.eye(3)
        np.testing.assert_allclose(blocks.A0, np.array(A0, float), atol=0)
        np.testing.assert_allclose(blocks.A1, np.array(A1, float), atol=0)
        np.testing.assert_allclose(blocks.A2, A2, atol=0)


class TestGeneratorInvariants:
    @pytest.mark.parametrize("policy,t,n,k", [
        (Policy.RESERVATION, 0, 4, 2), (Policy.RESERVATION, 1, 4, 2),
        (Policy.RESERVATION, 2, 4, 2), (Policy.RESERVATION, 1, 6, 3),
        (Policy.MKMN, 0, 4, 2), (Policy.MKMN, 1, 4, 2),
        (Policy.MKMN, 2, 4, 2), (Policy.MKMN, 1, 6, 3),
    ])
    def test_rows_sum_to_zero_and_offdiag_nonneg(self, policy, t, n, k):
        blocks = build_qbd(SystemConfig(n, k, 1.3, 1.0, policy, t))
        top = np.hstack([blocks.B1, blocks.B2,
                         np.zeros((blocks.q_b, blocks.q_l))])
        mid = np.hstack([blocks.B0, blocks.A1, blocks.A2])
        rows = np.vstack([top, mid])
        assert np.max(np.abs(rows.sum(axis=1))) < 1e-10
        for name in ("B0", "B2", "A0", "A2"):
            assert np.all(getattr(blocks, name) >= 0), name
        for name in ("B1", "A1"):
            mat = getattr(blocks, name).copy()
            np.fill_diagonal(mat, 0.0)
            assert np.all(mat >= 0), name

    def test_mds_has_no_chain(self):
        with pytest.raises(ValueError):
            build_qbd(SystemConfig(4, 2, 1.0, 1.0, Policy.MDS, 0))


class TestReachability:
    def test_bfs_closure_matches_enumeration(self):
        cfg = SystemConfig(4, 2, 1.0, 1.0, Policy.RESERVATION, 1)
        trans = reachable_states(cfg, m_max=10)
        # Every target with m <= cap is itself expanded.
        for s, out in trans.items():
            for tgt in out:
                if tgt.m <= 10:
                    assert tgt in trans
        assert ChainState(w=(1,), m=4) in trans
        assert ChainState(w=(2,), m=6) in trans
        assert ChainState(w=(1,), m=2) not in trans


class TestScalarRecurrence:
    """The t=0 occupancy chains are birth-death-like in m; the recurrence
    is an independent oracle for the matrix-geometric solver."""

    @pytest.mark.parametrize("policy", [Policy.RESERVATION, Policy.MKMN])
    @pytest.mark.parametrize("n,k,lam", [(4, 2, 1.0), (10, 5, 1.5), (6, 3, 0.8)])
    def test_qbd_matches_recurrence(self, policy, n, k, lam):
        cfg = SystemConfig(n, k, lam, 1.0, policy, 0)
        ref = recurrence_stationary(cfg)
        occ = solve(cfg).occupancy()
        assert total_variation(ref, occ) < 1e-9

    def test_recurrence_mm1_special_case(self):
        # n=1, k=1: plain M/M/1, pi_m = (1-rho) rho^m.
        cfg = SystemConfig(1, 1, 0.5, 1.0, Policy.MKMN, 0)
        pi = recurrence_stationary(cfg)
        want = 0.5 * np.power(0.5, np.arange(len(pi)))
        np.testing.assert_allclose(pi, want, atol=1e-12)

    def test_recurrence_rejects_unstable(self):
        cfg = SystemConfig(4, 2, 3.0, 1.0, Policy.MKMN, 0)
        with pytest.raises(ValueError):
            recurrence_stationary(cfg)

    def test_recurrence_rejects_t_above_zero(self):
        with pytest.raises(ValueError):
            recurrence_stationary(SystemConfig(4, 2, 1.0, 1.0, Policy.RESERVATION, 1))
