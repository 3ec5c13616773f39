import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shus.kernel import ChainState, ProposalConfig, log_acceptance, mh_step, propose
from shus.model import TargetModel, stratum_index
from shus.oracle import biased_stratum_masses
from shus.rng import NoiseStream

inside = st.tuples(st.floats(-1.2, 1.2), st.floats(-2.0, 3.0))


def batch_means_se(x, n_batches=50):
    """Standard error of the mean of a correlated series."""
    x = np.asarray(x, dtype=float)
    b = len(x) // n_batches
    means = x[: b * n_batches].reshape(n_batches, b).mean(axis=1)
    return means.std(ddof=1) / math.sqrt(n_batches)


def run_frozen(model, log_theta, sigma, n, seed=0):
    state = ChainState(rng=NoiseStream(seed))
    cfg = ProposalConfig(sigma)
    strata = np.empty(n, dtype=np.int64)
    for k in range(n):
        state, _, strata[k] = mh_step(state, model, log_theta, 1.0, cfg)
    return state, strata


class TestPropose:
    def test_consumes_one_triple(self):
        state = ChainState(rng=NoiseStream(5))
        ref = NoiseStream(5)
        z1, z2, _ = ref.draw()
        y = propose(state, ProposalConfig(0.3))
        assert y == (-1.0 + 0.3 * z1, 0.3 * z2)
        assert state.rng.consumed == 1
        assert state.position == (-1.0, 0.0)

    def test_sigma_validation(self):
        with pytest.raises(ValueError):
            ProposalConfig(0.0)


class TestLogAcceptance:
    @given(inside, inside, st.floats(0.1, 20), st.floats(0.0, 1.0), st.integers(2, 20), st.data())
    def test_antisymmetric(self, x, y, beta, a, d, data):
        model = TargetModel(beta, d)
        lt = np.array(data.draw(st.lists(st.floats(-30, 0), min_size=d, max_size=d)))
        assert log_acceptance(model, lt, a, x, y) == -log_acceptance(model, lt, a, y, x)

    def test_outside_slab(self):
        m = TargetModel(1.0, 4)
        assert log_acceptance(m, np.zeros(4), 1.0, (1.0, 0.0), (1.3, 0.0)) == -math.inf

    def test_shift_invariant(self):
        m = TargetModel(2.0, 4)
        lt = np.log([0.1, 0.2, 0.3, 0.4])
        a = log_acceptance(m, lt, 1.0, (-1.0, 0.0), (0.5, 0.1))
        assert log_acceptance(m, lt + 7.0, 1.0, (-1.0, 0.0), (0.5, 0.1)) == pytest.approx(a, abs=1e-12)


class TestMHStep:
    def test_nonnegative_ratio_always_accepted(self):
        # moving downhill into a less-weighted stratum: ratio >= 0 so u in (0, 1] accepts
        m = TargetModel(5.0, 4)
        lt = np.log([0.7, 0.1, 0.1, 0.1])
        for seed in range(200):
            state = ChainState(position=(-0.1, 0.0), rng=NoiseStream(seed))
            x = state.position
            y = propose(ChainState(position=x, rng=NoiseStream(seed)), ProposalConfig(0.2))
            ratio = log_acceptance(m, lt, 1.0, x, y)
            _, accepted, _ = mh_step(state, m, lt, 1.0, ProposalConfig(0.2))
            if ratio >= 0:
                assert accepted

    def test_rejection_keeps_position_and_counts_step(self):
        m = TargetModel(1.0, 4)
        state = ChainState(position=(1.19, 0.0), rng=NoiseStream(0))
        for _ in range(50):
            before = state.position
            state, accepted, stratum = mh_step(state, m, np.zeros(4), 1.0, ProposalConfig(5.0))
            if not accepted:
                assert state.position == before
            assert stratum == stratum_index(m, state.position[0])
        assert state.step_count == 50

    def test_never_leaves_slab(self):
        m = TargetModel(0.5, 6)
        state, _ = run_frozen(m, np.zeros(6), 1.0, 5000, seed=1)
        assert abs(state.position[0]) <= 1.2

    def test_detailed_balance_between_strata(self, theta_star_b1_d4):
        """Stationary flows between strata are symmetric: N(i->j) ~ N(j->i)."""
        m = TargetModel(1.0, 4)
        lt = np.log([0.4, 0.1, 0.2, 0.3])
        _, strata = run_frozen(m, lt, 0.6, 200_000, seed=2)
        counts = np.zeros((4, 4))
        np.add.at(counts, (strata[:-1] - 1, strata[1:] - 1), 1)
        for i in range(4):
            for j in range(i + 1, 4):
                total = counts[i, j] + counts[j, i]
                if total > 100:
                    assert abs(counts[i, j] - counts[j, i]) <= 4 * math.sqrt(total)

    def test_frozen_occupation_matches_biased_masses(self, theta_star_b1_d4):
        m = TargetModel(1.0, 4)
        theta = np.array([0.4, 0.1, 0.2, 0.3])
        want = biased_stratum_masses(theta, theta_star_b1_d4)
        _, strata = run_frozen(m, np.log(theta), 0.6, 200_000, seed=3)
        strata = strata[1000:]
        for i in range(4):
            hits = strata == i + 1
            assert abs(hits.mean() - want[i]) <= 3 * batch_means_se(hits)
