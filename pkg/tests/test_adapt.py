import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shus import adapt
from shus.adapt import (
    LogOccupation,
    PartialBias,
    SHUS,
    SHUSAlpha,
    WLDeterministic,
    current_stepsize,
    gamma_alpha,
    multiplicative_theta_update,
    partial_bias_update,
    sa_residual,
    shus_alpha_update,
    shus_update,
    update,
    wl_linear_log_update,
    wl_linear_update,
    wl_nonlinear_update,
)


def occ_from_tau(tau, scheme=None, M=1e10):
    return LogOccupation(nu=np.log(np.asarray(tau, dtype=float)), scheme=scheme or SHUS())


simplex = st.integers(2, 12).flatmap(
    lambda d: st.lists(st.floats(0.01, 1.0), min_size=d, max_size=d).map(lambda v: np.array(v) / sum(v))
)


class TestSchemes:
    @pytest.mark.parametrize(
        "factory",
        [
            lambda: SHUS(0.0),
            lambda: WLDeterministic(0.0),
            lambda: WLDeterministic(1.0, alpha=0.5),
            lambda: WLDeterministic(1.0, linear=True),
            lambda: SHUSAlpha(1.0, 1.0),
            lambda: SHUSAlpha(1.0, 0.5),
            lambda: PartialBias(1.0, 0.0),
            lambda: PartialBias(1.0, 1.5),
        ],
    )
    def test_rejects_out_of_range(self, factory):
        with pytest.raises(ValueError):
            factory()

    def test_gamma_alpha_09(self):
        assert gamma_alpha(0.9) == pytest.approx(1e9, rel=1e-9)

    def test_gamma_alpha_limit_constant(self):
        s = SHUSAlpha(1.0, 0.6)
        assert s.limit_constant(12) == pytest.approx(s.gamma_alpha**0.4 * 12**0.6 * 0.4**0.6)


class TestStepsize:
    def test_shus_first(self):
        # gamma / S_n
        assert current_stepsize(occ_from_tau([1, 1], SHUS(2.0))) == pytest.approx(1.0, rel=1e-15)
        assert current_stepsize(occ_from_tau([1, 1, 2], SHUS(2.0))) == pytest.approx(0.5, rel=1e-15)

    def test_shus_alpha_unit_log(self):
        # S_n = e - 1 makes ln(1 + S_n) = 1
        c = gamma_alpha(2 / 3)
        occ = occ_from_tau([(math.e - 1) / 2] * 2, SHUSAlpha(1.0, 2 / 3))
        assert current_stepsize(occ) == pytest.approx(c, rel=1e-14)

    def test_wl(self):
        occ = LogOccupation.uniform(4, WLDeterministic(3.0, 0.75))
        occ.n = 15
        assert current_stepsize(occ) == pytest.approx(3.0 / 16**0.75)

    def test_partial_bias_needs_hit(self):
        occ = LogOccupation.uniform(2, PartialBias(2.0, 0.5))
        with pytest.raises(ValueError):
            current_stepsize(occ)
        assert current_stepsize(occ, hit_stratum=1) == pytest.approx(2.0 * 0.5**-0.5 / 1.0)

    def test_renormalized_stepsize_unchanged(self):
        occ = occ_from_tau([3e9, 4e9, 5e9], SHUS(1.0))
        g = current_stepsize(occ)
        occ2 = adapt._renormalize(occ.copy())
        assert occ2.renorm_count == 1
        assert current_stepsize(occ2) == pytest.approx(g, rel=1e-14)


class TestShusUpdate:
    def test_worked_example(self):
        occ = shus_update(occ_from_tau([1, 1, 2], SHUS(2.0)), 3)
        np.testing.assert_allclose(occ.tau(), [1, 1, 3], rtol=1e-15)

    def test_bad_hit(self):
        with pytest.raises(ValueError):
            shus_update(LogOccupation.uniform(3), 4)

    @given(simplex, st.floats(0.1, 5.0), st.data())
    def test_only_hit_changes(self, theta, gamma, data):
        occ = occ_from_tau(theta, SHUS(gamma))
        hit = data.draw(st.integers(1, len(theta)))
        new = shus_update(occ, hit)
        changed = new.nu != occ.nu
        assert changed[hit - 1] and changed.sum() == 1
        assert new.nu[hit - 1] > occ.nu[hit - 1]

    def test_stepsize_strictly_decreasing(self):
        rng = np.random.default_rng(0)
        occ = LogOccupation.uniform(5, SHUS(1.0))
        g_prev = current_stepsize(occ)
        for hit in rng.integers(1, 6, size=2000):
            occ = shus_update(occ, int(hit))
            g = current_stepsize(occ)
            assert g < g_prev
            g_prev = g

    def test_additive_and_log_scale_agree(self):
        # additive theta-weighted rule in plain arithmetic vs the log-scale rule
        rng = np.random.default_rng(4)
        d, gamma = 6, 1.0
        tau = np.full(d, 1.0 / d)
        occ = LogOccupation.uniform(d, SHUS(gamma), M=1e3)
        for hit in rng.integers(1, d + 1, size=10**5):
            theta = tau / tau.sum()
            tau[hit - 1] += gamma * theta[hit - 1]
            occ = shus_update(occ, int(hit))
        assert occ.renorm_count > 0
        np.testing.assert_allclose(occ.theta, tau / tau.sum(), rtol=1e-9)


class TestWangLandau:
    def test_zero_step_identity(self):
        occ = LogOccupation.uniform(3)
        np.testing.assert_array_equal(wl_nonlinear_update(occ, 2, 0.0).nu, occ.nu)

    def test_nonlinear_example(self):
        new = wl_nonlinear_update(occ_from_tau([1, 1]), 1, 1.0)
        np.testing.assert_allclose(new.theta, [2 / 3, 1 / 3], rtol=1e-15)

    def test_negative_step(self):
        with pytest.raises(ValueError):
            wl_nonlinear_update(LogOccupation.uniform(2), 1, -0.1)

    def test_linear_example(self):
        np.testing.assert_allclose(wl_linear_update([0.5, 0.5], 1, 0.5), [0.625, 0.375], rtol=1e-15)

    def test_linear_rejects_large_step(self):
        with pytest.raises(ValueError):
            wl_linear_update([0.5, 0.5], 1, 1.0)

    @given(simplex, st.floats(0.0, 0.99), st.data())
    def test_linear_stays_on_simplex(self, theta, g, data):
        hit = data.draw(st.integers(1, len(theta)))
        new = wl_linear_update(theta, hit, g)
        assert new.sum() == pytest.approx(1.0, abs=1e-14)
        assert np.all(new > 0)
        # |theta' - theta| <= (1 + gamma_1) g; gamma_1 = g bounds it loosely
        assert np.all(np.abs(new - theta) <= 2 * g + 1e-15)

    @given(simplex, st.floats(0.0, 0.99), st.data())
    def test_log_form_matches_vector_form(self, theta, g, data):
        hit = data.draw(st.integers(1, len(theta)))
        occ = LogOccupation(nu=np.log(theta), scheme=WLDeterministic(0.5, linear=True))
        np.testing.assert_allclose(
            wl_linear_log_update(occ, hit, g).theta, wl_linear_update(theta, hit, g), rtol=1e-12
        )


class TestShusAlpha:
    def test_requires_scheme(self):
        with pytest.raises(TypeError):
            shus_alpha_update(LogOccupation.uniform(2), 1)

    def test_renormalizes_below_M(self):
        occ = LogOccupation.uniform(3, SHUSAlpha(1.0, 0.9), M=1e6)
        for _ in range(50):
            occ = shus_alpha_update(occ, 1)
            assert occ.sum_exp < 1e6
        assert occ.renorm_count > 0

    def test_M_invariance_of_updates(self):
        rng = np.random.default_rng(2)
        hits = rng.integers(1, 5, size=20000)
        a = LogOccupation.uniform(4, SHUSAlpha(1.0, 0.7), M=1e6)
        b = LogOccupation.uniform(4, SHUSAlpha(1.0, 0.7), M=1e10)
        for h in hits:
            a = shus_alpha_update(a, int(h))
            b = shus_alpha_update(b, int(h))
        assert a.renorm_count > b.renorm_count
        np.testing.assert_allclose(a.log_theta, b.log_theta, rtol=1e-9)
        assert a.log_total == pytest.approx(b.log_total, rel=1e-12)


class TestPartialBias:
    def test_worked_example(self):
        occ = occ_from_tau([1, 1], PartialBias(2.0, 0.5))
        np.testing.assert_allclose(partial_bias_update(occ, 1).tau(), [1 + 2 * 0.5**0.5, 1], rtol=1e-14)

    @given(simplex, st.floats(0.1, 4.0), st.data())
    def test_a1_bit_matches_shus(self, theta, gamma, data):
        hit = data.draw(st.integers(1, len(theta)))
        s = shus_update(occ_from_tau(theta, SHUS(gamma)), hit)
        p = partial_bias_update(occ_from_tau(theta, PartialBias(gamma, 1.0)), hit)
        np.testing.assert_array_equal(s.nu, p.nu)
        assert s.sum_exp == p.sum_exp


class TestMonotonicity:
    @pytest.mark.parametrize(
        "scheme", [SHUS(1.0), WLDeterministic(3.0), SHUSAlpha(1.0, 0.7), PartialBias(1.0, 0.5)]
    )
    def test_weights_non_decreasing(self, scheme):
        rng = np.random.default_rng(1)
        occ = LogOccupation.uniform(4, scheme, M=1e4)
        for h in rng.integers(1, 5, size=3000):
            new = update(occ, int(h))
            shift = (new.renorm_count - occ.renorm_count) * occ.log_M
            assert np.all(new.nu + shift >= occ.nu)
            assert new.log_total > occ.log_total
            # |1 - theta'/theta| <= stepsize
            g = current_stepsize(occ, hit_stratum=int(h))
            assert np.all(np.abs(1 - new.theta / occ.theta) <= g * (1 + 1e-12))
            occ = new


class TestSAResidual:
    @given(simplex, st.floats(1e-6, 0.999), st.data())
    @settings(max_examples=300)
    def test_decomposition_identity(self, theta, g, data):
        hit = data.draw(st.integers(1, len(theta)))
        H, Lam = sa_residual(theta, hit, g)
        want = multiplicative_theta_update(theta, hit, g)
        np.testing.assert_allclose(theta + g * H + g * Lam, want, rtol=1e-12)

    @given(simplex, st.floats(1e-6, 0.999), st.data())
    def test_bounds(self, theta, g, data):
        hit = data.draw(st.integers(1, len(theta)))
        H, Lam = sa_residual(theta, hit, g)
        assert abs(H.sum()) < 1e-15
        assert np.all(np.abs(Lam) <= g)

    def test_uniform_hit_values(self):
        H, _ = sa_residual(np.full(4, 0.25), 2, 0.1)
        np.testing.assert_allclose(H, [-1 / 16, 3 / 16, -1 / 16, -1 / 16])
