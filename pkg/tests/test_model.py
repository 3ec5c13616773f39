import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shus.model import (
    ReferenceWeights,
    TargetModel,
    log_target_density,
    potential_energy,
    potential_gradient,
    reference_weights,
    stratum_index,
)

from conftest import gl_log_theta_star

finite = st.floats(-3.0, 3.0, allow_nan=False)


class TestPotential:
    def test_value_at_origin(self):
        # 3 e^{-1/9} - 3 e^{-25/9} - 10 e^{-1} + 0.2 (1/3)^4
        want = 3 * math.exp(-1 / 9) - 3 * math.exp(-25 / 9) - 10 * math.exp(-1) + 0.2 / 81
        assert potential_energy(0.0, 0.0) == pytest.approx(want, rel=1e-15)

    def test_minima_location(self):
        for x in (1.048, -1.048):
            g1, g2 = potential_gradient(x, -0.042)
            assert math.hypot(g1, g2) < 0.05

    def test_barrier_height(self):
        gap = potential_energy(0.0, -0.3) - potential_energy(1.048, -0.042)
        assert gap == pytest.approx(2.7, abs=0.1)

    @given(finite, finite)
    def test_mirror_symmetry_exact(self, x1, x2):
        assert potential_energy(x1, x2) == potential_energy(-x1, x2)

    @given(st.floats(-2, 2), st.floats(-2, 3))
    @settings(max_examples=50)
    def test_gradient_matches_finite_differences(self, x1, x2):
        h = 1e-6
        g1, g2 = potential_gradient(x1, x2)
        f1 = (potential_energy(x1 + h, x2) - potential_energy(x1 - h, x2)) / (2 * h)
        f2 = (potential_energy(x1, x2 + h) - potential_energy(x1, x2 - h)) / (2 * h)
        assert g1 == pytest.approx(f1, abs=1e-6)
        assert g2 == pytest.approx(f2, abs=1e-6)

    def test_vectorized(self):
        x = np.linspace(-1, 1, 7)
        np.testing.assert_array_equal(potential_energy(x, 0.5 * x), [potential_energy(a, 0.5 * a) for a in x])


class TestTargetModel:
    @pytest.mark.parametrize("kw", [dict(beta=0.0, d=4), dict(beta=1.0, d=1), dict(beta=1.0, d=4, half_width=0)])
    def test_rejects_bad_parameters(self, kw):
        with pytest.raises(ValueError):
            TargetModel(**kw)

    def test_boundaries(self):
        m = TargetModel(1.0, 3)
        np.testing.assert_allclose(m.boundaries, [-1.2, -0.4, 0.4, 1.2])
        assert m.boundaries[-1] == 1.2

    def test_log_density_outside_slab(self):
        m = TargetModel(2.0, 4)
        assert log_target_density(m, 1.3, 0.0) == -math.inf
        assert log_target_density(m, 0.2, 0.1) == -2.0 * potential_energy(0.2, 0.1)


class TestStratumIndex:
    @pytest.mark.parametrize(
        "x1, want", [(-1.2, 1), (-0.41, 1), (-0.4 + 1e-12, 2), (0.0, 2), (0.4, 3), (1.2, 3)]
    )
    def test_d3(self, x1, want):
        assert stratum_index(TargetModel(1.0, 3), x1) == want

    def test_right_edge_clamped(self):
        for d in (2, 3, 12, 48):
            assert stratum_index(TargetModel(1.0, d), 1.2) == d

    def test_outside_raises(self):
        with pytest.raises(ValueError):
            stratum_index(TargetModel(1.0, 3), 1.2000001)

    @given(st.floats(-1.2, 1.2), st.integers(2, 64))
    def test_within_boundaries(self, x1, d):
        m = TargetModel(1.0, d)
        i = stratum_index(m, x1)
        a = m.boundaries
        assert 1 <= i <= d
        assert a[i - 1] - 1e-12 <= x1
        assert x1 < a[i] + 1e-12 or (i == d and x1 == a[-1])


class TestReferenceWeights:
    def test_two_strata_halves(self):
        np.testing.assert_allclose(reference_weights(TargetModel(1.0, 2), 801).theta_star, [0.5, 0.5], rtol=1e-12)

    def test_d12_symmetric_and_normalized(self, theta_star_b1_d12):
        ts = theta_star_b1_d12
        assert ts.sum() == pytest.approx(1.0, abs=1e-14)
        np.testing.assert_allclose(ts, ts[::-1], rtol=1e-6)
        assert np.all(ts > 0)

    @pytest.mark.parametrize("beta, d", [(1.0, 4), (1.0, 12)])
    def test_against_gauss_legendre_oracle(self, beta, d):
        got = reference_weights(TargetModel(beta, d)).log_theta_star
        np.testing.assert_allclose(got, gl_log_theta_star(beta, d), atol=1e-9)

    def test_beta10_profile(self):
        ref = reference_weights(TargetModel(10.0, 48))
        np.testing.assert_allclose(ref.log_theta_star, gl_log_theta_star(10.0, 48), atol=1e-6)
        # deep wells next to x1 = +-1.05, barrier around 0
        lt = ref.log_theta_star
        centers = 0.5 * (TargetModel(10.0, 48).boundaries[1:] + TargetModel(10.0, 48).boundaries[:-1])
        assert abs(abs(centers[np.argmax(lt)]) - 1.05) < 0.1
        assert lt.min() < -20

    def test_resolution_doubling_beta1(self):
        m = TargetModel(1.0, 12)
        a = reference_weights(m, 1001).theta_star
        b = reference_weights(m, 2001).theta_star
        assert np.max(np.abs(a / b - 1)) < 1e-8

    def test_error_estimate_and_tolerance(self):
        m = TargetModel(1.0, 4)
        ref = reference_weights(m, 201)
        assert 0 < ref.estimated_error < 1e-6
        with pytest.raises(ValueError):
            reference_weights(m, 201, tol=ref.estimated_error / 10)

    def test_csv_roundtrip(self, tmp_path):
        ref = reference_weights(TargetModel(1.0, 4), 401)
        path = tmp_path / "ref.csv"
        ref.to_csv(path, header=["beta = 1.0"])
        text = path.read_text()
        assert text.startswith("# beta = 1.0")
        assert "stratum_index,theta_star,ln_theta_star" in text
        back = ReferenceWeights.from_csv(path)
        np.testing.assert_array_equal(back.theta_star, ref.theta_star)
