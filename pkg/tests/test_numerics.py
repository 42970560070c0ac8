import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import chi2_sf_even, chi2_sf_one
from strathet.errors import DomainError, NotPSD
from strathet.numerics import SeededStream, chi2_isf, chi2_sf, eigen_sym, sample_mvn_zero_mean


def det_small(m):
    if m.shape == (1, 1):
        return m[0, 0]
    if m.shape == (2, 2):
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


class TestEigenSym:
    def test_identity(self):
        vals, vecs = eigen_sym(np.eye(3))
        assert vals.tolist() == [1.0, 1.0, 1.0]
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(3), atol=1e-12)

    def test_two_by_two(self):
        vals, vecs = eigen_sym([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(vals, [3.0, 1.0], atol=1e-12)
        u = np.array([1.0, 1.0]) / math.sqrt(2)
        w = np.array([1.0, -1.0]) / math.sqrt(2)
        assert abs(abs(vecs[:, 0] @ u) - 1) < 1e-12
        assert abs(abs(vecs[:, 1] @ w) - 1) < 1e-12

    def test_rank_one(self):
        v = np.array([1.0, 2.0])
        vals, vecs = eigen_sym(np.outer(v, v))
        np.testing.assert_allclose(vals, [5.0, 0.0], atol=1e-12)
        assert abs(abs(vecs[:, 0] @ v) / math.sqrt(5) - 1) < 1e-12

    def test_zero_and_scalar(self):
        vals, vecs = eigen_sym(np.zeros((3, 3)))
        assert vals.tolist() == [0.0, 0.0, 0.0]
        vals, _ = eigen_sym([[4.0]])
        assert vals.tolist() == [4.0]

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            eigen_sym([[1.0, 2.0], [0.0, 1.0]])

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 6).flatmap(
        lambda r: arrays(np.float64, (r, r), elements=st.floats(-100, 100, allow_subnormal=False))))
    def test_decomposition_properties(self, raw):
        m = raw + raw.T
        vals, vecs = eigen_sym(m)
        r = m.shape[0]
        scale = 1.0 + np.abs(m).max()
        assert np.all(np.diff(vals) <= 0)
        assert np.abs(vecs @ np.diag(vals) @ vecs.T - m).max() <= 1e-8 * scale
        assert np.abs(vecs.T @ vecs - np.eye(r)).max() <= 1e-8
        assert abs(vals.sum() - np.trace(m)) <= 1e-8 * scale * r
        np.testing.assert_allclose(vals, np.linalg.eigvalsh(m)[::-1], atol=1e-9 * scale)
        if r <= 3:
            det = det_small(m)
            assert abs(np.prod(vals) - det) <= 1e-6 * max(abs(det), scale**r * 1e-6)


class TestMvn:
    def test_zero_covariance_gives_zero_draws(self):
        draws = sample_mvn_zero_mean(np.zeros((3, 3)), 100, SeededStream(1))
        assert draws.shape == (100, 3)
        assert np.all(draws == 0)

    def test_identity_recovered(self):
        draws = sample_mvn_zero_mean(np.eye(2), 100_000, SeededStream(2))
        cov = np.cov(draws, rowvar=False)
        assert np.linalg.norm(cov - np.eye(2)) <= 0.05 * np.linalg.norm(np.eye(2))
        assert np.abs(draws.mean(axis=0)).max() < 0.02

    def test_correlated_recovered(self):
        target = np.array([[2.0, 0.8, 0.0], [0.8, 1.0, -0.3], [0.0, -0.3, 0.5]])
        draws = sample_mvn_zero_mean(target, 100_000, SeededStream(3))
        cov = np.cov(draws, rowvar=False)
        assert np.linalg.norm(cov - target) <= 0.05 * np.linalg.norm(target)

    def test_tiny_negative_eigenvalue_clamped(self):
        q = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2)
        cov = q @ np.diag([1.0, -1e-12]) @ q.T
        draws = sample_mvn_zero_mean(cov, 1000, SeededStream(4))
        # all draws lie on the span of the positive eigenvector (1, 1)
        np.testing.assert_allclose(draws @ q[:, 1], 0.0, atol=1e-12)

    def test_not_psd(self):
        with pytest.raises(NotPSD):
            sample_mvn_zero_mean(np.diag([1.0, -0.01]), 10, SeededStream(5))

    def test_seed_determinism(self):
        cov = np.array([[1.0, 0.5], [0.5, 2.0]])
        a = sample_mvn_zero_mean(cov, 500, SeededStream(9, 3))
        b = sample_mvn_zero_mean(cov, 500, SeededStream(9, 3))
        c = sample_mvn_zero_mean(cov, 500, SeededStream(9, 4))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestStreams:
    def test_spawn_is_path_addressed(self):
        root = SeededStream(11)
        a = root.spawn(2).spawn(5).standard_normal(4)
        b = SeededStream(11, (2, 5)).standard_normal(4)
        assert np.array_equal(a, b)

    def test_distinct_streams_uncorrelated(self):
        x = SeededStream(1, 0).standard_normal(50_000)
        y = SeededStream(1, 1).standard_normal(50_000)
        assert abs(np.corrcoef(x, y)[0, 1]) < 0.02


class TestChi2:
    def test_zero(self):
        for df in (1, 2, 5, 30):
            assert chi2_sf(0.0, df) == 1.0

    def test_df2_closed_form(self):
        assert chi2_sf(2.0, 2) == pytest.approx(math.exp(-1.0), abs=1e-10)
        assert abs(chi2_sf(2.0, 2) - 0.3678794412) < 1e-10

    def test_five_percent_quantile(self):
        assert chi2_sf(5.991, 2) == pytest.approx(0.05, abs=1e-4)

    @pytest.mark.parametrize("df", [2, 4, 6, 10])
    @pytest.mark.parametrize("x", [0.1, 1.0, 3.7, 12.5, 40.0])
    def test_even_df_series(self, x, df):
        assert abs(chi2_sf(x, df) - chi2_sf_even(x, df)) <= 1e-10

    @pytest.mark.parametrize("x", [0.01, 0.5, 2.0, 3.841458820694124, 9.0])
    def test_df1_erfc(self, x):
        assert abs(chi2_sf(x, 1) - chi2_sf_one(x)) <= 1e-10

    @given(st.floats(0, 500), st.floats(0, 500), st.integers(1, 20))
    def test_monotone(self, a, b, df):
        lo, hi = sorted((a, b))
        assert chi2_sf(lo, df) >= chi2_sf(hi, df)

    @given(st.floats(0, 700))
    def test_df2_identity(self, x):
        assert abs(chi2_sf(x, 2) - math.exp(-x / 2)) <= 1e-10

    def test_domain(self):
        with pytest.raises(DomainError):
            chi2_sf(-1.0, 2)
        with pytest.raises(DomainError):
            chi2_sf(1.0, 0)

    def test_isf_inverts_sf(self):
        for df in (1, 2, 3):
            assert chi2_sf(chi2_isf(0.05, df), df) == pytest.approx(0.05, abs=1e-12)
        assert chi2_isf(0.05, 1) == pytest.approx(3.841458820694124, rel=1e-10)
