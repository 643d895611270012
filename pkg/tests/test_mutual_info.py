"""MI estimator: statistics, log-determinant, Schur complement, gradient."""

import numpy as np
import pytest

from cwmi.errors import (
    DegenerateStatisticsError,
    NotPositiveDefiniteError,
    ShapeMismatchError,
)
from cwmi.mutual_info import (
    accumulate_stats,
    logdet_hpd,
    mi_gradient,
    mi_lower_bound,
)

EPS = 1e-5


def cofactor_det(m):
    """Plain Laplace-expansion determinant; the oracle for K <= 4."""
    m = np.asarray(m)
    if m.shape[0] == 1:
        return m[0, 0]
    total = 0.0
    for j in range(m.shape[0]):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1) ** j * m[0, j] * cofactor_det(minor)
    return total


def random_bands(rng, k, m, complex_mode, correlated=True):
    y = rng.standard_normal((k, m))
    p = 0.6 * y + 0.8 * rng.standard_normal((k, m)) if correlated else rng.standard_normal((k, m))
    if complex_mode:
        y = y + 1j * rng.standard_normal((k, m))
        p = p + 1j * (0.6 * y.imag + 0.8 * rng.standard_normal((k, m)))
    return y, p


def mi_term(y, p, mode, eps=EPS):
    """The per-level loss contribution -I_l used by the gradient."""
    return -mi_lower_bound(accumulate_stats(y, p), eps, mode=mode).value


class TestAccumulateStats:
    def test_identical_inputs_collapse(self):
        rng = np.random.default_rng(0)
        band = rng.standard_normal((4, 16, 16))
        stats = accumulate_stats(band, band)
        assert np.max(np.abs(stats.sigma_label - stats.sigma_pred)) <= 1e-12
        assert np.max(np.abs(stats.sigma_label - stats.cross)) <= 1e-12

    def test_zero_prediction(self):
        rng = np.random.default_rng(1)
        label = rng.standard_normal((3, 8, 8))
        stats = accumulate_stats(label, np.zeros_like(label))
        assert np.max(np.abs(stats.sigma_pred)) == 0.0
        assert np.max(np.abs(stats.cross)) == 0.0

    def test_gaussian_sampling_oracle(self):
        # law of large numbers against the sampler's known covariance
        rng = np.random.default_rng(2)
        cov = np.array(
            [
                [2.0, 0.5, 0.2, 0.1],
                [0.5, 1.5, 0.3, 0.0],
                [0.2, 0.3, 1.0, 0.2],
                [0.1, 0.0, 0.2, 0.8],
            ]
        )
        chol = np.linalg.cholesky(cov)
        samples = chol @ rng.standard_normal((4, 1_000_000))
        stats = accumulate_stats(samples, samples)
        assert np.abs(stats.sigma_label - cov).max() <= 0.01 * np.abs(cov).max()

    def test_hermitian_psd_invariants(self):
        rng = np.random.default_rng(3)
        y, p = random_bands(rng, 4, 500, complex_mode=True)
        stats = accumulate_stats(y, p)
        for sigma in (stats.sigma_label, stats.sigma_pred):
            assert np.max(np.abs(sigma - sigma.conj().T)) <= 1e-10
            assert np.linalg.eigvalsh(sigma).min() >= -1e-10

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            accumulate_stats(np.zeros((2, 8, 8)), np.zeros((2, 4, 4)))


class TestLogdetHpd:
    def test_identity(self):
        assert logdet_hpd(np.eye(4), 0.0) == pytest.approx(0.0, abs=1e-14)

    def test_diagonal(self):
        assert logdet_hpd(np.diag([2.0, 2.0, 2.0, 2.0]), 0.0) == pytest.approx(
            4 * np.log(2.0), abs=1e-12
        )

    def test_real_matches_cofactor_expansion(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((4, 4))
        spd = a @ a.T + 4 * np.eye(4)
        expected = np.log(cofactor_det(spd + 1e-5 * np.eye(4)))
        assert logdet_hpd(spd, 1e-5) == pytest.approx(expected, rel=1e-9)

    def test_complex_matches_cofactor_expansion(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        hpd = a @ a.conj().T + 4 * np.eye(4)
        expected = np.log(cofactor_det(hpd + 1e-5 * np.eye(4)).real)
        assert logdet_hpd(hpd, 1e-5) == pytest.approx(expected, rel=1e-9)

    def test_non_psd_reports_leading_minor(self):
        bad = np.diag([1.0, -1.0, 1.0])
        with pytest.raises(NotPositiveDefiniteError) as excinfo:
            logdet_hpd(bad, 0.0)
        assert excinfo.value.minor == 2

    def test_non_hermitian_rejected(self):
        m = np.eye(3)
        m[0, 1] = 0.5
        with pytest.raises(ShapeMismatchError):
            logdet_hpd(m, 0.0)


class TestMiLowerBound:
    @pytest.mark.parametrize("mode", ["real", "complex"])
    def test_perfect_prediction_value(self, mode):
        rng = np.random.default_rng(6)
        k = 4
        y = rng.standard_normal((k, 10_000))
        if mode == "complex":
            y = y + 1j * rng.standard_normal((k, 10_000))
        result = mi_lower_bound(accumulate_stats(y, y), EPS, mode=mode)
        assert result.value == pytest.approx(-0.5 * k * np.log(EPS), abs=1e-9)
        assert np.max(np.abs(result.schur)) <= 1e-10

    def test_independent_prediction_reduces_to_label_entropy(self):
        rng = np.random.default_rng(7)
        y = rng.standard_normal((4, 2_000))
        stats = accumulate_stats(y, np.zeros_like(y))
        result = mi_lower_bound(stats, EPS, mode="real")
        expected = -0.5 * logdet_hpd(stats.sigma_label, EPS)
        assert result.value == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("mode", ["real", "complex"])
    def test_schur_matches_analytic_conditional_covariance(self, mode):
        # joint Gaussian with prescribed covariance: the estimated Schur
        # complement must approach Sigma_Y - C Sigma_P^-1 C^H
        rng = np.random.default_rng(8)
        k, m = 4, 100_000
        mix = rng.standard_normal((2 * k, 2 * k))
        if mode == "complex":
            mix = mix + 1j * rng.standard_normal((2 * k, 2 * k))
        joint = mix @ mix.conj().T + 0.5 * np.eye(2 * k)
        chol = np.linalg.cholesky(joint)
        z = rng.standard_normal((2 * k, m))
        if mode == "complex":
            z = (z + 1j * rng.standard_normal((2 * k, m))) / np.sqrt(2)
        samples = chol @ z
        y, p = samples[:k], samples[k:]
        sigma_y = joint[:k, :k]
        cross = joint[:k, k:]
        sigma_p = joint[k:, k:]
        analytic = sigma_y - cross @ np.linalg.solve(sigma_p, cross.conj().T)
        result = mi_lower_bound(accumulate_stats(y, p), EPS, mode=mode)
        rel = np.linalg.norm(result.schur - analytic) / np.linalg.norm(analytic)
        assert rel <= 0.02

    def test_degenerate_sample_count(self):
        with pytest.raises(DegenerateStatisticsError):
            mi_lower_bound(accumulate_stats(np.zeros((4, 3)), np.zeros((4, 3))), EPS)

    def test_schur_hermitian(self):
        rng = np.random.default_rng(9)
        y, p = random_bands(rng, 4, 1_000, complex_mode=True)
        result = mi_lower_bound(accumulate_stats(y, p), EPS, mode="complex")
        assert np.max(np.abs(result.schur - result.schur.conj().T)) <= 1e-10

    @pytest.mark.parametrize("mode", ["real", "complex"])
    def test_rotation_invariance(self, mode):
        rng = np.random.default_rng(10)
        k = 4
        y, p = random_bands(rng, k, 3_000, complex_mode=(mode == "complex"))
        base = mi_lower_bound(accumulate_stats(y, p), EPS, mode=mode).value
        gauss = rng.standard_normal((k, k))
        if mode == "complex":
            gauss = gauss + 1j * rng.standard_normal((k, k))
        q, _ = np.linalg.qr(gauss)
        rotated = mi_lower_bound(accumulate_stats(q @ y, q @ p), EPS, mode=mode).value
        assert rotated == pytest.approx(base, abs=1e-8)

    def test_monotone_degradation_under_noise(self):
        # one fixed noise realization scaled up: the estimate never rises
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            y, p = random_bands(rng, 4, 20_000, complex_mode=False)
            noise = rng.standard_normal(p.shape)
            values = []
            for sigma in (0.0, 0.25, 0.5, 1.0, 2.0):
                stats = accumulate_stats(y, p + sigma * noise)
                values.append(mi_lower_bound(stats, EPS, mode="real").value)
            for lo, hi in zip(values[1:], values[:-1]):
                assert lo <= hi + 1e-6


class TestMiGradient:
    @staticmethod
    def fd_probe(y, p, mode, index, h=1e-6):
        i, j = index

        def term_with(value):
            q = p.copy()
            q[i, j] = value
            return mi_term(y, q, mode)

        real_fd = (term_with(p[i, j] + h) - term_with(p[i, j] - h)) / (2 * h)
        if not np.iscomplexobj(p):
            return real_fd
        imag_fd = (term_with(p[i, j] + 1j * h) - term_with(p[i, j] - 1j * h)) / (2 * h)
        return real_fd + 1j * imag_fd

    @pytest.mark.parametrize("mode", ["real", "complex"])
    def test_gradient_matches_finite_differences(self, mode):
        rng = np.random.default_rng(11)
        k, m = 2, 64   # an 8x8 subband
        y, p = random_bands(rng, k, m, complex_mode=(mode == "complex"))
        grad = mi_gradient(y, p, EPS, mode=mode)
        scale = np.max(np.abs(grad))
        for index in [(0, 5), (1, 17), (0, 40), (1, 63), (0, 0)]:
            fd = self.fd_probe(y, p, mode, index)
            assert abs(grad[index] - fd) <= 1e-5 * max(scale, abs(fd))

    @pytest.mark.parametrize("mode", ["real", "complex"])
    @pytest.mark.parametrize("k", [2, 4])
    def test_gradient_fifty_probes_per_configuration(self, mode, k):
        rng = np.random.default_rng(17 + k)
        m = 64 if k == 2 else 256
        y, p = random_bands(rng, k, m, complex_mode=(mode == "complex"))
        grad = mi_gradient(y, p, EPS, mode=mode)
        scale = np.max(np.abs(grad))
        for _ in range(50):
            index = (int(rng.integers(0, k)), int(rng.integers(0, m)))
            fd = self.fd_probe(y, p, mode, index)
            assert abs(grad[index] - fd) <= 1e-5 * max(scale, abs(fd))

    @pytest.mark.parametrize("mode", ["real", "complex"])
    def test_gradient_consistent_after_scaling_prediction(self, mode):
        rng = np.random.default_rng(12)
        y, p = random_bands(rng, 2, 64, complex_mode=(mode == "complex"))
        doubled = 2.0 * p
        grad = mi_gradient(y, doubled, EPS, mode=mode)
        scale = np.max(np.abs(grad))
        for index in [(0, 3), (1, 30), (0, 55)]:
            fd = self.fd_probe(y, doubled, mode, index)
            assert abs(grad[index] - fd) <= 1e-5 * max(scale, abs(fd))

    def test_gradient_finite_and_stable_at_perfect_prediction(self):
        rng = np.random.default_rng(13)
        y = rng.standard_normal((4, 256)) + 1j * rng.standard_normal((4, 256))
        grad = mi_gradient(y, y.copy(), EPS, mode="complex")
        assert np.all(np.isfinite(grad.view(np.float64)))
        base = mi_term(y, y, "complex")
        stepped = mi_term(y, y - 1e-3 * grad, "complex")
        assert stepped <= base + 1e-9

    def test_band_shape_preserved(self):
        rng = np.random.default_rng(14)
        y = rng.standard_normal((2, 8, 8))
        p = rng.standard_normal((2, 8, 8))
        assert mi_gradient(y, p, EPS, mode="real").shape == (2, 8, 8)
