"""Signal model: spectra, temporal envelope and projection probabilities."""

import math

import numpy as np
import pytest
from numpy.polynomial.hermite import hermval
from scipy import integrate

from modesep import (
    INCOHERENT_PHASES,
    CrosstalkMatrix,
    LinePair,
    PhaseSetting,
    TemporalSignal,
    apply_background,
    gaussian_amplitude,
    hg_projection_prob,
    intensity_spectrum,
    mode_distribution,
    perturbed_probs,
    signal_spectrum,
    signal_temporal,
)

XT_PAPERLIKE = CrosstalkMatrix(alpha=0.9966, beta=1.0)


def hg_mode_frequency(n, omega, sigma):
    """Orthonormal Hermite-Gauss mode matched to the line width (test oracle)."""
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    norm = (2.0 * math.pi * sigma**2) ** (-0.25) / math.sqrt(2.0**n * math.factorial(n))
    return norm * hermval(omega / (sigma * math.sqrt(2.0)), coeffs) * np.exp(
        -(omega**2) / (4.0 * sigma**2)
    )


class TestGaussianAmplitude:
    def test_peak_value(self):
        assert gaussian_amplitude(0.0, 1.0) == pytest.approx((2.0 * math.pi) ** -0.25)

    def test_even_symmetry(self):
        w = np.linspace(0.1, 8.0, 25)
        np.testing.assert_array_equal(
            gaussian_amplitude(w, 2.0), gaussian_amplitude(-w, 2.0)
        )

    @pytest.mark.parametrize("sigma", [0.3, 1.0, 33.3e6])
    def test_unit_norm(self, sigma):
        val, _ = integrate.quad(
            lambda w: gaussian_amplitude(w, sigma) ** 2,
            -10.0 * sigma,
            10.0 * sigma,
            epsabs=1e-13,
            epsrel=1e-12,
        )
        assert val == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("sigma", [0.0, -1.0])
    def test_rejects_bad_sigma(self, sigma):
        with pytest.raises(ValueError):
            gaussian_amplitude(0.0, sigma)


class TestIntensitySpectrum:
    def test_zero_separation_is_single_line(self):
        scene = LinePair(epsilon=0.0, sigma=1.5, omega0=2.0)
        w = np.linspace(-4.0, 8.0, 41)
        np.testing.assert_allclose(
            intensity_spectrum(w, scene),
            gaussian_amplitude(w - 2.0, 1.5) ** 2,
            rtol=1e-14,
        )

    def test_symmetric_about_center(self):
        scene = LinePair(epsilon=0.8, sigma=1.0, omega0=5.0)
        x = np.linspace(0.0, 6.0, 30)
        np.testing.assert_allclose(
            intensity_spectrum(5.0 + x, scene),
            intensity_spectrum(5.0 - x, scene),
            rtol=1e-14,
        )

    @pytest.mark.parametrize("epsilon", [0.0, 0.25, 0.5, 1.0])
    def test_unit_area(self, epsilon):
        scene = LinePair(epsilon=epsilon)
        half = 10.0 + epsilon
        val, _ = integrate.quad(
            lambda w: intensity_spectrum(w, scene), -half, half, epsabs=1e-13
        )
        assert val == pytest.approx(1.0, abs=1e-9)

    def test_invariants_rejected(self):
        with pytest.raises(ValueError):
            LinePair(epsilon=-0.1)
        with pytest.raises(ValueError):
            LinePair(epsilon=0.1, sigma=0.0)


class TestSignalSpectrum:
    def test_degenerate_lines(self):
        # coincident lines interfere constructively: sqrt(2) times one line
        scene = LinePair(epsilon=0.0, sigma=1.0, omega0=1.0)
        w = np.linspace(-3.0, 5.0, 17)
        np.testing.assert_allclose(
            signal_spectrum(w, scene, PhaseSetting(0.0)).real,
            math.sqrt(2.0) * gaussian_amplitude(w - 1.0, 1.0),
            rtol=1e-14,
        )

    def test_phase_average_recovers_incoherent_spectrum(self):
        w = np.linspace(-6.0, 6.0, 201)
        for epsilon in (0.2, 0.5, 1.3):
            scene = LinePair(epsilon=epsilon)
            avg = np.mean(
                [
                    np.abs(signal_spectrum(w, scene, PhaseSetting(phi))) ** 2
                    for phi in INCOHERENT_PHASES
                ],
                axis=0,
            )
            np.testing.assert_allclose(avg, intensity_spectrum(w, scene), atol=1e-10)

    def test_two_term_sum_evaluated_independently(self):
        scene = LinePair(epsilon=0.5, sigma=1.0, omega0=0.0)
        phi = math.pi
        for w in (0.0, 0.4, -1.2):
            lo = gaussian_amplitude(w - 0.25, 1.0)
            hi = gaussian_amplitude(w + 0.25, 1.0)
            expected = (
                complex(math.cos(-phi / 2), math.sin(-phi / 2)) * lo
                + complex(math.cos(phi / 2), math.sin(phi / 2)) * hi
            ) / math.sqrt(2.0)
            got = signal_spectrum(w, scene, PhaseSetting(phi))
            assert got == pytest.approx(expected, abs=1e-15)

    def test_phase_setting_domain(self):
        with pytest.raises(ValueError):
            PhaseSetting(-math.pi)
        PhaseSetting(math.pi)


class TestSignalTemporal:
    def test_pure_gaussian_envelope_at_zero_separation(self):
        scene = LinePair(epsilon=0.0, sigma=2.0)
        t = np.linspace(-1.0, 1.0, 51)
        np.testing.assert_allclose(
            signal_temporal(t, scene, PhaseSetting(0.0)),
            np.exp(-(t**2) * 4.0),
            rtol=1e-14,
        )

    def test_configuration_linewidth(self):
        # 33.3 Mrad/s is 5.30 MHz
        sigma = 33.3e6
        assert sigma / (2.0 * math.pi) == pytest.approx(5.30e6, rel=1e-3)
        scene = LinePair(epsilon=0.5, sigma=sigma)
        assert signal_temporal(0.0, scene, PhaseSetting(0.0), 2.0) == pytest.approx(2.0)

    def test_fft_matches_signal_spectrum(self):
        """The sampled envelope and the analytic spectrum are an FFT pair."""
        scene = LinePair(epsilon=0.7, sigma=1.0)
        phase = PhaseSetting(math.pi / 2)
        n = 4096
        dt = 12.0 / n  # spans +/- 6 sigma-widths
        t0 = -6.0
        sig = TemporalSignal.sampled(scene, phase, 1.0, dt, n, t0)
        omega = 2.0 * math.pi * np.fft.fftfreq(n, d=dt)
        # forward transform with the grid's start-time phase factor
        transform = dt * np.exp(-1j * omega * t0) * np.fft.fft(sig.samples)
        expected = signal_spectrum(omega, scene, phase)
        transform /= np.linalg.norm(transform)
        expected = expected / np.linalg.norm(expected)
        rel_l2 = np.linalg.norm(transform - expected)
        assert rel_l2 < 1e-3

    def test_sampled_grid_invariants(self):
        with pytest.raises(ValueError):
            TemporalSignal(1.0, LinePair(0.1), PhaseSetting(0.0), samples=np.ones(4), dt=0.0)


class TestModeProjection:
    def test_zero_separation(self):
        assert hg_projection_prob(0, 0.0) == 1.0
        assert hg_projection_prob(1, 0.0) == 0.0

    def test_first_mode_ratio(self):
        ratio = hg_projection_prob(1, 0.4) / hg_projection_prob(0, 0.4)
        assert ratio == pytest.approx(0.4**2 / 16.0, rel=1e-12)
        assert ratio == pytest.approx(0.01, rel=1e-12)

    def test_total_mass(self):
        total = sum(hg_projection_prob(n, 2.0) for n in range(41))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            hg_projection_prob(-1, 0.5)
        with pytest.raises(ValueError):
            hg_projection_prob(0, -0.5)

    @pytest.mark.parametrize("epsilon", np.linspace(0.0, 4.0, 9))
    def test_mode_distribution_normalized(self, epsilon):
        dist = mode_distribution(epsilon)
        assert sum(dist.probs) + dist.truncation_tail == pytest.approx(1.0, abs=1e-12)
        assert dist.truncation_tail < 1e-12

    @pytest.mark.parametrize("n", [0, 1, 2])
    @pytest.mark.parametrize("epsilon", [0.1, 0.5, 1.0])
    def test_matches_overlap_integral(self, n, epsilon):
        """Mode weights equal the squared overlap with the displaced line."""
        sigma = 1.0
        d = epsilon * sigma / 2.0

        def overlap_sq(shift):
            val, _ = integrate.quad(
                lambda w: hg_mode_frequency(n, w, sigma)
                * gaussian_amplitude(w - shift, sigma),
                -12.0,
                12.0,
                epsabs=1e-12,
            )
            return val**2

        expected = 0.5 * (overlap_sq(d) + overlap_sq(-d))
        assert hg_projection_prob(n, epsilon) == pytest.approx(expected, abs=1e-8)


class TestPerturbedProbs:
    def test_zero_separation_gives_leakage(self):
        for alpha in (0.9, 0.99, 1.0):
            probs = perturbed_probs(0.0, CrosstalkMatrix(alpha=alpha, beta=1.0))
            assert probs.p1 == pytest.approx(1.0 - alpha, abs=1e-15)

    def test_ideal_device_limit(self):
        for eps in (0.0, 0.3, 1.0, 4.0):
            probs = perturbed_probs(eps, CrosstalkMatrix())
            assert probs.p1 == pytest.approx(eps**2 / (16.0 + eps**2), rel=1e-14)

    def test_calibrated_crosstalk_point(self):
        assert perturbed_probs(0.0, XT_PAPERLIKE).p1 == pytest.approx(0.0034, abs=1e-12)

    def test_matches_matrix_route(self):
        """Closed form equals M applied to the renormalized two-mode weights."""
        rng = np.random.default_rng(1234)
        for _ in range(200):
            eps = rng.uniform(0.0, 4.0)
            xt = CrosstalkMatrix(alpha=rng.uniform(), beta=rng.uniform())
            p0 = hg_projection_prob(0, eps)
            p1 = hg_projection_prob(1, eps)
            two_mode = np.array([p0, p1]) / (p0 + p1)
            expected = xt.matrix @ two_mode
            expected /= expected.sum()
            got = perturbed_probs(eps, xt)
            assert got.p0 == pytest.approx(expected[0], abs=1e-12)
            assert got.p1 == pytest.approx(expected[1], abs=1e-12)

    def test_strictly_increasing_for_informative_device(self):
        eps = np.linspace(0.0, 4.0, 400)
        for alpha, beta in [(0.9966, 1.0), (0.9, 0.8), (0.6, 0.7)]:
            p1 = np.array(
                [perturbed_probs(e, CrosstalkMatrix(alpha, beta)).p1 for e in eps]
            )
            assert np.all(np.diff(p1) > 0)

    def test_matrix_columns_stochastic(self):
        m = CrosstalkMatrix(0.7, 0.4).matrix
        np.testing.assert_allclose(m.sum(axis=0), [1.0, 1.0], rtol=1e-15)


class TestApplyBackground:
    def test_zero_leak_is_identity(self):
        probs = perturbed_probs(0.3, XT_PAPERLIKE)
        out = apply_background(probs, 0.0)
        assert (out.p0, out.p1) == (probs.p0, probs.p1)

    def test_uniform_mixing_arithmetic(self):
        from modesep import TwoModeProbs

        out = apply_background(TwoModeProbs(1.0, 0.0), 0.02)
        assert out.p0 == pytest.approx(0.99, abs=1e-15)
        assert out.p1 == pytest.approx(0.01, abs=1e-15)

    def test_monotone_in_leak_below_half(self):
        probs = perturbed_probs(0.2, XT_PAPERLIKE)
        assert probs.p1 < 0.5
        leaks = np.linspace(0.0, 0.9, 40)
        p1s = [apply_background(probs, f).p1 for f in leaks]
        assert np.all(np.diff(p1s) > 0)

    def test_rejects_full_leak(self):
        probs = perturbed_probs(0.2, XT_PAPERLIKE)
        with pytest.raises(ValueError):
            apply_background(probs, 1.0)
