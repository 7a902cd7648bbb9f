"""Two-line signal model and Hermite-Gauss projection probabilities.

The scene is an incoherent, equal-weight mixture of two Gaussian spectral
lines of common linewidth ``sigma`` separated by ``epsilon * sigma`` around
a center frequency ``omega0``.  Separation estimation works entirely with
the dimensionless parameter ``epsilon``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Relative phases used to emulate an incoherent mixture with a discrete
# average: the interference cross terms cancel in pairs over these four, so
# averaging |Psi(w)|^2 reproduces the incoherent spectrum exactly.
INCOHERENT_PHASES = (-math.pi / 2, 0.0, math.pi / 2, math.pi)

# Two-mode distributions must stay normalized to this tolerance.
NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class LinePair:
    """Physical scene: two lines at omega0 +/- epsilon*sigma/2."""

    epsilon: float
    sigma: float = 1.0
    omega0: float = 0.0

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class PhaseSetting:
    """Relative phase between the two lines, in (-pi, pi]."""

    phi: float

    def __post_init__(self) -> None:
        if not (-math.pi < self.phi <= math.pi):
            raise ValueError(f"phi must lie in (-pi, pi], got {self.phi}")


@dataclass(frozen=True)
class CrosstalkMatrix:
    """Leakage parameters of the two-channel mode demultiplexer.

    ``alpha`` is the fraction of mode-0 signal detected in channel 0 and
    ``beta`` the fraction of mode-1 signal detected in channel 1.  The
    implied 2x2 coupling matrix is column stochastic by construction.
    """

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.alpha, 1.0 - self.beta], [1.0 - self.alpha, self.beta]]
        )

    @property
    def informative(self) -> bool:
        """False when the two channels are statistically indistinguishable."""
        return self.alpha + self.beta > 1.0


@dataclass(frozen=True)
class ModeDistribution:
    """Truncated detection-probability series over HG mode index."""

    probs: tuple[float, ...]
    truncation_tail: float

    def __post_init__(self) -> None:
        total = sum(self.probs) + self.truncation_tail
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"mode distribution not normalized: total={total!r}")


@dataclass(frozen=True)
class TwoModeProbs:
    """Normalized outcome probabilities of the two-channel measurement."""

    p0: float
    p1: float

    def __post_init__(self) -> None:
        for name, p in (("p0", self.p0), ("p1", self.p1)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if abs(self.p0 + self.p1 - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"p0 + p1 != 1: {self.p0 + self.p1!r}")


@dataclass(frozen=True)
class TemporalSignal:
    """Carved time-domain signal, optionally sampled on a uniform grid."""

    amplitude: float
    line_pair: LinePair
    phase: PhaseSetting
    samples: np.ndarray | None = None
    dt: float | None = None
    t0: float = 0.0

    def __post_init__(self) -> None:
        if self.samples is not None and (self.dt is None or self.dt <= 0):
            raise ValueError("sampled signal requires dt > 0")

    @classmethod
    def sampled(
        cls,
        line_pair: LinePair,
        phase: PhaseSetting,
        amplitude: float,
        dt: float,
        length: int,
        t0: float,
    ) -> "TemporalSignal":
        t = t0 + dt * np.arange(length)
        values = signal_temporal(t, line_pair, phase, amplitude)
        return cls(amplitude, line_pair, phase, samples=values, dt=dt, t0=t0)

    @property
    def times(self) -> np.ndarray:
        if self.samples is None:
            raise ValueError("signal is not sampled")
        return self.t0 + self.dt * np.arange(len(self.samples))


def gaussian_amplitude(omega, sigma: float):
    """Normalized Gaussian spectral amplitude of a single line.

    ``(2 pi sigma^2)^(-1/4) exp(-omega^2 / 4 sigma^2)``, so that the squared
    modulus is a unit-area spectral density.  ``omega`` is the offset from
    the line center; accepts scalars or arrays.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    w = np.asarray(omega, dtype=float)
    out = (2.0 * math.pi * sigma**2) ** (-0.25) * np.exp(-(w**2) / (4.0 * sigma**2))
    return out if out.ndim else float(out)


def intensity_spectrum(omega, scene: LinePair):
    """Incoherent power spectrum of the two-line scene (unit area)."""
    d = scene.epsilon * scene.sigma / 2.0
    w = np.asarray(omega, dtype=float) - scene.omega0
    low = gaussian_amplitude(w - d, scene.sigma)
    high = gaussian_amplitude(w + d, scene.sigma)
    out = 0.5 * (np.asarray(low) ** 2 + np.asarray(high) ** 2)
    return out if out.ndim else float(out)


def signal_spectrum(omega, scene: LinePair, phase: PhaseSetting):
    """Complex spectral amplitude of the carved two-line signal.

    A coherent superposition of the two lines with relative phase ``phi``;
    averaging the squared modulus over ``INCOHERENT_PHASES`` reproduces
    :func:`intensity_spectrum`.
    """
    d = scene.epsilon * scene.sigma / 2.0
    w = np.asarray(omega, dtype=float) - scene.omega0
    half = phase.phi / 2.0
    out = (
        np.exp(-1j * half) * gaussian_amplitude(w - d, scene.sigma)
        + np.exp(1j * half) * gaussian_amplitude(w + d, scene.sigma)
    ) / math.sqrt(2.0)
    return out if out.ndim else complex(out)


def signal_temporal(t, scene: LinePair, phase: PhaseSetting, amplitude: float = 1.0):
    """Real time-domain envelope ``A cos((eps*sigma*t - phi)/2) exp(-t^2 sigma^2)``."""
    tt = np.asarray(t, dtype=float)
    arg = (scene.epsilon * scene.sigma * tt - phase.phi) / 2.0
    out = amplitude * np.cos(arg) * np.exp(-(tt**2) * scene.sigma**2)
    return out if out.ndim else float(out)


def hg_projection_prob(n: int, epsilon: float) -> float:
    """Ideal detection probability in HG mode ``n``.

    Poisson weights in the mode index with mean ``epsilon^2 / 16``:
    ``eps^(2n) / (16^n n!) * exp(-eps^2 / 16)``.
    """
    if n < 0 or int(n) != n:
        raise ValueError(f"mode index must be a non-negative integer, got {n}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    n = int(n)
    lam = epsilon**2 / 16.0
    if lam == 0.0:
        return 1.0 if n == 0 else 0.0
    # log-space keeps large n and eps stable
    log_p = n * math.log(lam) - lam - math.lgamma(n + 1)
    return math.exp(log_p)


def mode_distribution(
    epsilon: float, term_tol: float = 1e-15, mass_tol: float = 1e-12
) -> ModeDistribution:
    """Mode-index distribution truncated once terms and tail are negligible.

    Terms are accumulated until a term drops below ``term_tol`` and the
    cumulative mass exceeds ``1 - mass_tol``; the remaining tail is recorded
    rather than discarded.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    lam = epsilon**2 / 16.0
    probs = []
    term = math.exp(-lam)
    cum = 0.0
    n = 0
    while True:
        probs.append(term)
        cum += term
        if term < term_tol and cum > 1.0 - mass_tol:
            break
        n += 1
        term *= lam / n
        if n > 10_000:  # unreachable for sane epsilon; guards infinite loops
            break
    return ModeDistribution(probs=tuple(probs), truncation_tail=max(0.0, 1.0 - cum))


def perturbed_p1(epsilon, alpha: float, beta: float):
    """Channel-1 probability after crosstalk, vectorized over ``epsilon``."""
    eps = np.asarray(epsilon, dtype=float)
    out = beta - 16.0 * (alpha + beta - 1.0) / (16.0 + eps**2)
    return out if out.ndim else float(out)


def perturbed_probs(epsilon: float, xt: CrosstalkMatrix) -> TwoModeProbs:
    """Two-channel outcome probabilities including crosstalk.

    Equivalent to restricting the ideal mode distribution to modes {0, 1},
    renormalizing, and applying the coupling matrix; the closed form is used
    directly so that it holds exactly at the formula level.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    p1 = perturbed_p1(epsilon, xt.alpha, xt.beta)
    return TwoModeProbs(p0=1.0 - p1, p1=p1)


def apply_background(probs: TwoModeProbs, leak_fraction: float) -> TwoModeProbs:
    """Mix the outcome distribution with a uniform background.

    A background that hits both channels equally (e.g. leaked control light)
    replaces a fraction ``leak_fraction`` of events with a fair coin:
    ``p_i' = (1 - f) p_i + f / 2``.
    """
    if not 0.0 <= leak_fraction < 1.0:
        raise ValueError(f"leak_fraction must lie in [0, 1), got {leak_fraction}")
    f = leak_fraction
    return TwoModeProbs(
        p0=(1.0 - f) * probs.p0 + f / 2.0,
        p1=(1.0 - f) * probs.p1 + f / 2.0,
    )
