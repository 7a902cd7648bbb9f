"""Fisher information and Cramer-Rao bounds for the separation estimate.

All information values are per detected photon and dimensionless.  Three
measurement strategies are covered: direct intensity detection of the power
spectrum, full Hermite-Gauss mode sorting, and the realistic two-channel
demultiplexer with crosstalk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .model import CrosstalkMatrix

# Small-separation limit of fi_direct(eps) / eps^2.  Derived, not assumed:
# tests regenerate it from the quadrature.
DI_SMALL_SEPARATION_COEFF = 0.125

# Quadrature window half-width in units of sigma is (12 + eps); the
# integrand decays super-exponentially well inside it.
_DI_WINDOW = 12.0

METHOD_TAGS = ("direct_intensity", "hg_full", "two_mode_exact", "two_mode_approx")


class NumericError(RuntimeError):
    """A numerical routine failed to reach its accuracy target."""


@dataclass(frozen=True)
class FisherValue:
    value: float
    method_tag: str

    def __post_init__(self) -> None:
        if self.method_tag not in METHOD_TAGS:
            raise ValueError(f"unknown method_tag {self.method_tag!r}")
        if not (self.value >= 0.0 and math.isfinite(self.value)):
            raise ValueError(f"Fisher information must be finite and >= 0: {self.value}")


@dataclass(frozen=True)
class BoundResult:
    """Variance/MSE lower bounds; infinite values flag a zero-information point."""

    crlb_unbiased: float
    crlb_biased: float
    bias: float = 0.0
    bias_slope: float = 0.0


def _di_integrand(omega: np.ndarray, epsilon: float) -> np.ndarray:
    """(dS/deps)^2 / S for the two-Gaussian spectrum, in an underflow-safe form.

    With g the unit normal density, sigma = 1 and centers +/- eps/2:
      S    = (g(u) + g(v)) / 2,      u = w - eps/2, v = w + eps/2
      dS/deps = (u g(u) - v g(v)) / 4
    The common exponential is factored out so the ratio never evaluates 0/0.
    """
    w = np.asarray(omega, dtype=float)
    u = w - epsilon / 2.0
    v = w + epsilon / 2.0
    lu = -0.5 * u**2
    lv = -0.5 * v**2
    m = np.maximum(lu, lv)
    eu = np.exp(lu - m)
    ev = np.exp(lv - m)
    scale = np.where(m < -700.0, 0.0, np.exp(m))
    c = 1.0 / math.sqrt(2.0 * math.pi)
    return (c / 8.0) * scale * (u * eu - v * ev) ** 2 / (eu + ev)


def fi_direct(epsilon: float, *, epsabs: float = 1e-14, epsrel: float = 1e-10) -> FisherValue:
    """Fisher information of direct intensity detection, by quadrature.

    Vanishes quadratically as the lines merge (Rayleigh's curse); stays
    below the mode-sorting value 1/4 for every separation.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if epsilon == 0.0:
        return FisherValue(0.0, "direct_intensity")
    half_width = _DI_WINDOW + epsilon
    value, abserr = integrate.quad(
        _di_integrand,
        -half_width,
        half_width,
        args=(epsilon,),
        epsabs=epsabs,
        epsrel=epsrel,
        limit=200,
    )
    if abserr > max(epsabs, abs(value) * epsrel) * 100.0:
        raise NumericError(
            f"direct-intensity FI quadrature did not converge at epsilon={epsilon}: "
            f"value={value}, abserr={abserr}"
        )
    return FisherValue(value, "direct_intensity")


def fi_hg_full(epsilon: float, tolerance: float = 1e-12) -> FisherValue:
    """Fisher information of the full HG mode-sorting measurement.

    The mode-index distribution is Poisson with mean ``lam = eps^2/16``, so
    the series sums to 1/4 for every separation; the value is computed by
    adaptive truncation rather than asserted.  The eps -> 0 limit is 1/4.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if epsilon == 0.0:
        return FisherValue(0.25, "hg_full")
    lam = epsilon**2 / 16.0
    dlam = epsilon / 8.0
    total = 0.0
    mass = 0.0
    p = math.exp(-lam)
    n = 0
    while True:
        term = p * (n / lam - 1.0) ** 2 * dlam**2
        total += term
        mass += p
        # the (n/lam - 1)^2 factor amplifies the tail, so negligible
        # probability mass alone is not a safe stopping rule
        if n > lam and mass > 1.0 - tolerance and term < tolerance:
            break
        n += 1
        p *= lam / n
        if n > 100_000:
            raise NumericError(f"HG information series did not truncate at epsilon={epsilon}")
    return FisherValue(total, "hg_full")


def fi_two_mode_exact(epsilon: float, xt: CrosstalkMatrix) -> FisherValue:
    """Exact Fisher information of the two-channel measurement with crosstalk."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if not xt.informative:
        raise ValueError(
            f"degenerate device: alpha + beta must exceed 1, got {xt.alpha + xt.beta}"
        )
    a, b = xt.alpha, xt.beta
    u = (epsilon / 4.0) ** 2
    if a == 1.0:
        # the (1 - a + b u) factor reduces to b*u; cancel u to stay finite at eps = 0
        value = (a + b - 1.0) ** 2 / (4.0 * (1.0 + u) ** 2 * (a + (1.0 - b) * u) * b)
    else:
        value = (
            (a + b - 1.0) ** 2
            * u
            / (4.0 * (1.0 + u) ** 2 * (a + (1.0 - b) * u) * (1.0 - a + b * u))
        )
    return FisherValue(value, "two_mode_exact")


def fi_two_mode_approx(epsilon: float, alpha: float) -> FisherValue:
    """Low-crosstalk, small-separation approximation of the two-channel FI.

    ``1 / (4 [ (1-alpha)/(eps/4)^2 + 1 ])``: leakage out of the fundamental
    mode sets the scale below which the information collapses.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    u = (epsilon / 4.0) ** 2
    if u == 0.0:
        value = 0.25 if alpha == 1.0 else 0.0
    else:
        value = 1.0 / (4.0 * ((1.0 - alpha) / u + 1.0))
    return FisherValue(value, "two_mode_approx")


def superres_param(
    xt: CrosstalkMatrix,
    *,
    probe_eps: float = 1e-3,
    check_eps: float = 1e-4,
    rel_tol: float = 1e-3,
) -> float:
    """Limiting information ratio (two-channel / direct intensity) as eps -> 0.

    Evaluated numerically at ``probe_eps`` with a convergence check at
    ``check_eps``; below ~1e-5 both numerator and denominator underflow into
    0/0 territory, which is why the limit is probed rather than chased.
    Returns ``inf`` for a leak-free device.
    """
    if not xt.informative:
        raise ValueError(
            f"degenerate device: alpha + beta must exceed 1, got {xt.alpha + xt.beta}"
        )
    if xt.alpha == 1.0:
        return math.inf
    ratio = fi_two_mode_exact(probe_eps, xt).value / fi_direct(probe_eps).value
    check = fi_two_mode_exact(check_eps, xt).value / fi_direct(check_eps).value
    if abs(ratio - check) > rel_tol * abs(ratio):
        raise NumericError(
            f"superresolution ratio did not converge: {ratio} at eps={probe_eps} vs "
            f"{check} at eps={check_eps}"
        )
    return ratio


def superres_param_analytic(xt: CrosstalkMatrix) -> float:
    """Closed form of the limiting ratio, using the 1/8 direct-intensity law."""
    if not xt.informative:
        raise ValueError(
            f"degenerate device: alpha + beta must exceed 1, got {xt.alpha + xt.beta}"
        )
    if xt.alpha == 1.0:
        return math.inf
    a, b = xt.alpha, xt.beta
    return (a + b - 1.0) ** 2 / (8.0 * a * (1.0 - a))


def crlb(
    epsilon: float,
    n_photons: float,
    fi: FisherValue,
    bias_profile: tuple[float, float] | None = None,
) -> BoundResult:
    """Cramer-Rao bounds for ``n_photons`` detections at the given information.

    Without a bias profile both fields carry the unbiased bound
    ``1/(N F)``; with ``(b, b')`` the MSE bound ``(1+b')^2/(N F) + b^2`` is
    reported alongside.  Zero information yields infinite bounds rather
    than an exception.
    """
    if n_photons <= 0:
        raise ValueError(f"n_photons must be > 0, got {n_photons}")
    if fi.value == 0.0:
        inf = math.inf
        if bias_profile is None:
            return BoundResult(inf, inf)
        b, bp = bias_profile
        return BoundResult(inf, inf, bias=b, bias_slope=bp)
    unbiased = 1.0 / (n_photons * fi.value)
    if bias_profile is None:
        return BoundResult(unbiased, unbiased)
    b, bp = bias_profile
    biased = (1.0 + bp) ** 2 * unbiased + b**2
    return BoundResult(unbiased, biased, bias=b, bias_slope=bp)
