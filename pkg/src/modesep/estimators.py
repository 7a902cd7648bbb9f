"""Separation estimators built from two-channel photon counts.

The raw estimator inverts the ideal probability ratio; the closed-form
estimator maximizes the crosstalk-aware likelihood on the physical domain
``epsilon >= 0`` and therefore truncates at the boundary.  A grid/refine
maximizer of the same likelihood serves as an independent cross-check and
covers devices where the closed form is out of range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CrosstalkMatrix, perturbed_p1

# Sentinel estimate when the observed channel-1 fraction exceeds the model
# range (n1 >= beta*N); keeps error accounting finite.
DEFAULT_CEILING = 8.0

# Grid maximizer defaults and the resolution of its golden-section pass.
DEFAULT_EPS_MAX = 4.0
DEFAULT_GRID_STEP = 1e-3
GRID_REFINE_TOL = 1e-6


class UndefinedEstimateError(ValueError):
    """Raised when the counts cannot support an estimate at all."""


@dataclass(frozen=True)
class CountRecord:
    """Detected photon counts in the two demultiplexer channels."""

    n0: int
    n1: int
    clamped: bool = False

    def __post_init__(self) -> None:
        if self.n0 < 0 or self.n1 < 0:
            raise ValueError(f"counts must be >= 0, got ({self.n0}, {self.n1})")

    @property
    def total(self) -> int:
        return self.n0 + self.n1


@dataclass(frozen=True)
class Estimate:
    value: float
    method_tag: str
    at_boundary: bool = False
    out_of_range: bool = False

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError(f"estimate must be >= 0, got {self.value}")


def raw_estimator(counts: CountRecord) -> Estimate:
    """Simple ratio estimator ``4 sqrt(n1 / n0)`` (crosstalk-blind)."""
    if counts.n0 == 0:
        raise UndefinedEstimateError("raw estimator undefined for n0 = 0")
    value = 4.0 * math.sqrt(counts.n1 / counts.n0)
    return Estimate(value, "raw", at_boundary=(counts.n1 == 0))


def mle_closed_form(
    counts: CountRecord, xt: CrosstalkMatrix, ceiling: float = DEFAULT_CEILING
) -> Estimate:
    """Closed-form constrained maximum-likelihood estimate.

    ``sqrt(16 (n1 - (1-alpha) N) / (beta N - n1))`` whenever the observed
    channel-1 count is inside the model range; counts below the crosstalk
    floor maximize the likelihood at the domain boundary and yield 0, and
    counts at or above ``beta N`` return the finite ``ceiling`` sentinel
    with an out-of-range flag.
    """
    n = counts.total
    if n == 0:
        raise UndefinedEstimateError("estimate undefined for zero total counts")
    if not xt.informative:
        raise ValueError(
            f"degenerate device: alpha + beta must exceed 1, got {xt.alpha + xt.beta}"
        )
    threshold = (1.0 - xt.alpha) * n
    upper = xt.beta * n
    if counts.n1 >= upper:
        return Estimate(ceiling, "mle_closed", at_boundary=True, out_of_range=True)
    if counts.n1 < threshold:
        return Estimate(0.0, "mle_closed", at_boundary=True)
    value = math.sqrt(16.0 * (counts.n1 - threshold) / (upper - counts.n1))
    return Estimate(value, "mle_closed", at_boundary=(value == 0.0))


def mle_closed_form_array(
    n1,
    total,
    xt: CrosstalkMatrix,
    ceiling: float = DEFAULT_CEILING,
) -> np.ndarray:
    """Vectorized closed-form MLE over arrays of channel-1 counts.

    Mirrors :func:`mle_closed_form` branch by branch; used by the Monte
    Carlo and exact-expectation machinery where per-record objects would
    dominate the runtime.
    """
    if not xt.informative:
        raise ValueError(
            f"degenerate device: alpha + beta must exceed 1, got {xt.alpha + xt.beta}"
        )
    k = np.asarray(n1, dtype=float)
    n = np.asarray(total, dtype=float)
    threshold = (1.0 - xt.alpha) * n
    upper = xt.beta * n
    in_range = (k >= threshold) & (k < upper)
    num = np.where(in_range, k - threshold, 0.0)
    den = np.where(in_range, upper - k, 1.0)
    values = np.where(in_range, 4.0 * np.sqrt(num / den), 0.0)
    return np.where(k >= upper, ceiling, values)


def _log_likelihood(eps, n0: int, n1: int, xt: CrosstalkMatrix):
    """Two-channel count log-likelihood, with 0*log(0) = 0 and -inf elsewhere."""
    p1 = np.asarray(perturbed_p1(eps, xt.alpha, xt.beta))
    p0 = 1.0 - p1
    with np.errstate(divide="ignore", invalid="ignore"):
        term0 = np.where(p0 > 0.0, n0 * np.log(np.where(p0 > 0.0, p0, 1.0)), -np.inf)
        term1 = np.where(p1 > 0.0, n1 * np.log(np.where(p1 > 0.0, p1, 1.0)), -np.inf)
    if n0 == 0:
        term0 = np.zeros_like(term0)
    if n1 == 0:
        term1 = np.zeros_like(term1)
    return term0 + term1


def _golden_section_max(f, lo: float, hi: float, tol: float) -> float:
    """Golden-section maximizer on [lo, hi]; endpoints compete as candidates."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    candidates = [(f(lo), lo), (fc, c), (fd, d), (f(hi), hi)]
    return max(candidates)[1]


def mle_grid(
    counts: CountRecord,
    xt: CrosstalkMatrix,
    eps_max: float = DEFAULT_EPS_MAX,
    step: float = DEFAULT_GRID_STEP,
) -> Estimate:
    """Grid maximizer of the count likelihood with one golden-section pass.

    Scans ``epsilon in {0, step, ..., eps_max}`` and refines around the best
    grid point; agrees with :func:`mle_closed_form` to the refinement
    resolution whenever the closed form is in range.
    """
    if counts.total == 0:
        raise UndefinedEstimateError("estimate undefined for zero total counts")
    if eps_max <= 0 or step <= 0:
        raise ValueError("eps_max and step must be > 0")
    grid = np.arange(0.0, eps_max + step / 2.0, step)
    ll = _log_likelihood(grid, counts.n0, counts.n1, xt)
    best = int(np.argmax(ll))
    lo = max(0.0, grid[best] - step)
    hi = min(eps_max, grid[best] + step)
    value = _golden_section_max(
        lambda e: float(_log_likelihood(e, counts.n0, counts.n1, xt)),
        lo,
        hi,
        GRID_REFINE_TOL,
    )
    at_boundary = False
    if value <= GRID_REFINE_TOL:
        value, at_boundary = 0.0, True
    elif value >= eps_max - GRID_REFINE_TOL:
        value, at_boundary = eps_max, True
    return Estimate(value, "mle_grid", at_boundary=at_boundary)
