"""Sampling, error statistics and benchmarking for the two-channel estimators.

The exact bias/variance/MSE of the boundary-constrained estimator are
computed as expectations over the Poisson counting distribution, truncated
only where the remaining probability mass is negligible.  Monte Carlo and
bootstrap ensembles mirror the same counting model and are reproducible:
every trial draws from its own counter-based stream keyed by
``(seed, trial index)``, so results do not depend on execution order or on
the degree of parallelism.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .estimators import (
    DEFAULT_CEILING,
    CountRecord,
    mle_closed_form_array,
    mle_grid,
)
from .model import CrosstalkMatrix, perturbed_probs

SAMPLING_MODES = ("poisson_counts", "fixed_total_binomial")
ESTIMATOR_TAGS = ("raw", "mle_closed", "mle_grid")

# Poisson sums are truncated once the cumulative mass exceeds 1 - this.
POISSON_TAIL_MASS = 1e-12

# Fraction of failed trials above which an ensemble is flagged.
INVALID_TRIAL_WARN_FRACTION = 0.01

WORKERS_ENV_VAR = "MODESEP_WORKERS"
_TRIAL_BLOCK = 4096


class InsufficientDataError(ValueError):
    """Raised when a dataset is too small for the requested resampling."""


@dataclass(frozen=True)
class SamplingConfig:
    """Reproducible count-sampling setup.

    ``n_photons`` is the total detected count per experiment (the Poisson
    mode draws the channel-1 count around ``p1 * n_photons``; the binomial
    mode splits exactly ``n_photons`` events between the channels).
    """

    n_photons: int
    trials: int = 1
    mode: str = "poisson_counts"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_photons <= 0:
            raise ValueError(f"n_photons must be > 0, got {self.n_photons}")
        if self.trials <= 0:
            raise ValueError(f"trials must be > 0, got {self.trials}")
        if self.mode not in SAMPLING_MODES:
            raise ValueError(f"mode must be one of {SAMPLING_MODES}, got {self.mode!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class ErrorStats:
    """Bias/variance/MSE bookkeeping of an estimator at one (epsilon, N)."""

    epsilon_true: float
    n_photons: float
    bias: float
    variance: float
    mse: float
    per_linear: float
    per_db: float
    mse_se: float = 0.0
    bias_se: float = 0.0
    n_invalid: int = 0
    invalid_warning: bool = False


@dataclass(frozen=True)
class EfficiencyRecord:
    """Input / transmitted / retrieved counts of a storage-and-retrieval run."""

    n_in: float
    n_tran: float
    n_out: float

    def __post_init__(self) -> None:
        if not 0 <= self.n_tran <= self.n_in:
            raise ValueError(f"need 0 <= n_tran <= n_in, got {self}")
        if not 0 <= self.n_out <= self.n_in - self.n_tran:
            raise ValueError(f"need 0 <= n_out <= n_in - n_tran, got {self}")


def resolve_workers(workers: int | None = None) -> int:
    """Worker count for trial fan-out; the environment variable wins over auto."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return max(1, int(env))
    return 1


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent counter-based stream for one (seed, trial) pair."""
    key = np.array([seed, trial], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _per_fields(epsilon: float, mse: float) -> tuple[float, float]:
    if mse == 0.0:
        return math.inf, math.inf
    linear = epsilon**2 / mse
    db = 10.0 * math.log10(linear) if linear > 0.0 else -math.inf
    return linear, db


def _error_stats(
    epsilon: float,
    n_photons: float,
    bias: float,
    variance: float,
    mse: float,
    **extra,
) -> ErrorStats:
    linear, db = _per_fields(epsilon, mse)
    return ErrorStats(
        epsilon_true=epsilon,
        n_photons=n_photons,
        bias=bias,
        variance=variance,
        mse=mse,
        per_linear=linear,
        per_db=db,
        **extra,
    )


def sample_counts(
    epsilon: float, xt: CrosstalkMatrix, cfg: SamplingConfig, trial: int = 0
) -> CountRecord:
    """Draw one synthetic count record; deterministic in (seed, trial).

    The Poisson mode can (very rarely) draw more channel-1 events than the
    nominal total; the channel-0 count is then clamped at zero and the
    record flagged.
    """
    probs = perturbed_probs(epsilon, xt)
    rng = _trial_rng(cfg.seed, trial)
    n = cfg.n_photons
    if cfg.mode == "poisson_counts":
        n1 = int(rng.poisson(probs.p1 * n))
        clamped = n1 > n
        return CountRecord(n0=max(n - n1, 0), n1=n1, clamped=clamped)
    n1 = int(rng.binomial(n, probs.p1))
    return CountRecord(n0=n - n1, n1=n1)


def _sample_n1_block(seed: int, trials: range, mode: str, p1: float, n: int) -> np.ndarray:
    out = np.empty(len(trials), dtype=np.int64)
    if mode == "poisson_counts":
        mu = p1 * n
        for i, trial in enumerate(trials):
            out[i] = _trial_rng(seed, trial).poisson(mu)
    else:
        for i, trial in enumerate(trials):
            out[i] = _trial_rng(seed, trial).binomial(n, p1)
    return out


def _sample_n1_all(cfg: SamplingConfig, p1: float, workers: int | None) -> np.ndarray:
    nworkers = resolve_workers(workers)
    blocks = [
        range(start, min(start + _TRIAL_BLOCK, cfg.trials))
        for start in range(0, cfg.trials, _TRIAL_BLOCK)
    ]
    if nworkers == 1 or len(blocks) == 1:
        parts = [_sample_n1_block(cfg.seed, b, cfg.mode, p1, cfg.n_photons) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            parts = list(
                pool.map(
                    lambda b: _sample_n1_block(cfg.seed, b, cfg.mode, p1, cfg.n_photons),
                    blocks,
                )
            )
    return np.concatenate(parts)


def _poisson_expectation_sums(
    epsilon: float,
    n_photons: float,
    xt: CrosstalkMatrix,
    ceiling: float,
    tail_mass: float,
) -> tuple[float, float, float]:
    """(E[est], E[est^2], E[(est - eps)^2]) of the closed-form estimator.

    The channel-1 count is Poisson with mean ``p1 * N``.  Three regions of
    the count axis are handled exactly through the CDF: below the crosstalk
    floor the estimate is 0, inside the model range it follows the closed
    form, and at or above ``beta N`` it takes the ceiling sentinel (kept,
    with its tiny mass, so the result is the exact expectation of the
    implemented estimator).
    """
    probs = perturbed_probs(epsilon, xt)
    mu = probs.p1 * n_photons
    threshold = (1.0 - xt.alpha) * n_photons
    upper = xt.beta * n_photons
    mid_lo = max(int(math.ceil(threshold)), 0)
    tail_lo = int(math.ceil(upper))

    if mu == 0.0:
        # all mass at k = 0, where the estimate is 0 on every branch of an
        # informative device (upper = beta*N > 0)
        return 0.0, 0.0, epsilon**2

    dist = sps.poisson(mu)
    p_low = float(dist.cdf(mid_lo - 1)) if mid_lo > 0 else 0.0
    p_high = float(dist.sf(tail_lo - 1))

    k_cap = int(dist.ppf(1.0 - tail_mass)) + 10
    k_hi = min(tail_lo - 1, k_cap)
    if k_hi >= mid_lo:
        ks = np.arange(mid_lo, k_hi + 1, dtype=np.int64)
        pk = dist.pmf(ks)
        est = 4.0 * np.sqrt((ks - threshold) / (upper - ks))
        e1 = float(np.dot(est, pk))
        e2 = float(np.dot(est**2, pk))
        sq = float(np.dot((est - epsilon) ** 2, pk))
    else:
        e1 = e2 = sq = 0.0

    e1 += ceiling * p_high
    e2 += ceiling**2 * p_high
    sq += (ceiling - epsilon) ** 2 * p_high
    sq += epsilon**2 * p_low
    return e1, e2, sq


def exact_mse(
    epsilon: float,
    n_photons: float,
    xt: CrosstalkMatrix,
    ceiling: float = DEFAULT_CEILING,
    tail_mass: float = POISSON_TAIL_MASS,
) -> ErrorStats:
    """Exact bias/variance/MSE of the closed-form estimator via Poisson sums."""
    if n_photons <= 0:
        raise ValueError(f"n_photons must be > 0, got {n_photons}")
    if not xt.informative:
        raise ValueError(
            f"degenerate device: alpha + beta must exceed 1, got {xt.alpha + xt.beta}"
        )
    e1, e2, mse = _poisson_expectation_sums(epsilon, n_photons, xt, ceiling, tail_mass)
    bias = e1 - epsilon
    variance = max(e2 - e1**2, 0.0)
    return _error_stats(epsilon, n_photons, bias, variance, mse)


def exact_bias_profile(
    eps_grid,
    n_photons: float,
    xt: CrosstalkMatrix,
    ceiling: float = DEFAULT_CEILING,
) -> list[tuple[float, float, float]]:
    """Bias and its separation-derivative along a sorted grid.

    The derivative uses central differences on the grid (one-sided at the
    two edges), so at least two grid points are required.
    """
    grid = np.asarray(eps_grid, dtype=float)
    if grid.size < 2:
        raise ValueError("need at least 2 grid points to differentiate the bias")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("eps_grid must be strictly increasing")
    bias = np.array(
        [exact_mse(e, n_photons, xt, ceiling=ceiling).bias for e in grid]
    )
    slope = np.gradient(bias, grid)
    return [(float(e), float(b), float(s)) for e, b, s in zip(grid, bias, slope)]


def mc_error_stats(
    epsilon: float,
    xt: CrosstalkMatrix,
    cfg: SamplingConfig,
    estimator_tag: str = "mle_closed",
    ceiling: float = DEFAULT_CEILING,
    workers: int | None = None,
) -> ErrorStats:
    """Monte Carlo ensemble error statistics for one of the estimators.

    Trials where the estimator is undefined (empty channel-0 count for the
    raw estimator) are excluded and counted; an ensemble with more than 1%
    invalid trials is flagged.
    """
    if estimator_tag not in ESTIMATOR_TAGS:
        raise ValueError(f"estimator_tag must be one of {ESTIMATOR_TAGS}")
    probs = perturbed_probs(epsilon, xt)
    n = cfg.n_photons
    n1 = _sample_n1_all(cfg, probs.p1, workers)
    n0 = np.maximum(n - n1, 0)
    total = n0 + n1

    if estimator_tag == "raw":
        valid = n0 > 0
        values = np.zeros(n1.shape)
        values[valid] = 4.0 * np.sqrt(n1[valid] / n0[valid])
    elif estimator_tag == "mle_closed":
        valid = total > 0
        values = mle_closed_form_array(n1, total, xt, ceiling)
    else:
        valid = total > 0
        values = np.array(
            [
                mle_grid(CountRecord(int(a), int(b)), xt).value if v else 0.0
                for a, b, v in zip(n0, n1, valid)
            ]
        )

    good = values[valid]
    n_invalid = int(np.count_nonzero(~valid))
    if good.size == 0:
        raise InsufficientDataError("all Monte Carlo trials were invalid")
    sq_err = (good - epsilon) ** 2
    bias = float(good.mean()) - epsilon
    variance = float(good.var(ddof=0))
    mse = float(sq_err.mean())
    mse_se = float(sq_err.std(ddof=1) / math.sqrt(sq_err.size)) if sq_err.size > 1 else 0.0
    bias_se = float(good.std(ddof=1) / math.sqrt(good.size)) if good.size > 1 else 0.0
    return _error_stats(
        epsilon,
        n,
        bias,
        variance,
        mse,
        mse_se=mse_se,
        bias_se=bias_se,
        n_invalid=n_invalid,
        invalid_warning=n_invalid > INVALID_TRIAL_WARN_FRACTION * cfg.trials,
    )


def bootstrap_mse(
    pool: CountRecord,
    epsilon_true: float,
    xt: CrosstalkMatrix,
    n_photons: int,
    reps: int = 50,
    outer: int = 10,
    seed: int = 0,
    estimator_tag: str = "mle_closed",
    ceiling: float = DEFAULT_CEILING,
) -> ErrorStats:
    """Bootstrap MSE from a pool of detection events.

    Each repetition resamples ``n_photons`` events with replacement from the
    pooled channel counts and re-estimates the separation; the MSE is the
    mean over ``reps`` repetitions and its uncertainty the spread over
    ``outer`` independent rounds of the whole procedure.
    """
    if estimator_tag not in ESTIMATOR_TAGS:
        raise ValueError(f"estimator_tag must be one of {ESTIMATOR_TAGS}")
    if pool.total < n_photons:
        raise InsufficientDataError(
            f"pool holds {pool.total} events, fewer than the requested {n_photons}"
        )
    if reps <= 0 or outer <= 0:
        raise ValueError("reps and outer must be > 0")
    frac1 = pool.n1 / pool.total
    all_values = []
    mse_rounds = np.empty(outer)
    for r in range(outer):
        n1 = np.array(
            [
                _trial_rng(seed, r * reps + j).binomial(n_photons, frac1)
                for j in range(reps)
            ]
        )
        n0 = n_photons - n1
        if estimator_tag == "raw":
            ok = n0 > 0
            vals = 4.0 * np.sqrt(n1[ok] / n0[ok])
        elif estimator_tag == "mle_closed":
            vals = mle_closed_form_array(n1, n0 + n1, xt, ceiling)
        else:
            vals = np.array(
                [mle_grid(CountRecord(int(a), int(b)), xt).value for a, b in zip(n0, n1)]
            )
        if vals.size == 0:
            raise InsufficientDataError("all bootstrap repetitions were invalid")
        mse_rounds[r] = np.mean((vals - epsilon_true) ** 2)
        all_values.append(vals)
    values = np.concatenate(all_values)
    bias = float(values.mean()) - epsilon_true
    variance = float(values.var(ddof=0))
    mse = float(np.mean(mse_rounds))
    mse_se = float(np.std(mse_rounds, ddof=1)) if outer > 1 else 0.0
    return _error_stats(epsilon_true, n_photons, bias, variance, mse, mse_se=mse_se)


def per(error: ErrorStats) -> tuple[float, float]:
    """Parameter-to-error ratio ``eps^2 / MSE`` as (linear, dB).

    A zero-MSE input yields the infinite-PER flag (inf, inf) rather than an
    exception; 0 dB marks the resolvability threshold.
    """
    return _per_fields(error.epsilon_true, error.mse)


def min_resolvable(
    n_photons: float,
    xt: CrosstalkMatrix,
    eps_grid,
    ceiling: float = DEFAULT_CEILING,
) -> float | None:
    """Smallest grid separation whose exact-MSE PER exceeds 1 (None if none)."""
    grid = np.asarray(eps_grid, dtype=float)
    if grid.size == 0 or grid[0] <= 0:
        raise ValueError("eps_grid must start above 0")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("eps_grid must be strictly increasing")
    for e in grid:
        stats = exact_mse(float(e), n_photons, xt, ceiling=ceiling)
        if stats.per_linear > 1.0:
            return float(e)
    return None


def subtract_noise(signal: CountRecord, noise: CountRecord) -> CountRecord:
    """Per-channel background subtraction, clamped at zero and flagged."""
    n0 = signal.n0 - noise.n0
    n1 = signal.n1 - noise.n1
    clamped = n0 < 0 or n1 < 0
    return CountRecord(n0=max(n0, 0), n1=max(n1, 0), clamped=clamped)


def memory_efficiencies(rec: EfficiencyRecord) -> tuple[float, float, float]:
    """Storage, retrieval and total efficiencies from transmitted counts.

    Storage is the absorbed fraction ``1 - n_tran/n_in``, retrieval the
    re-emitted fraction of what was stored, and total their product.
    """
    if rec.n_in == 0:
        raise ZeroDivisionError("n_in must be > 0 to compute efficiencies")
    storage = 1.0 - rec.n_tran / rec.n_in
    stored = rec.n_in - rec.n_tran
    if stored == 0:
        raise ZeroDivisionError("nothing stored: retrieval efficiency undefined")
    retrieval = rec.n_out / stored
    total = rec.n_out / rec.n_in
    return storage, retrieval, total
