"""Crosstalk calibration from measured projection frequencies.

The two leakage parameters are fitted by least squares between the
row-normalized channel frequencies and the model probabilities across a
grid of known separations: a coarse scan of the unit box followed by
derivative-free simplex refinement from several starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .model import CrosstalkMatrix, perturbed_p1

COARSE_GRID_STEP = 1e-3
REFINE_XATOL = 1e-7
# alpha + beta <= 1 + this margin counts as the non-informative boundary
_BOUNDARY_MARGIN = 1e-9


@dataclass(frozen=True)
class CalibrationDataset:
    """Counts per known separation: rows of (epsilon_true, n0, n1)."""

    rows: tuple[tuple[float, int, int], ...]
    photons_per_row: float = 1.6e5

    def __post_init__(self) -> None:
        if len(self.rows) < 2:
            raise ValueError("calibration needs at least 2 rows")
        epsilons = [r[0] for r in self.rows]
        if len(set(epsilons)) != len(epsilons):
            raise ValueError("separations must be distinct")
        for eps, n0, n1 in self.rows:
            if eps < 0:
                raise ValueError(f"epsilon must be >= 0, got {eps}")
            if n0 < 0 or n1 < 0 or n0 + n1 == 0:
                raise ValueError(f"row at epsilon={eps} needs n0, n1 >= 0 and n0+n1 > 0")

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    @property
    def frequencies(self) -> np.ndarray:
        """Row-normalized channel-1 frequencies ``n1 / (n0 + n1)``."""
        return np.array([r[2] / (r[1] + r[2]) for r in self.rows])


@dataclass(frozen=True)
class CalibrationResult:
    alpha: float
    beta: float
    residual: float
    per_row_residuals: tuple[float, ...]
    flat_cost: bool = False

    @property
    def crosstalk(self) -> CrosstalkMatrix:
        return CrosstalkMatrix(alpha=self.alpha, beta=self.beta)


def _cost_terms(eps: np.ndarray, f1: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Per-row squared residual (f0 - p0)^2 + (f1 - p1)^2 = 2 (f1 - p1)^2."""
    p1 = perturbed_p1(eps, alpha, beta)
    return 2.0 * (f1 - p1) ** 2


def _cost(eps: np.ndarray, f1: np.ndarray, alpha: float, beta: float) -> float:
    return float(np.sum(_cost_terms(eps, f1, alpha, beta)))


def _interior_simplex(x: np.ndarray, scale: float) -> np.ndarray:
    """Initial simplex around ``x`` whose offsets point into the unit box."""
    vertices = [np.clip(x, 0.0, 1.0)]
    for i in range(2):
        v = vertices[0].copy()
        v[i] += scale if v[i] + scale <= 1.0 else -scale
        vertices.append(np.clip(v, 0.0, 1.0))
    return np.array(vertices)


def _coarse_grid_min(eps: np.ndarray, f1: np.ndarray, step: float) -> tuple[float, float]:
    """Exact cost minimum over the (alpha, beta) grid with spacing ``step``.

    The residual is linear in (alpha, beta), so the summed cost is a
    quadratic form; accumulating its six coefficients once makes the full
    grid scan cheap without changing a single cost value.
    """
    w = 16.0 / (16.0 + eps**2)
    c = f1 - w
    s_ww = np.dot(w, w)
    s_vv = np.dot(w - 1.0, w - 1.0)
    s_wv = np.dot(w, w - 1.0)
    s_wc = np.dot(w, c)
    s_vc = np.dot(w - 1.0, c)
    s_cc = np.dot(c, c)
    axis = np.arange(0.0, 1.0 + step / 2.0, step)
    a = axis[:, None]
    b = axis[None, :]
    cost = 2.0 * (
        a**2 * s_ww
        + b**2 * s_vv
        + 2.0 * a * b * s_wv
        + 2.0 * a * s_wc
        + 2.0 * b * s_vc
        + s_cc
    )
    cost[(a + b) <= 1.0] = np.inf  # non-informative half of the box
    i, j = np.unravel_index(np.argmin(cost), cost.shape)
    return float(axis[i]), float(axis[j])


def fit_crosstalk(
    data: CalibrationDataset,
    grid_step: float = COARSE_GRID_STEP,
    refine_xatol: float = REFINE_XATOL,
) -> CalibrationResult:
    """Fit (alpha, beta) to the dataset by box-constrained least squares.

    Nelder-Mead refinements start from the grid minimum, the box corners
    and the center; candidates that land on the non-informative half
    ``alpha + beta <= 1`` are rejected.  If only such candidates remain the
    cost is flat along the degenerate boundary; the boundary-projected
    minimizer is returned with ``flat_cost`` set.
    """
    eps = data.epsilons
    f1 = data.frequencies
    grid_best = _coarse_grid_min(eps, f1, grid_step)
    starts = [grid_best, (0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0), (0.5, 0.5)]

    def objective(x: np.ndarray) -> float:
        return _cost(eps, f1, float(x[0]), float(x[1]))

    # Two simplex quirks need handling here.  The cost valley is narrow
    # (beta enters the residual with weight w - 1, at most ~0.06 for
    # separations below 1), so termination must be driven by the simplex
    # size alone.  And a simplex clipped against the box boundary collapses
    # onto it and loses a search direction, so every pass starts from an
    # explicitly interior simplex; the second, finer pass recovers from any
    # mid-run collapse.
    options = {"xatol": min(refine_xatol, 1e-10), "fatol": 1e-30, "maxiter": 4000}
    candidates: list[tuple[float, float, float]] = []
    for start in starts:
        x = np.asarray(start, dtype=float)
        for scale in (0.05, 1e-3):
            res = optimize.minimize(
                objective,
                x,
                method="Nelder-Mead",
                bounds=[(0.0, 1.0), (0.0, 1.0)],
                options={**options, "initial_simplex": _interior_simplex(x, scale)},
            )
            x = res.x
        a = min(max(float(x[0]), 0.0), 1.0)
        b = min(max(float(x[1]), 0.0), 1.0)
        candidates.append((objective(np.array([a, b])), a, b))
    informative = [c for c in candidates if c[1] + c[2] > 1.0 + _BOUNDARY_MARGIN]
    flat = not informative
    if informative:
        cost, alpha, beta = min(informative, key=lambda c: (c[0], c[1], c[2]))
    else:
        # degenerate data: every fit collapses onto alpha + beta = 1, where
        # the model is separation-independent; project just inside the box
        cost, alpha, beta = min(candidates, key=lambda c: (c[0], c[1], c[2]))
        beta = min(1.0, 1.0 - alpha + _BOUNDARY_MARGIN)
    terms = _cost_terms(eps, f1, alpha, beta)
    return CalibrationResult(
        alpha=alpha,
        beta=beta,
        residual=float(np.sum(terms)),
        per_row_residuals=tuple(float(t) for t in terms),
        flat_cost=flat,
    )


def calibration_report(result: CalibrationResult, data: CalibrationDataset) -> dict:
    """Serializable summary: fit, per-row residuals, implied information curve."""
    from .information import fi_two_mode_exact, superres_param_analytic

    xt = result.crosstalk
    eps = data.epsilons
    f1 = data.frequencies
    p1 = perturbed_p1(eps, result.alpha, result.beta)
    if xt.informative:
        s_value = superres_param_analytic(xt)
        fi_curve = [fi_two_mode_exact(float(e), xt).value for e in eps]
    else:
        s_value = 0.0
        fi_curve = [0.0 for _ in eps]
    return {
        "alpha": result.alpha,
        "beta": result.beta,
        "leakage_1_minus_alpha": 1.0 - result.alpha,
        "residual": result.residual,
        "flat_cost": result.flat_cost,
        "superres_param": s_value if math.isfinite(s_value) else "inf",
        "rows": [
            {
                "epsilon": float(e),
                "f1_measured": float(f),
                "p1_fitted": float(p),
                "residual": float(r),
                "fisher_two_mode": float(fi),
            }
            for e, f, p, r, fi in zip(eps, f1, p1, result.per_row_residuals, fi_curve)
        ],
    }
