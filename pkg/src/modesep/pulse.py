"""Sampled control/signal waveforms and LTI predistortion.

The pulse-carving electronics are treated as a linear time-invariant
system.  Its frequency response is estimated from an input/output waveform
pair and inverted (with a regularization floor for empty bins) to
pre-shape inputs so that the system emits a desired target.

All transforms share one convention: forward kernel ``exp(-i w t)`` on the
wrapped discrete grid ``w_k = 2 pi k / (length * dt)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

# Bins where the probe spectrum falls below floor * max|probe| cannot be
# deconvolved and are zeroed instead (truncated deconvolution).
DEFAULT_RESPONSE_FLOOR = 1e-6

# correct_waveform refuses targets with more than this energy fraction in
# unusable bins.
MAX_BLOCKED_ENERGY_FRACTION = 1e-2

_GAUSS_FWHM = 2.0 * math.sqrt(2.0 * math.log(2.0))


class UncorrectableBandError(ValueError):
    """Target spectrum lives in bins the response cannot reach."""


@dataclass(frozen=True)
class Waveform:
    """Uniformly sampled real or complex signal."""

    samples: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", np.asarray(self.samples))
        if self.samples.ndim != 1 or len(self.samples) < 8:
            raise ValueError("waveform needs a 1-D grid of at least 8 samples")
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)

    def grid_matches(self, other: "Waveform") -> bool:
        return (
            len(self.samples) == len(other.samples)
            and self.dt == other.dt
            and self.t0 == other.t0
        )


@dataclass(frozen=True)
class ResponseSpectrum:
    """Complex frequency response on the grid dual to a waveform."""

    values: np.ndarray
    dt: float
    flagged: np.ndarray
    regularization_floor: float = DEFAULT_RESPONSE_FLOOR

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))
        object.__setattr__(self, "flagged", np.asarray(self.flagged, dtype=bool))
        if self.values.shape != self.flagged.shape:
            raise ValueError("values and flagged masks must have equal length")
        if self.regularization_floor < 0:
            raise ValueError("regularization floor must be >= 0")

    @property
    def omegas(self) -> np.ndarray:
        return 2.0 * math.pi * np.fft.fftfreq(len(self.values), d=self.dt)

    @classmethod
    def flat(cls, length: int, dt: float) -> "ResponseSpectrum":
        """Identity system on a given grid."""
        return cls(np.ones(length, dtype=complex), dt, np.zeros(length, dtype=bool))


def hg_waveform(
    n: int,
    center: float,
    fwhm: float,
    amplitude: float,
    dt: float,
    length: int,
    t0: float = 0.0,
) -> Waveform:
    """Fundamental (n=0) or first-order (n=1) Hermite-Gauss pulse.

    ``fwhm`` is the field full width at half maximum of the fundamental
    envelope.  The fundamental peaks at ``amplitude``; the first-order
    pulse is scaled to carry the same energy on the grid.
    """
    if n not in (0, 1):
        raise ValueError(f"only modes 0 and 1 are generated, got {n}")
    if fwhm <= 0:
        raise ValueError(f"fwhm must be > 0, got {fwhm}")
    if dt <= 0 or length < 8:
        raise ValueError("grid needs dt > 0 and at least 8 samples")
    t = t0 + dt * np.arange(length)
    if t[0] > center - 3.0 * fwhm or t[-1] < center + 3.0 * fwhm:
        warnings.warn(
            "waveform grid does not cover center +/- 3 FWHM; pulse is truncated",
            stacklevel=2,
        )
    tau = fwhm / _GAUSS_FWHM
    s = (t - center) / tau
    envelope = np.exp(-0.5 * s**2)
    if n == 0:
        return Waveform(amplitude * envelope, dt, t0)
    first = s * envelope
    norm = math.sqrt(np.sum(envelope**2) / np.sum(first**2))
    return Waveform(amplitude * norm * first, dt, t0)


def _as_real_if_close(values: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Drop a numerically spurious imaginary part of a real-signal transform."""
    if np.isrealobj(reference) and values.size:
        scale = float(np.max(np.abs(values))) or 1.0
        if float(np.max(np.abs(values.imag))) <= 1e-9 * scale:
            return values.real
    return values


def estimate_response(
    input_wf: Waveform,
    output_wf: Waveform,
    floor: float = DEFAULT_RESPONSE_FLOOR,
) -> ResponseSpectrum:
    """Frequency response ``H(w) / X(w)`` of the system mapping input to output.

    Bins where the probe magnitude falls below ``floor * max|X|`` carry no
    usable information; they are zeroed and flagged.
    """
    if not input_wf.grid_matches(output_wf):
        raise ValueError("input and output waveforms must share one grid")
    x = np.fft.fft(input_wf.samples)
    h = np.fft.fft(output_wf.samples)
    peak = float(np.max(np.abs(x)))
    if peak == 0.0:
        raise ValueError("input waveform is identically zero")
    flagged = np.abs(x) < floor * peak
    if flagged.all():
        raise ValueError("every frequency bin fell below the regularization floor")
    values = np.where(flagged, 0.0, h / np.where(flagged, 1.0, x))
    return ResponseSpectrum(values, input_wf.dt, flagged, regularization_floor=floor)


def apply_response(input_wf: Waveform, response: ResponseSpectrum) -> Waveform:
    """Send a waveform through the system: multiply spectra, transform back."""
    if len(input_wf.samples) != len(response.values) or input_wf.dt != response.dt:
        raise ValueError("waveform and response grids do not match")
    out = np.fft.ifft(response.values * np.fft.fft(input_wf.samples))
    return Waveform(_as_real_if_close(out, input_wf.samples), input_wf.dt, input_wf.t0)


def correct_waveform(target: Waveform, response: ResponseSpectrum) -> Waveform:
    """Predistorted input whose system output reproduces the target.

    Inverse-filters the target spectrum by the response; flagged (or
    exactly zero) bins are dropped from the quotient.  Raises when the
    target keeps more than ``MAX_BLOCKED_ENERGY_FRACTION`` of its energy in
    such bins, since no input can reach them.
    """
    if len(target.samples) != len(response.values) or target.dt != response.dt:
        raise ValueError("waveform and response grids do not match")
    spectrum = np.fft.fft(target.samples)
    blocked = response.flagged | (response.values == 0.0)
    total = float(np.sum(np.abs(spectrum) ** 2))
    if total == 0.0:
        return Waveform(np.zeros_like(target.samples), target.dt, target.t0)
    blocked_fraction = float(np.sum(np.abs(spectrum[blocked]) ** 2)) / total
    if blocked_fraction > MAX_BLOCKED_ENERGY_FRACTION:
        raise UncorrectableBandError(
            f"{blocked_fraction:.3%} of the target energy sits in unusable bins"
        )
    quotient = np.where(blocked, 0.0, spectrum / np.where(blocked, 1.0, response.values))
    out = np.fft.ifft(quotient)
    return Waveform(_as_real_if_close(out, target.samples), target.dt, target.t0)


def write_waveform_csv(wf: Waveform, path) -> None:
    """Two-column CSV (time_s, value) in decimal round-trip precision."""
    if np.iscomplexobj(wf.samples):
        raise ValueError("CSV serialization holds real waveforms only")
    data = np.column_stack([wf.times, wf.samples.astype(float)])
    np.savetxt(path, data, delimiter=",", header="time_s,value", comments="", fmt="%.17g")


def read_waveform_csv(path) -> Waveform:
    """Read a waveform written by :func:`write_waveform_csv`."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"expected 2 columns (time_s, value) in {path}")
    times = data[:, 0]
    steps = np.diff(times)
    dt = float(steps[0]) if len(steps) else 0.0
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * dt:
        raise ValueError(f"time grid in {path} is not uniformly increasing")
    return Waveform(data[:, 1], dt=(times[-1] - times[0]) / (len(times) - 1), t0=float(times[0]))


def write_response_csv(resp: ResponseSpectrum, path) -> None:
    """CSV (omega_rad_per_s, re, im, flagged) on the wrapped frequency grid."""
    data = np.column_stack(
        [resp.omegas, resp.values.real, resp.values.imag, resp.flagged.astype(float)]
    )
    np.savetxt(
        path,
        data,
        delimiter=",",
        header="omega_rad_per_s,re,im,flagged",
        comments="",
        fmt="%.17g",
    )


def read_response_csv(path, dt: float | None = None) -> ResponseSpectrum:
    """Read a response written by :func:`write_response_csv`.

    The time step is recovered from the frequency grid unless supplied.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 4:
        raise ValueError(f"expected 4 columns (omega, re, im, flagged) in {path}")
    length = data.shape[0]
    if dt is None:
        if length < 2 or data[1, 0] == 0.0:
            raise ValueError(f"cannot recover dt from the frequency grid in {path}")
        dt = 2.0 * math.pi / (length * data[1, 0])
    return ResponseSpectrum(
        data[:, 1] + 1j * data[:, 2], dt, data[:, 3] != 0.0
    )
