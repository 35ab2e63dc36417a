"""Balanced polarimeter model: pulse detection, noise, and waveforms.

The measured quantity per pulse is the +-45 degree photon-number imbalance
dN' = theta N_L t_h t_v plus Gaussian noise of variance N_L (shot noise of
the balanced split) + electronic_noise_var (amplifier noise quoted as an
equivalent photon number).  t_h and t_v are the amplitude transmissions of
the two polarization paths; extract_angle inverts the same relation.

Waveform synthesis emits the Fig.-style sampled detector trace: a Gaussian
bump of width filter_sigma whose integration-window sum encodes the pulse
imbalance.  integrate_window is its exact inverse in the noiseless case.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class DetectorSpec:
    """Noise and waveform parameters of the balanced detector."""

    electronic_noise_var: float = 1.0e5  # photon-number-equivalent variance
    calibration_factor: float = 1.0      # output signal units per photon
    filter_sigma_s: float = 2.5e-7       # Gaussian filter response width
    sample_rate_hz: float = 1.0e8

    def __post_init__(self):
        if not (self.electronic_noise_var >= 0.0 and math.isfinite(self.electronic_noise_var)):
            raise ValidationError(
                f"electronic_noise_var must be >= 0, got {self.electronic_noise_var!r}"
            )
        for name in ("calibration_factor", "filter_sigma_s", "sample_rate_hz"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValidationError(f"{name} must be positive, got {value!r}")
        if self.sample_rate_hz * self.filter_sigma_s < 4.0:
            raise ValidationError(
                "sample_rate_hz * filter_sigma_s must be >= 4 so the sampled "
                "waveform resolves the filter response, got "
                f"{self.sample_rate_hz * self.filter_sigma_s!r}"
            )


@dataclass(frozen=True)
class TransmissionSpec:
    """Amplitude transmissions of the two polarization paths, in (0, 1]."""

    t_h: float = 1.0
    t_v: float = 1.0

    def __post_init__(self):
        for name in ("t_h", "t_v"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValidationError(f"{name} must be in (0, 1], got {value!r}")


@dataclass(frozen=True)
class PulseRecord:
    """One sampled detector trace with its integration window.

    samples are in output signal units (photon number times the calibration
    factor); [window_start, window_end) delimits the integration window in
    sample indices.  integrated_imbalance and n_photons_in record the
    photon-number imbalance the trace encodes and the pulse photon number.
    """

    samples: tuple[float, ...]
    window_start: int
    window_end: int
    integrated_imbalance: float
    n_photons_in: float
    sample_rate_hz: float

    def __post_init__(self):
        if not (0 <= self.window_start < self.window_end <= len(self.samples)):
            raise ValidationError(
                f"window [{self.window_start}, {self.window_end}) is outside "
                f"the {len(self.samples)}-sample record"
            )


def simulate_pulse_detection(
    theta_true: float,
    n_photons: float,
    det: DetectorSpec,
    tr: TransmissionSpec,
    noise_stream: np.random.Generator | None = None,
) -> float:
    """One measured imbalance dN' = theta N_L t_h t_v + noise.

    The noise term is Gaussian with variance N_L + electronic_noise_var.
    Pass noise_stream=None for the noiseless signal model (used to invert
    and to test the round trip).  Small-angle model; valid for |theta| << 1.
    """
    if not n_photons > 0:
        raise ValidationError(f"n_photons must be positive, got {n_photons!r}")
    signal = theta_true * n_photons * tr.t_h * tr.t_v
    if noise_stream is None:
        return signal
    sigma = math.sqrt(n_photons + det.electronic_noise_var)
    return signal + sigma * float(noise_stream.standard_normal())


def extract_angle(delta_count: float, n_photons: float, tr: TransmissionSpec) -> float:
    """Rotation angle from a measured imbalance: theta = dN'/(N_L t_h t_v)."""
    if not n_photons > 0:
        raise ValidationError(f"n_photons must be positive, got {n_photons!r}")
    denominator = n_photons * tr.t_h * tr.t_v
    if denominator == 0.0:
        raise ValidationError("t_h * t_v must be nonzero")
    return delta_count / denominator


def angle_variance(n_photons: float, det: DetectorSpec, tr: TransmissionSpec) -> float:
    """Variance of the extracted angle for one pulse:
    (N_L + electronic_noise_var) / (N_L t_h t_v)^2."""
    if not n_photons > 0:
        raise ValidationError(f"n_photons must be positive, got {n_photons!r}")
    return (n_photons + det.electronic_noise_var) / (
        n_photons * tr.t_h * tr.t_v
    ) ** 2


def synthesize_waveform(
    delta_count: float,
    det: DetectorSpec,
    pulse_duration_s: float,
    n_photons_in: float = 0.0,
) -> PulseRecord:
    """Sampled detector trace encoding one pulse imbalance.

    The trace is a Gaussian bump of width filter_sigma_s centered on the
    pulse, padded with baseline on both sides; the sum of the samples inside
    the integration window equals delta_count * calibration_factor, so
    integrate_window recovers delta_count exactly.
    """
    if not pulse_duration_s > 0:
        raise ValidationError(
            f"pulse_duration_s must be positive, got {pulse_duration_s!r}"
        )
    dt = 1.0 / det.sample_rate_hz
    pad = 8.0 * det.filter_sigma_s
    total = pulse_duration_s + 2.0 * pad
    n_samples = int(math.ceil(total / dt))
    t = (np.arange(n_samples) + 0.5) * dt
    center = total / 2.0
    # window: center of the record +- (pulse half-width + 4 filter sigmas)
    half_window = pulse_duration_s / 2.0 + 4.0 * det.filter_sigma_s
    window_start = int(np.searchsorted(t, center - half_window, side="left"))
    window_end = int(np.searchsorted(t, center + half_window, side="right"))
    shape = np.exp(-0.5 * ((t - center) / det.filter_sigma_s) ** 2)
    window_weight = float(shape[window_start:window_end].sum())
    scale = delta_count * det.calibration_factor / window_weight
    samples = tuple(float(v) for v in shape * scale)
    return PulseRecord(
        samples=samples,
        window_start=window_start,
        window_end=window_end,
        integrated_imbalance=float(delta_count),
        n_photons_in=float(n_photons_in),
        sample_rate_hz=det.sample_rate_hz,
    )


def integrate_window(record: PulseRecord, det: DetectorSpec) -> float:
    """Photon-number imbalance recovered from a trace: window sum divided by
    the calibration factor."""
    window = record.samples[record.window_start : record.window_end]
    return math.fsum(window) / det.calibration_factor


def write_pulse_csv(record: PulseRecord, path) -> None:
    """Serialize a trace as CSV with columns sample_index, value."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["sample_index", "value"])
        for index, value in enumerate(record.samples):
            writer.writerow([index, f"{value:.11e}"])


def read_pulse_samples(path) -> list[float]:
    """Parse the sample values back from a pulse CSV."""
    values: list[float] = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["sample_index", "value"]:
            raise ValidationError(f"{path} is not a pulse CSV (bad header {header!r})")
        for row_number, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise ValidationError(f"{path}: malformed row {row_number}")
            try:
                values.append(float(row[1]))
            except ValueError as exc:
                raise ValidationError(f"{path}: malformed row {row_number}") from exc
    return values
