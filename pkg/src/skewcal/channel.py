"""Heterodyne tone insertion, square-law photodetection and capture.

The receiver under study is a single photodiode: the transmitted field plus
a continuous-wave tone offset just above the signal band beat on the
square-law detector, and the resulting photocurrent is filtered by the
detector front end and captured by a real ADC. No attempt is made to cancel
the signal-signal beat interference; a strong tone (high CSPR) keeps it
small and the field reconstruction stage lives with the rest.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .waveform import ComplexSignal, RealSignal, resample

__all__ = [
    "DetConfig",
    "signal_band_edge_hz",
    "resolve_tone_offset",
    "add_tone",
    "photodetect",
    "adc",
]

# seed-stream tags so the tone and ADC draw independent random streams
_SEED_TONE = 1
_SEED_ADC = 2


@dataclass(frozen=True)
class DetConfig:
    """Detection-side settings; all values in SI units.

    ``tone_offset_hz`` of None resolves to five percent above the measured
    signal band edge (rounded up to 0.1 GHz), which keeps the single-sideband
    condition satisfied for any transmitter configuration.
    """

    tone_offset_hz: float | None = None
    cspr_db: float = 13.5
    pd_bandwidth_hz: float = 37e9
    adc_rate_hz: float = 160e9
    adc_bits: int | None = 8
    snr_db: float | None = None
    tone_linewidth_hz: float = 0.0
    rng_seed: int = 1

    def __post_init__(self):
        if self.tone_offset_hz is not None and not self.tone_offset_hz > 0:
            raise ValueError("tone_offset_hz must be positive (or None for auto)")
        if not self.pd_bandwidth_hz > 0:
            raise ValueError("pd_bandwidth_hz must be positive")
        if not self.adc_rate_hz > 0:
            raise ValueError("adc_rate_hz must be positive")
        if self.adc_bits is not None and not 2 <= self.adc_bits <= 16:
            raise ValueError(f"adc_bits must be in [2, 16] or None, got {self.adc_bits}")
        if self.tone_linewidth_hz < 0:
            raise ValueError("tone_linewidth_hz cannot be negative")


def signal_band_edge_hz(x, fraction: float = 0.9995) -> float:
    """Highest |f| below which the given fraction of the signal energy lies."""
    spec = np.abs(np.fft.fft(x.samples)) ** 2
    f = np.abs(np.fft.fftfreq(len(x), d=1.0 / x.sample_rate_hz))
    order = np.argsort(f, kind="stable")
    cum = np.cumsum(spec[order])
    total = cum[-1]
    if total == 0:
        return 0.0
    k = int(np.searchsorted(cum, fraction * total))
    return f[order[min(k, len(f) - 1)]]


def resolve_tone_offset(field: ComplexSignal, det: DetConfig) -> float:
    """Tone offset actually used for this field: configured or auto."""
    if det.tone_offset_hz is not None:
        return det.tone_offset_hz
    edge = signal_band_edge_hz(field)
    return float(np.ceil(1.05 * edge / 0.1e9) * 0.1e9)


def add_tone(field: ComplexSignal, det: DetConfig) -> ComplexSignal:
    """Add the heterodyne tone above the signal band.

    The tone power follows the configured carrier-to-signal power ratio
    exactly (measured signal power, not nominal). A nonzero linewidth turns
    the tone phase into a seeded Wiener process with Lorentzian statistics.
    The single-sideband requirement is enforced: the tone must sit outside
    the measured signal band or reconstruction would alias onto itself.
    """
    offset = resolve_tone_offset(field, det)
    edge = signal_band_edge_hz(field)
    if offset <= edge:
        raise ValueError(
            f"tone offset {offset / 1e9:.3f} GHz lies inside the signal band "
            f"(edge {edge / 1e9:.3f} GHz); single-sideband condition violated"
        )
    p_sig = np.mean(np.abs(field.samples) ** 2)
    amp = np.sqrt(10.0 ** (det.cspr_db / 10.0) * p_sig)
    phase = 2.0 * np.pi * offset * field.times()
    if det.tone_linewidth_hz > 0:
        rng = np.random.default_rng([det.rng_seed, _SEED_TONE])
        dt = 1.0 / field.sample_rate_hz
        steps = rng.normal(0.0, np.sqrt(2.0 * np.pi * det.tone_linewidth_hz * dt), len(field))
        steps[0] = 0.0
        phase = phase + np.cumsum(steps)
    return ComplexSignal(field.samples + amp * np.exp(1j * phase), field.sample_rate_hz)


def photodetect(field: ComplexSignal, det: DetConfig) -> RealSignal:
    """Square-law detection followed by the detector's analog response.

    The photocurrent is |E|^2 filtered by a fourth-order Gaussian magnitude
    response (linear phase, -3 dB at ``pd_bandwidth_hz``). The raw square is
    nonnegative; the front-end filter may ring slightly below zero.
    """
    current = np.abs(field.samples) ** 2
    f = np.fft.fftfreq(len(field), d=1.0 / field.sample_rate_hz)
    mag = np.exp(-0.5 * np.log(2.0) * (f / det.pd_bandwidth_hz) ** 8)
    out = np.fft.ifft(np.fft.fft(current) * mag).real
    return RealSignal(out, field.sample_rate_hz)


def _quantize(x: np.ndarray, bits: int) -> np.ndarray:
    lo, hi = x.min(), x.max()
    if hi == lo:
        return x.copy()
    q = (hi - lo) / (1 << bits)
    levels = np.floor((x - lo) / q)
    np.clip(levels, 0, (1 << bits) - 1, out=levels)
    return lo + (levels + 0.5) * q


def adc(current: RealSignal, det: DetConfig) -> RealSignal:
    """Capture the photocurrent: resample, optional noise, optional quantizer.

    Noise is white Gaussian at ``snr_db`` relative to the AC (beat) power of
    the record, i.e. the DC term is excluded from the reference. The
    quantizer is uniform across the observed min/max span (the full scale a
    scope would be set to). Output length follows the record duration; see
    ``waveform.resample`` for the exact-rate rule.
    """
    edge = signal_band_edge_hz(current, fraction=0.999)
    if det.adc_rate_hz < 2.0 * edge:
        warnings.warn(
            f"ADC rate {det.adc_rate_hz / 1e9:.1f} GSa/s is below twice the "
            f"occupied band edge ({edge / 1e9:.1f} GHz); expect aliasing",
            stacklevel=2,
        )
    y = resample(current, det.adc_rate_hz)
    samples = y.samples
    if det.snr_db is not None:
        rng = np.random.default_rng([det.rng_seed, _SEED_ADC])
        p_ac = np.var(samples)
        sigma = np.sqrt(p_ac / 10.0 ** (det.snr_db / 10.0))
        samples = samples + rng.normal(0.0, sigma, samples.size)
    if det.adc_bits is not None:
        samples = _quantize(samples, det.adc_bits)
    return RealSignal(samples, y.sample_rate_hz)
