"""Sampled-signal containers and the spectral DSP primitives built on them.

Everything here works with circular (FFT) semantics: a record is treated as
one period of a periodic waveform, so delays, filters and resampling wrap
around the record edges. Callers that care about edge transients discard
guard intervals; the transmitter/receiver chain in this package reserves 64
symbols at each end for exactly that reason.

Sample times are t[n] = n / sample_rate_hz and frequency axes always come
from numpy's fftfreq with the stored rate, so a signal's rate is the single
source of truth for its time/frequency grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DspError",
    "RealSignal",
    "ComplexSignal",
    "hilbert_analytic",
    "fractional_delay",
    "resample",
    "frequency_shift",
    "brickwall_lowpass",
    "fir_filter_circular",
    "rrc_taps",
    "group_delay",
]


class DspError(RuntimeError):
    """A signal-processing stage failed on otherwise well-formed input."""


def _validated(samples, dtype, min_len=2):
    arr = np.asarray(samples)
    if dtype == np.float64 and np.iscomplexobj(arr):
        raise ValueError("real signal constructed from complex samples")
    arr = arr.astype(dtype, copy=False)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D sample array, got shape {arr.shape}")
    if arr.size < min_len:
        raise ValueError(f"need at least {min_len} samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise ValueError(f"non-finite sample at index {bad}")
    return arr


@dataclass(frozen=True)
class RealSignal:
    """Uniformly sampled real-valued waveform."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        object.__setattr__(self, "samples", _validated(self.samples, np.float64))
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate_hz


@dataclass(frozen=True)
class ComplexSignal:
    """Uniformly sampled complex-envelope waveform."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        object.__setattr__(self, "samples", _validated(self.samples, np.complex128))
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate_hz


def _same_type(x, samples, rate):
    if isinstance(x, RealSignal):
        return RealSignal(np.real(samples), rate)
    return ComplexSignal(samples, rate)


def hilbert_analytic(x: RealSignal) -> ComplexSignal:
    """Analytic signal of a real record via the FFT half-spectrum method.

    Negative-frequency bins are zeroed and strictly positive bins doubled;
    DC (and the Nyquist bin of an even-length record) keep unit gain. The
    real part of the result equals the input to rounding precision.
    """
    if not isinstance(x, RealSignal):
        raise TypeError("hilbert_analytic expects a RealSignal")
    n = len(x)
    if n < 4:
        raise ValueError(f"need at least 4 samples, got {n}")
    spec = np.fft.fft(x.samples)
    gain = np.zeros(n)
    gain[0] = 1.0
    if n % 2 == 0:
        gain[1 : n // 2] = 2.0
        gain[n // 2] = 1.0
    else:
        gain[1 : (n + 1) // 2] = 2.0
    return ComplexSignal(np.fft.ifft(spec * gain), x.sample_rate_hz)


def fractional_delay(x, tau_s: float):
    """Delay a signal by ``tau_s`` seconds (sub-sample precision, circular).

    Implemented as the linear phase exp(-j 2 pi f tau) across the FFT bins,
    which is exact for band-limited content. For real input the Nyquist bin
    keeps only the cosine component of the phase so the output stays real;
    energy at Nyquist is therefore not preserved, everything below it is.
    Negative ``tau_s`` advances the signal.
    """
    n = len(x)
    if abs(tau_s) >= 0.25 * x.duration_s:
        raise ValueError(
            f"|tau_s| = {abs(tau_s):.3e} s exceeds a quarter of the record "
            f"duration ({x.duration_s:.3e} s)"
        )
    f = np.fft.fftfreq(n, d=1.0 / x.sample_rate_hz)
    spec = np.fft.fft(x.samples)
    phase = np.exp(-2j * np.pi * f * tau_s)
    if isinstance(x, RealSignal) and n % 2 == 0:
        phase[n // 2] = np.cos(2.0 * np.pi * f[n // 2] * tau_s)
    return _same_type(x, np.fft.ifft(spec * phase), x.sample_rate_hz)


def _change_length(spec: np.ndarray, n_out: int) -> np.ndarray:
    """Zero-pad or fold an FFT spectrum to a new length, preserving content
    up to the smaller Nyquist. Even-length Nyquist bins are split (upsample)
    or folded (downsample) so real signals stay real."""
    n = spec.size
    if n_out == n:
        return spec.copy()
    out = np.zeros(n_out, dtype=np.complex128)
    if n_out > n:
        if n % 2 == 0:
            half = n // 2
            out[:half] = spec[:half]
            out[half] = 0.5 * spec[half]
            out[n_out - half] = 0.5 * spec[half]
            out[n_out - half + 1 :] = spec[half + 1 :]
        else:
            half = (n + 1) // 2
            out[:half] = spec[:half]
            out[n_out - (n - half) :] = spec[half:]
    else:
        if n_out % 2 == 0:
            half = n_out // 2
            out[:half] = spec[:half]
            out[half] = spec[half] + spec[n - half]
            out[half + 1 :] = spec[n - half + 1 :]
        else:
            half = (n_out + 1) // 2
            out[:half] = spec[:half]
            out[half:] = spec[n - (n_out - half) :]
    return out


def resample(x, new_rate_hz: float):
    """Resample to a new rate by Fourier zero-padding/truncation.

    The record duration is preserved, so the output length is
    round(duration * new_rate_hz) and the achieved rate is length/duration.
    When duration * new_rate_hz is an integer (the usual case for records
    spanning a whole number of symbol periods) the request is met exactly;
    otherwise the achieved rate differs by less than half a sample over the
    record and is the rate the returned signal carries. The input must be
    band-limited below the smaller of the two Nyquist frequencies; content
    above it is discarded without warning.
    """
    if new_rate_hz <= 0:
        raise ValueError(f"new_rate_hz must be positive, got {new_rate_hz}")
    n = len(x)
    n_out = int(round(n * (new_rate_hz / x.sample_rate_hz)))
    if n_out < 2:
        raise ValueError("requested rate leaves fewer than 2 samples")
    achieved = n_out * (x.sample_rate_hz / n)
    if abs(achieved - new_rate_hz) <= 1e-9 * new_rate_hz:
        achieved = new_rate_hz
    spec = _change_length(np.fft.fft(x.samples), n_out)
    out = np.fft.ifft(spec) * (n_out / n)
    return _same_type(x, out, achieved)


def frequency_shift(x: ComplexSignal, shift_hz: float) -> ComplexSignal:
    """Multiply by exp(-j 2 pi shift t): content at +shift_hz moves to DC."""
    if not isinstance(x, ComplexSignal):
        raise TypeError("frequency_shift expects a ComplexSignal")
    ph = np.exp(-2j * np.pi * shift_hz * x.times())
    return ComplexSignal(x.samples * ph, x.sample_rate_hz)


def brickwall_lowpass(x, cutoff_hz: float):
    """Zero every FFT bin with |f| > cutoff_hz (bins at the cutoff survive)."""
    nyq = 0.5 * x.sample_rate_hz
    if not 0 < cutoff_hz < nyq:
        raise ValueError(f"cutoff_hz must lie in (0, {nyq:.6g}), got {cutoff_hz:.6g}")
    f = np.fft.fftfreq(len(x), d=1.0 / x.sample_rate_hz)
    spec = np.fft.fft(x.samples)
    spec[np.abs(f) > cutoff_hz] = 0.0
    return _same_type(x, np.fft.ifft(spec), x.sample_rate_hz)


def fir_filter_circular(x, taps, centered: bool = True):
    """Circular FIR filtering via the FFT.

    With ``centered`` the middle tap sits at zero delay, so symmetric taps
    leave timing untouched; otherwise tap 0 is at zero delay (causal).
    """
    taps = np.asarray(taps, dtype=np.float64 if isinstance(x, RealSignal) else np.complex128)
    n = len(x)
    if taps.ndim != 1 or taps.size == 0 or taps.size > n:
        raise ValueError("taps must be 1-D and no longer than the signal")
    h = np.zeros(n, dtype=taps.dtype)
    h[: taps.size] = taps
    if centered:
        h = np.roll(h, -((taps.size - 1) // 2))
    out = np.fft.ifft(np.fft.fft(x.samples) * np.fft.fft(h))
    return _same_type(x, out, x.sample_rate_hz)


def rrc_taps(rolloff: float, span_symbols: int, sps: int) -> np.ndarray:
    """Root-raised-cosine taps, unit energy, length span_symbols * sps + 1.

    ``rolloff`` of zero degenerates to the sinc (ideal brickwall) pulse.
    The singular points of the closed form are patched with their limits.
    """
    if not 0 <= rolloff <= 1:
        raise ValueError(f"rolloff must be in [0, 1], got {rolloff}")
    if span_symbols < 8:
        raise ValueError(f"span_symbols must be >= 8, got {span_symbols}")
    if sps < 2:
        raise ValueError(f"sps must be >= 2, got {sps}")
    n = span_symbols * sps + 1
    t = (np.arange(n) - (n - 1) / 2) / sps  # in symbol periods
    b = rolloff
    if b == 0:
        h = np.sinc(t)
    else:
        h = np.empty(n)
        mid = np.isclose(t, 0.0)
        edge = np.isclose(np.abs(4.0 * b * t), 1.0)
        ok = ~(mid | edge)
        tt = t[ok]
        num = np.sin(np.pi * tt * (1 - b)) + 4 * b * tt * np.cos(np.pi * tt * (1 + b))
        den = np.pi * tt * (1 - (4 * b * tt) ** 2)
        h[ok] = num / den
        h[mid] = 1 - b + 4 * b / np.pi
        h[edge] = (b / np.sqrt(2)) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * b))
            + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
        )
    return h / np.sqrt(np.sum(h**2))


def group_delay(taps, tap_rate_hz: float, band_fraction: float = 0.4) -> float:
    """Group delay of an FIR filter, in seconds relative to tap 0.

    The unwrapped phase of the frequency response (nearest-multiple-of-2pi
    continuation from DC outward) is fitted with a least-squares line over
    |f| <= band_fraction * tap_rate_hz, weighted by |H(f)|^2 so that
    out-of-band phase noise carries no weight. The negated slope over 2 pi
    is the delay; a filter symmetric about its middle tap reads
    (n_taps - 1) / 2 sample periods.
    """
    taps = np.asarray(taps)
    if taps.ndim != 1 or taps.size < 5:
        raise ValueError("need at least 5 taps")
    if not np.all(np.isfinite(taps)):
        raise ValueError("non-finite tap values")
    if not np.any(taps):
        raise ValueError("all-zero taps have no group delay")
    if not 0 < band_fraction <= 0.5:
        raise ValueError(f"band_fraction must be in (0, 0.5], got {band_fraction}")
    if tap_rate_hz <= 0:
        raise ValueError(f"tap_rate_hz must be positive, got {tap_rate_hz}")

    nfft = 1 << max(12, int(np.ceil(np.log2(8 * taps.size))))
    spec = np.fft.fftshift(np.fft.fft(taps, nfft))
    f = np.fft.fftshift(np.fft.fftfreq(nfft, d=1.0 / tap_rate_hz))
    k0 = nfft // 2  # DC bin after fftshift
    ph = np.angle(spec)
    # unwrap from DC toward each band edge independently
    up = np.unwrap(ph[k0:])
    dn = np.unwrap(ph[: k0 + 1][::-1])
    phase = np.concatenate([dn[::-1][:-1], up])

    sel = np.abs(f) <= band_fraction * tap_rate_hz
    w = np.abs(spec[sel]) ** 2
    if not np.any(w > 0):
        raise ValueError("filter response vanishes over the fitted band")
    om = 2.0 * np.pi * f[sel]
    y = phase[sel]
    om_c = om - np.average(om, weights=w)
    y_c = y - np.average(y, weights=w)
    slope = np.sum(w * om_c * y_c) / np.sum(w * om_c**2)
    return -slope
