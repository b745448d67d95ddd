"""Digital reconstruction of the optical field from the photocurrent.

Two routes are implemented. The direct route removes the DC term, takes the
analytic signal of the photocurrent and shifts the tone-signal beat down to
baseband. The phase-retrieval route treats the photocurrent as the
intensity of a minimum-phase field (valid because the tone dominates and
the signal occupies a single sideband above it) and recovers the phase from
the log-intensity via the Hilbert transform, which also linearizes the
signal-signal beat term instead of leaving it as additive error.

With the tone sitting above the signal carrier, the positive-frequency beat
carries the conjugate field, so both routes conjugate after the downshift.
Both return the reconstructed baseband field, normalized to unit average
power, together with the fine frequency-offset estimate that was used.
"""

from __future__ import annotations

import numpy as np

from .waveform import (
    ComplexSignal,
    DspError,
    RealSignal,
    brickwall_lowpass,
    frequency_shift,
    hilbert_analytic,
    resample,
)

__all__ = [
    "FoeError",
    "estimate_foe",
    "kk_phase_retrieval",
    "reconstruct_hilbert",
    "reconstruct_kk",
]

# samples clamped by the phase-retrieval positivity floor, as a fraction of
# the record, beyond which the carrier is declared too weak
_CLAMP_BUDGET = 1e-3
_DC_NOTCH_BINS = 1  # bins zeroed on each side of DC (plus DC itself)


class FoeError(DspError):
    """No usable spectral line found for frequency-offset estimation."""


def estimate_foe(x: ComplexSignal, f_coarse_hz: float,
                 search_halfwidth_hz: float | None = None) -> float:
    """Frequency offset of a QAM signal from its fourth-power spectral line.

    Raising the signal to the fourth power strips the quadrant modulation
    and leaves a line at four times the carrier offset. The strongest bin
    within ``search_halfwidth_hz`` (default: an eighth of the sample rate)
    of 4 x ``f_coarse_hz`` is refined by parabolic interpolation over three
    bins and divided back by four. A peak less than 6 dB above the median
    power inside the search window is rejected as no line at all.
    """
    n = len(x)
    fs = x.sample_rate_hz
    if search_halfwidth_hz is None:
        search_halfwidth_hz = fs / 8.0
    z = x.samples**4
    spec = np.abs(np.fft.fft(z)) ** 2
    f = np.fft.fftfreq(n, d=1.0 / fs)
    # distance on the circular frequency axis
    dist = (f - 4.0 * f_coarse_hz + 0.5 * fs) % fs - 0.5 * fs
    mask = np.abs(dist) <= search_halfwidth_hz
    if not np.any(mask):
        raise FoeError("search window contains no FFT bins")
    window = spec[mask]
    peak = window.max()
    floor = np.median(window)
    if peak <= 0 or (floor > 0 and peak < 3.981 * floor):
        raise FoeError(
            "no dominant fourth-power line within the search window "
            f"(peak/median = {peak / floor if floor > 0 else 0.0:.2f})"
        )
    k = int(np.flatnonzero(mask)[np.argmax(window)])
    pm, p0, pp = spec[k - 1], spec[k], spec[(k + 1) % n]
    denom = pm - 2.0 * p0 + pp
    delta = 0.5 * (pm - pp) / denom if denom != 0 else 0.0
    delta = float(np.clip(delta, -0.5, 0.5))
    f4 = 4.0 * f_coarse_hz + dist[k] + delta * fs / n
    return f4 / 4.0


def _notch_dc(x: ComplexSignal, bins: int = _DC_NOTCH_BINS) -> ComplexSignal:
    """Zero DC and ``bins`` FFT bins on each side of it."""
    spec = np.fft.fft(x.samples)
    spec[0] = 0.0
    for b in range(1, bins + 1):
        spec[b] = 0.0
        spec[-b] = 0.0
    return ComplexSignal(np.fft.ifft(spec), x.sample_rate_hz)


def _baseband_tail(x: ComplexSignal, foe_hz: float, baud_hz: float,
                   rolloff: float) -> ComplexSignal:
    """Shared downshift / conjugate / notch / lowpass / normalize tail."""
    b = frequency_shift(x, foe_hz)
    b = ComplexSignal(np.conj(b.samples), b.sample_rate_hz)
    b = _notch_dc(b)
    edge = 0.5 * baud_hz * (1.0 + rolloff)
    cutoff = 0.5 * (edge + abs(foe_hz))
    cutoff = min(cutoff, 0.49 * b.sample_rate_hz)
    b = brickwall_lowpass(b, cutoff)
    power = np.mean(np.abs(b.samples) ** 2)
    if power == 0:
        raise DspError("reconstruction produced an empty band")
    return ComplexSignal(b.samples / np.sqrt(power), b.sample_rate_hz)


def reconstruct_hilbert(current: RealSignal, f_coarse_hz: float, baud_hz: float,
                        rolloff: float) -> tuple[ComplexSignal, float]:
    """Field reconstruction via the analytic signal of the photocurrent.

    Steps: remove the record mean, form the analytic signal, refine the
    tone offset from the fourth-power line seeded by ``f_coarse_hz``, shift
    the beat to baseband, conjugate, notch the residual around DC and
    lowpass just beyond the signal band. The signal-signal beat term is not
    cancelled; it rides along as in-band error. Returns the unit-power
    reconstructed field and the refined offset in Hz.
    """
    ac = RealSignal(current.samples - np.mean(current.samples), current.sample_rate_hz)
    z = hilbert_analytic(ac)
    foe = estimate_foe(z, f_coarse_hz, baud_hz / 2.0)
    return _baseband_tail(z, foe, baud_hz, rolloff), foe


def kk_phase_retrieval(current: RealSignal) -> ComplexSignal:
    """Minimum-phase field whose intensity matches the photocurrent.

    For a field A + s(t) with the modulation s confined to frequencies
    above the carrier and |s| < A, the phase is the Hilbert transform of
    half the log-intensity and the magnitude is the square root, so the
    complex field follows directly from the photocurrent alone. Samples
    below 1e-6 of the mean are clamped; if more than 0.1 percent of the
    record needs clamping the carrier is too weak for the expansion and the
    input is rejected.
    """
    i = current.samples
    mean = np.mean(i)
    if mean <= 0:
        raise ValueError("photocurrent mean must be positive")
    floor = 1e-6 * mean
    clamped = np.count_nonzero(i < floor)
    if clamped > _CLAMP_BUDGET * i.size:
        raise ValueError(
            f"{clamped} of {i.size} samples fall below the positivity floor; "
            "carrier power is insufficient for phase retrieval"
        )
    i = np.maximum(i, floor)
    half_log = RealSignal(0.5 * np.log(i), current.sample_rate_hz)
    phase = hilbert_analytic(half_log).samples.imag
    return ComplexSignal(np.sqrt(i) * np.exp(1j * phase), current.sample_rate_hz)


def reconstruct_kk(current: RealSignal, f_coarse_hz: float, baud_hz: float,
                   rolloff: float) -> tuple[ComplexSignal, float]:
    """Field reconstruction via minimum-phase (Kramers-Kronig) retrieval.

    The record is upsampled twofold first because the square root and
    logarithm broaden the spectrum, then the retrieved field has its
    carrier (the tone, sitting at DC in this representation) subtracted,
    and the same baseband tail as the direct route follows. The output is
    returned at the input sample rate.
    """
    i2 = resample(current, 2.0 * current.sample_rate_hz)
    g = kk_phase_retrieval(i2)
    g = ComplexSignal(g.samples - np.mean(g.samples), g.sample_rate_hz)
    foe = estimate_foe(g, f_coarse_hz, baud_hz / 2.0)
    base = _baseband_tail(g, foe, baud_hz, rolloff)
    out = resample(base, current.sample_rate_hz)
    power = np.mean(np.abs(out.samples) ** 2)
    out = ComplexSignal(out.samples / np.sqrt(power), out.sample_rate_hz)
    return out, foe
