"""Coherent-detection reference path.

An idealized intradyne front end used to cross-check the direct-detection
estimates: no hybrid imbalance, no receiver skew, just an optional local
oscillator offset and additive noise. Whatever it reports is the cleanest
number the downstream DSP can produce for a given transmitter, so
disagreement with the direct-detection path points at the reconstruction,
not at the receiver.
"""

from __future__ import annotations

import numpy as np

from .waveform import ComplexSignal

__all__ = ["coherent_receive"]

_SEED_STREAM = 3


def coherent_receive(field: ComplexSignal, lo_offset_hz: float = 0.0,
                     snr_db: float | None = None, seed: int = 0) -> ComplexSignal:
    """Downconvert the field with an ideal 90-degree hybrid.

    Applies the local-oscillator offset as a frequency shift and optionally
    loads circular AWGN at ``snr_db`` relative to the mean field power,
    per sample at the waveform rate. The offset should stay well inside
    the signal band (an eighth of the baud or so); large offsets are the
    caller's responsibility since this module does not know the baud.
    """
    t = field.times()
    out = field.samples * np.exp(-2j * np.pi * lo_offset_hz * t)
    if snr_db is not None:
        rng = np.random.default_rng([seed, _SEED_STREAM])
        power = np.mean(np.abs(out) ** 2)
        sigma = np.sqrt(power * 10.0 ** (-snr_db / 10.0) / 2.0)
        noise = rng.standard_normal(len(out)) + 1j * rng.standard_normal(len(out))
        out = out + sigma * noise
    return ComplexSignal(out, field.sample_rate_hz)
