"""End-to-end trial orchestration.

Glue between the transmitter, detection chain, field reconstruction and
receiver DSP. The function worth knowing about is estimate_from_capture:
it takes a raw photocurrent record plus the handful of parameters a
calibration station knows (baud, rolloff, coarse tone offset, the frame
seed) and produces skew estimates. Both the in-process simulation path and
the file-ingestion path of the CLI call it, so a capture written to disk
and read back reproduces the in-process numbers exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import DetConfig, adc, add_tone, photodetect, resolve_tone_offset
from .cohd import coherent_receive
from .fieldrec import estimate_foe, reconstruct_hilbert, reconstruct_kk
from .rxdsp import (
    SkewEstimate,
    ber,
    carrier_recover,
    estimate_skew,
    evm,
    synchronize,
    wiener_equalize,
    wiener_equalize_complex,
)
from .txsim import SymbolFrame, TxConfig, drive_waveforms, generate_symbols, modulate
from .waveform import ComplexSignal, RealSignal, frequency_shift, resample

__all__ = [
    "DD_METHODS",
    "TrialMetrics",
    "fit_band_fraction",
    "transmit",
    "detect",
    "demodulate",
    "estimate_from_capture",
    "cohd_trial",
    "run_trial",
]

DD_METHODS = ("hilbert", "kk")
_RECON_SPS = 8  # reconstruction oversampling, samples per symbol
_EQ_SPS = 2


def fit_band_fraction(rolloff: float) -> float:
    """Group-delay fit band for a given shaping rolloff, as a fraction of
    the equalizer tap rate.

    The readout trusts tap phase only where the shaped spectrum is flat,
    |f| <= (1 - rolloff) / 2 * baud: inside the rolloff transition the
    equalizer gain is pinned down weakly (band edges alias onto each other
    at 2 samples per symbol) and its phase wanders under noise, which the
    magnitude-squared weighting does not suppress because the gain there
    is not small.
    """
    return (1.0 - rolloff) / (2.0 * _EQ_SPS)


@dataclass(frozen=True, eq=False)
class TrialMetrics:
    """Everything one trial produced for one method.

    estimate carries skew/EVM/FOE/residual; ber is measured on the same
    recovered symbols, which are included (guards and all) for
    constellation output.
    """

    method: str
    added_skew_s: float
    estimate: SkewEstimate
    ber: float
    lag_symbols: int
    rotation: int
    symbols: np.ndarray

    @property
    def skew_ps(self) -> float:
        return self.estimate.skew_s * 1e12


def transmit(tx: TxConfig, pre_emphasis=None) -> tuple[SymbolFrame, ComplexSignal]:
    """Known frame and the impaired modulator output field at the DAC rate."""
    frame = generate_symbols(tx)
    i_sig, q_sig = drive_waveforms(frame, tx, pre_emphasis)
    field, _ = modulate(i_sig, q_sig, tx)
    return frame, field


def detect(field: ComplexSignal, det: DetConfig) -> tuple[RealSignal, float]:
    """Tone injection, square-law detection and ADC.

    Returns the sampled photocurrent and the tone offset actually used
    (resolved from the signal band when the config leaves it automatic);
    the offset doubles as the coarse frequency seed for reconstruction.
    """
    f_tone = resolve_tone_offset(field, det)
    resolved = replace(det, tone_offset_hz=f_tone)
    total = add_tone(field, resolved)
    current = photodetect(total, resolved)
    return adc(current, resolved), f_tone


def demodulate(rx: ComplexSignal, frame: SymbolFrame, method: str,
               added_skew_s: float = 0.0, foe_hz: float = 0.0,
               n_taps: int = 65, band_fraction: float = 0.2,
               block_len: int = 256) -> TrialMetrics:
    """Receiver chain on a baseband signal at 2 samples per symbol.

    Synchronize, recover the carrier, then equalize twice: the 2x2 real
    structure yields the skew readout, while a strictly complex equalizer
    of the same length produces the reported symbols, EVM and BER. The
    complex filter cannot absorb an IQ skew, so the metrics keep their
    sensitivity to it; the real structure would hide it.
    """
    aligned, lag, rotation = synchronize(rx, frame)
    clean = carrier_recover(aligned, frame, block_len)
    sol, _ = wiener_equalize(clean, frame, n_taps)
    _, eq_symbols = wiener_equalize_complex(clean, frame, n_taps)
    quality = evm(eq_symbols, frame)
    estimate = estimate_skew(sol, band_fraction, method=method,
                             evm_pct=quality, foe_hz=foe_hz)
    return TrialMetrics(
        method=method,
        added_skew_s=added_skew_s,
        estimate=estimate,
        ber=ber(eq_symbols, frame),
        lag_symbols=lag,
        rotation=rotation,
        symbols=eq_symbols,
    )


def estimate_from_capture(current: RealSignal, frame: SymbolFrame,
                          baud_hz: float, rolloff: float, f_coarse_hz: float,
                          methods: tuple[str, ...] = DD_METHODS,
                          added_skew_s: float = 0.0, n_taps: int = 65,
                          band_fraction: float | None = None,
                          block_len: int = 256) -> dict[str, TrialMetrics]:
    """Skew estimates from a raw photocurrent record.

    The record is resampled to 8 samples per symbol, the field is
    reconstructed by each requested method and the receiver chain runs on
    the result. This is the single entry point for photocurrent data,
    simulated or ingested from a file.
    """
    reconstructors = {"hilbert": reconstruct_hilbert, "kk": reconstruct_kk}
    unknown = [m for m in methods if m not in reconstructors]
    if unknown:
        raise ValueError(f"unknown reconstruction methods: {unknown}")
    if band_fraction is None:
        band_fraction = fit_band_fraction(rolloff)
    oversampled = resample(current, _RECON_SPS * baud_hz)
    results: dict[str, TrialMetrics] = {}
    for method in methods:
        field, foe = reconstructors[method](oversampled, f_coarse_hz,
                                            baud_hz, rolloff)
        rx = resample(field, _EQ_SPS * baud_hz)
        results[method] = demodulate(rx, frame, method,
                                     added_skew_s=added_skew_s, foe_hz=foe,
                                     n_taps=n_taps, band_fraction=band_fraction,
                                     block_len=block_len)
    return results


def cohd_trial(field: ComplexSignal, frame: SymbolFrame, tx: TxConfig,
               lo_offset_hz: float = 0.0, esn0_db: float | None = None,
               seed: int = 0, n_taps: int = 65,
               band_fraction: float | None = None,
               block_len: int = 256) -> TrialMetrics:
    """Coherent reference estimate on an already synthesized field.

    esn0_db is symbol SNR; it is converted to per-sample SNR at the field
    rate before noise loading. The frequency offset (local oscillator plus
    anything residual) is estimated and removed before equalization.
    """
    if band_fraction is None:
        band_fraction = fit_band_fraction(tx.rolloff)
    sps = field.sample_rate_hz / tx.baud_hz
    snr_sample = None if esn0_db is None else esn0_db - 10.0 * np.log10(sps)
    rx = coherent_receive(field, lo_offset_hz, snr_sample, seed)
    foe = estimate_foe(rx, 0.0, tx.baud_hz / 2.0)
    rx = frequency_shift(rx, foe)
    rx = resample(rx, _EQ_SPS * tx.baud_hz)
    return demodulate(rx, frame, "cohd", added_skew_s=tx.added_skew_s,
                      foe_hz=foe, n_taps=n_taps, band_fraction=band_fraction,
                      block_len=block_len)


def run_trial(tx: TxConfig, det: DetConfig,
              methods: tuple[str, ...] = ("hilbert", "kk", "cohd"),
              cohd_esn0_db: float | None = None, lo_offset_hz: float = 0.0,
              n_taps: int = 65, band_fraction: float | None = None,
              block_len: int = 256) -> dict[str, TrialMetrics]:
    """One transmitter realization through every requested detection path.

    Direct-detection methods share a single capture; the coherent path
    sees the same modulator output through the idealized receiver, noise
    loaded at ``cohd_esn0_db`` (symbol SNR) when given. Results are keyed
    by method name.
    """
    frame, field = transmit(tx)
    results: dict[str, TrialMetrics] = {}
    dd = tuple(m for m in methods if m in DD_METHODS)
    if dd:
        current, f_tone = detect(field, det)
        results.update(estimate_from_capture(
            current, frame, tx.baud_hz, tx.rolloff, f_tone, dd,
            added_skew_s=tx.added_skew_s, n_taps=n_taps,
            band_fraction=band_fraction, block_len=block_len))
    if "cohd" in methods:
        results["cohd"] = cohd_trial(field, frame, tx, lo_offset_hz,
                                     cohd_esn0_db, det.rng_seed, n_taps,
                                     band_fraction, block_len)
    leftover = [m for m in methods if m not in DD_METHODS and m != "cohd"]
    if leftover:
        raise ValueError(f"unknown methods: {leftover}")
    return results
