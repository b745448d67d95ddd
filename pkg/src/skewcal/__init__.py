"""Transmitter IQ-skew calibration by heterodyne direct detection.

The package simulates a QAM transmitter with a controlled timing offset
between the I and Q drive paths, detects the field on a single photodiode
against a free-running tone, reconstructs the complex field digitally and
reads the residual skew off the group delays of a widely linear equalizer.
A coherent receiver model provides the reference measurement.
"""

from ._version import __version__
from .channel import (
    DetConfig,
    adc,
    add_tone,
    photodetect,
    resolve_tone_offset,
    signal_band_edge_hz,
)
from .cohd import coherent_receive
from .experiments import (
    McSummary,
    MethodOutcome,
    OsnrResult,
    OsnrRow,
    SweepResult,
    SweepRow,
    config_payload,
    mc_to_csv,
    mc_to_json,
    osnr_from_esn0,
    osnr_to_csv,
    osnr_to_json,
    run_monte_carlo,
    run_osnr_penalty,
    run_sweep,
    sweep_to_csv,
    sweep_to_json,
)
from .fieldrec import (
    FoeError,
    estimate_foe,
    kk_phase_retrieval,
    reconstruct_hilbert,
    reconstruct_kk,
)
from .pipeline import (
    DD_METHODS,
    TrialMetrics,
    cohd_trial,
    demodulate,
    detect,
    estimate_from_capture,
    fit_band_fraction,
    run_trial,
    transmit,
)
from .rxdsp import (
    EqualizerSolution,
    SkewEstimate,
    SyncError,
    ber,
    carrier_recover,
    estimate_skew,
    evm,
    snr_for_ber,
    synchronize,
    theoretical_ber_qam,
    wiener_equalize,
    wiener_equalize_complex,
)
from .txsim import (
    GUARD_SYMBOLS,
    SymbolFrame,
    TxConfig,
    bits_to_symbols,
    drive_waveforms,
    generate_symbols,
    gray_constellation,
    modulate,
    shaped_waveform,
    symbols_to_bits,
)
from .waveform import (
    ComplexSignal,
    DspError,
    RealSignal,
    brickwall_lowpass,
    fir_filter_circular,
    fractional_delay,
    frequency_shift,
    group_delay,
    hilbert_analytic,
    resample,
    rrc_taps,
)

__all__ = [
    "__version__",
    "ComplexSignal",
    "DD_METHODS",
    "DetConfig",
    "DspError",
    "EqualizerSolution",
    "FoeError",
    "GUARD_SYMBOLS",
    "McSummary",
    "MethodOutcome",
    "OsnrResult",
    "OsnrRow",
    "RealSignal",
    "SkewEstimate",
    "SweepResult",
    "SweepRow",
    "SymbolFrame",
    "SyncError",
    "TrialMetrics",
    "TxConfig",
    "adc",
    "add_tone",
    "ber",
    "bits_to_symbols",
    "brickwall_lowpass",
    "carrier_recover",
    "cohd_trial",
    "coherent_receive",
    "config_payload",
    "demodulate",
    "detect",
    "drive_waveforms",
    "estimate_foe",
    "estimate_from_capture",
    "estimate_skew",
    "evm",
    "fir_filter_circular",
    "fit_band_fraction",
    "fractional_delay",
    "frequency_shift",
    "generate_symbols",
    "gray_constellation",
    "group_delay",
    "hilbert_analytic",
    "kk_phase_retrieval",
    "mc_to_csv",
    "mc_to_json",
    "modulate",
    "osnr_from_esn0",
    "osnr_to_csv",
    "osnr_to_json",
    "photodetect",
    "reconstruct_hilbert",
    "reconstruct_kk",
    "resample",
    "resolve_tone_offset",
    "rrc_taps",
    "run_monte_carlo",
    "run_osnr_penalty",
    "run_sweep",
    "run_trial",
    "shaped_waveform",
    "signal_band_edge_hz",
    "snr_for_ber",
    "sweep_to_csv",
    "sweep_to_json",
    "symbols_to_bits",
    "synchronize",
    "theoretical_ber_qam",
    "transmit",
    "wiener_equalize",
    "wiener_equalize_complex",
]
