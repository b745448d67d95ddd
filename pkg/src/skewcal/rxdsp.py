"""Data-aided receiver DSP: sync, carrier recovery, equalization, metrics.

The receiver input is the recovered baseband field at 2 samples per symbol.
Every routine here is data-aided against the known transmitted frame, so
symbol decisions never enter the processing chain; they appear only in the
bit-error counter.

Timing conventions: after synchronization, symbol k sits at sample 2k.
Skew is reported on the transmitter side, positive when the Q path lags
the I path. The equalizer inverts the channel, so a transmitter that
delays Q yields taps that advance it; the sign flip happens in
estimate_skew so everything downstream speaks the transmitter convention.

The first and last 64 symbols of a frame are treated as guards: they are
excluded from the equalizer fit and from EVM/BER.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special

from .txsim import GUARD_SYMBOLS, SymbolFrame, _axis_levels, _gray, symbols_to_bits
from .waveform import ComplexSignal, DspError, group_delay

__all__ = [
    "SyncError",
    "EqualizerSolution",
    "SkewEstimate",
    "synchronize",
    "carrier_recover",
    "wiener_equalize",
    "wiener_equalize_complex",
    "estimate_skew",
    "evm",
    "ber",
    "theoretical_ber_qam",
    "snr_for_ber",
]

_METHODS = ("hilbert", "kk", "cohd")
_PSR_MIN = 3.0
_PSR_EXCLUDE = 16  # samples around the peak ignored when measuring sidelobes
_RIDGE_REL = 1e-6


class SyncError(DspError):
    """Cross-correlation against the reference frame found no clear peak."""


@dataclass(frozen=True, eq=False)
class EqualizerSolution:
    """2x2 real MIMO FIR taps mapping received (I, Q) to the reference pair.

    taps_xy filters input y into output x; all four responses share one
    length and are stored in impulse-response order at tap_rate_hz.
    residual_error is the normalized MSE of the least-squares fit.
    """

    taps_ii: np.ndarray
    taps_iq: np.ndarray
    taps_qi: np.ndarray
    taps_qq: np.ndarray
    tap_rate_hz: float
    residual_error: float

    def __post_init__(self) -> None:
        n = len(self.taps_ii)
        for name in ("taps_ii", "taps_iq", "taps_qi", "taps_qq"):
            taps = np.asarray(getattr(self, name), dtype=float)
            if taps.ndim != 1 or len(taps) != n:
                raise ValueError("tap sets must be 1-D and equally long")
            if not np.all(np.isfinite(taps)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, taps)
        if n < 5 or n % 2 == 0:
            raise ValueError("tap length must be odd and at least 5")
        if not self.tap_rate_hz > 0:
            raise ValueError("tap_rate_hz must be positive")
        if not (np.isfinite(self.residual_error) and self.residual_error >= 0):
            raise ValueError("residual_error must be finite and nonnegative")


@dataclass(frozen=True)
class SkewEstimate:
    """Transmitter IQ skew in seconds, positive = Q delayed, with diagnostics."""

    skew_s: float
    method: str
    evm_pct: float = 0.0
    foe_hz: float = 0.0
    residual_error: float = 0.0

    def __post_init__(self) -> None:
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}")
        if not np.isfinite(self.skew_s):
            raise ValueError("skew_s must be finite")
        if not (np.isfinite(self.evm_pct) and self.evm_pct >= 0):
            raise ValueError("evm_pct must be finite and nonnegative")

    @property
    def skew_ps(self) -> float:
        return self.skew_s * 1e12


def _sps(rx: ComplexSignal, frame: SymbolFrame) -> int:
    n, m = len(rx), len(frame.symbols)
    if m == 0 or n % m != 0:
        raise ValueError(
            f"record length {n} is not an integer multiple of the frame length {m}"
        )
    return n // m


def _stuffed_reference(frame: SymbolFrame, n: int, sps: int) -> np.ndarray:
    ref = np.zeros(n, dtype=complex)
    ref[::sps] = frame.symbols
    return ref


def synchronize(rx: ComplexSignal, frame: SymbolFrame) -> tuple[ComplexSignal, int, int]:
    """Circularly align rx to the frame and undo the quadrant ambiguity.

    Correlates against the symbol train (impulses at the symbol instants;
    pulse shaping only scales the peak, so it is not needed here). The
    correlation peak gives the lag, its phase the nearest quadrant
    rotation; any residual phase inside the quadrant is left for carrier
    recovery, and fractional timing for the equalizer. Returns the aligned
    signal, the lag in whole symbols (signed) and the rotation index k
    meaning rx arrived as j^k times the reference.
    """
    sps = _sps(rx, frame)
    n = len(rx)
    ref = _stuffed_reference(frame, n, sps)
    corr = np.fft.ifft(np.fft.fft(rx.samples) * np.conj(np.fft.fft(ref)))
    mag = np.abs(corr)
    peak = int(np.argmax(mag))
    rolled = np.roll(mag, -peak)
    sidelobe = rolled[_PSR_EXCLUDE + 1 : n - _PSR_EXCLUDE].max()
    psr = mag[peak] / sidelobe if sidelobe > 0 else np.inf
    if psr < _PSR_MIN:
        raise SyncError(
            f"peak-to-sidelobe ratio {psr:.2f} is below {_PSR_MIN:.1f}; "
            "the record does not contain the expected frame"
        )
    lag_samples = peak if peak <= n // 2 else peak - n
    rotation = int(np.round(np.angle(corr[peak]) / (np.pi / 2))) % 4
    aligned = np.roll(rx.samples, -lag_samples) * 1j ** (-rotation)
    lag = int(round(lag_samples / sps))
    return ComplexSignal(aligned, rx.sample_rate_hz), lag, rotation


def carrier_recover(rx: ComplexSignal, frame: SymbolFrame,
                    block_len: int = 256) -> ComplexSignal:
    """Remove slowly varying carrier phase, data-aided, blockwise.

    The phase of sum(rx * conj(reference)) over each block of ``block_len``
    symbols is unwrapped across blocks and linearly interpolated between
    block centers (held flat outside them), then subtracted. A block longer
    than the frame degenerates to a single static phase estimate.
    """
    if block_len < 1:
        raise ValueError("block_len must be at least 1")
    sps = _sps(rx, frame)
    at_symbols = rx.samples[::sps]
    prod = at_symbols * np.conj(frame.symbols)
    m = len(prod)
    starts = np.arange(0, m, block_len)
    phases = np.array([np.angle(prod[s : s + block_len].sum()) for s in starts])
    phases = np.unwrap(phases)
    # block centers in units of samples of rx
    centers = (starts + np.minimum(starts + block_len, m) - 1) / 2.0 * sps
    phase_t = np.interp(np.arange(len(rx)), centers, phases)
    return ComplexSignal(rx.samples * np.exp(-1j * phase_t), rx.sample_rate_hz)


def _symbol_windows(x: np.ndarray, m: int, n_taps: int) -> np.ndarray:
    """Circular windows of x centered on each symbol instant, oldest first.

    Row k covers samples 2k-h .. 2k+h, so a filter applied as
    row . taps[::-1] is the centered circular FIR convolution.
    """
    h = (n_taps - 1) // 2
    padded = np.concatenate([x[-h:], x, x[:h]])
    return sliding_window_view(padded, n_taps)[::2][:m]


def _check_taps_arg(n_taps: int, n_samples: int) -> None:
    if n_taps < 5 or n_taps % 2 == 0:
        raise ValueError("n_taps must be odd and at least 5")
    if n_taps >= n_samples:
        raise ValueError("n_taps must be smaller than the record")


def _solve_ridge(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    trace = float(np.trace(gram).real)
    if not trace > 0:
        raise DspError("equalizer input has no energy")
    lam = _RIDGE_REL * trace / gram.shape[0]
    gram = gram + lam * np.eye(gram.shape[0], dtype=gram.dtype)
    try:
        coef = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise DspError("equalizer normal matrix is singular") from exc
    if not np.all(np.isfinite(coef)):
        raise DspError("equalizer solution is non-finite")
    return coef


def wiener_equalize(rx: ComplexSignal, frame: SymbolFrame,
                    n_taps: int = 65) -> tuple[EqualizerSolution, np.ndarray]:
    """Least-squares 2x2 real MIMO equalizer at 2 samples per symbol.

    Solves for four real FIR responses mapping (Re rx, Im rx) to the known
    (Re, Im) symbol pair at the symbol instants, via normal equations with
    a small relative ridge. A strictly complex one-tap-per-input filter
    cannot express independent I and Q delays; this structure can, which is
    the whole point: the skew ends up in the group-delay difference of the
    diagonal responses. Returns the solution and the equalized symbols over
    the full frame (guards included in the output, excluded from the fit).
    """
    sps = _sps(rx, frame)
    if sps != 2:
        raise ValueError(f"equalizer expects 2 samples per symbol, got {sps}")
    m = len(frame.symbols)
    _check_taps_arg(n_taps, len(rx))
    g = GUARD_SYMBOLS
    if m <= 2 * g + n_taps:
        raise ValueError("frame too short for the requested tap count")

    wi = _symbol_windows(rx.samples.real, m, n_taps)
    wq = _symbol_windows(rx.samples.imag, m, n_taps)
    a_fit = np.hstack([wi[g : m - g], wq[g : m - g]])
    d_fit = np.column_stack([frame.symbols.real[g : m - g],
                             frame.symbols.imag[g : m - g]])
    coef = _solve_ridge(a_fit.T @ a_fit, a_fit.T @ d_fit)

    resid = a_fit @ coef - d_fit
    residual = float(np.sum(resid**2) / np.sum(d_fit**2))
    out = np.hstack([wi, wq]) @ coef
    equalized = out[:, 0] + 1j * out[:, 1]
    # window rows are oldest-first, so the impulse response is the reverse
    sol = EqualizerSolution(
        taps_ii=coef[:n_taps, 0][::-1],
        taps_iq=coef[n_taps:, 0][::-1],
        taps_qi=coef[:n_taps, 1][::-1],
        taps_qq=coef[n_taps:, 1][::-1],
        tap_rate_hz=rx.sample_rate_hz,
        residual_error=residual,
    )
    return sol, equalized


def wiener_equalize_complex(rx: ComplexSignal, frame: SymbolFrame,
                            n_taps: int = 65) -> tuple[np.ndarray, np.ndarray]:
    """Strictly linear complex Wiener equalizer, same fit machinery.

    Useful as the recovery filter for EVM/BER: being blind to the
    conjugate, it cannot absorb IQ skew, so residual skew shows up in the
    metrics instead of vanishing into the equalizer. Returns (taps in
    impulse-response order, equalized symbols).
    """
    sps = _sps(rx, frame)
    if sps != 2:
        raise ValueError(f"equalizer expects 2 samples per symbol, got {sps}")
    m = len(frame.symbols)
    _check_taps_arg(n_taps, len(rx))
    g = GUARD_SYMBOLS
    if m <= 2 * g + n_taps:
        raise ValueError("frame too short for the requested tap count")

    w = _symbol_windows(rx.samples, m, n_taps)
    a_fit = w[g : m - g]
    d_fit = frame.symbols[g : m - g]
    coef = _solve_ridge(a_fit.conj().T @ a_fit, a_fit.conj().T @ d_fit)
    return coef[::-1].copy(), w @ coef


def estimate_skew(sol: EqualizerSolution, band_fraction: float = 0.4,
                  method: str = "cohd", evm_pct: float = 0.0,
                  foe_hz: float = 0.0) -> SkewEstimate:
    """Read the transmitter IQ skew out of the equalizer diagonal.

    The skew is the group-delay difference of the II and QQ responses over
    the in-band region. Because the equalizer advances whatever the
    transmitter delayed, the transmitter-side skew (positive = Q delayed)
    is gd(II) - gd(QQ). Gain scaling and global carrier phase drop out of
    the difference. The optional diagnostics are carried through onto the
    estimate.
    """
    gd_ii = group_delay(sol.taps_ii, sol.tap_rate_hz, band_fraction)
    gd_qq = group_delay(sol.taps_qq, sol.tap_rate_hz, band_fraction)
    skew = gd_ii - gd_qq
    symbol_period = 2.0 / sol.tap_rate_hz
    if abs(skew) >= symbol_period:
        raise DspError(
            f"group-delay difference {skew * 1e12:.2f} ps exceeds a symbol "
            "period; the fit did not capture a physical skew"
        )
    return SkewEstimate(skew_s=skew, method=method, evm_pct=evm_pct,
                        foe_hz=foe_hz, residual_error=sol.residual_error)


def _guarded(symbols: np.ndarray, frame: SymbolFrame) -> tuple[np.ndarray, np.ndarray]:
    eq = np.asarray(symbols)
    ref = frame.symbols
    if eq.shape != ref.shape:
        raise ValueError("equalized and reference symbol counts differ")
    g = GUARD_SYMBOLS
    return eq[g : len(eq) - g], ref[g : len(ref) - g]


def evm(symbols: np.ndarray, frame: SymbolFrame) -> float:
    """RMS error vector over RMS reference, percent, guards excluded."""
    eq, ref = _guarded(symbols, frame)
    err = np.mean(np.abs(eq - ref) ** 2)
    return float(100.0 * np.sqrt(err / np.mean(np.abs(ref) ** 2)))


def ber(symbols: np.ndarray, frame: SymbolFrame) -> float:
    """Hard-decision Gray bit error rate against the known bits, guards excluded.

    Statistically meaningful from about 1e4 bits; shorter records are not
    rejected, the variance is the caller's problem.
    """
    eq, _ = _guarded(symbols, frame)
    g = GUARD_SYMBOLS
    nbits = int(np.log2(frame.mod_order))
    decided = symbols_to_bits(eq, frame.mod_order)
    sent = frame.bits[g * nbits : (len(frame.symbols) - g) * nbits]
    return float(np.count_nonzero(decided != sent) / sent.size)


def theoretical_ber_qam(mod_order: int, esn0_db: float) -> float:
    """Exact Gray-mapped square-QAM bit error rate over AWGN.

    Evaluated by integrating the per-axis PAM decision regions against the
    Gaussian noise tail, counting Gray bit flips between sent and decided
    levels. esn0_db is the symbol SNR (average symbol energy over N0).
    """
    root = int(round(np.sqrt(mod_order)))
    if root * root != mod_order or mod_order < 4:
        raise ValueError("mod_order must be a square QAM order of at least 4")
    gamma = 10.0 ** (esn0_db / 10.0)
    sigma = np.sqrt(1.0 / (2.0 * gamma))  # per-axis noise std at unit Es
    per_axis, scale = _axis_levels(mod_order)
    levels = (2.0 * np.arange(per_axis) - (per_axis - 1)) * scale
    bounds = np.concatenate([[-np.inf], (levels[:-1] + levels[1:]) / 2.0, [np.inf]])
    nb_axis = int(np.log2(root))
    gray = np.array([_gray(v) for v in range(root)])
    total = 0.0
    for j in range(root):
        cdf_hi = special.erfc((levels[j] - bounds[1:]) / (sigma * np.sqrt(2))) / 2.0
        cdf_lo = special.erfc((levels[j] - bounds[:-1]) / (sigma * np.sqrt(2))) / 2.0
        p_decide = cdf_hi - cdf_lo
        flips = np.array([bin(int(gray[j] ^ gr)).count("1") for gr in gray])
        total += float(p_decide @ flips) / root
    return total / nb_axis


def snr_for_ber(mod_order: int, target_ber: float,
                lo_db: float = 0.0, hi_db: float = 40.0) -> float:
    """Symbol SNR in dB at which the theoretical BER hits target_ber."""
    if not 0 < target_ber < 0.5:
        raise ValueError("target_ber must be in (0, 0.5)")
    f_lo = theoretical_ber_qam(mod_order, lo_db) - target_ber
    f_hi = theoretical_ber_qam(mod_order, hi_db) - target_ber
    if f_lo < 0 or f_hi > 0:
        raise ValueError("target_ber is outside the searchable SNR range")
    for _ in range(80):
        mid = 0.5 * (lo_db + hi_db)
        if theoretical_ber_qam(mod_order, mid) > target_ber:
            lo_db = mid
        else:
            hi_db = mid
    return 0.5 * (lo_db + hi_db)
