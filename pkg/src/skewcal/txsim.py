"""QAM transmitter synthesis with controlled I/Q timing skew.

The transmitter model is deliberately simple: seeded Gray-mapped QAM
symbols, root-raised-cosine shaping at the DAC rate, an adjustable timing
skew inserted on the Q drive waveform, and an I/Q combiner with its own
(intrinsic) skew and quadrature angle error. Positive skew always means the
Q path arrives later than the I path.

The first and last GUARD_SYMBOLS symbols of every frame are reserved for
filter edge transients and are excluded from equalizer fits and metrics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .waveform import ComplexSignal, RealSignal, fir_filter_circular, fractional_delay, rrc_taps

__all__ = [
    "GUARD_SYMBOLS",
    "RRC_SPAN_SYMBOLS",
    "TxConfig",
    "SymbolFrame",
    "gray_constellation",
    "bits_to_symbols",
    "symbols_to_bits",
    "generate_symbols",
    "shaped_waveform",
    "drive_waveforms",
    "modulate",
]

GUARD_SYMBOLS = 64
RRC_SPAN_SYMBOLS = 32

_MOD_ORDERS = (4, 16, 64)


@dataclass(frozen=True)
class TxConfig:
    """Transmitter settings; all values in SI units."""

    baud_hz: float = 34e9
    mod_order: int = 16
    rolloff: float = 0.2
    sps_dac: int = 8
    added_skew_s: float = 0.0
    intrinsic_skew_s: float = -3.0e-12
    quad_phase_err_rad: float = 0.0
    n_symbols: int = 32768
    prbs_seed: int = 1234

    def __post_init__(self):
        if not self.baud_hz > 0:
            raise ValueError(f"baud_hz must be positive, got {self.baud_hz}")
        if self.mod_order not in _MOD_ORDERS:
            raise ValueError(f"mod_order must be one of {_MOD_ORDERS}, got {self.mod_order}")
        if not 0 <= self.rolloff <= 1:
            raise ValueError(f"rolloff must be in [0, 1], got {self.rolloff}")
        if self.sps_dac < 2:
            raise ValueError(f"sps_dac must be >= 2, got {self.sps_dac}")
        if self.n_symbols < 4096:
            raise ValueError(f"n_symbols must be >= 4096, got {self.n_symbols}")
        half_t = 0.5 / self.baud_hz
        for name in ("added_skew_s", "intrinsic_skew_s"):
            if not abs(getattr(self, name)) < half_t:
                raise ValueError(
                    f"|{name}| must stay below half a symbol period ({half_t:.3e} s)"
                )

    @property
    def symbol_period_s(self) -> float:
        return 1.0 / self.baud_hz

    @property
    def dac_rate_hz(self) -> float:
        return self.baud_hz * self.sps_dac

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.mod_order))


@dataclass(frozen=True)
class SymbolFrame:
    """A transmitted symbol sequence together with the bits behind it.

    Symbols are rescaled so the frame's mean power is exactly one; every
    symbol therefore sits on the canonical constellation times one common
    frame scale factor.
    """

    symbols: np.ndarray
    bits: np.ndarray
    mod_order: int

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=np.complex128)
        bits = np.asarray(self.bits, dtype=np.uint8)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "bits", bits)
        if self.mod_order not in _MOD_ORDERS:
            raise ValueError(f"mod_order must be one of {_MOD_ORDERS}")
        k = int(np.log2(self.mod_order))
        if bits.size != symbols.size * k:
            raise ValueError(
                f"bit count {bits.size} does not match {symbols.size} symbols x {k} bits"
            )
        if np.any(bits > 1):
            raise ValueError("bits must be 0/1")
        power = np.mean(np.abs(symbols) ** 2)
        if abs(power - 1.0) > 1e-12:
            raise ValueError(f"frame mean power must be 1, got {power!r}")
        # every symbol must land on the (frame-scaled) constellation
        scale = _frame_scale(symbols, self.mod_order)
        grid = gray_constellation(self.mod_order) * scale
        err = np.abs(symbols[:, None] - grid[None, :]).min(axis=1)
        if err.max() > 1e-9:
            raise ValueError("symbols do not lie on the constellation grid")

    def __len__(self):
        return self.symbols.size


def _gray(v: np.ndarray) -> np.ndarray:
    return v ^ (v >> 1)


def _gray_inverse(g: np.ndarray, nbits: int) -> np.ndarray:
    v = g.copy()
    shift = 1
    while shift < nbits:
        v ^= v >> shift
        shift *= 2
    return v


def _axis_levels(order: int) -> tuple[int, float]:
    """Per-axis level count and the amplitude scale for unit average power."""
    per_axis = int(np.sqrt(order))
    scale = 1.0 / np.sqrt(2.0 * (per_axis**2 - 1) / 3.0)
    return per_axis, scale


def gray_constellation(order: int) -> np.ndarray:
    """Canonical Gray-mapped square QAM constellation with unit mean power.

    Point index equals the integer value of its bit label (I bits first,
    most significant first).
    """
    if order not in _MOD_ORDERS:
        raise ValueError(f"order must be one of {_MOD_ORDERS}, got {order}")
    per_axis, scale = _axis_levels(order)
    m = per_axis.bit_length() - 1
    labels = np.arange(order)
    i_bits = labels >> m
    q_bits = labels & (per_axis - 1)
    i_level = _gray_inverse(i_bits, m)
    q_level = _gray_inverse(q_bits, m)
    amp = lambda lev: (2 * lev - (per_axis - 1)) * scale
    return amp(i_level) + 1j * amp(q_level)


def bits_to_symbols(bits: np.ndarray, order: int) -> np.ndarray:
    """Map a flat 0/1 array (k bits per symbol, I bits first) to QAM points."""
    k = int(np.log2(order))
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % k:
        raise ValueError(f"bit count {bits.size} is not a multiple of {k}")
    groups = bits.reshape(-1, k)
    weights = 1 << np.arange(k - 1, -1, -1)
    labels = (groups * weights).sum(axis=1)
    return gray_constellation(order)[labels]


def symbols_to_bits(symbols: np.ndarray, order: int) -> np.ndarray:
    """Hard-decision demap against the canonical constellation grid.

    Input is assumed scaled to unit mean power; each axis is quantized to
    the nearest level and the Gray labels are re-assembled.
    """
    per_axis, scale = _axis_levels(order)
    m = per_axis.bit_length() - 1
    symbols = np.asarray(symbols, dtype=np.complex128)

    def quantize(vals):
        lev = np.round((vals / scale + (per_axis - 1)) / 2.0).astype(np.int64)
        return np.clip(lev, 0, per_axis - 1)

    i_lab = _gray(quantize(symbols.real))
    q_lab = _gray(quantize(symbols.imag))
    out = np.empty((symbols.size, 2 * m), dtype=np.uint8)
    for b in range(m):
        out[:, b] = (i_lab >> (m - 1 - b)) & 1
        out[:, m + b] = (q_lab >> (m - 1 - b)) & 1
    return out.reshape(-1)


def generate_symbols(cfg: TxConfig) -> SymbolFrame:
    """Draw a seeded random frame and normalize its mean power to one."""
    rng = np.random.default_rng(cfg.prbs_seed)
    bits = rng.integers(0, 2, size=cfg.n_symbols * cfg.bits_per_symbol, dtype=np.uint8)
    symbols = bits_to_symbols(bits, cfg.mod_order)
    symbols = symbols / np.sqrt(np.mean(np.abs(symbols) ** 2))
    return SymbolFrame(symbols=symbols, bits=bits, mod_order=cfg.mod_order)


def _frame_scale(symbols: np.ndarray, order: int) -> float:
    """Frame scale relative to the canonical grid (outer-corner match)."""
    per_axis, scale = _axis_levels(order)
    peak = (per_axis - 1) * scale
    observed = max(np.abs(symbols.real).max(), np.abs(symbols.imag).max())
    return observed / peak


def shaped_waveform(frame: SymbolFrame, rolloff: float, sps: int, baud_hz: float,
                    span_symbols: int = RRC_SPAN_SYMBOLS) -> ComplexSignal:
    """RRC-shaped complex waveform at sps samples per symbol.

    Symbol k lands on sample k * sps (the shaping filter is applied with its
    center tap at zero delay, circularly).
    """
    up = np.zeros(len(frame) * sps, dtype=np.complex128)
    up[::sps] = frame.symbols
    sig = ComplexSignal(up, baud_hz * sps)
    taps = rrc_taps(rolloff, span_symbols, sps)
    return fir_filter_circular(sig, taps, centered=True)


def drive_waveforms(frame: SymbolFrame, cfg: TxConfig,
                    pre_emphasis=None) -> tuple[RealSignal, RealSignal]:
    """I and Q electrical drive waveforms at the DAC rate.

    The added (deliberate) skew is inserted on the Q path here, before the
    modulator. ``pre_emphasis`` is an optional FIR tap array (or an (I, Q)
    pair of them) applied circularly with centered timing; the default is a
    transparent path.
    """
    shaped = shaped_waveform(frame, cfg.rolloff, cfg.sps_dac, cfg.baud_hz)
    i_sig = RealSignal(shaped.samples.real, shaped.sample_rate_hz)
    q_sig = RealSignal(shaped.samples.imag, shaped.sample_rate_hz)
    if pre_emphasis is not None:
        taps_i, taps_q = (
            pre_emphasis if isinstance(pre_emphasis, tuple) else (pre_emphasis, pre_emphasis)
        )
        i_sig = fir_filter_circular(i_sig, taps_i, centered=True)
        q_sig = fir_filter_circular(q_sig, taps_q, centered=True)
    if cfg.added_skew_s:
        q_sig = fractional_delay(q_sig, cfg.added_skew_s)
    return i_sig, q_sig


def modulate(i_sig: RealSignal, q_sig: RealSignal, cfg: TxConfig) -> tuple[ComplexSignal, float]:
    """Combine the drive waveforms into the optical field envelope.

    The modulator contributes the intrinsic Q-path skew and a quadrature
    angle error: E = I(t) + Q(t - skew) * exp(j(pi/2 + err)). The output is
    normalized to unit average power; the applied scale factor is returned
    alongside the field.
    """
    if i_sig.sample_rate_hz != q_sig.sample_rate_hz or len(i_sig) != len(q_sig):
        raise ValueError("I and Q waveforms must share rate and length")
    q_del = fractional_delay(q_sig, cfg.intrinsic_skew_s) if cfg.intrinsic_skew_s else q_sig
    rot = np.exp(1j * (np.pi / 2.0 + cfg.quad_phase_err_rad))
    field = i_sig.samples + q_del.samples * rot
    power = np.mean(np.abs(field) ** 2)
    if power == 0:
        raise ValueError("zero-power field cannot be normalized")
    scale = 1.0 / np.sqrt(power)
    return ComplexSignal(field * scale, i_sig.sample_rate_hz), scale
