"""Complex baseband signal containers, pulse shaping, mapping and metrics.

Conventions shared by every module:
  * FFT: unnormalized forward, 1/L inverse (numpy default).
  * All waveform powers are dimensionless; symbol constellations have unit
    average power.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Sentinel returned by snr_estimate when the error vector vanishes.
SNR_SATURATION_DB = 300.0


class Constellation(Enum):
    QAM16 = "qam16"


@dataclass
class ComplexSignal:
    """A run of complex samples with an explicit sample rate in Hz."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.samples.size < 1:
            raise ValueError("signal must contain at least one sample")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass
class SymbolFrame:
    symbols: np.ndarray
    symbol_rate: float
    constellation: Constellation = Constellation.QAM16

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.complex128)
        if self.symbol_rate <= 0:
            raise ValueError("symbol_rate must be positive")


@dataclass
class Metric:
    snr_db: float
    evm: float
    nmse_db: float


def _qam16_table() -> np.ndarray:
    # Gray mapping: bits b3 b2 select I, bits b1 b0 select Q.
    # Two-bit Gray code 00,01,11,10 walks the levels -3,-1,+1,+3.
    gray_levels = {0b00: -3.0, 0b01: -1.0, 0b11: 1.0, 0b10: 3.0}
    pts = np.empty(16, dtype=np.complex128)
    for idx in range(16):
        i_level = gray_levels[(idx >> 2) & 0b11]
        q_level = gray_levels[idx & 0b11]
        pts[idx] = i_level + 1j * q_level
    return pts / np.sqrt(10.0)  # mean power of the +/-{1,3} grid is 10


QAM16_POINTS = _qam16_table()


def map_qam16(indices, symbol_rate: float = 100e9) -> SymbolFrame:
    """Map integer indices 0..15 onto the unit-power Gray-coded 16-QAM grid.

    Index bits b3b2 pick the in-phase level through the Gray sequence
    00->-3, 01->-1, 11->+1, 10->+3; bits b1b0 pick quadrature the same way.
    Index 0 therefore lands on (-3-3j)/sqrt(10).
    """
    idx = np.asarray(indices)
    if idx.size and (idx.min() < 0 or idx.max() > 15):
        raise ValueError("QAM16 indices must lie in 0..15")
    return SymbolFrame(QAM16_POINTS[idx.astype(np.intp)], symbol_rate)


def rrc_taps(rolloff: float, span_symbols: int, samples_per_symbol: int) -> np.ndarray:
    """Unit-energy root-raised-cosine taps.

    The two removable singularities of the closed form (t = 0 and
    |t| = T/(4*rolloff)) are evaluated by their analytic limits.
    """
    if not 0.0 <= rolloff <= 1.0:
        raise ValueError("rolloff must lie in [0, 1]")
    if span_symbols < 2:
        raise ValueError("span_symbols must be >= 2")
    if samples_per_symbol < 2:
        raise ValueError("samples_per_symbol must be >= 2")

    n = span_symbols * samples_per_symbol
    t = np.arange(-n // 2, n // 2 + 1, dtype=np.float64) / samples_per_symbol
    a = rolloff
    taps = np.empty_like(t)

    if a == 0.0:
        taps = np.sinc(t)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            num = np.sin(np.pi * t * (1 - a)) + 4 * a * t * np.cos(np.pi * t * (1 + a))
            den = np.pi * t * (1 - (4 * a * t) ** 2)
            taps = num / den
        # t = 0 limit
        taps[t == 0.0] = 1 - a + 4 * a / np.pi
        # |t| = 1/(4a) limit
        sing = np.isclose(np.abs(t), 1.0 / (4 * a))
        taps[sing] = (a / np.sqrt(2)) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * a))
            + (1 - 2 / np.pi) * np.cos(np.pi / (4 * a))
        )

    return taps / np.sqrt(np.sum(taps**2))


def fft(signal: ComplexSignal) -> np.ndarray:
    return np.fft.fft(signal.samples)


def ifft(spectrum, sample_rate: float) -> ComplexSignal:
    return ComplexSignal(np.fft.ifft(np.asarray(spectrum)), sample_rate)


def _as_array(frame) -> np.ndarray:
    if isinstance(frame, SymbolFrame):
        return frame.symbols
    if isinstance(frame, ComplexSignal):
        return frame.samples
    return np.asarray(frame, dtype=np.complex128)


def snr_estimate(received, reference) -> float:
    """Data-aided SNR in dB after removing one complex gain.

    A single complex least-squares scalar is fitted (rx ~ alpha * ref) so a
    constant rotation or gain mismatch does not count as noise.  Saturates
    at SNR_SATURATION_DB when the error vector is numerically zero.
    """
    rx = _as_array(received)
    ref = _as_array(reference)
    if rx.size == 0 or ref.size == 0:
        raise ValueError("empty input")
    if rx.size != ref.size:
        raise ValueError("received and reference must have equal length")
    ref_pow = np.mean(np.abs(ref) ** 2)
    if ref_pow <= 0:
        raise ValueError("reference power must be positive")
    alpha = np.vdot(ref, rx) / np.vdot(ref, ref)
    err_pow = np.mean(np.abs(rx - alpha * ref) ** 2)
    sig_pow = np.abs(alpha) ** 2 * ref_pow
    if err_pow <= sig_pow * 10.0 ** (-SNR_SATURATION_DB / 10.0):
        return SNR_SATURATION_DB
    return float(10.0 * np.log10(sig_pow / err_pow))


def evm(received, reference) -> float:
    rx = _as_array(received)
    ref = _as_array(reference)
    return float(np.sqrt(np.mean(np.abs(rx - ref) ** 2) / np.mean(np.abs(ref) ** 2)))


def nmse_db(estimate, reference) -> float:
    """10*log10( mean|est - ref|^2 / mean|ref|^2 ), saturated like snr_estimate."""
    est = _as_array(estimate)
    ref = _as_array(reference)
    ref_pow = np.mean(np.abs(ref) ** 2)
    err_pow = np.mean(np.abs(est - ref) ** 2)
    if err_pow <= ref_pow * 10.0 ** (-SNR_SATURATION_DB / 10.0):
        return -SNR_SATURATION_DB
    return float(10.0 * np.log10(err_pow / ref_pow))


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 2:
        raise ValueError("inputs must have equal length >= 2")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError("pearson undefined for constant input")
    xc = x - x.mean()
    yc = y - y.mean()
    return float(np.dot(xc, yc) / np.sqrt(np.dot(xc, xc) * np.dot(yc, yc)))


def upsample_zero_stuff(symbols, factor: int) -> np.ndarray:
    sym = np.asarray(symbols, dtype=np.complex128)
    out = np.zeros(sym.size * factor, dtype=np.complex128)
    out[::factor] = sym
    return out


def fractional_delay_sinc(x, delays, half_taps: int = 8, kaiser_beta: float = 8.0):
    """Evaluate x (complex sequence) at positions k + delays[k].

    Windowed-sinc interpolation with 2*half_taps taps under a Kaiser window.
    Positions outside the support are clamped to the edge taps; callers are
    expected to keep delays sub-sample-scale and indices interior.
    """
    x = np.asarray(x, dtype=np.complex128)
    d = np.asarray(delays, dtype=np.float64)
    n = x.size
    k = np.arange(n)
    pos = k + d
    base = np.floor(pos).astype(np.intp)
    frac = pos - base
    taps = np.arange(-half_taps + 1, half_taps + 1)
    # interpolation kernel per output sample: sinc(frac - tap) * kaiser
    arg = frac[:, None] - taps[None, :]
    kern = np.sinc(arg) * np.i0(kaiser_beta * np.sqrt(np.clip(1 - (arg / half_taps) ** 2, 0, None))) / np.i0(kaiser_beta)
    idx = np.clip(base[:, None] + taps[None, :], 0, n - 1)
    return np.sum(x[idx] * kern, axis=1)
