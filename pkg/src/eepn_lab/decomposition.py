"""Per-symbol four-term decomposition of equalization-enhanced phase noise.

For every output instant a window of the transmit waveform and of both
phase traces is taken, the phases are split into an affine fit plus a
residual, and the first-order (Taylor) image of the windowed dispersion /
inverse-dispersion chain is evaluated in closed form.  The four terms:

  x_terr  the symbol, fractionally delayed by the dispersion-converted RX
          frequency slope and doubly rotated (timing-error signal),
  n_rot   the TX residual rotated through the same chain,
  n_rrn   the RX residual weighted across the dispersed window,
  n_xrn   the TX-times-RX cross residual,

so that  y_k = e^{j(a0+b0)} (x_terr + n_rot + n_rrn + n_xrn)  reproduces
the simulated receiver output to first order in the residuals.

Discretization: each window of 2*N_w+1 samples is laid out circularly
(center at index 0) and padded to an FFT-friendly length; the frequency
variable lives on that window's DFT grid, the only grid on which the
windowed residual spectrum is defined.  For x_terr and n_rot the
delay-by-slope appears as an analytic phase ramp exp(j*2*pi*f*tau_b) on
that grid; for n_rrn and n_xrn the slope phasor multiplies in the time
domain, which keeps the contraction exact for arbitrary (sub-bin) slopes.

The window arithmetic runs on a decimated working grid (default 2 samples
per symbol).  Every signal entering it is band-limited far below the
working Nyquist rate: the waveform by the RRC roll-off, the residuals by
their own autocorrelation width (the residual spectrum is confined to a
few tens of MHz for megahertz-class windows), so the decimation changes
nothing beyond rounding while cutting the FFT cost by the oversampling
factor squared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.signal import fftconvolve

from .link import LinkConfig, LinkRun, cd_memory_symbols
from .phase_noise import PhaseTrace, RegressionTrace, sliding_regression
from .signals import SymbolFrame, fractional_delay_sinc, rrc_taps, upsample_zero_stuff


@dataclass
class WindowParams:
    """Regression window sizes: N in f_sim samples, N_S in symbols."""

    N: int
    N_S: int
    N_CD: int

    def __post_init__(self):
        if self.N_S < 1:
            raise ValueError("N_S must be >= 1")


@dataclass
class EepnComponents:
    phi0: np.ndarray
    x_terr: np.ndarray
    n_rot: np.ndarray
    n_rrn: np.ndarray
    n_xrn: np.ndarray
    instants: np.ndarray          # waveform sample indices at f_sim
    out_sps: int = 1
    symbol_rate: float = 100e9


@dataclass
class ResidualWindow:
    """Windowed TX residual and the DFT-grid spectrum of the RX residual."""

    n_tx: np.ndarray
    n_rx_spectrum: np.ndarray


def cd_memory(config: LinkConfig) -> WindowParams:
    """Window sizing from the dispersion memory of the link.

    N_CD (symbols) = floor(-pi * beta2 * length * R_S^2); with the default
    choice N_S = N_CD the half window covers exactly the span over which
    dispersion spreads one pulse.
    """
    n_cd = cd_memory_symbols(config)
    n_s = max(n_cd, 1)
    return WindowParams(N=n_s * config.oversampling, N_S=n_s, N_CD=n_cd)


def _center_kernel(h_bar: np.ndarray) -> np.ndarray:
    """Kernel g with  center of ifft(fft(w) * h_bar)  =  sum_j w[j] g[j]."""
    b = sfft.ifft(h_bar)
    return np.roll(b[::-1], 1)


def _cascade_waveform(symbols: np.ndarray, config: LinkConfig) -> np.ndarray:
    """Nyquist-pulse waveform: symbols through both RRC filters at f_sim.

    The receiver matched filter has a short memory compared with the
    dispersion chain and commutes with the slowly varying laser phase to
    first order, so the model folds it onto the transmit side; symbol k
    then sits at sample k*M with unit amplitude.
    """
    m = config.oversampling
    taps = rrc_taps(config.rolloff, config.rrc_span, m)
    cascade = fftconvolve(taps, taps)   # Nyquist pulse, peak value 1
    up = upsample_zero_stuff(symbols, m)
    return fftconvolve(up, cascade, mode="same")


def regressions_for(config: LinkConfig, tx_phase: PhaseTrace, rx_phase: PhaseTrace,
                    window: WindowParams):
    reg_tx = sliding_regression(tx_phase, window.N, window.N_S)
    reg_rx = sliding_regression(rx_phase, window.N, window.N_S)
    return reg_tx, reg_rx


def decompose(tx: SymbolFrame, tx_phase: PhaseTrace, rx_phase: PhaseTrace,
              config: LinkConfig, window: WindowParams,
              first_symbol: int | None = None, num_out: int | None = None,
              out_sps: int = 1, work_sps: int = 2,
              chunk: int = 128, precision: str = "single") -> EepnComponents:
    """Four-term decomposition at `out_sps` instants per symbol.

    `tx` must span the whole phase-trace duration (symbol j at waveform
    sample j*M); `first_symbol`/`num_out` select the output range, which
    must leave room for full windows on both sides.
    """
    m = config.oversampling
    if window.N_S < window.N_CD:
        raise ValueError(
            f"window too small: N_S = {window.N_S} < N_CD = {window.N_CD}")
    if m % work_sps or work_sps % out_sps:
        raise ValueError("work_sps must divide the oversampling factor and "
                         "be a multiple of out_sps")

    wave_len = tx.symbols.size * m
    if tx_phase.phi.size != wave_len or rx_phase.phi.size != wave_len:
        raise ValueError("phase traces must cover the full symbol frame")

    if first_symbol is None:
        first_symbol = window.N_S
    if num_out is None:
        num_out = tx.symbols.size - first_symbol - window.N_S

    stride = m // work_sps
    n_w = window.N_S * work_sps
    hop = m // out_sps
    instants = first_symbol * m + np.arange(num_out * out_sps) * hop
    if instants[0] - n_w * stride < 0 or instants[-1] + n_w * stride >= wave_len:
        raise ValueError(
            f"windows exceed trace: instants need +/- {n_w * stride} samples")

    x_wave = _cascade_waveform(tx.symbols, config)
    reg_tx, reg_rx = regressions_for(config, tx_phase, rx_phase, window)

    out = _decompose_core(
        x_wave, tx_phase.phi, rx_phase.phi,
        reg_tx.a0, reg_tx.a1, reg_rx.a0, reg_rx.a1,
        instants, stride, n_w, config, chunk,
        skip_tx_terms=(config.linewidth_tx == 0.0), precision=precision)
    phi0, x_terr, n_rot, n_rrn, n_xrn = out
    return EepnComponents(phi0, x_terr, n_rot, n_rrn, n_xrn, instants,
                          out_sps, config.symbol_rate)


def _decompose_core(x_wave, phi_tx, phi_rx, a0, a1, b0, b1,
                    instants, stride, n_w, config: LinkConfig, chunk: int,
                    skip_tx_terms: bool = False, precision: str = "single"):
    """Chunked evaluation of the four terms at uniformly spaced instants.

    Because consecutive instants share almost their whole window, each
    chunk decimates one contiguous waveform/phase segment once and views
    the individual windows through stride tricks instead of re-gathering
    2N samples per instant.  The circular layout (window center at FFT
    index 0) is realized by two contiguous slice copies.
    """
    if precision not in ("single", "double"):
        raise ValueError("precision must be 'single' or 'double'")
    cdtype = np.complex64 if precision == "single" else np.complex128
    fdtype = np.float32 if precision == "single" else np.float64
    hop = int(instants[1] - instants[0]) if instants.size > 1 else stride
    if instants.size > 1:
        if np.any(np.diff(instants) != hop) or hop % stride:
            raise ValueError("instants must be uniformly spaced by a multiple "
                             "of the working stride")
    hd = hop // stride

    f_work = config.f_sim / stride
    L = 2 * n_w + 1
    l_fft = sfft.next_fast_len(L)
    freqs = sfft.fftfreq(l_fft, d=1.0 / f_work)
    h_cd = np.exp(-1j * 0.5 * config.beta2 *
                  (2.0 * np.pi * freqs) ** 2 * config.length).astype(cdtype)
    g_k = _center_kernel(np.conj(h_cd)).astype(cdtype)

    xw = x_wave.astype(cdtype)
    ptx = phi_tx.astype(fdtype)
    prx = phi_rx.astype(fdtype)
    chi = (np.arange(-n_w, n_w + 1) * stride).astype(fdtype)

    n_out = instants.size
    phi0 = np.empty(n_out)
    x_terr = np.empty(n_out, dtype=np.complex128)
    n_rot = np.zeros(n_out, dtype=np.complex128)
    n_rrn = np.empty(n_out, dtype=np.complex128)
    n_xrn = np.zeros(n_out, dtype=np.complex128)

    def windows(arr, s0, rows):
        seg = np.ascontiguousarray(
            arr[s0 - n_w * stride: s0 + (rows - 1) * hop + n_w * stride + 1: stride])
        es = seg.itemsize
        return np.lib.stride_tricks.as_strided(
            seg, shape=(rows, L), strides=(hd * es, es))

    def scatter(dst, src):
        # circular layout: chi >= 0 at the head, chi < 0 wrapped to the tail
        dst[:, : n_w + 1] = src[:, n_w:]
        dst[:, l_fft - n_w:] = src[:, :n_w]

    for lo in range(0, n_out, chunk):
        hi = min(lo + chunk, n_out)
        rows = hi - lo
        sl = slice(lo, hi)
        s0 = int(instants[lo])
        s = instants[sl]

        a0c, a1c = a0[s][:, None], a1[s][:, None]
        b0c, b1c = b0[s][:, None], b1[s][:, None]
        x_win = windows(xw, s0, rows)

        e_a = _phasor_ramp(a1c[:, 0] * stride, n_w, cdtype)
        e_b = _phasor_ramp(b1c[:, 0] * stride, n_w, cdtype)

        buf = np.zeros((rows, l_fft), dtype=cdtype)
        scatter(buf, x_win * e_a)
        f1 = sfft.fft(buf, axis=1)

        omega_b = b1c[:, 0] * config.f_sim    # rad/s
        tau_b = config.beta2 * omega_b * config.length
        extra = np.exp(1j * 0.5 * config.beta2 * omega_b**2 * config.length)
        ramp = _dft_delay_ramp(tau_b, f_work, l_fft, cdtype)

        x_terr[sl] = extra * np.einsum("ij,ij->i", f1, ramp) / l_fft

        d1 = sfft.ifft(f1 * h_cd[None, :], axis=1)
        n_rx = (windows(prx, s0, rows) - b0c.astype(fdtype)
                - b1c.astype(fdtype) * chi).astype(cdtype)
        w_buf = np.zeros_like(buf)
        scatter(w_buf, n_rx * e_b)
        w_buf *= g_k[None, :]
        n_rrn[sl] = 1j * np.einsum("ij,ij->i", d1, w_buf)

        if not skip_tx_terms:
            n_tx = (windows(ptx, s0, rows) - a0c.astype(fdtype)
                    - a1c.astype(fdtype) * chi).astype(cdtype)
            scatter(buf, x_win * e_a * n_tx)
            f2 = sfft.fft(buf, axis=1)
            n_rot[sl] = 1j * extra * np.einsum("ij,ij->i", f2, ramp) / l_fft
            d2 = sfft.ifft(f2 * h_cd[None, :], axis=1)
            n_xrn[sl] = -np.einsum("ij,ij->i", d2, w_buf)

        phi0[sl] = a0c[:, 0] + b0c[:, 0]

    return phi0, x_terr, n_rot, n_rrn, n_xrn


def _phasor_ramp(step_angle: np.ndarray, n_w: int, cdtype=np.complex128) -> np.ndarray:
    """Rows exp(j * step_angle[c] * chi) for chi in [-n_w, n_w].

    Built by cumulative products instead of a transcendental per element;
    the accumulated rounding over 2*n_w multiplies stays far below the
    model error and this is several times faster for long windows.
    """
    n_rows = step_angle.size
    step = np.exp(1j * step_angle)
    ramp = np.empty((n_rows, 2 * n_w + 1), dtype=np.complex128)
    ramp[:, n_w] = 1.0
    np.cumprod(np.broadcast_to(step[:, None], (n_rows, n_w)),
               axis=1, out=ramp[:, n_w + 1:])
    ramp[:, :n_w] = np.conj(ramp[:, n_w + 1:])[:, ::-1]
    return ramp.astype(cdtype, copy=False)


def _dft_delay_ramp(tau: np.ndarray, f_work: float, l_fft: int,
                    cdtype=np.complex128) -> np.ndarray:
    """Rows exp(j*2*pi*f_m*tau[c]) on the fftfreq grid of length l_fft.

    Geometric along the bin index; the wrapped (negative-frequency) half
    picks up one constant factor exp(-j*2*pi*f_work*tau) per row.
    """
    angle = 2.0 * np.pi * f_work / l_fft * tau
    step = np.exp(1j * angle)
    ramp = np.empty((tau.size, l_fft), dtype=np.complex128)
    ramp[:, 0] = 1.0
    np.cumprod(np.broadcast_to(step[:, None], (tau.size, l_fft - 1)),
               axis=1, out=ramp[:, 1:])
    half = (l_fft + 1) // 2   # first negative-frequency bin in fftfreq order
    ramp[:, half:] *= np.exp(-1j * angle * l_fft)[:, None]
    return ramp.astype(cdtype, copy=False)


def reference_decompose_instant(x_wave, phi_tx, phi_rx, a0, a1, b0, b1,
                                instant: int, stride: int, n_w: int,
                                config: LinkConfig):
    """Straightforward single-instant evaluation of the four terms.

    Plain, unbatched arithmetic over one window: used by tests as the
    slow evaluator the fast chunked path must reproduce.  Returns
    (phi0, x_terr, n_rot, n_rrn, n_xrn, ResidualWindow).
    """
    f_work = config.f_sim / stride
    chi = np.arange(-n_w, n_w + 1)
    delta = chi * stride
    l_fft = sfft.next_fast_len(2 * n_w + 1)
    pos = chi % l_fft

    freqs = sfft.fftfreq(l_fft, d=1.0 / f_work)
    h_cd = np.exp(-1j * 0.5 * config.beta2 *
                  (2.0 * np.pi * freqs) ** 2 * config.length)
    g_k = _center_kernel(np.conj(h_cd))

    a0v, a1v = a0[instant], a1[instant]
    b0v, b1v = b0[instant], b1[instant]
    idx = instant + delta
    n_tx = phi_tx[idx] - a0v - a1v * delta
    n_rx = phi_rx[idx] - b0v - b1v * delta

    u1 = np.zeros(l_fft, dtype=np.complex128)
    u1[pos] = x_wave[idx] * np.exp(1j * a1v * delta)
    u2 = np.zeros_like(u1)
    u2[pos] = u1[pos] * n_tx
    f1, f2 = np.fft.fft(u1), np.fft.fft(u2)

    omega_b = b1v * config.f_sim
    tau_b = config.beta2 * omega_b * config.length
    extra = np.exp(1j * 0.5 * config.beta2 * omega_b**2 * config.length)
    ramp = np.exp(2j * np.pi * freqs * tau_b)

    x_terr = extra * np.sum(f1 * ramp) / l_fft
    n_rot = 1j * extra * np.sum(f2 * ramp) / l_fft

    d1 = np.fft.ifft(f1 * h_cd)
    d2 = np.fft.ifft(f2 * h_cd)
    w0 = np.zeros_like(u1)
    w0[pos] = n_rx * np.exp(1j * b1v * delta)
    n_rx_spec = np.fft.fft(w0)
    w = w0 * g_k
    n_rrn = 1j * np.sum(d1 * w)
    n_xrn = -np.sum(d2 * w)

    return (a0v + b0v, x_terr, n_rot, n_rrn, n_xrn,
            ResidualWindow(n_tx, n_rx_spec))


def synthesize(components: EepnComponents, include=("rot", "rrn", "xrn")) -> SymbolFrame:
    """Recombine the terms: y = e^{j phi0} (x_terr + selected noise terms)."""
    total = components.x_terr.copy()
    table = {"rot": components.n_rot, "rrn": components.n_rrn,
             "xrn": components.n_xrn}
    for name in include:
        total = total + table[name]
    y = np.exp(1j * components.phi0) * total
    return SymbolFrame(y, components.symbol_rate * components.out_sps)


def predict_linearized(tx: SymbolFrame, reg_tx: RegressionTrace,
                       reg_rx: RegressionTrace, config: LinkConfig,
                       first_symbol: int = 0) -> SymbolFrame:
    """Timing-error-only model: delayed, doubly rotated symbols.

    y_k = e^{j(a0+b0)} x(k + beta2*omega_b*l * R_S) e^{j beta2 omega_a omega_b l}
          e^{j (beta2/2) omega_b^2 l},
    with the slopes converted to rad/s and the fractional symbol delay
    realized by windowed-sinc interpolation of the symbol sequence.
    Instants whose regression window is incomplete are NaN.
    """
    m = config.oversampling
    k = np.arange(tx.symbols.size)
    s = (first_symbol + k) * m
    valid = (s >= reg_rx.half_window_samples) & \
            (s < reg_rx.a0.size - reg_rx.half_window_samples)
    a0 = np.where(valid, reg_tx.a0[np.minimum(s, reg_tx.a0.size - 1)], np.nan)
    a1 = np.where(valid, reg_tx.a1[np.minimum(s, reg_tx.a0.size - 1)], np.nan)
    b0 = np.where(valid, reg_rx.a0[np.minimum(s, reg_rx.a0.size - 1)], np.nan)
    b1 = np.where(valid, reg_rx.a1[np.minimum(s, reg_rx.a0.size - 1)], np.nan)

    omega_a = a1 * config.f_sim
    omega_b = b1 * config.f_sim
    delay_sym = config.beta2 * omega_b * config.length * config.symbol_rate
    x_delayed = fractional_delay_sinc(tx.symbols, np.nan_to_num(delay_sym))
    phase = (a0 + b0) + config.beta2 * omega_a * omega_b * config.length \
        + 0.5 * config.beta2 * omega_b**2 * config.length
    y = np.where(valid, x_delayed * np.exp(1j * np.nan_to_num(phase)), np.nan)
    return SymbolFrame(y, config.symbol_rate)


def decompose_run(run: LinkRun, window: WindowParams | None = None,
                  out_sps: int = 1, work_sps: int = 2) -> EepnComponents:
    """Decompose a simulated LinkRun over its kept symbol range."""
    config = run.config
    if window is None:
        window = cd_memory(config)
    full = SymbolFrame(run.all_symbols, config.symbol_rate)
    return decompose(full, run.tx_phase, run.rx_phase, config, window,
                     first_symbol=run.guard_symbols,
                     num_out=run.tx_symbols.symbols.size,
                     out_sps=out_sps, work_sps=work_sps)
