"""Wiener laser phase noise, sliding-window affine fits, residual statistics.

The phase trace is a random walk phi[k] = phi0 + sum of i.i.d. Gaussian
increments with variance sigma2 = 2*pi*linewidth/f_sim.  A window of 2N+1
samples centered on each instant is fitted with an affine function; the
intercept a0 acts as the local carrier phase and the slope a1 as an
instantaneous frequency.  The statistics of the leftover (the residual at
the window center) admit closed forms, implemented below next to their
Monte-Carlo estimators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PhaseTrace:
    phi: np.ndarray
    f_sim: float
    linewidth: float
    seed: int
    phi0: float = 0.0

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=np.float64)


@dataclass
class RegressionTrace:
    """Per-instant affine fit of a phase trace over windows of 2N+1 samples.

    a0[k] is the window mean, a1[k] the least-squares slope in rad/sample.
    The first and last N instants have no full window; they are NaN and
    excluded from `valid`.
    """

    a0: np.ndarray
    a1: np.ndarray
    half_window_samples: int
    half_window_symbols: int = 0

    @property
    def valid(self) -> slice:
        n = self.half_window_samples
        return slice(n, self.a0.size - n)


@dataclass
class ResidualStats:
    sigma2_inc: float
    N: int
    lags: np.ndarray
    acf: np.ndarray
    f_sim: float = 1.0e12
    freqs: np.ndarray | None = None
    psd: np.ndarray | None = None


def increment_variance(linewidth: float, f_sim: float) -> float:
    return 2.0 * np.pi * linewidth / f_sim


def gen_wiener(length: int, linewidth: float, f_sim: float, seed, phi0: float = 0.0) -> PhaseTrace:
    """Generate a Wiener phase random walk of `length` samples.

    phi[0] = phi0; each step adds a zero-mean Gaussian increment of
    variance 2*pi*linewidth/f_sim.  Deterministic for a fixed seed
    (numpy Philox stream, standard-normal variates).
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if linewidth < 0 or f_sim <= 0:
        raise ValueError("linewidth must be >= 0 and f_sim > 0")
    sigma2 = increment_variance(linewidth, f_sim)
    phi = np.full(length, float(phi0))
    if linewidth > 0 and length > 1:
        rng = np.random.Generator(np.random.Philox(seed))
        inc = rng.standard_normal(length - 1) * np.sqrt(sigma2)
        phi[1:] += np.cumsum(inc)
    seed_repr = seed if isinstance(seed, int) else -1
    return PhaseTrace(phi, f_sim, linewidth, seed_repr, phi0)


def sliding_regression(trace: PhaseTrace, N: int, half_window_symbols: int = 0) -> RegressionTrace:
    """Affine fit over every full window of 2N+1 samples, in linear time.

    a0 is the window mean.  a1 = sum_i i*(phi[k+i] - mean) / sum_i i^2 over
    i in [-N, N]; the mean term drops because the index weights are odd.
    Both are built from two prefix sums, so the cost is O(len) not O(len*N).
    """
    phi = trace.phi
    L = 2 * N + 1
    if N < 1:
        raise ValueError("N must be >= 1")
    if phi.size < L:
        raise ValueError("trace shorter than window: need >= 2N+1 samples")

    # Prefix sums with mean removal for conditioning on long traces.
    mean_phi = phi.mean()
    p = phi - mean_phi
    c1 = np.concatenate(([0.0], np.cumsum(p)))           # c1[j] = sum p[0:j]
    c2 = np.concatenate(([0.0], np.cumsum(p * np.arange(phi.size))))

    k = np.arange(N, phi.size - N)
    win_sum = c1[k + N + 1] - c1[k - N]                  # sum over the window
    win_isum = c2[k + N + 1] - c2[k - N]                 # sum of j*p[j] over window
    denom = N * (N + 1) * (2 * N + 1) / 3.0              # sum of i^2, i=-N..N

    a0 = np.full(phi.size, np.nan)
    a1 = np.full(phi.size, np.nan)
    a0[k] = win_sum / L + mean_phi
    # sum_i i*p[k+i] = sum_j (j-k)*p[j] over the window
    a1[k] = (win_isum - k * win_sum) / denom
    return RegressionTrace(a0, a1, N, half_window_symbols)


def residual_center(trace: PhaseTrace, reg: RegressionTrace) -> np.ndarray:
    """Residual at the window center, n_k = phi_k - a0_k (NaN at edges)."""
    if trace.phi.size != reg.a0.size:
        raise ValueError("trace and regression lengths differ")
    return trace.phi - reg.a0


def residual_variance(N: int, linewidth: float, f_sim: float) -> dict:
    """Both closed forms of the center-residual variance.

    'bruteforce' is the variance of n_k = phi_k - a0_k derived by expressing
    the residual in the window's increments: sigma2 * N(N+1) / (3(2N+1)).
    'paper' is the published closed form (4*pi*dv/f_sim) * (2N^3/3 + N^2 +
    N/3) / (2N+1)^2, which is exactly twice the former.  Callers choose.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    sigma2 = increment_variance(linewidth, f_sim)
    brute = sigma2 * N * (N + 1) / (3.0 * (2 * N + 1))
    paper = 2.0 * sigma2 * (2.0 * N**3 / 3.0 + N**2 + N / 3.0) / (2 * N + 1) ** 2
    return {"paper": paper, "bruteforce": brute}


def _acf_parts(N: int, l: int) -> float:
    """Stationary center-residual ACF at lag l >= 0, in units of sigma2.

    Writing the center residual of the window starting at s as a linear
    combination of the Wiener increments, c_s(j) = [j <= s+N] - cnt/(2N+1)
    with cnt the number of window positions at or past j, the covariance is
    the coefficient dot product. Substituting u = j - l collapses it to four
    elementary sums (A: overlap of the indicator supports, B and C: the
    indicator/mean cross terms, D: the mean-mean term), each piecewise
    polynomial in l with a breakpoint at l = N and support |l| <= 2N.
    """
    L = 2 * N + 1
    if l >= 2 * N:
        return 0.0
    K = 2 * N - l
    if l <= N:
        A = float(N - l)
        B = N * (3 * N + 1 - 2 * l) / (2.0 * L)
        C = (N - l) * (3 * N + l + 1) / (2.0 * L)
    else:
        A = 0.0
        B = K * (K + 1) / (2.0 * L)
        C = 0.0
    D = K * (K + 1) * (2 * K + 3 * l + 1) / (6.0 * L * L)
    return A - B - C + D


def residual_acf(N: int, linewidth: float, f_sim: float, lags) -> np.ndarray:
    """Analytic autocorrelation of the center residual at the given lags.

    Uses the part-wise covariance assembly (see _acf_parts), which matches
    direct enumeration over the window increments; symmetric in l, zero
    beyond |l| = 2N.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    sigma2 = increment_variance(linewidth, f_sim)
    lag_arr = np.atleast_1d(np.asarray(lags, dtype=np.int64))
    out = np.array([_acf_parts(N, abs(int(l))) for l in lag_arr], dtype=np.float64)
    return out * sigma2


def residual_acf_printed_eq15(N: int, linewidth: float, f_sim: float, l: int) -> float:
    """Literal transcription of the published combined ACF formula.

    Kept verbatim because it does NOT agree with the part-wise assembly at
    interior lags (e.g. N=1, l=1 gives 25/27*sigma2 instead of -sigma2/9);
    tests assert that divergence so a silent "fix" here would be caught.
    """
    sigma2 = increment_variance(linewidth, f_sim)
    al = abs(l)
    main = sigma2 * max(0, N + 1 - al)
    L2 = (2 * N + 1) ** 2
    if al > 2 * N:
        return main
    if al < N:
        poly = (
            al**3 / 6.0
            + al**2 * (N + 0.5)
            + al * (2.0 * N**2 + 4.0 * N + 4.0 / 3.0)
            - 10.0 * N**3 / 3.0
            - 7.0 * N**2
            - 14.0 * N / 3.0
            - 1.0
        )
    else:
        poly = (
            al**3 / 6.0
            - al**2 * (N + 0.5)
            + al * (2.0 * N**2 + 2.0 * N + 2.0 / 3.0)
            - 4.0 * N**3 / 3.0
            - 2.0 * N**2
            - 2.0 * N / 3.0
        )
    return main + sigma2 * poly / L2


def residual_acf_montecarlo(N: int, linewidth: float, f_sim: float,
                            num_samples: int, seed, max_lag: int | None = None) -> ResidualStats:
    """Empirical center-residual ACF from one long realization.

    Unbiased lag normalization: r[l] = sum n_k n_{k+l} / (count - l).
    """
    if num_samples <= 4 * N:
        raise ValueError("num_samples must be much larger than N")
    if max_lag is None:
        max_lag = 2 * N
    trace = gen_wiener(num_samples + 2 * N, linewidth, f_sim, seed)
    reg = sliding_regression(trace, N)
    n = residual_center(trace, reg)[reg.valid]
    m = n.size
    # FFT-based autocorrelation, then unbiased normalization per lag
    nfft = int(2 ** np.ceil(np.log2(2 * m)))
    spec = np.fft.rfft(n, nfft)
    corr = np.fft.irfft(spec * np.conj(spec), nfft)[: max_lag + 1]
    counts = m - np.arange(max_lag + 1)
    acf_half = corr / counts
    lags = np.arange(-max_lag, max_lag + 1)
    acf = np.concatenate([acf_half[:0:-1], acf_half])
    return ResidualStats(increment_variance(linewidth, f_sim), N, lags, acf, f_sim)


def analytic_residual_stats(N: int, linewidth: float, f_sim: float) -> ResidualStats:
    lags = np.arange(-2 * N, 2 * N + 1)
    acf = residual_acf(N, linewidth, f_sim, lags)
    return ResidualStats(increment_variance(linewidth, f_sim), N, lags, acf, f_sim)


def residual_psd(stats: ResidualStats, fft_len: int) -> ResidualStats:
    """One-sided magnitude spectrum of the residual ACF.

    PSD(f) = |DFT of the zero-padded ACF| / f_sim, with the frequency axis
    in Hz.  Since the ACF support (|l| <= 2N) fits inside fft_len there is
    no circular aliasing and the DFT is a genuine non-negative spectrum up
    to rounding; the magnitude is a formality.  Returns a new ResidualStats
    carrying the psd table.
    """
    support = stats.lags.size
    if fft_len < support:
        raise ValueError("fft_len smaller than ACF support")
    f_sim = stats.f_sim
    buf = np.zeros(fft_len)
    # place lag 0 at index 0, positive lags ascending, negative wrapped
    half = (support - 1) // 2
    acf = np.asarray(stats.acf, dtype=np.float64)
    buf[: half + 1] = acf[half:]
    buf[fft_len - half:] = acf[:half]
    psd = np.abs(np.fft.fft(buf)) / f_sim
    freqs = np.fft.fftfreq(fft_len, d=1.0 / f_sim)
    return ResidualStats(stats.sigma2_inc, stats.N, stats.lags, stats.acf,
                         f_sim, freqs, psd)
