"""Batch experiments: slope/timing correlation, model-vs-sim fidelity,
per-term penalty attribution and the linewidth sweep.

Penalty protocol.  For every subset S of {n_rot, n_rrn, n_xrn} the
receiver input is synthesized as y(S) = e^{j phi0} (x_terr + sum of S) on
a 2-samples-per-symbol grid, matched-filter-colored AWGN is added, and the
signal runs through Gardner timing recovery, IDR carrier recovery and the
data-aided SNR estimator.  The x_terr penalty is the SNR drop of the
empty-subset run against an AWGN-only baseline processed by the same DSP;
every other term's penalty is the subset-marginal average of the SNR drop
caused by adding that term.  The same noise realization is shared across
subsets and grid cells of one seed so penalties are paired differences.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np
from scipy.signal import fftconvolve

from . import dsp
from .decomposition import cd_memory, decompose, synthesize, _cascade_waveform
from .link import LinkConfig, prepare_link_inputs, simulate_link
from .phase_noise import sliding_regression
from .signals import ComplexSignal, SymbolFrame, nmse_db, pearson, rrc_taps, snr_estimate

TERMS = ("x_terr", "n_rot", "n_rrn", "n_xrn")
_NOISE_TERMS = ("rot", "rrn", "xrn")
_SUBSETS = tuple(
    tuple(sorted(c)) for r in range(4) for c in combinations(_NOISE_TERMS, r))


@dataclass
class PenaltyReport:
    term: str
    tr_avglen: int
    cpr_avglen: int
    linewidth: float
    penalty_db: float
    stderr_db: float
    num_seeds: int


@dataclass
class CorrelationStudy:
    n_s_grid: np.ndarray
    samples: np.ndarray          # shape (runs, len(n_s_grid))


def _job_seed(master_seed: int, *key) -> int:
    """Deterministic per-job substream: SeedSequence over (master, key)."""
    ss = np.random.SeedSequence([int(master_seed)] + [int(k) & 0xFFFFFFFF for k in key])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def slope_timing_correlation(config: LinkConfig, n_s_grid, runs: int,
                             symbols_per_run: int, window: int = 250,
                             upsample_factor: int = 200) -> CorrelationStudy:
    """Pearson between genie timing and the regression-slope prediction.

    AWGN is disabled.  The per-symbol prediction is the sampling delay
    -beta2 * omega_b * length * R_S (in symbols) implied by the RX slope;
    it is averaged per genie window before correlating.
    """
    base = replace(config, baseline_snr=None, num_symbols=symbols_per_run)
    grid = np.asarray(list(n_s_grid), dtype=int)
    m = config.oversampling
    out = np.empty((runs, grid.size))
    for r in range(runs):
        cfg = replace(base, seed=_job_seed(config.seed, 101, r))
        run = simulate_link(cfg)
        genie = dsp.genie_timing(run.tx_symbols, run.rx_symbols,
                                 upsample_factor, window)
        n_win = genie.error.size
        sym_idx = run.symbol0_index + np.arange(symbols_per_run) * m
        for j, n_s in enumerate(grid):
            reg = sliding_regression(run.rx_phase, int(n_s) * m, int(n_s))
            omega_b = reg.a1[sym_idx] * config.f_sim
            pred = -config.beta2 * omega_b * config.length * config.symbol_rate
            pred_win = pred[: n_win * window].reshape(n_win, window).mean(axis=1)
            out[r, j] = pearson(genie.error, pred_win)
    return CorrelationStudy(grid, out)


def model_vs_sim(config: LinkConfig, num_symbols: int,
                 hist_range: float = 1.8, hist_bins: int = 201,
                 work_sps: int = 2) -> dict:
    """Full simulation against decompose+synthesize on shared inputs.

    AWGN is disabled (the model carries no noise term).  Reports NMSEs and
    the difference of the two 2-D constellation histograms on a fixed grid.
    """
    cfg = replace(config, baseline_snr=None, num_symbols=num_symbols)
    run = simulate_link(cfg)
    window = cd_memory(cfg)
    comp = decompose(SymbolFrame(run.all_symbols, cfg.symbol_rate),
                     run.tx_phase, run.rx_phase, cfg, window,
                     first_symbol=run.guard_symbols, num_out=num_symbols,
                     work_sps=work_sps)
    model = synthesize(comp).symbols
    sim = run.rx_symbols.symbols
    tx = run.tx_symbols.symbols

    edges = np.linspace(-hist_range, hist_range, hist_bins + 1)
    h_sim, _, _ = np.histogram2d(sim.real, sim.imag, bins=(edges, edges))
    h_mod, _, _ = np.histogram2d(model.real, model.imag, bins=(edges, edges))
    return {
        "nmse_model_sim_db": nmse_db(model, sim),
        "nmse_sim_tx_db": nmse_db(sim, tx),
        "nmse_model_tx_db": nmse_db(model, tx),
        "histogram_difference": h_mod - h_sim,
        "histogram_edges": edges,
        "components": comp,
        "run": run,
    }


def _colored_noise(n: int, variance: float, seed: int, rolloff: float,
                   span: int) -> np.ndarray:
    """Matched-filter-shaped complex noise at 2 samples/symbol.

    White noise of the given per-sample variance through the unit-energy
    RRC reproduces the power and correlation the receiver noise has after
    the matched filter.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    w = rng.standard_normal(4 * n).view(np.complex128) * np.sqrt(variance / 2.0)
    taps = rrc_taps(rolloff, span, 2)
    return fftconvolve(w, taps, mode="same")


def _decompose_for_seed(config: LinkConfig, symbols_per_run: int, seed: int):
    cfg = replace(config, num_symbols=symbols_per_run, seed=seed)
    all_syms, tx_phase, rx_phase, guard, _ = prepare_link_inputs(cfg)
    window = cd_memory(cfg)
    full = SymbolFrame(all_syms.symbols, cfg.symbol_rate)
    comp = decompose(full, tx_phase, rx_phase, cfg, window,
                     first_symbol=guard, num_out=symbols_per_run, out_sps=2)
    tx_kept = all_syms.symbols[guard: guard + symbols_per_run]
    x_wave = _cascade_waveform(all_syms.symbols, cfg)
    clean2 = x_wave[comp.instants]
    return comp, tx_kept, clean2


def _penalty_seed_job(args):
    (config, tr_grid, cpr_grid, symbols_per_run, seed) = args
    comp, tx_kept, clean2 = _decompose_for_seed(config, symbols_per_run, seed)
    noise_var = 10.0 ** (-config.baseline_snr / 10.0)
    noise = _colored_noise(symbols_per_run, noise_var,
                           _job_seed(seed, 777), config.rolloff, config.rrc_span)
    rate2 = 2.0 * config.symbol_rate
    tx_frame = SymbolFrame(tx_kept, config.symbol_rate)

    signals = {s: synthesize(comp, include=s).symbols + noise for s in _SUBSETS}
    signals["baseline"] = clean2 + noise

    snr = {}
    for label, y2 in signals.items():
        for tr in tr_grid:
            ret, _ = dsp.gardner_tr(ComplexSignal(y2, rate2), tr,
                                    config.rolloff, config.rrc_span)
            for cpr in cpr_grid:
                derot, _ = dsp.idr_cpr(ret, tx_frame, cpr)
                trim = max(tr, cpr) // 2 + 1
                snr[(label, tr, cpr)] = snr_estimate(
                    derot.symbols[trim:-trim], tx_kept[trim:-trim])
    return seed, snr


def penalty_attribution(config: LinkConfig, tr_grid, cpr_grid, seeds,
                        symbols_per_run: int = 50000,
                        threads: int = 1) -> list[PenaltyReport]:
    """Per-term SNR penalties over the (TR length, CPR length) grid."""
    if config.baseline_snr is None:
        raise ValueError("penalty attribution needs a finite baseline SNR")
    tr_grid = [int(t) for t in tr_grid]
    cpr_grid = [int(c) | 1 for c in cpr_grid]    # idr_cpr wants odd lengths
    seed_list = [_job_seed(config.seed, 303, s) for s in range(int(seeds))]
    jobs = [(config, tr_grid, cpr_grid, symbols_per_run, s) for s in seed_list]

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(_penalty_seed_job, jobs))
    else:
        results = dict(map(_penalty_seed_job, jobs))
    per_seed = [results[s] for s in seed_list]   # fixed order, thread-safe

    reports = []
    linewidth = config.linewidth_rx
    for tr in tr_grid:
        for cpr in cpr_grid:
            for term in TERMS:
                vals = np.array([_cell_penalty(snr, term, tr, cpr)
                                 for snr in per_seed])
                reports.append(PenaltyReport(
                    term, tr, cpr, linewidth,
                    float(np.mean(vals)),
                    float(np.std(vals, ddof=1) / np.sqrt(vals.size))
                    if vals.size > 1 else 0.0,
                    vals.size))
    return reports


def _cell_penalty(snr: dict, term: str, tr: int, cpr: int) -> float:
    if term == "x_terr":
        return snr[("baseline", tr, cpr)] - snr[((), tr, cpr)]
    short = term[2:]                      # "rot", "rrn", "xrn"
    drops = []
    for s in _SUBSETS:
        if short in s:
            continue
        with_t = tuple(sorted(s + (short,)))
        drops.append(snr[(s, tr, cpr)] - snr[(with_t, tr, cpr)])
    return float(np.mean(drops))


def linewidth_sweep(config: LinkConfig, linewidths, seeds,
                    symbols_per_run: int = 30000,
                    tr_avglen: int = 1501, cpr_avglen: int = 701,
                    threads: int = 1) -> list[PenaltyReport]:
    """penalty_attribution at fixed TR/CPR lengths per linewidth value."""
    reports = []
    for lw in linewidths:
        cfg = replace(config, linewidth_tx=float(lw), linewidth_rx=float(lw))
        reports.extend(penalty_attribution(
            cfg, [tr_avglen], [cpr_avglen], seeds,
            symbols_per_run=symbols_per_run, threads=threads))
    return reports
