"""EEPN link-level simulator and analysis toolkit.

Simulates a coherent 16-QAM link with TX/RX laser phase noise and
chromatic dispersion, decomposes the equalization-enhanced phase noise
into four signal terms, provides the closed-form residual statistics of
the sliding-window phase linearization, and runs the receiver DSP chain
for per-term penalty attribution.
"""

__version__ = "0.1.0"

from .signals import (ComplexSignal, SymbolFrame, map_qam16, rrc_taps,
                      snr_estimate, evm, nmse_db, pearson)
from .phase_noise import (PhaseTrace, RegressionTrace, ResidualStats,
                          gen_wiener, sliding_regression, residual_variance,
                          residual_acf, residual_psd, analytic_residual_stats)
from .link import LinkConfig, LinkRun, simulate_link, cd_memory_symbols
from .decomposition import (WindowParams, EepnComponents, cd_memory,
                            decompose, decompose_run, synthesize,
                            predict_linearized)
from .dsp import gardner_tr, genie_timing, idr_cpr
from .experiments import (PenaltyReport, CorrelationStudy,
                          slope_timing_correlation, model_vs_sim,
                          penalty_attribution, linewidth_sweep)
from .config import parse_config

__all__ = [
    "ComplexSignal", "SymbolFrame", "map_qam16", "rrc_taps", "snr_estimate",
    "evm", "nmse_db", "pearson",
    "PhaseTrace", "RegressionTrace", "ResidualStats", "gen_wiener",
    "sliding_regression", "residual_variance", "residual_acf", "residual_psd",
    "analytic_residual_stats",
    "LinkConfig", "LinkRun", "simulate_link", "cd_memory_symbols",
    "WindowParams", "EepnComponents", "cd_memory", "decompose",
    "decompose_run", "synthesize", "predict_linearized",
    "gardner_tr", "genie_timing", "idr_cpr",
    "PenaltyReport", "CorrelationStudy", "slope_timing_correlation",
    "model_vs_sim", "penalty_attribution", "linewidth_sweep",
    "parse_config",
]
