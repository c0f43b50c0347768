"""Decomposition oracles.

The central check builds a synthetic windowed dispersion chain whose
inputs are band-limited and whose fit slopes are DFT-bin-aligned; under
those conditions the four-term model is an algebraic identity with the
explicit chain  EDC( e^{jb}(1+jn_rx) * CD( e^{ja}(1+jn_tx) x ) )  and the
comparison holds to machine precision, independently of the production
code paths being tested.
"""

import numpy as np
import pytest
import scipy.fft as sfft

from eepn_lab.decomposition import (_cascade_waveform, cd_memory, decompose,
                                    decompose_run, reference_decompose_instant,
                                    synthesize)
from eepn_lab.link import LinkConfig, prepare_link_inputs, simulate_link
from eepn_lab.phase_noise import sliding_regression
from eepn_lab.signals import SymbolFrame, nmse_db


def _bandlimited(rng, l_fft, bins, real=False, scale=1.0):
    """Periodic sequence of length l_fft with spectrum confined to |m|<=bins."""
    spec = np.zeros(l_fft, dtype=np.complex128)
    lo = rng.standard_normal(2 * bins + 1) + 1j * rng.standard_normal(2 * bins + 1)
    spec[: bins + 1] = lo[: bins + 1]
    spec[-bins:] = lo[bins + 1:]
    if real:
        spec[0] = spec[0].real
        spec[-bins:] = np.conj(spec[1: bins + 1][::-1])
    x = np.fft.ifft(spec) * l_fft
    if real:
        x = x.real
    return scale * x / np.sqrt(np.mean(np.abs(x) ** 2))


def _toy_setup(seed=0):
    """Windowed chain with bin-aligned slopes and band-limited content."""
    n_w = 40
    l_fft = sfft.next_fast_len(2 * n_w + 1)
    assert l_fft == 2 * n_w + 1          # 81 = 3^4 needs no padding
    cfg = LinkConfig(symbol_rate=1e9, f_sim=2e9, beta2=-4.6e-18, length=2.0,
                     num_symbols=4, baseline_snr=None)
    stride = 1
    instant = n_w
    rng = np.random.default_rng(seed)

    chi = np.arange(-n_w, n_w + 1)
    pos = chi % l_fft

    # slopes aligned to the window DFT grid (2*pi * bins / l_fft per sample)
    a1v = 2.0 * np.pi * 2 / l_fft
    b1v = 2.0 * np.pi * 3 / l_fft
    a0v, b0v = 0.37, -1.21

    x_circ = _bandlimited(rng, l_fft, 10)
    ntx_circ = _bandlimited(rng, l_fft, 8, real=True, scale=0.05)
    nrx_circ = _bandlimited(rng, l_fft, 8, real=True, scale=0.05)

    # linear-array views the decomposition code indexes by instant + delta
    x_wave = np.empty(l_fft, dtype=np.complex128)
    phi_tx = np.empty(l_fft)
    phi_rx = np.empty(l_fft)
    x_wave[instant + chi] = x_circ[pos]
    phi_tx[instant + chi] = a0v + a1v * chi + ntx_circ[pos]
    phi_rx[instant + chi] = b0v + b1v * chi + nrx_circ[pos]
    a0 = np.full(l_fft, a0v)
    a1 = np.full(l_fft, a1v)
    b0 = np.full(l_fft, b0v)
    b1 = np.full(l_fft, b1v)

    freqs = sfft.fftfreq(l_fft, d=1.0 / cfg.f_sim)
    h_cd = np.exp(-1j * 0.5 * cfg.beta2 * (2 * np.pi * freqs) ** 2 * cfg.length)

    # explicit chain on the circular window grid
    delta_circ = np.empty(l_fft)
    delta_circ[pos] = chi
    u_full = x_circ * np.exp(1j * (a0v + a1v * delta_circ)) * (1 + 1j * ntx_circ)
    v = np.fft.ifft(np.fft.fft(u_full) * h_cd)
    w = v * np.exp(1j * (b0v + b1v * delta_circ)) * (1 + 1j * nrx_circ)
    y_chain = np.fft.ifft(np.fft.fft(w) * np.conj(h_cd))[0]

    terms = reference_decompose_instant(x_wave, phi_tx, phi_rx, a0, a1, b0, b1,
                                        instant, stride, n_w, cfg)
    return cfg, b1v, y_chain, terms


def test_four_terms_reproduce_windowed_chain_exactly():
    for seed in (0, 1, 2):
        _, _, y_chain, terms = _toy_setup(seed)
        phi0, x_terr, n_rot, n_rrn, n_xrn, _ = terms
        model = np.exp(1j * phi0) * (x_terr + n_rot + n_rrn + n_xrn)
        assert abs(model - y_chain) < 1e-12 * abs(y_chain)


def test_quadratic_phase_factor_variant_breaks_identity():
    # doubling the slope-squared phase on the TX-residual term (the 3/2
    # total exponent variant) must visibly break the chain identity
    cfg, b1v, y_chain, terms = _toy_setup(0)
    phi0, x_terr, n_rot, n_rrn, n_xrn, _ = terms
    omega_b = b1v * cfg.f_sim
    bad = n_rot * np.exp(1j * cfg.beta2 * omega_b**2 * cfg.length)
    model = np.exp(1j * phi0) * (x_terr + bad + n_rrn + n_xrn)
    assert abs(model - y_chain) > 1e-3 * abs(y_chain)


def test_chain_identity_term_by_term():
    # with the residuals zeroed one at a time the chain isolates each term
    n_w = 40
    l_fft = 81
    cfg = LinkConfig(symbol_rate=1e9, f_sim=2e9, beta2=-4.6e-18, length=2.0,
                     num_symbols=4, baseline_snr=None)
    rng = np.random.default_rng(7)
    chi = np.arange(-n_w, n_w + 1)
    pos = chi % l_fft
    a1v = 2.0 * np.pi * 1 / l_fft
    b1v = 2.0 * np.pi * 4 / l_fft
    x_circ = _bandlimited(rng, l_fft, 9)
    nrx_circ = _bandlimited(rng, l_fft, 7, real=True, scale=0.03)

    x_wave = np.empty(l_fft, dtype=np.complex128)
    phi_tx = np.empty(l_fft)
    phi_rx = np.empty(l_fft)
    x_wave[n_w + chi] = x_circ[pos]
    phi_tx[n_w + chi] = a1v * chi                    # zero TX residual
    phi_rx[n_w + chi] = b1v * chi + nrx_circ[pos]
    zeros = np.zeros(l_fft)
    terms = reference_decompose_instant(
        x_wave, phi_tx, phi_rx, zeros, np.full(l_fft, a1v),
        zeros, np.full(l_fft, b1v), n_w, 1, n_w, cfg)
    _, x_terr, n_rot, n_rrn, n_xrn, _ = terms
    assert n_rot == 0.0 and n_xrn == 0.0

    freqs = sfft.fftfreq(l_fft, d=1.0 / cfg.f_sim)
    h_cd = np.exp(-1j * 0.5 * cfg.beta2 * (2 * np.pi * freqs) ** 2 * cfg.length)
    delta_circ = np.empty(l_fft)
    delta_circ[pos] = chi
    u1 = x_circ * np.exp(1j * a1v * delta_circ)
    v = np.fft.ifft(np.fft.fft(u1) * h_cd)
    e_b = np.exp(1j * b1v * delta_circ)
    lin = np.fft.ifft(np.fft.fft(v * e_b) * np.conj(h_cd))[0]
    cross = np.fft.ifft(np.fft.fft(v * e_b * 1j * nrx_circ) * np.conj(h_cd))[0]
    assert abs(x_terr - lin) < 1e-12 * abs(lin)
    assert abs(n_rrn - cross) < 1e-12 * max(abs(cross), 1e-6)


def test_fast_path_matches_reference_instants():
    cfg = LinkConfig(length=100e3, num_symbols=64, baseline_snr=None, seed=9)
    all_syms, tx_phase, rx_phase, guard, _ = prepare_link_inputs(cfg)
    window = cd_memory(cfg)
    comp = decompose(all_syms, tx_phase, rx_phase, cfg, window,
                     first_symbol=guard, num_out=6, work_sps=2,
                     precision="double")

    m = cfg.oversampling
    stride = m // 2
    n_w = window.N_S * 2
    x_wave = _cascade_waveform(all_syms.symbols, cfg)
    reg_tx = sliding_regression(tx_phase, window.N, window.N_S)
    reg_rx = sliding_regression(rx_phase, window.N, window.N_S)
    for k, inst in enumerate(comp.instants):
        ref = reference_decompose_instant(
            x_wave, tx_phase.phi, rx_phase.phi,
            reg_tx.a0, reg_tx.a1, reg_rx.a0, reg_rx.a1,
            int(inst), stride, n_w, cfg)
        phi0, x_terr, n_rot, n_rrn, n_xrn, _ = ref
        assert comp.phi0[k] == pytest.approx(phi0, rel=1e-9)
        assert comp.x_terr[k] == pytest.approx(x_terr, rel=1e-8)
        assert comp.n_rot[k] == pytest.approx(n_rot, rel=1e-6, abs=1e-9)
        assert comp.n_rrn[k] == pytest.approx(n_rrn, rel=1e-6, abs=1e-9)
        assert comp.n_xrn[k] == pytest.approx(n_xrn, rel=1e-4, abs=1e-9)


def test_zero_tx_linewidth_kills_tx_terms():
    cfg = LinkConfig(length=100e3, num_symbols=64, baseline_snr=None,
                     linewidth_tx=0.0, seed=4)
    all_syms, tx_phase, rx_phase, guard, _ = prepare_link_inputs(cfg)
    comp = decompose(all_syms, tx_phase, rx_phase, cfg, cd_memory(cfg),
                     first_symbol=guard, num_out=20)
    assert np.all(comp.n_rot == 0.0)
    assert np.all(comp.n_xrn == 0.0)
    assert np.any(comp.n_rrn != 0.0)


def test_term_power_ordering_long_link():
    # at 5000 km the two rotation-class noise terms carry comparable power
    # and both dwarf the cross term
    cfg = LinkConfig(length=5000e3, num_symbols=400, baseline_snr=None, seed=21)
    all_syms, tx_phase, rx_phase, guard, _ = prepare_link_inputs(cfg)
    comp = decompose(all_syms, tx_phase, rx_phase, cfg, cd_memory(cfg),
                     first_symbol=guard, num_out=400)
    p_rot = np.mean(np.abs(comp.n_rot) ** 2)
    p_rrn = np.mean(np.abs(comp.n_rrn) ** 2)
    p_xrn = np.mean(np.abs(comp.n_xrn) ** 2)
    assert 0.1 < p_rot / p_rrn < 10.0
    assert p_rrn / p_xrn > 25.0


def test_synthesized_model_tracks_simulation():
    cfg = LinkConfig(length=500e3, num_symbols=2000, baseline_snr=None, seed=6)
    run = simulate_link(cfg)
    comp = decompose_run(run)
    model = synthesize(comp)
    gap = nmse_db(model.symbols, run.rx_symbols.symbols)
    assert gap < -15.0
    # and the model is a far better match than the transmitted symbols are
    assert gap < nmse_db(run.tx_symbols.symbols, run.rx_symbols.symbols) - 10.0


def test_window_validation():
    cfg = LinkConfig(length=100e3, num_symbols=64, baseline_snr=None)
    all_syms, tx_phase, rx_phase, guard, _ = prepare_link_inputs(cfg)
    window = cd_memory(cfg)
    small = type(window)(N=window.N, N_S=window.N_CD - 1, N_CD=window.N_CD)
    with pytest.raises(ValueError):
        decompose(all_syms, tx_phase, rx_phase, cfg, small)
    with pytest.raises(ValueError):
        decompose(all_syms, tx_phase, rx_phase, cfg, window, work_sps=3)
