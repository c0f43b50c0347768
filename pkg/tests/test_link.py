"""Link chain: configuration, dispersion sizing, calibration, end-to-end."""

import numpy as np
import pytest

from eepn_lab.link import (LinkConfig, awgn_calibrate, cd_freq_response,
                           cd_memory_symbols, simulate_link)
from eepn_lab.signals import snr_estimate


def test_config_validation():
    with pytest.raises(ValueError):
        LinkConfig(rolloff=1.5)
    with pytest.raises(ValueError):
        LinkConfig(length=-1.0)
    with pytest.raises(ValueError):
        LinkConfig(f_sim=1.5e11)          # not an integer multiple
    with pytest.raises(ValueError):
        LinkConfig(linewidth_rx=-1.0)
    with pytest.raises(ValueError):
        LinkConfig(num_symbols=0)
    assert LinkConfig().oversampling == 10


def test_cd_memory_reference_lengths():
    assert cd_memory_symbols(LinkConfig(length=4000e3)) == 2723
    assert cd_memory_symbols(LinkConfig(length=2000e3)) == 1361
    assert cd_memory_symbols(LinkConfig(length=5000e3)) == 3403
    assert cd_memory_symbols(LinkConfig(length=0.0)) == 0


def test_cd_freq_response_value_and_allpass():
    cfg = LinkConfig()
    h = cd_freq_response([10e9], cfg.beta2, 4000e3)[0]
    # -0.5 * beta2 * (2 pi 10 GHz)^2 * 4000 km
    assert np.angle(h) == pytest.approx(np.angle(np.exp(1j * 171.0995)), abs=1e-3)
    f = np.linspace(-5e11, 5e11, 1001)
    assert np.allclose(np.abs(cd_freq_response(f, cfg.beta2, 4000e3)), 1.0)


def test_awgn_calibration_scales_with_oversampling():
    v10 = awgn_calibrate(LinkConfig(baseline_snr=13.7))
    v20 = awgn_calibrate(LinkConfig(f_sim=2e12, baseline_snr=13.7))
    assert v10 == pytest.approx(10 * 10 ** (-1.37), rel=1e-12)
    assert v20 == pytest.approx(2 * v10, rel=1e-12)
    assert awgn_calibrate(LinkConfig(baseline_snr=None)) == 0.0


def test_simulated_snr_hits_calibration():
    cfg = LinkConfig(linewidth_tx=0.0, linewidth_rx=0.0, num_symbols=50000,
                     seed=3)
    run = simulate_link(cfg)
    snr = snr_estimate(run.rx_symbols.symbols, run.tx_symbols.symbols)
    assert snr == pytest.approx(13.7, abs=0.15)


def test_zero_length_link_is_pure_rotation():
    # without fiber the RX symbols are the TX symbols under the summed
    # laser phase, so derotating by it recovers them almost exactly
    cfg = LinkConfig(length=0.0, baseline_snr=None, num_symbols=2000, seed=5)
    run = simulate_link(cfg)
    m = cfg.oversampling
    pick = run.symbol0_index + np.arange(cfg.num_symbols) * m
    phase = run.tx_phase.phi[pick] + run.rx_phase.phi[pick]
    derot = run.rx_symbols.symbols * np.exp(-1j * phase)
    err = np.abs(derot - run.tx_symbols.symbols)
    assert np.sqrt(np.mean(err**2)) < 2e-3


def test_determinism_per_seed():
    cfg = LinkConfig(num_symbols=2000, seed=11)
    r1 = simulate_link(cfg)
    r2 = simulate_link(cfg)
    assert np.array_equal(r1.rx_symbols.symbols, r2.rx_symbols.symbols)
    r3 = simulate_link(LinkConfig(num_symbols=2000, seed=12))
    assert not np.array_equal(r1.rx_symbols.symbols, r3.rx_symbols.symbols)


def test_phase_noise_penalty_grows_with_length():
    # with lasers on, longer fiber means wider dispersion memory and more
    # equalization-enhanced noise, so raw SNR against TX falls monotonically
    snrs = []
    for km in (0, 500, 1000):
        cfg = LinkConfig(length=km * 1e3, num_symbols=4000, baseline_snr=None,
                         linewidth_tx=0.0, linewidth_rx=400e3, seed=8)
        run = simulate_link(cfg)
        # remove the common laser phase per symbol before scoring so only
        # the equalization-enhanced part is counted
        m = cfg.oversampling
        pick = run.symbol0_index + np.arange(cfg.num_symbols) * m
        phase = run.tx_phase.phi[pick] + run.rx_phase.phi[pick]
        derot = run.rx_symbols.symbols * np.exp(-1j * phase)
        snrs.append(snr_estimate(derot, run.tx_symbols.symbols))
    assert snrs[0] > snrs[1] > snrs[2]
    assert snrs[0] - snrs[2] > 3.0
