"""Mapping, pulse shaping and metric primitives."""

import numpy as np
import pytest

from eepn_lab.signals import (QAM16_POINTS, SNR_SATURATION_DB, evm,
                              fractional_delay_sinc, map_qam16, nmse_db,
                              pearson, rrc_taps, snr_estimate,
                              upsample_zero_stuff)


def test_qam16_unit_power_and_distinct():
    pts = map_qam16(np.arange(16)).symbols
    assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0, rel=1e-12)
    assert len(set(np.round(pts, 9))) == 16


def test_qam16_gray_neighbors_differ_one_bit():
    # adjacent constellation points (distance 2/sqrt(10)) differ in one bit
    pts = map_qam16(np.arange(16)).symbols
    step = 2.0 / np.sqrt(10.0)
    for a in range(16):
        for b in range(a + 1, 16):
            if abs(pts[a] - pts[b]) < step * 1.001:
                assert bin(a ^ b).count("1") == 1


def test_qam16_corner_and_range_check():
    assert map_qam16([0]).symbols[0] == pytest.approx((-3 - 3j) / np.sqrt(10))
    with pytest.raises(ValueError):
        map_qam16([16])
    with pytest.raises(ValueError):
        map_qam16([-1])


def test_rrc_unit_energy_and_symmetry():
    for a in (0.0, 0.1, 0.5, 1.0):
        taps = rrc_taps(a, 32, 10)
        assert np.sum(taps**2) == pytest.approx(1.0, rel=1e-12)
        assert np.allclose(taps, taps[::-1])


def test_rrc_cascade_is_nyquist():
    # the RRC convolved with itself crosses zero at every nonzero symbol tick
    m = 10
    taps = rrc_taps(0.1, 64, m)
    casc = np.convolve(taps, taps)
    center = casc.size // 2
    ticks = casc[center % m:: m]
    peak = np.argmax(np.abs(ticks))
    others = np.delete(ticks, peak)
    # truncation of the slowly decaying tails leaves small nonzero ticks
    assert np.max(np.abs(others)) < 5e-3 * np.abs(ticks[peak])


def test_rrc_rejects_bad_args():
    with pytest.raises(ValueError):
        rrc_taps(1.5, 32, 10)
    with pytest.raises(ValueError):
        rrc_taps(0.1, 1, 10)


def test_snr_estimate_known_noise():
    rng = np.random.default_rng(0)
    ref = map_qam16(rng.integers(0, 16, 200000)).symbols
    noise = (rng.standard_normal(ref.size) + 1j * rng.standard_normal(ref.size))
    snr_target = 15.0
    rx = ref + noise * np.sqrt(10 ** (-snr_target / 10) / 2)
    assert snr_estimate(rx, ref) == pytest.approx(snr_target, abs=0.05)


def test_snr_estimate_gain_and_rotation_invariant():
    rng = np.random.default_rng(1)
    ref = map_qam16(rng.integers(0, 16, 10000)).symbols
    rx = ref + 0.1 * rng.standard_normal(ref.size)
    base = snr_estimate(rx, ref)
    assert snr_estimate(1.7 * np.exp(0.4j) * rx, ref) == pytest.approx(base, abs=1e-9)
    assert snr_estimate(ref, ref) == SNR_SATURATION_DB


def test_nmse_and_evm():
    ref = np.ones(100, dtype=complex)
    est = ref + 0.1
    assert nmse_db(est, ref) == pytest.approx(-20.0, abs=1e-9)
    assert evm(est, ref) == pytest.approx(0.1, rel=1e-12)
    assert nmse_db(ref, ref) == -SNR_SATURATION_DB


def test_pearson():
    x = np.arange(50.0)
    assert pearson(x, 3 * x + 2) == pytest.approx(1.0)
    assert pearson(x, -x) == pytest.approx(-1.0)
    rng = np.random.default_rng(2)
    assert abs(pearson(rng.standard_normal(5000), rng.standard_normal(5000))) < 0.05
    with pytest.raises(ValueError):
        pearson(x, np.zeros(50))


def test_upsample_zero_stuff():
    out = upsample_zero_stuff([1 + 1j, 2.0], 4)
    assert out.size == 8
    assert out[0] == 1 + 1j and out[4] == 2.0
    assert np.all(out[[1, 2, 3, 5, 6, 7]] == 0)


def test_fractional_delay_sinc_on_bandlimited_tone():
    n = 512
    k = np.arange(n)
    f0 = 0.11                      # cycles/sample, well inside the band
    x = np.exp(2j * np.pi * f0 * k)
    tau = 0.3
    y = fractional_delay_sinc(x, np.full(n, tau))
    want = np.exp(2j * np.pi * f0 * (k + tau))
    err = np.abs(y - want)[30:-30]
    # 16-tap Kaiser-windowed sinc: a few 1e-5 of ripple is expected
    assert np.max(err) < 1e-4
