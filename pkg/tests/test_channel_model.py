"""Tests for the baseband impairment channel."""

import numpy as np
import pytest

from dualmodem.channel_model import ChannelParams, apply, noise_sigma
from dualmodem.tx_oqpsk import IqBuffer


def _tone(n=512, sps=8):
    t = np.arange(n)
    return IqBuffer(samples=np.exp(0.25j * t), sps=sps, chip_rate_hz=2e6)


def test_identity_when_unimpaired():
    buf = _tone()
    out = apply(buf, ChannelParams())
    assert np.array_equal(out.samples, buf.samples)
    assert out.sps == buf.sps and out.chip_rate_hz == buf.chip_rate_hz


def test_rotation_is_exact():
    buf = _tone()
    f_d, theta = 12_500.0, 0.7
    out = apply(buf, ChannelParams(f_d_hz=f_d, theta_rad=theta))
    n = np.arange(len(buf))
    want = buf.samples * np.exp(1j * (2 * np.pi * f_d * n * buf.sample_period_s + theta))
    assert np.allclose(out.samples, want, atol=1e-12)


def test_integer_delay_pads_front():
    buf = _tone(64)
    out = apply(buf, ChannelParams(tau_samples=5))
    assert len(out) == 64 + 5
    assert np.all(out.samples[:5] == 0)
    assert np.array_equal(out.samples[5:], buf.samples)


def test_fractional_delay_linear_interpolation():
    ramp = IqBuffer(samples=np.arange(8, dtype=np.complex128), sps=8, chip_rate_hz=2e6)
    out = apply(ramp, ChannelParams(tau_samples=2.25, fractional_delay=True))
    # x[n - 2.25] on a ramp: 0.75*x[n-2] + 0.25*x[n-3]
    assert out.samples[2] == pytest.approx(0.75 * 0.0)
    assert out.samples[4] == pytest.approx(0.75 * 2.0 + 0.25 * 1.0)
    assert len(out) == 8 + 3


def test_fractional_delay_requires_flag():
    with pytest.raises(ValueError):
        ChannelParams(tau_samples=1.5)
    with pytest.raises(ValueError):
        ChannelParams(tau_samples=-1)


def test_theta_normalized_to_principal_interval():
    p = ChannelParams(theta_rad=3 * np.pi)
    assert -np.pi < p.theta_rad <= np.pi
    assert p.theta_rad == pytest.approx(np.pi)


def test_noise_sigma_value():
    assert noise_sigma(10.0) == pytest.approx(np.sqrt(0.1))
    assert noise_sigma(0.0) == pytest.approx(1.0)


def test_noise_power_matches_snr():
    buf = IqBuffer(samples=np.zeros(500_000, dtype=np.complex128), sps=8, chip_rate_hz=2e6)
    for snr_db in (0.0, 10.0):
        out = apply(buf, ChannelParams(snr_db=snr_db, seed=4))
        measured = np.mean(np.abs(out.samples) ** 2)
        ratio = measured / noise_sigma(snr_db) ** 2
        assert 0.97 < ratio < 1.03, (snr_db, ratio)


def test_noise_is_seed_deterministic():
    buf = _tone()
    a = apply(buf, ChannelParams(snr_db=5.0, seed=11))
    b = apply(buf, ChannelParams(snr_db=5.0, seed=11))
    c = apply(buf, ChannelParams(snr_db=5.0, seed=12))
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_frequency_offset_bound():
    buf = _tone()
    with pytest.raises(ValueError):
        apply(buf, ChannelParams(f_d_hz=1.1e6))


def test_impairments_compose():
    buf = _tone(128)
    params = ChannelParams(f_d_hz=5e3, theta_rad=-1.2, tau_samples=3, snr_db=None)
    out = apply(buf, params)
    n = np.arange(len(out))
    delayed = np.concatenate([np.zeros(3, dtype=np.complex128), buf.samples])
    want = delayed * np.exp(1j * (2 * np.pi * 5e3 * n * buf.sample_period_s - 1.2))
    assert np.allclose(out.samples, want, atol=1e-12)
