"""Baseband impairment channel: delay, carrier offset, phase offset, AWGN.

Applies z[n] = exp(j*(2*pi*f_d*n*T_s + theta)) * x[n - tau] + w[n] with
complex white Gaussian noise of variance sigma^2 = 10^(-snr_db/10) against a
unit-power signal.  SNR is therefore defined per complex sample at the
oversampled rate, which is the convention used throughout the simulations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tx_oqpsk import IqBuffer


@dataclass
class ChannelParams:
    """Impairment settings.  snr_db=None disables noise."""

    f_d_hz: float = 0.0
    theta_rad: float = 0.0
    tau_samples: float = 0.0
    snr_db: float | None = None
    seed: int | None = None
    fractional_delay: bool = False

    def __post_init__(self):
        if self.tau_samples < 0:
            raise ValueError("tau_samples must be non-negative")
        if not self.fractional_delay and self.tau_samples != int(self.tau_samples):
            raise ValueError("non-integer tau_samples requires fractional_delay=True")
        # Keep theta in the principal interval (-pi, pi].
        t = math.remainder(self.theta_rad, 2.0 * math.pi)
        if t <= -math.pi:
            t += 2.0 * math.pi
        self.theta_rad = t


def noise_sigma(snr_db: float) -> float:
    """Total complex noise standard deviation for unit signal power."""
    return math.sqrt(10.0 ** (-snr_db / 10.0))


def apply(buf: IqBuffer, params: ChannelParams) -> IqBuffer:
    """Run a buffer through the impairment channel.

    The output is extended by the (rounded-up) delay so no signal falls off
    the end; rotation uses absolute output-sample time.
    """
    if abs(params.f_d_hz) >= buf.chip_rate_hz / 2.0:
        raise ValueError("f_d magnitude must stay below half the chip rate")
    x = buf.samples
    n_ext = int(math.ceil(params.tau_samples))
    out = np.zeros(x.size + n_ext, dtype=np.complex128)

    if params.tau_samples == 0:
        out[:] = x
    elif not params.fractional_delay or params.tau_samples == int(params.tau_samples):
        d = int(params.tau_samples)
        out[d : d + x.size] = x
    else:
        d = int(math.floor(params.tau_samples))
        frac = params.tau_samples - d
        # Linear interpolation between neighbouring input samples.
        shifted = (1.0 - frac) * x
        shifted[1:] += frac * x[:-1]
        out[d : d + x.size] = shifted
        if d + x.size < out.size:
            out[d + x.size] = frac * x[-1]

    if params.f_d_hz != 0.0 or params.theta_rad != 0.0:
        n = np.arange(out.size)
        out *= np.exp(
            1j * (2.0 * np.pi * params.f_d_hz * n * buf.sample_period_s + params.theta_rad)
        )

    if params.snr_db is not None:
        rng = np.random.default_rng(params.seed)
        sigma = noise_sigma(params.snr_db)
        out += (sigma / math.sqrt(2.0)) * (
            rng.standard_normal(out.size) + 1j * rng.standard_normal(out.size)
        )

    return IqBuffer(samples=out, sps=buf.sps, chip_rate_hz=buf.chip_rate_hz)
