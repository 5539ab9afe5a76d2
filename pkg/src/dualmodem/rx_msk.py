"""Non-coherent MSK receiver chain.

Treats the half-sine O-QPSK burst as MSK: a one-chip-lag phase-difference
detector turns each +-pi/2 phase ramp into a sign, which directly yields the
pre-encoding chip stream (the modulator's sign convention absorbs the
differential encoding, so this chain has no differential decoder).  Symbol
timing comes from the squared lag-product statistic, which is immune to
carrier frequency and phase offsets; frame alignment from a 256-chip
correlation against the known preamble.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import phy_frames
from ._rxtypes import DemodReport, MskTimingStat, RxConfig
from .mode_controller import preamble_match_count
from .tx_oqpsk import IqBuffer

DIFF_DETECT_EPS = 1e-12

# Leading all-zero payload symbols extend the preamble pattern and create
# equal correlation peaks 32 chips apart; ties within this fraction of the
# maximum resolve to the earliest lag (see frame_sync_msk).
SYNC_PEAK_MARGIN = 0.05


@dataclass
class PhaseDiffSignal:
    """Normalized one-chip-lag phase-difference detector output."""

    y: np.ndarray
    delay_samples: int


def diff_detect(buf: IqBuffer, eps: float = DIFF_DETECT_EPS, counter=None) -> PhaseDiffSignal:
    """y[n] = Im(z[n] * conj(z[n - sps])) / (|z[n]| * |z[n - sps]| + eps).

    The imaginary part of the lag product is the sine of the phase advance
    over one chip, so y sits near +-1 at chip boundaries.  y[n] is zero for
    n < sps where no lagged sample exists.
    """
    z = buf.samples
    sps = buf.sps
    if z.size <= sps:
        raise ValueError("buffer must be longer than one chip")
    y = np.zeros(z.size, dtype=np.float64)
    prod = z[sps:] * np.conj(z[:-sps])
    norm = np.abs(z[sps:]) * np.abs(z[:-sps]) + eps
    y[sps:] = prod.imag / norm
    if counter is not None:
        counter.tally_diff_detect(z.size - sps)
    return PhaseDiffSignal(y=y, delay_samples=sps)


def msk_timing(buf: IqBuffer, window_symbols: int = 64) -> MskTimingStat:
    """Estimate the chip-boundary sampling phase from the signal's head.

    Squares the one-chip-lag products and averages them per intra-chip phase
    over the leading window; at the true boundary phase every squared product
    collapses to the same unit phasor, so |v| peaks there regardless of
    carrier offset or rotation.  Ties break to the smallest phase.
    """
    z = buf.samples
    sps = buf.sps
    if window_symbols < 1:
        raise ValueError("window_symbols must be positive")
    if z.size < 2 * sps:
        raise ValueError("buffer too short for timing estimation")
    c = (z[sps:] * np.conj(z[:-sps])) ** 2
    n_sym = c.size // sps
    use = min(window_symbols, n_sym)
    v = c[: use * sps].reshape(use, sps).mean(axis=0)
    tau_hat = int(np.argmax(np.abs(v)))
    return MskTimingStat(
        v=v, tau_hat=tau_hat, window_used=use, complete=use >= window_symbols
    )


def detect_chips(y: PhaseDiffSignal, timing: MskTimingStat | int, counter=None) -> np.ndarray:
    """Hard chip decisions: sample y at the end of each chip interval.

    A positive phase ramp means chip 1.  Exact zeros (e.g. dead air) decide 0.
    """
    tau = timing.tau_hat if isinstance(timing, MskTimingStat) else int(timing)
    sps = y.delay_samples
    if not 0 <= tau < sps:
        raise ValueError("timing phase must lie in [0, sps)")
    decisions = y.y[tau + sps :: sps]
    if counter is not None:
        counter.tally_bit_decisions(decisions.size)
    return (decisions > 0).astype(np.uint8)


def frame_sync_msk(
    chips, reference=None, threshold: float = 0.5, counter=None
) -> tuple[bool, int]:
    """Locate the preamble in a hard chip stream.

    Slides a 256-chip antipodal correlation; the peak, normalized by the
    reference length, must reach `threshold`.  Returns (found, start_chip).
    """
    chips = np.asarray(chips, dtype=np.uint8)
    if reference is None:
        reference = phy_frames.preamble_chips()
    reference = np.asarray(reference, dtype=np.uint8)
    if chips.size < reference.size:
        return False, 0
    x = 2.0 * chips - 1.0
    r = 2.0 * reference - 1.0
    corr = np.correlate(x, r, mode="valid") / reference.size
    if counter is not None:
        counter.tally_correlation_search(reference.size, corr.size)
    peak = float(np.max(corr))
    if peak > 0.0:
        best = int(np.argmax(corr >= (1.0 - SYNC_PEAK_MARGIN) * peak))
    else:
        best = int(np.argmax(corr))
    return bool(corr[best] >= threshold), best


def demodulate(buf: IqBuffer, cfg: RxConfig | None = None, counter=None) -> DemodReport:
    """Full non-coherent chain: timing, phase-difference detection, frame
    sync, despreading.  No carrier estimate is produced or needed."""
    cfg = cfg or RxConfig()
    layout = phy_frames.FrameLayout(payload_bits=cfg.payload_bits)
    sps = buf.sps

    stat = msk_timing(buf, cfg.timing_window_symbols)
    # One chip of leading zeros keeps the whole frame on the decision grid
    # when the timing phase lands one sample early (tau_hat = truth - 1 mod
    # sps shifts the chip stream forward by one; without the pad the frame
    # would overrun the buffer tail and be dropped).
    padded = IqBuffer(
        samples=np.concatenate([np.zeros(sps, dtype=np.complex128), buf.samples]),
        sps=sps,
        chip_rate_hz=buf.chip_rate_hz,
    )
    y = diff_detect(padded, counter=counter)
    chips = detect_chips(y, stat, counter=counter)
    found, c0 = frame_sync_msk(chips, threshold=cfg.sync_threshold, counter=counter)
    if found and c0 + layout.total_chips > chips.size:
        found = False

    report = DemodReport(mode="msk", frame_found=found, timing=stat)
    if not found:
        return report

    frame = chips[c0 : c0 + layout.total_chips]
    report.frame_start = stat.tau_hat + (c0 - 1) * sps
    report.preamble_match_count = preamble_match_count(
        frame[: layout.preamble_chips], phy_frames.preamble_chips()
    )
    symbols, _ = phy_frames.despread_stream(frame[layout.preamble_chips :], counter)
    report.payload_bits = phy_frames.symbols_to_bits(symbols)
    return report
