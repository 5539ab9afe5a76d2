"""Result and configuration records shared by the two receiver chains."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class RxConfig:
    """Knobs common to both demodulators."""

    payload_bits: int = 200
    d_init: int = 0
    n_fft: int = 2048
    timing_window_symbols: int = 64
    sync_threshold: float = 0.5
    min_carrier_samples: int = 64

    def __post_init__(self):
        if self.payload_bits <= 0 or self.payload_bits % 4:
            raise ValueError("payload_bits must be a positive multiple of 4")
        if self.d_init not in (0, 1):
            raise ValueError("d_init must be 0 or 1")


@dataclass
class CarrierEstimate:
    """Joint frequency/phase estimate from the power-of-four spectrum."""

    f_d_hat_hz: float
    theta_hat_rad: float
    n_fft: int
    peak_magnitude: float
    # Ratio of the spectral peak to the median bin magnitude.  Near 1 the
    # spectrum is flat (no tone found); large values mean a credible tone.
    peak_to_median: float = float("nan")


@dataclass
class TimingEstimate:
    """Early-late gate output: best sampling phase within one pulse period."""

    sample_phase: int
    converged: bool
    iterations_used: int


@dataclass
class MskTimingStat:
    """Squared lag-product timing statistic (one complex value per phase)."""

    v: np.ndarray
    tau_hat: int
    window_used: int
    complete: bool


@dataclass
class DemodReport:
    """What a receiver chain recovered from one buffer."""

    mode: str
    frame_found: bool
    frame_start: int | None = None
    payload_bits: np.ndarray | None = None
    preamble_match_count: int = 0
    carrier: CarrierEstimate | None = None
    timing: Any = None

    def __post_init__(self):
        if self.payload_bits is not None and not self.frame_found:
            raise ValueError("payload present implies frame_found")
