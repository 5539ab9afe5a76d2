"""Half-sine O-QPSK modulator for the 802.15.4 2.4 GHz PHY.

Even-indexed chips ride the I rail, odd-indexed chips the Q rail delayed by
one chip, and each chip is shaped with a half-sine pulse spanning two chip
periods.  With the deterministic per-chip sign pattern applied here the
result is exactly an MSK waveform: the instantaneous phase ramps +-pi/2 per
chip, and the ramp direction at chip k equals the pre-encoding chip value, so
a differential detector recovers the source chips with no differential
decoder.  A coherent sampler sees the encoded chips instead and decodes them
downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phy_frames import ChipStream

CHIP_RATE_HZ = 2_000_000.0

# Per-chip sign factor, period 4 in the chip index: +1 -1 -1 +1.  Chosen so
# that the chip-k phase ramp direction equals the pre-encoding chip (see
# module docstring); the convention is pinned by the loopback tests.
SIGN_PATTERN_PERIOD4 = np.array([1.0, -1.0, -1.0, 1.0])
# Same pattern as XOR bits for undoing it on hard sliced chips.
SIGN_PATTERN_BITS = np.array([0, 1, 1, 0], dtype=np.uint8)


@dataclass
class IqBuffer:
    """Complex baseband samples with their timing metadata."""

    samples: np.ndarray
    sps: int = 8
    chip_rate_hz: float = CHIP_RATE_HZ

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if self.sps < 2 or self.sps % 2:
            raise ValueError("sps must be an even integer >= 2")

    @property
    def sample_rate_hz(self) -> float:
        return self.sps * self.chip_rate_hz

    @property
    def sample_period_s(self) -> float:
        return 1.0 / self.sample_rate_hz

    def __len__(self) -> int:
        return self.samples.size


def half_sine_taps(n_samples: int) -> np.ndarray:
    """Half-sine chip pulse, taps[n] = sin(pi*n/N) for n = 0..N-1.

    N is the full pulse support: two chip periods, i.e. N = 2*sps.
    """
    if n_samples < 4 or n_samples % 2:
        raise ValueError("pulse length must be an even integer >= 4")
    n = np.arange(n_samples)
    return np.sin(np.pi * n / n_samples)


def sign_pattern(n_chips: int, start_index: int = 0) -> np.ndarray:
    """The +-1 sign factors for chip indices start_index..start_index+n-1."""
    idx = (np.arange(start_index, start_index + n_chips)) % 4
    return SIGN_PATTERN_PERIOD4[idx]


def chip_amplitudes(chips, start_index: int = 0) -> np.ndarray:
    """Antipodal, sign-adjusted rail amplitudes for a chip vector.

    chips are 0/1; the result is (2*chip - 1) times the index-locked sign
    pattern.  start_index gives the absolute chip index of chips[0].
    """
    chips = np.asarray(chips, dtype=np.float64)
    return (2.0 * chips - 1.0) * sign_pattern(chips.size, start_index)


def modulate(
    chips,
    sps: int = 8,
    chip_rate_hz: float = CHIP_RATE_HZ,
    head_bit: int = 0,
    tail_bit: int = 0,
) -> IqBuffer:
    """O-QPSK/half-sine modulate a chip stream.

    Returns (n_chips + 1) * sps complex samples: the Q rail trails the I rail
    by one chip.  Two half-pulse ramp chips are folded into the burst edges
    (head_bit before chip 0, tail_bit after the last chip) so the envelope is
    constant over the whole buffer and chip 0 has a phase ramp like every
    other chip; they occupy the same (n_chips + 1) * sps span.  head_bit must
    equal the differential-encoder seed for the first-chip ramp to carry the
    frame's first source chip.
    """
    if isinstance(chips, ChipStream):
        chips = chips.chips
    chips = np.asarray(chips, dtype=np.uint8)
    if chips.ndim != 1 or chips.size == 0:
        raise ValueError("need a one-dimensional, non-empty chip vector")
    if not np.isin(chips, (0, 1)).all():
        raise ValueError("chips must be 0/1 valued")
    if sps < 2 or sps % 2:
        raise ValueError("sps must be an even integer >= 2")

    n_chips = chips.size
    n_pulse = 2 * sps
    pulse = half_sine_taps(n_pulse)
    amps = chip_amplitudes(chips)
    # Virtual edge chips at indices -1 and n_chips keep the sign pattern's
    # index arithmetic.
    head_amp = chip_amplitudes(np.array([head_bit]), start_index=-1)[0]
    tail_amp = chip_amplitudes(np.array([tail_bit]), start_index=n_chips)[0]

    n_out = (n_chips + 1) * sps
    out = np.zeros(n_out, dtype=np.complex128)

    # Rail pulses abut with no overlap (spacing equals the pulse support), so
    # each rail is a plain concatenation of scaled pulses.
    even = amps[0::2]
    odd = amps[1::2]
    i_blocks = (even[:, None] * pulse).reshape(-1)
    end = min(n_out, i_blocks.size)
    out[:end] += i_blocks[:end]
    if odd.size:
        q_blocks = (odd[:, None] * pulse).reshape(-1)
        end = min(n_out - sps, q_blocks.size)
        out[sps : sps + end] += 1j * q_blocks[:end]

    # Head: second half of the virtual chip -1 pulse; chip -1 is odd-indexed,
    # so it belongs on the Q rail.
    head_half = head_amp * pulse[sps:]
    out[:sps] += 1j * head_half
    # Tail: first half of the virtual chip n_chips pulse on its rail.
    tail_half = tail_amp * pulse[:sps]
    if n_chips % 2 == 0:  # even index -> I rail
        out[n_chips * sps :] += tail_half
    else:
        out[n_chips * sps :] += 1j * tail_half

    return IqBuffer(samples=out, sps=sps, chip_rate_hz=chip_rate_hz)
