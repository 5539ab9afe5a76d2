"""Operation-count models for both receiver chains.

Two layers live here.  The closed forms (msk_op_counts, qpsk_op_counts) price
each pipeline stage from its parameters, using the canonical radix-2
transform cost for the FFT stage regardless of how the runtime computes its
spectra.  RuntimeCounters optionally rides along an instrumented run and
tallies what the stages actually did, for cross-checking the closed forms.

Counting conventions worth knowing:

- FFT logs are base 2.
- Frame-synchronization counts are per correlation search, one search being
  a window of N_preamble lags, so a search with reference length P books
  P**2 multiplications and (P - 1)**2 additions.  The number of lags a
  runtime search actually visited is kept separately in lags_searched.
- Chip-to-symbol despreading books, per 4-bit symbol, 16 row comparisons of
  32 XORs each, 31 additions per popcount, and 15 minimum-search
  comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STAGE_STR = "Symbol Timing Recovery"
STAGE_MF_STR = "Matched Filter and Symbol Timing Recovery"
STAGE_CARRIER = "Frequency and Phase Synchronization"
STAGE_FRAME_SYNC = "Frame Synchronization"
STAGE_CHIP_TO_SYMBOL = "Chip to Symbol Mapping"
STAGE_BIT_DETECT = "Bit Detection"
STAGE_DIFF_DETECT = "Differential Detection"

MAX_PREAMBLE_SYMBOLS_QPSK = 128
MAX_PREAMBLE_SYMBOLS_MSK = 256


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ComplexityParams:
    """Stage-cost parameters.

    l_pulses: pulses observed by the timing recovery loop.
    n_sample: samples per pulse (two chips worth).
    n_preamble: preamble symbols correlated per frame-sync search.
    n_bits: payload bits per frame.
    n_fft: carrier-recovery transform length.
    """

    l_pulses: int = 32
    n_sample: int = 16
    n_preamble: int = 64
    n_bits: int = 200
    n_fft: int = 2048

    def __post_init__(self):
        for name in ("l_pulses", "n_sample", "n_preamble", "n_fft"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_bits < 0:
            raise ValueError("n_bits must be non-negative")
        if self.n_bits % 4:
            raise ValueError("n_bits must be a multiple of 4")
        if not _is_pow2(self.n_fft):
            raise ValueError("n_fft must be a power of two")
        if self.n_sample % 2:
            raise ValueError("n_sample must be even")


@dataclass(frozen=True)
class StageOps:
    """One pipeline stage's operation budget."""

    name: str
    additions: int = 0
    multiplications: int = 0
    other: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if self.additions < 0 or self.multiplications < 0:
            raise ValueError("operation counts must be non-negative")
        for label, count in self.other:
            if count < 0:
                raise ValueError(f"negative count for {label!r}")

    def other_as_dict(self) -> dict[str, int]:
        return dict(self.other)


@dataclass(frozen=True)
class OpCountReport:
    """Per-stage and total operation counts for one receiver chain."""

    chain: str
    stages: tuple[StageOps, ...]

    @property
    def additions_total(self) -> int:
        return sum(s.additions for s in self.stages)

    @property
    def multiplications_total(self) -> int:
        return sum(s.multiplications for s in self.stages)

    def other_totals(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for stage in self.stages:
            for label, count in stage.other:
                out[label] = out.get(label, 0) + count
        return out

    def as_text(self) -> str:
        """Aligned plain-text table with a totals row."""
        rows = [("Stage", "Additions", "Multiplications", "Other Operations")]
        for s in self.stages:
            other = ", ".join(f"{c} {lbl}" for lbl, c in s.other) or "-"
            rows.append((s.name, str(s.additions), str(s.multiplications), other))
        other_tot = ", ".join(f"{c} {lbl}" for lbl, c in self.other_totals().items()) or "-"
        rows.append(
            ("Total", str(self.additions_total), str(self.multiplications_total), other_tot)
        )
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = [f"{self.chain} demodulator operation counts"]
        for i, row in enumerate(rows):
            lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines)

    def as_csv(self) -> str:
        lines = ["stage,additions,multiplications,other"]
        for s in self.stages:
            other = ";".join(f"{lbl}={c}" for lbl, c in s.other)
            lines.append(f"{s.name},{s.additions},{s.multiplications},{other}")
        other_tot = ";".join(f"{lbl}={c}" for lbl, c in self.other_totals().items())
        lines.append(
            f"total,{self.additions_total},{self.multiplications_total},{other_tot}"
        )
        return "\n".join(lines) + "\n"


def _frame_sync_stage(n_preamble: int) -> StageOps:
    return StageOps(
        name=STAGE_FRAME_SYNC,
        additions=(n_preamble - 1) ** 2,
        multiplications=n_preamble**2,
    )


def _chip_to_symbol_stage(n_bits: int) -> StageOps:
    n_symbols = n_bits // 4
    other = ()
    if n_bits:
        other = (("XOR", n_bits * 128), ("comparisons", n_symbols * 15))
    return StageOps(
        name=STAGE_CHIP_TO_SYMBOL,
        additions=n_symbols * 31 * 16,
        other=other,
    )


def _bit_detect_stage(n_bits: int) -> StageOps:
    return StageOps(
        name=STAGE_BIT_DETECT,
        other=(("comparisons", n_bits),) if n_bits else (),
    )


def fft_op_counts(n_fft: int) -> tuple[int, int]:
    """(additions, multiplications) of a radix-2 length-n transform."""
    if not _is_pow2(n_fft) or n_fft < 2:
        raise ValueError("n_fft must be a power of two >= 2")
    half = n_fft // 2
    log_half = int(np.log2(half))
    adds = 7 * half * log_half - 5 * n_fft + 8
    mults = 3 * half * log_half - 5 * n_fft + 8
    return adds, mults


def msk_op_counts(p: ComplexityParams) -> OpCountReport:
    """Closed-form budget of the non-coherent chain."""
    if p.n_preamble > MAX_PREAMBLE_SYMBOLS_MSK:
        raise ValueError("n_preamble exceeds the preamble length")
    str_stage = StageOps(
        name=STAGE_STR,
        additions=p.l_pulses * p.n_sample // 2 * 4,
        multiplications=p.l_pulses * p.n_sample // 2 * 8,
        other=(("comparisons", p.n_sample // 2 - 1),),
    )
    return OpCountReport(
        chain="msk",
        stages=(
            str_stage,
            _frame_sync_stage(p.n_preamble),
            _chip_to_symbol_stage(p.n_bits),
            _bit_detect_stage(p.n_bits),
        ),
    )


def qpsk_op_counts(p: ComplexityParams) -> OpCountReport:
    """Closed-form budget of the coherent chain."""
    if p.n_preamble > MAX_PREAMBLE_SYMBOLS_QPSK:
        raise ValueError("n_preamble exceeds the preamble symbol count")
    mf_stage = StageOps(
        name=STAGE_MF_STR,
        additions=p.l_pulses * 2 * (p.n_sample - 1) ** 2,
        multiplications=p.l_pulses * 2 * p.n_sample**2,
        other=(("comparisons", p.l_pulses * 3),),
    )
    fft_adds, fft_mults = fft_op_counts(p.n_fft)
    carrier_stage = StageOps(
        name=STAGE_CARRIER,
        additions=fft_adds,
        multiplications=fft_mults,
        other=(("arctan", 1),),
    )
    return OpCountReport(
        chain="qpsk",
        stages=(
            mf_stage,
            carrier_stage,
            _frame_sync_stage(p.n_preamble),
            _chip_to_symbol_stage(p.n_bits),
            _bit_detect_stage(p.n_bits),
        ),
    )


@dataclass
class RuntimeCounters:
    """Arithmetic tallies accumulated by an instrumented receiver run.

    Frame-sync and chip-to-symbol tallies reproduce the closed forms exactly
    (same conventions); matched filter, FFT and differential detection are
    effort estimates for order-of-magnitude cross-checks, since the runtime
    may not use the counted canonical algorithm.
    """

    frame_sync_adds: int = 0
    frame_sync_mults: int = 0
    lags_searched: int = 0
    despread_adds: int = 0
    despread_xors: int = 0
    despread_comparisons: int = 0
    bit_comparisons: int = 0
    mf_adds: int = 0
    mf_mults: int = 0
    fft_adds: int = 0
    fft_mults: int = 0
    diff_adds: int = 0
    diff_mults: int = 0

    def tally_correlation_search(self, ref_len: int, n_lags: int) -> None:
        """One frame-sync search; booked per search, not per lag."""
        self.frame_sync_adds += (ref_len - 1) ** 2
        self.frame_sync_mults += ref_len**2
        self.lags_searched += int(n_lags)

    def tally_despread(self, n_symbols: int) -> None:
        self.despread_adds += 31 * 16 * n_symbols
        self.despread_xors += 32 * 16 * n_symbols
        self.despread_comparisons += 15 * n_symbols

    def tally_bit_decisions(self, n_bits: int) -> None:
        self.bit_comparisons += int(n_bits)

    def tally_matched_filter(self, n_out: int, n_taps: int) -> None:
        # Complex data against real taps: two real MACs per tap per sample.
        self.mf_mults += 2 * n_out * n_taps
        self.mf_adds += 2 * n_out * (n_taps - 1)

    def tally_fft(self, n_fft: int) -> None:
        adds, mults = fft_op_counts(n_fft)
        self.fft_adds += adds
        self.fft_mults += mults

    def tally_diff_detect(self, n_samples: int) -> None:
        # One complex multiply (4 mults, 2 adds) plus the magnitude-product
        # normalization (2 mults, 1 add) per output sample.
        self.diff_mults += 6 * n_samples
        self.diff_adds += 3 * n_samples

    def merge(self, other: "RuntimeCounters") -> None:
        """Fold another instance in (for counters kept per worker)."""
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def to_report(self, chain: str = "runtime") -> OpCountReport:
        stages = []
        if self.mf_adds or self.mf_mults:
            stages.append(
                StageOps(STAGE_MF_STR, additions=self.mf_adds, multiplications=self.mf_mults)
            )
        if self.fft_adds or self.fft_mults:
            stages.append(
                StageOps(
                    STAGE_CARRIER, additions=self.fft_adds, multiplications=self.fft_mults
                )
            )
        if self.diff_adds or self.diff_mults:
            stages.append(
                StageOps(
                    STAGE_DIFF_DETECT, additions=self.diff_adds, multiplications=self.diff_mults
                )
            )
        if self.frame_sync_adds or self.frame_sync_mults:
            stages.append(
                StageOps(
                    STAGE_FRAME_SYNC,
                    additions=self.frame_sync_adds,
                    multiplications=self.frame_sync_mults,
                    other=(("lags", self.lags_searched),),
                )
            )
        if self.despread_adds or self.despread_xors:
            stages.append(
                StageOps(
                    STAGE_CHIP_TO_SYMBOL,
                    additions=self.despread_adds,
                    other=(
                        ("XOR", self.despread_xors),
                        ("comparisons", self.despread_comparisons),
                    ),
                )
            )
        if self.bit_comparisons:
            stages.append(
                StageOps(STAGE_BIT_DETECT, other=(("comparisons", self.bit_comparisons),))
            )
        return OpCountReport(chain=chain, stages=tuple(stages))
