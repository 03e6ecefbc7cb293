"""Window extraction, joule integration, baseline subtraction, data files.

Energy is integrated with the rectangle rule at the nominal sample period
(sum of current x voltage x 1/rate). That matches fixed-rate capture
hardware and is insensitive to per-sample timestamp jitter; switching to
trapezoidal integration would only touch :func:`integrate_energy`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    EmptyTraceError,
    InvalidInputError,
    MissingBaselineError,
    WindowOutOfRangeError,
)
from .parsers import CleanLog
from .sampling import SampleTrace

log = logging.getLogger(__name__)

DATA_CSV = "data.csv"
AVERAGE_DATA_CSV = "average_data.csv"
DATA_HEADER = "package,iteration,energy_j,cpu_pct,mem_pct,rx_bytes,tx_bytes"
AVERAGE_HEADER = "package,n,energy_j_mean,cpu_pct_mean,mem_pct_mean,rx_mean,tx_mean"


@dataclass(frozen=True)
class Window:
    """Half-open [start, end) interval on the trace timeline, in seconds."""

    start: float
    end: float

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise InvalidInputError(f"need 0 <= start < end, got [{self.start}, {self.end})")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class EnergyRow:
    package: str
    iteration: int
    energy_j: float
    cpu_pct: float
    mem_pct: float
    rx_bytes: int
    tx_bytes: int
    baseline_subtracted: bool = False

    def __post_init__(self):
        if self.iteration < 1:
            raise InvalidInputError("iteration must be >= 1")
        if self.energy_j < 0 and not self.baseline_subtracted:
            raise InvalidInputError("raw energy cannot be negative")

    @property
    def negative_flagged(self) -> bool:
        """Negative net energy: legal after subtraction, but worth seeing."""
        return self.baseline_subtracted and self.energy_j < 0


@dataclass
class AggregateRow:
    package: str
    n: int
    energy_j_mean: float
    cpu_pct_mean: float
    mem_pct_mean: float
    rx_mean: float
    tx_mean: float


def extract_window(trace: SampleTrace, window: Window) -> SampleTrace:
    """Samples with ``window.start <= t < window.end``, metadata preserved.

    The window must lie within the trace span, give or take one sample
    period at each edge.
    """
    if not trace.samples:
        raise EmptyTraceError("cannot window an empty trace")
    period = trace.sample_period
    first_t = trace.samples[0].t
    last_t = trace.samples[-1].t
    if window.start < first_t - period or window.end > last_t + 2 * period:
        raise WindowOutOfRangeError(
            f"window [{window.start}, {window.end}) outside trace span "
            f"[{first_t}, {last_t + period}] of {trace.source_id}"
        )
    kept = [s for s in trace.samples if window.start <= s.t < window.end]
    return SampleTrace(
        samples=kept,
        nominal_rate_hz=trace.nominal_rate_hz,
        dropped_count=0,
        source_id=trace.source_id,
    )


def integrate_energy(trace: SampleTrace) -> float:
    """Joules over the trace: sum(current * voltage) / nominal rate."""
    if not trace.samples:
        raise EmptyTraceError("cannot integrate an empty trace")
    power_sum = math.fsum(s.current * s.voltage for s in trace.samples)
    return power_sum / trace.nominal_rate_hz


def subtract_baseline(
    aut_energies: list[float], baseline_energies: list[float]
) -> list[float]:
    """Subtract the mean baseline energy from every app-under-test energy."""
    if not aut_energies:
        raise InvalidInputError("no app energies to correct")
    if not baseline_energies:
        raise MissingBaselineError("baseline energy list is empty")
    baseline_mean = math.fsum(baseline_energies) / len(baseline_energies)
    return [e - baseline_mean for e in aut_energies]


def window_from_log(clean: CleanLog, trigger_offset: float) -> Window:
    """Map the device-log test window onto the trace timeline.

    ``trigger_offset`` is the trace time at which the device test started,
    i.e. the moment of the start marker; the window width comes from the
    log timestamps.
    """
    width_s = (clean.test_end_t - clean.test_start_t) / 1000.0
    return Window(start=trigger_offset, end=trigger_offset + width_s)


def aggregate_rows(rows: list[EnergyRow]) -> AggregateRow:
    packages = {r.package for r in rows}
    if len(packages) != 1:
        raise InvalidInputError(f"rows must share one package, got {sorted(packages)}")
    n = len(rows)
    return AggregateRow(
        package=rows[0].package,
        n=n,
        energy_j_mean=math.fsum(r.energy_j for r in rows) / n,
        cpu_pct_mean=math.fsum(r.cpu_pct for r in rows) / n,
        mem_pct_mean=math.fsum(r.mem_pct for r in rows) / n,
        rx_mean=math.fsum(r.rx_bytes for r in rows) / n,
        tx_mean=math.fsum(r.tx_bytes for r in rows) / n,
    )


def emit_data_files(rows: list[EnergyRow], out_dir: Path | str) -> tuple[Path, Path]:
    """Write per-iteration ``data.csv`` and one-row ``average_data.csv``."""
    if not rows:
        raise InvalidInputError("no rows to emit")
    agg = aggregate_rows(rows)  # validates the single-package precondition
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    for r in rows:
        if r.negative_flagged:
            log.warning(
                "iteration %d of %s has negative net energy %.6g J; "
                "baseline may be noisy",
                r.iteration,
                r.package,
                r.energy_j,
            )

    data_path = out_dir / DATA_CSV
    lines = [DATA_HEADER]
    for r in rows:
        lines.append(
            f"{r.package},{r.iteration},{r.energy_j!r},{r.cpu_pct!r},"
            f"{r.mem_pct!r},{r.rx_bytes},{r.tx_bytes}"
        )
    data_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

    avg_path = out_dir / AVERAGE_DATA_CSV
    avg_line = (
        f"{agg.package},{agg.n},{agg.energy_j_mean!r},{agg.cpu_pct_mean!r},"
        f"{agg.mem_pct_mean!r},{agg.rx_mean!r},{agg.tx_mean!r}"
    )
    avg_path.write_text(
        AVERAGE_HEADER + "\n" + avg_line + "\n", encoding="utf-8", newline="\n"
    )
    return data_path, avg_path
