"""Current/voltage sample traces and the pluggable sources that produce them.

Three source kinds exist: a deterministic simulated device, replay of a
previously written trace CSV, and a client for a physical sampling monitor
(see :mod:`appenergy.monitor`; without a transport it is unavailable on a
desk). Traces are persisted as CSV with header ``t_s,current_a,voltage_v``
preceded by one ``#`` metadata line carrying rate, drop count and source id
so that a written trace reads back equal to the original.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator

from .errors import (
    AcquisitionError,
    BackendUnavailableError,
    InvalidInputError,
    ParseError,
    TraceFormatError,
)

DEFAULT_RATE_HZ = 5000
DROP_WARN_THRESHOLD = 1000
TRACE_HEADER = "t_s,current_a,voltage_v"

_META_RE = re.compile(
    r"^# nominal_rate_hz=(\d+);dropped_count=(\d+);source_id=(.*)$"
)


class SourceKind(str, Enum):
    SIMULATED = "simulated"
    REPLAY = "replay"
    MONITOR = "monitor"


@dataclass(frozen=True, slots=True)
class PowerSample:
    """One instantaneous reading: seconds since sampling start, amps, volts."""

    t: float
    current: float
    voltage: float


@dataclass(slots=True)
class SampleTrace:
    samples: list[PowerSample]
    nominal_rate_hz: int = DEFAULT_RATE_HZ
    dropped_count: int = 0
    source_id: str = ""

    def __post_init__(self):
        if self.nominal_rate_hz <= 0:
            raise InvalidInputError("nominal_rate_hz must be positive")
        if self.dropped_count < 0:
            raise InvalidInputError("dropped_count must be non-negative")
        last = -1.0
        for s in self.samples:
            if s.t < 0 or s.t < last:
                raise InvalidInputError("sample times must be non-negative and ordered")
            if s.voltage <= 0:
                raise InvalidInputError("voltage must be positive")
            if s.current < 0:
                raise InvalidInputError("current must be non-negative")
            last = s.t

    @property
    def sample_period(self) -> float:
        return 1.0 / self.nominal_rate_hz

    @property
    def end_t(self) -> float:
        """Nominal end of the trace span (last sample plus one period)."""
        if not self.samples:
            return 0.0
        return self.samples[-1].t + self.sample_period


@dataclass(frozen=True)
class ReliabilityReport:
    dropped_count: int
    threshold: int
    warn: bool
    message: str


@dataclass
class WorkloadProfile:
    """Drives the simulated source.

    The active window, when set, raises the mean current from
    ``baseline_current`` to ``active_current`` for its duration; the device
    simulator places its test markers on the same window so integrated
    energy and log timestamps stay coherent.
    """

    baseline_current: float
    active_current: float
    voltage: float
    noise_sd: float = 0.0
    seed: int = 0
    active_start_s: float | None = None
    active_duration_s: float | None = None
    dropped_samples: int = 0

    def __post_init__(self):
        if not (self.active_current >= self.baseline_current >= 0):
            raise InvalidInputError(
                "need active_current >= baseline_current >= 0"
            )
        if self.noise_sd < 0:
            raise InvalidInputError("noise_sd must be non-negative")
        if self.voltage <= 0:
            raise InvalidInputError("voltage must be positive")
        if self.dropped_samples < 0:
            raise InvalidInputError("dropped_samples must be non-negative")


@dataclass
class SourceConfig:
    kind: SourceKind
    rate_hz: int = DEFAULT_RATE_HZ
    runtime_current_limit: float = 8.0
    usb_channel_enabled: bool = True
    serial_number: str | None = None
    profile: WorkloadProfile | None = None
    replay_path: Path | None = None

    def __post_init__(self):
        self.kind = SourceKind(self.kind)
        if self.rate_hz <= 0:
            raise InvalidInputError("rate_hz must be positive")
        if self.kind is SourceKind.REPLAY and self.replay_path is None:
            raise InvalidInputError("replay source requires replay_path")
        if self.kind is SourceKind.SIMULATED and self.profile is None:
            raise InvalidInputError("simulated source requires a profile")


class SampleStream:
    """Streaming acquisition from one source.

    ``chunks()`` yields lists of samples in order; ``dropped_count`` is
    final once the iterator is exhausted. One stream per acquisition.
    """

    def __init__(self, source: SourceConfig, duration: float, transport=None):
        if duration <= 0:
            raise InvalidInputError("duration must be positive")
        self.source = source
        self.duration = duration
        self.dropped_count = 0
        self.rate_hz = source.rate_hz
        self._transport = transport
        if source.kind is SourceKind.SIMULATED:
            self.source_id = f"simulated:seed={source.profile.seed}"
        elif source.kind is SourceKind.REPLAY:
            self.source_id = f"replay:{Path(source.replay_path).name}"
        else:
            self.source_id = f"monitor:{source.serial_number or 'unknown'}"

    def chunks(self, chunk_samples: int = 500) -> Iterator[list[PowerSample]]:
        if self.source.kind is SourceKind.SIMULATED:
            yield from self._simulated_chunks(chunk_samples)
        elif self.source.kind is SourceKind.REPLAY:
            yield from self._replay_chunks(chunk_samples)
        else:
            yield from self._monitor_chunks(chunk_samples)

    def _simulated_chunks(self, chunk_samples: int) -> Iterator[list[PowerSample]]:
        p = self.source.profile
        rate = self.source.rate_hz
        n = round(self.duration * rate)
        rng = random.Random(p.seed)
        dropped: set[int] = set()
        if p.dropped_samples:
            dropped = set(rng.sample(range(n), min(p.dropped_samples, n)))
        a0 = p.active_start_s
        a1 = None
        if a0 is not None and p.active_duration_s is not None:
            a1 = a0 + p.active_duration_s
        chunk: list[PowerSample] = []
        for k in range(n):
            t = k / rate
            mean = p.baseline_current
            if a1 is not None and a0 <= t < a1:
                mean = p.active_current
            if p.noise_sd > 0:
                cur = max(0.0, rng.gauss(mean, p.noise_sd))
            else:
                cur = mean
            if k in dropped:
                self.dropped_count += 1
                continue
            chunk.append(PowerSample(t, cur, p.voltage))
            if len(chunk) >= chunk_samples:
                yield chunk
                chunk = []
        if chunk:
            yield chunk

    def _replay_chunks(self, chunk_samples: int) -> Iterator[list[PowerSample]]:
        path = Path(self.source.replay_path)
        if not path.exists():
            raise AcquisitionError(f"replay file not found: {path}")
        try:
            trace = read_trace(path)
        except ParseError as exc:
            raise AcquisitionError(f"replay file corrupt: {path}: {exc}") from exc
        self.rate_hz = trace.nominal_rate_hz
        self.dropped_count = trace.dropped_count
        self.source_id = trace.source_id or self.source_id
        for i in range(0, len(trace.samples), chunk_samples):
            yield trace.samples[i : i + chunk_samples]

    def _monitor_chunks(self, chunk_samples: int) -> Iterator[list[PowerSample]]:
        if self._transport is None:
            raise BackendUnavailableError(
                "no monitor transport configured; a physical monitor is not "
                "reachable from this environment"
            )
        from .monitor import MonitorProtocolClient

        client = MonitorProtocolClient(self._transport, self.source)
        client.connect()
        try:
            trace = client.acquire(self.duration)
        finally:
            client.close()
        self.dropped_count = trace.dropped_count
        self.source_id = trace.source_id
        for i in range(0, len(trace.samples), chunk_samples):
            yield trace.samples[i : i + chunk_samples]


def acquire_trace(source: SourceConfig, duration: float, transport=None) -> SampleTrace:
    """Collect ``duration`` seconds of samples from ``source``.

    Deterministic for simulated sources under a fixed profile seed.
    """
    stream = SampleStream(source, duration, transport=transport)
    samples: list[PowerSample] = []
    for chunk in stream.chunks():
        samples.extend(chunk)
    return SampleTrace(
        samples=samples,
        nominal_rate_hz=stream.rate_hz,
        dropped_count=stream.dropped_count,
        source_id=stream.source_id,
    )


def check_reliability(
    trace: SampleTrace, threshold: int = DROP_WARN_THRESHOLD
) -> ReliabilityReport:
    """Flag the trace when at least ``threshold`` samples were dropped."""
    warn = trace.dropped_count >= threshold
    if warn:
        message = (
            f"{trace.source_id}: {trace.dropped_count} samples dropped "
            f"(threshold {threshold}); check current/voltage data"
        )
    else:
        message = f"{trace.source_id}: {trace.dropped_count} samples dropped"
    return ReliabilityReport(
        dropped_count=trace.dropped_count,
        threshold=threshold,
        warn=warn,
        message=message,
    )


def write_trace(trace: SampleTrace, path: Path | str) -> Path:
    """Persist a trace; floats use shortest round-trip repr."""
    path = Path(path)
    lines = [
        f"# nominal_rate_hz={trace.nominal_rate_hz};"
        f"dropped_count={trace.dropped_count};source_id={trace.source_id}",
        TRACE_HEADER,
    ]
    for s in trace.samples:
        lines.append(f"{s.t!r},{s.current!r},{s.voltage!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def read_trace(path: Path | str) -> SampleTrace:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise TraceFormatError(f"{path}: empty file, expected trace header")
    rate = DEFAULT_RATE_HZ
    dropped = 0
    source_id = ""
    header_lineno = 1
    meta = _META_RE.match(lines[0])
    if meta:
        rate = int(meta.group(1))
        dropped = int(meta.group(2))
        source_id = meta.group(3)
        header_lineno = 2
    if len(lines) < header_lineno or lines[header_lineno - 1] != TRACE_HEADER:
        raise TraceFormatError(
            f"{path}: expected header {TRACE_HEADER!r}", line=header_lineno
        )
    samples: list[PowerSample] = []
    for lineno, line in enumerate(lines[header_lineno:], start=header_lineno + 1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"expected 3 fields, got {len(parts)}", line=lineno)
        try:
            t, cur, volt = (float(p) for p in parts)
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", line=lineno) from None
        samples.append(PowerSample(t, cur, volt))
    try:
        return SampleTrace(
            samples=samples,
            nominal_rate_hz=rate,
            dropped_count=dropped,
            source_id=source_id,
        )
    except InvalidInputError as exc:
        raise TraceFormatError(f"{path}: {exc}") from exc
