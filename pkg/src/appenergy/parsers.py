"""Parsers for device log and statistics text into typed records.

Two logcat line grammars are supported, dispatched on the device API level
(the format drifted across Android releases):

  threadtime (API >= 24)   ``MM-DD HH:MM:SS.mmm PID TID LEVEL TAG: msg``
  time       (API 21..23)  ``MM-DD HH:MM:SS.mmm LEVEL/TAG(PID): msg``

The app's UID and PID come from a ``PKG <package> UID <uid> PID <pid>``
metadata line that the test harness logs at startup. CPU/memory rows are
``<package> <cpu>% cpu <mem>% mem``; network rows are ``<uid> <rx> <tx>``
with an optional ``uid rx_bytes tx_bytes`` header.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError, UidNotFoundError, WindowNotFoundError

LOG_LEVELS = frozenset("VDIWEF")

DEFAULT_MARKER_TAG = "TestMarker"
START_MARKER = "TEST_START"
END_MARKER = "TEST_END"

# API level at which the device log switched to the threadtime layout.
THREADTIME_MIN_API = 24
MIN_SUPPORTED_API = 21

CLEAN_LOG_HEADER = ["t_ms", "pid", "tid", "level", "tag", "message"]

_THREADTIME_RE = re.compile(
    r"^(\d{2})-(\d{2})\s+(\d{2}):(\d{2}):(\d{2})\.(\d{3})"
    r"\s+(\d+)\s+(\d+)\s+([VDIWEF])\s+(.*?)\s*:\s?(.*)$"
)
_TIME_RE = re.compile(
    r"^(\d{2})-(\d{2})\s+(\d{2}):(\d{2}):(\d{2})\.(\d{3})"
    r"\s+([VDIWEF])/(.*?)\(\s*(\d+)\):\s?(.*)$"
)
_META_RE = re.compile(r"PKG\s+(\S+)\s+UID\s+(\d+)\s+PID\s+(\d+)")
_CPU_MEM_ROW_RE = re.compile(r"^(\S+)\s+(\S+)%\s+cpu\s+(\S+)%\s+mem$")
_NET_HEADER_RE = re.compile(r"^uid\s+rx_bytes\s+tx_bytes$")
_NET_ROW_RE = re.compile(r"^(\d+)\s+(-?\d+)\s+(-?\d+)$")


@dataclass(frozen=True, slots=True)
class LogEvent:
    t: int  # milliseconds within the device timeline
    pid: int
    tid: int
    level: str
    tag: str
    message: str


@dataclass
class CleanLog:
    uid: int
    pid: int
    events: list[LogEvent]
    test_start_t: int
    test_end_t: int
    api_level: int
    parsed_count: int = 0
    skipped_count: int = 0


@dataclass(frozen=True)
class ResourceStats:
    cpu_pct: float
    mem_pct: float

    def __post_init__(self):
        if not (0 <= self.cpu_pct <= 800):
            raise ParseError(f"cpu_pct {self.cpu_pct} outside [0, 800]")
        if not (0 <= self.mem_pct <= 100):
            raise ParseError(f"mem_pct {self.mem_pct} outside [0, 100]")


@dataclass(frozen=True)
class NetStats:
    rx_bytes: int
    tx_bytes: int


def _timestamp_ms(month: int, day: int, hh: int, mm: int, ss: int, ms: int) -> tuple[int, int]:
    """Milliseconds within the month; the month tags rollover detection."""
    t = (((day - 1) * 24 + hh) * 3600 + mm * 60 + ss) * 1000 + ms
    return month, t


def _parse_line_with_month(line: str, api_level: int) -> tuple[LogEvent | None, int]:
    if api_level >= THREADTIME_MIN_API:
        m = _THREADTIME_RE.match(line)
        if not m:
            return None, 0
        month, day, hh, mm, ss, ms, pid, tid, level, tag, msg = m.groups()
        month_i, t = _timestamp_ms(
            int(month), int(day), int(hh), int(mm), int(ss), int(ms)
        )
        return LogEvent(t, int(pid), int(tid), level, tag, msg), month_i
    m = _TIME_RE.match(line)
    if not m:
        return None, 0
    month, day, hh, mm, ss, ms, level, tag, pid, msg = m.groups()
    month_i, t = _timestamp_ms(int(month), int(day), int(hh), int(mm), int(ss), int(ms))
    return LogEvent(t, int(pid), 0, level, tag.strip(), msg), month_i


def parse_logcat(
    text: str,
    api_level: int,
    tags: frozenset[str] | set[str] = frozenset(),
    package: str | None = None,
    *,
    strict: bool = False,
    marker_tag: str = DEFAULT_MARKER_TAG,
    start_marker: str = START_MARKER,
    end_marker: str = END_MARKER,
) -> CleanLog:
    """Clean raw logcat text down to the app's events and test window.

    The UID/PID metadata line selects the process; events are kept when
    their PID matches or their tag is in ``tags`` (the marker tag is always
    kept). Unparseable lines are counted and skipped unless ``strict``.
    """
    if not text.strip():
        raise ParseError("empty logcat text")
    if api_level < MIN_SUPPORTED_API:
        raise ParseError(f"api_level {api_level} unsupported (need >= {MIN_SUPPORTED_API})")

    meta = None
    for m in _META_RE.finditer(text):
        if package is None or m.group(1) == package:
            meta = m
            break
    if meta is None:
        raise UidNotFoundError(
            f"no 'PKG ... UID ... PID ...' metadata line"
            + (f" for package {package}" if package else "")
        )
    uid = int(meta.group(2))
    pid = int(meta.group(3))

    keep_tags = set(tags) | {marker_tag}
    events: list[LogEvent] = []
    months: set[int] = set()
    parsed = 0
    skipped = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        event, month = _parse_line_with_month(line, api_level)
        if event is None:
            if strict:
                raise ParseError(f"unparseable logcat line {line!r}", line=lineno)
            skipped += 1
            continue
        parsed += 1
        months.add(month)
        if event.pid == pid or event.tag in keep_tags:
            events.append(event)
    if len(months) > 1:
        raise ParseError("log spans a month rollover; split the capture")

    starts = [e for e in events if e.tag == marker_tag and e.message == start_marker]
    ends = [e for e in events if e.tag == marker_tag and e.message == end_marker]
    if len(starts) != 1 or len(ends) != 1:
        raise WindowNotFoundError(
            f"need exactly one {start_marker} and one {end_marker}, "
            f"found {len(starts)}/{len(ends)}"
        )
    t0, t1 = starts[0].t, ends[0].t
    if t0 >= t1:
        raise WindowNotFoundError(f"{start_marker} at {t0} not before {end_marker} at {t1}")

    return CleanLog(
        uid=uid,
        pid=pid,
        events=events,
        test_start_t=t0,
        test_end_t=t1,
        api_level=api_level,
        parsed_count=parsed,
        skipped_count=skipped,
    )


def parse_cpu_mem(text: str, package: str, api_level: int) -> ResourceStats:
    """CPU and memory percentages for one package; zeros when it has no row
    (a baseline capture)."""
    if not text.strip():
        raise ParseError("empty cpu/mem text")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        m = _CPU_MEM_ROW_RE.match(line.strip())
        if not m:
            raise ParseError(f"malformed cpu/mem row {line!r}", line=lineno)
        name, cpu_s, mem_s = m.groups()
        if name != package:
            continue
        try:
            cpu = float(cpu_s)
            mem = float(mem_s)
        except ValueError:
            raise ParseError(
                f"non-numeric cpu/mem field in {line!r}", line=lineno
            ) from None
        return ResourceStats(cpu_pct=cpu, mem_pct=mem)
    return ResourceStats(cpu_pct=0.0, mem_pct=0.0)


def parse_netstats(text: str, uid: int) -> NetStats:
    """Sum rx/tx bytes over all rows belonging to ``uid``."""
    if not text.strip():
        raise ParseError("empty network stats text")
    rx = 0
    tx = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if _NET_HEADER_RE.match(stripped):
            continue
        m = _NET_ROW_RE.match(stripped)
        if not m:
            raise ParseError(f"malformed network row {line!r}", line=lineno)
        row_uid, row_rx, row_tx = (int(g) for g in m.groups())
        if row_rx < 0 or row_tx < 0:
            raise ParseError(f"negative byte count in {line!r}", line=lineno)
        if row_uid == uid:
            rx += row_rx
            tx += row_tx
    return NetStats(rx_bytes=rx, tx_bytes=tx)


def write_clean_log(clean: CleanLog, path: Path | str) -> Path:
    """Persist the cleaned events as CSV ``t_ms,pid,tid,level,tag,message``."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CLEAN_LOG_HEADER)
        for e in clean.events:
            writer.writerow([e.t, e.pid, e.tid, e.level, e.tag, e.message])
    return path
