"""Device abstraction: preflight checks, app lifecycle, test execution.

The shipped implementation is :class:`SimulatedDevice`, which runs an
iteration without hardware and emits logcat, CPU/memory and network text
deterministically from a seed. Its test window timing is exposed through
``planned_timing`` so the campaign runner can shape the simulated power
source to the same window (what a real phone and monitor do physically).
:class:`AdbDeviceStub` documents the shell command surface a real adb-driven
agent would execute but does not implement it.
"""

from __future__ import annotations

import random
import zlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import InvalidInputError, IterationFailedError

MIN_API_LEVEL = 21  # Android 5.0

_MARKER_TAG = "TestMarker"
_META_TAG = "TestMeta"


class RunMode(str, Enum):
    BASELINE = "baseline"
    AUT = "aut"


class DeviceAction(str, Enum):
    RERUN_ITERATION = "rerun_iteration"
    NEXT_ITERATION = "next_iteration"
    UNINSTALL_AUT = "uninstall_aut"
    CLEAR_AUT_DATA = "clear_aut_data"


@dataclass(frozen=True)
class DeviceInfo:
    api_level: int
    connected: bool
    brightness_min: bool
    nonessential_services_stopped: bool

    @property
    def usable(self) -> bool:
        return self.connected and self.brightness_min and self.api_level >= MIN_API_LEVEL


@dataclass
class RunPlan:
    app_package: str = ""
    app_apk_path: Path | None = None
    test_apk_path: Path | None = None
    test_class: str = ""
    test_runner: str = ""
    mode: RunMode = RunMode.AUT
    device_data_path: Path | None = None

    def __post_init__(self):
        self.mode = RunMode(self.mode)
        if self.mode is RunMode.AUT and not self.app_package:
            raise InvalidInputError("aut mode requires app_package")
        if self.mode is RunMode.BASELINE and (self.app_apk_path or self.test_apk_path):
            raise InvalidInputError("baseline mode must not install or run an app")


@dataclass(frozen=True)
class IterationArtifacts:
    logcat_text: str
    cpu_mem_text: str
    net_text: str
    device_api_level: int
    trigger_offset: float  # host-trace seconds at which the device test started


@dataclass(frozen=True)
class IterationTiming:
    """Start offset and test duration, quantized to whole milliseconds so
    log timestamps and the power source active window agree exactly."""

    start_offset_s: float
    test_duration_s: float


def package_uid(package: str) -> int:
    """Stable per-package app UID, Android-style 10xxx range."""
    return 10000 + zlib.crc32(package.encode("utf-8")) % 10000


class SimulatedDevice:
    """Deterministic in-memory phone."""

    def __init__(
        self,
        api_level: int = 30,
        connected: bool = True,
        brightness_min: bool = True,
        nonessential_services_stopped: bool = True,
        test_duration_s: float = 1.0,
        start_offset_s: float = 0.25,
        duration_jitter: float = 0.0,
    ):
        self.api_level = api_level
        self.connected = connected
        self.brightness_min = brightness_min
        self.nonessential_services_stopped = nonessential_services_stopped
        self.test_duration_s = test_duration_s
        self.start_offset_s = start_offset_s
        self.duration_jitter = duration_jitter
        self.installed: set[str] = set()
        self.app_data: set[str] = set()
        self.crash_next = False

    # -- environment -------------------------------------------------------

    def preflight(self) -> DeviceInfo:
        return DeviceInfo(
            api_level=self.api_level,
            connected=self.connected,
            brightness_min=self.brightness_min,
            nonessential_services_stopped=self.nonessential_services_stopped,
        )

    def install(self, package: str) -> None:
        self.installed.add(package)
        self.app_data.add(package)

    def apply_action(self, action: DeviceAction, package: str) -> str:
        """Mutate install/data state; uninstalling twice is a no-op."""
        action = DeviceAction(action)
        if action is DeviceAction.UNINSTALL_AUT:
            self.installed.discard(package)
            self.app_data.discard(package)
            return f"uninstalled {package}"
        if action is DeviceAction.CLEAR_AUT_DATA:
            self.app_data.discard(package)
            return f"cleared data for {package}"
        return f"no device-side effect for {action.value}"

    # -- iteration execution ------------------------------------------------

    def planned_timing(self, seed: int) -> IterationTiming:
        """The window this device will use for ``run_iteration(seed)``."""
        start_ms = round(self.start_offset_s * 1000)
        base_ms = round(self.test_duration_s * 1000)
        if self.duration_jitter > 0:
            rng = random.Random(seed ^ 0x74494D45)
            span = int(base_ms * self.duration_jitter)
            dur_ms = base_ms + rng.randint(-span, span) if span else base_ms
        else:
            dur_ms = base_ms
        dur_ms = max(dur_ms, 1)
        return IterationTiming(start_ms / 1000.0, dur_ms / 1000.0)

    def run_iteration(self, plan: RunPlan, seed: int) -> IterationArtifacts:
        """Clear per-iteration stats, run the test (or idle for baseline),
        return the captured text artifacts. Deterministic under seed."""
        rng = random.Random(seed)
        timing = self.planned_timing(seed)
        base_ms = rng.randrange(0, 3_600_000)  # log-time anchor within the hour

        if plan.mode is RunMode.AUT:
            if self.crash_next:
                self.crash_next = False
                partial = self._render_lines(
                    [(base_ms, 1001, 1001, "I", "ActivityManager", "Start proc crashed")]
                )
                raise IterationFailedError(
                    f"test process for {plan.app_package} crashed", partial_logcat=partial
                )
            if plan.app_package not in self.installed:
                raise IterationFailedError(
                    f"{plan.app_package} is not installed", partial_logcat=""
                )
            return self._run_aut(plan, rng, timing, base_ms)
        return self._run_baseline(rng, timing, base_ms)

    def _run_aut(
        self, plan: RunPlan, rng: random.Random, timing: IterationTiming, base_ms: int
    ) -> IterationArtifacts:
        package = plan.app_package
        uid = package_uid(package)
        pid = rng.randrange(2000, 30000)
        tid = pid + rng.randrange(1, 40)
        sys_pid = 1001
        start_ms = base_ms + round(timing.start_offset_s * 1000)
        end_ms = start_ms + round(timing.test_duration_s * 1000)

        lines: list[tuple[int, int, int, str, str, str]] = [
            (base_ms, sys_pid, sys_pid, "I", "ActivityManager",
             f"Start proc {pid}:{package}/u0a{uid - 10000}"),
            (base_ms + 20, pid, tid, "I", _META_TAG,
             f"PKG {package} UID {uid} PID {pid}"),
            (start_ms, pid, tid, "I", _MARKER_TAG, "TEST_START"),
        ]
        step_count = rng.randrange(2, 6)
        for i in range(step_count):
            at = start_ms + (i + 1) * (end_ms - start_ms) // (step_count + 1)
            lines.append((at, pid, tid, "D", package, f"scenario step {i + 1}"))
        noise_at = base_ms + rng.randrange(0, round(timing.test_duration_s * 1000))
        lines.append((noise_at, 2999, 2999, "W", "Sensors", "batching drift"))
        lines.append((end_ms, pid, tid, "I", _MARKER_TAG, "TEST_END"))
        lines.append((end_ms + 40, sys_pid, sys_pid, "I", "ActivityManager",
                      f"Killing {pid}:{package}"))
        lines.sort(key=lambda item: item[0])

        cpu = round(rng.uniform(8.0, 40.0), 1)
        mem = round(rng.uniform(1.5, 8.0), 1)
        cpu_mem_text = (
            "com.android.systemui 3.2% cpu 5.1% mem\n"
            f"{package} {cpu}% cpu {mem}% mem\n"
        )
        rx1, tx1 = rng.randrange(100, 200_000), rng.randrange(100, 50_000)
        rx2, tx2 = rng.randrange(0, 50_000), rng.randrange(0, 10_000)
        net_text = (
            "uid rx_bytes tx_bytes\n"
            f"1000 {rng.randrange(0, 5000)} {rng.randrange(0, 5000)}\n"
            f"{uid} {rx1} {tx1}\n"
            f"{uid} {rx2} {tx2}\n"
        )
        return IterationArtifacts(
            logcat_text=self._render_lines(lines),
            cpu_mem_text=cpu_mem_text,
            net_text=net_text,
            device_api_level=self.api_level,
            trigger_offset=timing.start_offset_s,
        )

    def _run_baseline(
        self, rng: random.Random, timing: IterationTiming, base_ms: int
    ) -> IterationArtifacts:
        lines = [
            (base_ms, 1001, 1001, "I", "ActivityManager", "mem trim level 1"),
            (base_ms + rng.randrange(50, 500), 2999, 2999, "W", "Sensors",
             "batching drift"),
        ]
        cpu_mem_text = "com.android.systemui 3.2% cpu 5.1% mem\n"
        net_text = (
            "uid rx_bytes tx_bytes\n"
            f"1000 {rng.randrange(0, 5000)} {rng.randrange(0, 5000)}\n"
        )
        return IterationArtifacts(
            logcat_text=self._render_lines(lines),
            cpu_mem_text=cpu_mem_text,
            net_text=net_text,
            device_api_level=self.api_level,
            trigger_offset=timing.start_offset_s,
        )

    def _render_lines(self, lines) -> str:
        out = []
        for ms, pid, tid, level, tag, message in lines:
            ts = _format_device_time(ms)
            if self.api_level >= 24:
                out.append(f"{ts} {pid:5d} {tid:5d} {level} {tag}: {message}")
            else:
                out.append(f"{ts} {level}/{tag}({pid:5d}): {message}")
        return "\n".join(out) + "\n"


def _format_device_time(ms_of_day: int) -> str:
    """Render a ms offset as a fixed-date month-day wall clock stamp."""
    ss, ms = divmod(ms_of_day, 1000)
    mm, ss = divmod(ss, 60)
    hh, mm = divmod(mm, 60)
    hh = hh % 24
    return f"06-12 {hh:02d}:{mm:02d}:{ss:02d}.{ms:03d}"


class AdbDeviceStub:
    """Shell-command surface for a physical phone driven over adb.

    Command plans mirror what the campaign needs: clear stats, install,
    run an instrumented test, pull files. Execution is not implemented in
    this package; wire the returned commands to a real adb transport.
    """

    def __init__(self, serial: str | None = None):
        self.serial = serial

    def _adb(self) -> str:
        return f"adb -s {self.serial}" if self.serial else "adb"

    def clear_stats_commands(self) -> list[str]:
        return [
            f"{self._adb()} shell dumpsys batterystats --reset",
            f"{self._adb()} shell dumpsys procstats --clear",
            f"{self._adb()} shell cmd netstats clear",
            f"{self._adb()} logcat -c",
        ]

    def install_commands(self, plan: RunPlan) -> list[str]:
        return [
            f"{self._adb()} install -r {plan.app_apk_path}",
            f"{self._adb()} install -r {plan.test_apk_path}",
        ]

    def instrument_commands(self, plan: RunPlan) -> list[str]:
        return [
            f"{self._adb()} shell am instrument -w -e class {plan.test_class} "
            f"{plan.app_package}.test/{plan.test_runner}"
        ]

    def pull_commands(self, plan: RunPlan, dest: Path) -> list[str]:
        return [
            f"{self._adb()} logcat -d > {dest}/logcat.txt",
            f"{self._adb()} pull {plan.device_data_path} {dest}",
        ]

    def preflight(self) -> DeviceInfo:
        raise NotImplementedError("real adb preflight is not implemented here")

    def run_iteration(self, plan: RunPlan, seed: int) -> IterationArtifacts:
        raise NotImplementedError("real adb execution is not implemented here")
