"""Campaign state machine: phases, iteration loop, operator decisions.

A campaign measures a baseline phase (device idle, no app) and an
app-under-test phase, each a configured number of iterations. Per
iteration, power sampling and the device test run concurrently; samples
flow through a bounded FIFO owned by the runner so progress can be
reported while acquisition is live. Artifacts land in
``<results_dir>/<phase>/`` under ``_R<i>`` names and every mutation
rewrites the ``campaign.json`` manifest.

Pauses: a reliability warning pauses the loop for an operator decision
unless ``auto_advance`` is set; a failed iteration always pauses. The
four decisions are re-run (same index, files overwritten), next,
uninstall app, and clear app data.
"""

from __future__ import annotations

import json
import queue
import threading
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable

from .device import DeviceAction, IterationTiming, RunMode, RunPlan
from .errors import (
    DecisionRequiredError,
    InvalidInputError,
    InvalidTransitionError,
    IterationFailedError,
    PreflightError,
)
from .sampling import (
    ReliabilityReport,
    SampleStream,
    SampleTrace,
    SourceConfig,
    SourceKind,
    check_reliability,
    write_trace,
)

MANIFEST_NAME = "campaign.json"

_FIFO_CAPACITY = 32
_PROGRESS_POINTS_PER_CHUNK = 8


class Phase(str, Enum):
    IDLE = "idle"
    BASELINE = "baseline"
    AUT = "aut"
    DONE = "done"


@dataclass
class CampaignConfig:
    plan: RunPlan
    source: SourceConfig
    results_dir: Path
    iterations: int = 10  # 10-30 gives a reasonable sampling distribution
    baseline_iterations: int = 10
    auto_advance: bool = False
    seed: int = 0
    warn_threshold: int = 1000
    post_pad_s: float = 0.25
    rerun_config: str | None = None  # "reinstall" | "clear-data"

    def __post_init__(self):
        self.results_dir = Path(self.results_dir)
        if self.iterations < 1:
            raise InvalidInputError("iterations must be >= 1")
        if self.baseline_iterations < 0:
            raise InvalidInputError("baseline_iterations must be >= 0")
        if self.rerun_config not in (None, "reinstall", "clear-data"):
            raise InvalidInputError(f"unknown rerun_config {self.rerun_config!r}")
        if self.plan.mode is not RunMode.AUT:
            raise InvalidInputError("campaign plan must be an aut-mode plan")


@dataclass
class IterationRecord:
    phase: Phase
    index: int
    seed: int
    trace_path: Path
    logcat_path: Path
    cpu_mem_path: Path
    net_path: Path
    reliability: ReliabilityReport
    trigger_offset: float
    window_start_s: float
    window_end_s: float
    api_level: int
    failed: bool = False


@dataclass
class PendingDecision:
    reason: str  # "warning" | "failure"
    message: str


@dataclass(frozen=True)
class CampaignEvent:
    seq: int
    kind: str
    payload: dict


class CampaignState:
    """Read-only view assembled by the engine."""

    def __init__(self, engine: "CampaignEngine"):
        self._engine = engine

    @property
    def phase(self) -> Phase:
        return self._engine._phase

    @property
    def current_iteration(self) -> int:
        return self._engine._current

    @property
    def records(self) -> list[IterationRecord]:
        return list(self._engine._records)

    @property
    def pending(self) -> PendingDecision | None:
        return self._engine._pending

    @property
    def pending_warning(self) -> ReliabilityReport | None:
        return self._engine._pending_report


def iteration_seed(master: int, phase: Phase, index: int) -> int:
    phase_code = 1 if phase is Phase.BASELINE else 2
    return (master * 1_000_003 + phase_code * 101_159 + index * 7_919) % (2**31)


class CampaignEngine:
    """Single-writer campaign driver.

    ``executor`` runs one iteration and returns its record; the default
    executor samples power and drives the device concurrently and persists
    artifacts. Tests may inject a lightweight executor to exercise the
    state machine alone. ``on_event`` receives every CampaignEvent in seq
    order.
    """

    def __init__(
        self,
        config: CampaignConfig,
        device,
        *,
        executor: Callable[[Phase, int, int], IterationRecord] | None = None,
        on_event: Callable[[CampaignEvent], None] | None = None,
    ):
        self.config = config
        self.device = device
        self._executor = executor or self._run_real_iteration
        self._on_event = on_event
        self._phase = Phase.IDLE
        self._current = 0
        self._records: list[IterationRecord] = []
        self._pending: PendingDecision | None = None
        self._pending_report: ReliabilityReport | None = None
        self._rerun_requested = False
        self._seq = 0
        self._lock = threading.RLock()
        self.state = CampaignState(self)

    # -- events --------------------------------------------------------------

    def _emit(self, kind: str, payload: dict) -> None:
        self._seq += 1
        event = CampaignEvent(seq=self._seq, kind=kind, payload=payload)
        if self._on_event is not None:
            self._on_event(event)

    # -- lifecycle -------------------------------------------------------------

    def start(self) -> CampaignState:
        with self._lock:
            if self._phase is not Phase.IDLE:
                raise InvalidTransitionError(f"cannot start from phase {self._phase.value}")
            info = self.device.preflight()
            if not info.usable:
                raise PreflightError(
                    "device not ready: "
                    f"connected={info.connected}, brightness_min={info.brightness_min}, "
                    f"api_level={info.api_level} (need >= 21)"
                )
            try:
                self.config.results_dir.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise InvalidInputError(f"cannot create results dir: {exc}") from exc
            if hasattr(self.device, "install"):
                self.device.install(self.config.plan.app_package)
            self._phase = (
                Phase.BASELINE if self.config.baseline_iterations > 0 else Phase.AUT
            )
            self._current = 0
            self._write_manifest()
            self._emit("phase_changed", {"phase": self._phase.value})
            return self.state

    def _phase_total(self) -> int:
        if self._phase is Phase.BASELINE:
            return self.config.baseline_iterations
        if self._phase is Phase.AUT:
            return self.config.iterations
        return 0

    def execute_iteration(self) -> IterationRecord:
        with self._lock:
            if self._phase not in (Phase.BASELINE, Phase.AUT):
                raise InvalidTransitionError(
                    f"cannot execute an iteration in phase {self._phase.value}"
                )
            if self._pending is not None:
                raise InvalidTransitionError(
                    "operator decision pending; decide before executing"
                )
            index = self._current if self._rerun_requested else self._current + 1
            phase = self._phase
            seed = iteration_seed(self.config.seed, phase, index)
        self._emit("iteration_started", {"phase": phase.value, "index": index})
        record = self._executor(phase, index, seed)
        with self._lock:
            self._records = [
                r for r in self._records if not (r.phase == phase and r.index == index)
            ]
            self._records.append(record)
            self._current = index
            self._rerun_requested = False
            self._emit(
                "iteration_completed",
                {
                    "phase": phase.value,
                    "index": index,
                    "failed": record.failed,
                    "dropped_count": record.reliability.dropped_count,
                    "warn": record.reliability.warn,
                },
            )
            if record.failed:
                self._pending = PendingDecision(
                    "failure", f"iteration {index} failed; re-run or skip"
                )
                self._pending_report = None
                self._emit(
                    "decision_required",
                    {"phase": phase.value, "index": index, "reason": "failure"},
                )
            elif record.reliability.warn:
                self._emit(
                    "warning",
                    {
                        "phase": phase.value,
                        "index": index,
                        "dropped_count": record.reliability.dropped_count,
                        "threshold": record.reliability.threshold,
                        "message": record.reliability.message,
                    },
                )
                if not self.config.auto_advance:
                    self._pending = PendingDecision("warning", record.reliability.message)
                    self._pending_report = record.reliability
                    self._emit(
                        "decision_required",
                        {"phase": phase.value, "index": index, "reason": "warning"},
                    )
            if self._pending is None and self._current >= self._phase_total():
                self._advance_phase()
            self._write_manifest()
            return record

    def decide(self, action: DeviceAction) -> CampaignState:
        action = DeviceAction(action)
        with self._lock:
            if self._phase not in (Phase.BASELINE, Phase.AUT):
                raise InvalidTransitionError(
                    f"no decision applies in phase {self._phase.value}"
                )
            if self._current == 0:
                raise InvalidTransitionError("no iteration executed yet in this phase")
            if action is DeviceAction.RERUN_ITERATION:
                self._apply_rerun_config()
                self._rerun_requested = True
                self._clear_pending()
            elif action is DeviceAction.NEXT_ITERATION:
                self._clear_pending()
                if self._current >= self._phase_total():
                    self._advance_phase()
            else:
                self.device.apply_action(action, self.config.plan.app_package)
            self._write_manifest()
            return self.state

    def _apply_rerun_config(self) -> None:
        if self._phase is not Phase.AUT:
            return
        package = self.config.plan.app_package
        if self.config.rerun_config == "reinstall":
            self.device.apply_action(DeviceAction.UNINSTALL_AUT, package)
            self.device.install(package)
        elif self.config.rerun_config == "clear-data":
            self.device.apply_action(DeviceAction.CLEAR_AUT_DATA, package)

    def _clear_pending(self) -> None:
        self._pending = None
        self._pending_report = None

    def _advance_phase(self) -> None:
        if self._phase is Phase.BASELINE:
            self._phase = Phase.AUT
            self._current = 0
            self._emit("phase_changed", {"phase": self._phase.value})
        elif self._phase is Phase.AUT:
            self._phase = Phase.DONE
            self._emit("phase_changed", {"phase": self._phase.value})
            self._emit("campaign_done", {"records": len(self._records)})

    def run_to_completion(
        self, decide_cb: Callable[[CampaignState], DeviceAction] | None = None
    ) -> CampaignState:
        """Drive the loop until done; ``decide_cb`` resolves pauses."""
        if self._phase is Phase.IDLE:
            self.start()
        while self._phase is not Phase.DONE:
            if self._pending is not None:
                if decide_cb is None:
                    raise DecisionRequiredError(
                        f"{self._pending.reason}: {self._pending.message}"
                    )
                self.decide(decide_cb(self.state))
            else:
                self.execute_iteration()
        return self.state

    # -- the real iteration executor -------------------------------------------

    def _plan_for(self, phase: Phase) -> RunPlan:
        if phase is Phase.AUT:
            return self.config.plan
        return RunPlan(mode=RunMode.BASELINE, device_data_path=self.config.plan.device_data_path)

    def _iteration_timing(self, seed: int) -> IterationTiming:
        if hasattr(self.device, "planned_timing"):
            return self.device.planned_timing(seed)
        return IterationTiming(start_offset_s=0.25, test_duration_s=1.0)

    def _iteration_source(self, phase: Phase, seed: int, timing: IterationTiming) -> SourceConfig:
        source = self.config.source
        if source.kind is not SourceKind.SIMULATED:
            return source
        profile = replace(
            source.profile,
            seed=seed,
            active_start_s=timing.start_offset_s if phase is Phase.AUT else None,
            active_duration_s=timing.test_duration_s if phase is Phase.AUT else None,
        )
        return replace(source, profile=profile)

    def _run_real_iteration(self, phase: Phase, index: int, seed: int) -> IterationRecord:
        timing = self._iteration_timing(seed)
        duration = timing.start_offset_s + timing.test_duration_s + self.config.post_pad_s
        source = self._iteration_source(phase, seed, timing)
        stream = SampleStream(source, duration)
        expected = round(duration * stream.rate_hz)

        fifo: queue.Queue = queue.Queue(maxsize=_FIFO_CAPACITY)
        done = object()

        def sample_worker() -> None:
            try:
                for chunk in stream.chunks():
                    fifo.put(chunk)
                fifo.put(done)
            except Exception as exc:  # surfaced on the consumer side
                fifo.put(exc)

        device_outcome: dict = {}

        def device_worker() -> None:
            try:
                device_outcome["artifacts"] = self.device.run_iteration(
                    self._plan_for(phase), seed
                )
            except IterationFailedError as exc:
                device_outcome["error"] = exc

        sampler = threading.Thread(target=sample_worker, name="sampling")
        runner = threading.Thread(target=device_worker, name="device")
        sampler.start()
        runner.start()

        samples = []
        while True:
            item = fifo.get()
            if item is done:
                break
            if isinstance(item, Exception):
                sampler.join()
                runner.join()
                raise item
            samples.extend(item)
            self._emit(
                "samples_progress",
                {
                    "phase": phase.value,
                    "index": index,
                    "collected": len(samples),
                    "expected": expected,
                    "points": _downsample(item),
                },
            )
        sampler.join()
        runner.join()

        trace = SampleTrace(
            samples=samples,
            nominal_rate_hz=stream.rate_hz,
            dropped_count=stream.dropped_count,
            source_id=stream.source_id,
        )
        reliability = check_reliability(trace, self.config.warn_threshold)

        failed = "error" in device_outcome
        phase_dir = self.config.results_dir / phase.value
        if failed:
            phase_dir = phase_dir / "failed"
        phase_dir.mkdir(parents=True, exist_ok=True)

        trace_path = phase_dir / f"trace_R{index}.csv"
        logcat_path = phase_dir / f"Logcat_R{index}"
        cpu_mem_path = phase_dir / f"cpumem_R{index}.txt"
        net_path = phase_dir / f"net_R{index}.txt"
        write_trace(trace, trace_path)
        if failed:
            error: IterationFailedError = device_outcome["error"]
            logcat_path.write_text(error.partial_logcat, encoding="utf-8")
            cpu_mem_path.write_text("", encoding="utf-8")
            net_path.write_text("", encoding="utf-8")
            api_level = getattr(self.device, "api_level", 0)
        else:
            artifacts = device_outcome["artifacts"]
            logcat_path.write_text(artifacts.logcat_text, encoding="utf-8")
            cpu_mem_path.write_text(artifacts.cpu_mem_text, encoding="utf-8")
            net_path.write_text(artifacts.net_text, encoding="utf-8")
            api_level = artifacts.device_api_level

        return IterationRecord(
            phase=phase,
            index=index,
            seed=seed,
            trace_path=trace_path,
            logcat_path=logcat_path,
            cpu_mem_path=cpu_mem_path,
            net_path=net_path,
            reliability=reliability,
            trigger_offset=timing.start_offset_s,
            window_start_s=timing.start_offset_s,
            window_end_s=timing.start_offset_s + timing.test_duration_s,
            api_level=api_level,
            failed=failed,
        )

    # -- manifest ---------------------------------------------------------------

    def _write_manifest(self) -> None:
        self.config.results_dir.mkdir(parents=True, exist_ok=True)
        path = self.config.results_dir / MANIFEST_NAME
        path.write_text(
            json.dumps(self.manifest_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    def manifest_dict(self) -> dict:
        cfg = self.config
        profile = None
        if cfg.source.profile is not None:
            p = cfg.source.profile
            profile = {
                "baseline_current": p.baseline_current,
                "active_current": p.active_current,
                "voltage": p.voltage,
                "noise_sd": p.noise_sd,
                "dropped_samples": p.dropped_samples,
            }
        records = []
        for r in sorted(self._records, key=lambda r: (r.phase.value, r.index)):
            records.append(
                {
                    "phase": r.phase.value,
                    "index": r.index,
                    "seed": r.seed,
                    "failed": r.failed,
                    "api_level": r.api_level,
                    "trigger_offset": r.trigger_offset,
                    "window_start_s": r.window_start_s,
                    "window_end_s": r.window_end_s,
                    "files": {
                        "trace": _rel(r.trace_path, cfg.results_dir),
                        "logcat": _rel(r.logcat_path, cfg.results_dir),
                        "cpu_mem": _rel(r.cpu_mem_path, cfg.results_dir),
                        "net": _rel(r.net_path, cfg.results_dir),
                    },
                    "reliability": {
                        "dropped_count": r.reliability.dropped_count,
                        "threshold": r.reliability.threshold,
                        "warn": r.reliability.warn,
                    },
                }
            )
        return {
            "package": cfg.plan.app_package,
            "phase": self._phase.value,
            "current_iteration": self._current,
            "pending": (
                {"reason": self._pending.reason, "message": self._pending.message}
                if self._pending
                else None
            ),
            "config": {
                "iterations": cfg.iterations,
                "baseline_iterations": cfg.baseline_iterations,
                "seed": cfg.seed,
                "auto_advance": cfg.auto_advance,
                "warn_threshold": cfg.warn_threshold,
                "post_pad_s": cfg.post_pad_s,
                "rerun_config": cfg.rerun_config,
                "source_kind": cfg.source.kind.value,
                "rate_hz": cfg.source.rate_hz,
                "profile": profile,
                "plan": {
                    "app_package": cfg.plan.app_package,
                    "app_apk_path": str(cfg.plan.app_apk_path or ""),
                    "test_apk_path": str(cfg.plan.test_apk_path or ""),
                    "test_class": cfg.plan.test_class,
                    "test_runner": cfg.plan.test_runner,
                    "device_data_path": str(cfg.plan.device_data_path or ""),
                },
            },
            "records": records,
        }

    def state_dict(self) -> dict:
        """JSON-ready snapshot for the control service."""
        with self._lock:
            manifest = self.manifest_dict()
        manifest["iterations"] = self.config.iterations
        manifest["baseline_iterations"] = self.config.baseline_iterations
        manifest["results_dir"] = str(self.config.results_dir)
        manifest["done"] = self._phase is Phase.DONE
        return manifest


def _rel(path: Path, root: Path) -> str:
    try:
        return str(Path(path).relative_to(root))
    except ValueError:
        return str(path)


def _downsample(chunk: list) -> list[list[float]]:
    if not chunk:
        return []
    step = max(1, len(chunk) // _PROGRESS_POINTS_PER_CHUNK)
    points = []
    for i in range(0, len(chunk), step):
        bin_samples = chunk[i : i + step]
        mean_current = sum(s.current for s in bin_samples) / len(bin_samples)
        points.append([round(bin_samples[0].t, 4), round(mean_current, 5)])
    return points


def read_manifest(results_dir: Path | str) -> dict:
    path = Path(results_dir) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no campaign manifest at {path}")
    return json.loads(path.read_text(encoding="utf-8"))
