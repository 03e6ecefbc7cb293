"""HTTP control surface: campaign control, live events, stage endpoints.

JSON over HTTP with one server-pushed event stream (``text/event-stream``)
per subscriber. One campaign runs at a time, mirroring the one-monitor
constraint; campaign mutations are serialized through a single worker
thread, and operator decisions are handed to it over a queue. Every
pipeline stage the CLI offers is also reachable here with identical
outputs.

Routes (all under ``/api``):

  POST /api/campaigns            start a campaign (409 while one is active)
  GET  /api/campaign             current campaign state
  POST /api/campaign/decision    {"kind": <device action>} while paused
  GET  /api/events?since=N       event stream, resumes after seq N
  GET  /api/artifacts            files under the server root
  GET  /api/columns?file=F       CSV header of an artifact
  POST /api/preprocess           run pre-processing on a campaign folder
  POST /api/analyze              run an analysis, write report.md/.html
  POST /api/plot                 render a figure, returns the SVG
"""

from __future__ import annotations

import json
import logging
import mimetypes
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .analysis import AnalysisSpec
from .campaign import CampaignConfig, CampaignEngine, CampaignEvent, Phase
from .dataset import Dataset, parse_filter
from .device import DeviceAction, RunPlan, SimulatedDevice
from .errors import (
    AppEnergyError,
    ConflictError,
    InvalidInputError,
    PreflightError,
)
from .pipeline import analyze, plot, preprocess
from .plots import DEFAULT_COLORS, PlotSpec

log = logging.getLogger(__name__)

DEFAULT_PORT_ENV = "APPENERGY_PORT"


def _campaign_config_from_json(body: dict, root: Path) -> tuple[CampaignConfig, SimulatedDevice]:
    from .sampling import SourceConfig, WorkloadProfile

    try:
        package = body["package"]
        results_dir = body["results_dir"]
    except KeyError as exc:
        raise InvalidInputError(f"missing required field {exc.args[0]!r}") from exc

    profile_body = body.get("profile", {})
    profile = WorkloadProfile(
        baseline_current=profile_body.get("baseline_current", 0.2),
        active_current=profile_body.get("active_current", 0.5),
        voltage=profile_body.get("voltage", 4.0),
        noise_sd=profile_body.get("noise_sd", 0.0),
        dropped_samples=profile_body.get("dropped_samples", 0),
    )
    source_kind = body.get("source", "simulated")
    source_args = dict(kind=source_kind, rate_hz=body.get("rate_hz", 5000))
    if source_kind == "simulated":
        source_args["profile"] = profile
    elif source_kind == "replay":
        source_args["replay_path"] = _resolve_under(root, body["replay_path"])
    source = SourceConfig(**source_args)

    plan = RunPlan(
        app_package=package,
        app_apk_path=body.get("app_apk"),
        test_apk_path=body.get("test_apk"),
        test_class=body.get("test_class", ""),
        test_runner=body.get("test_runner", ""),
        device_data_path=body.get("device_data_path"),
    )
    config = CampaignConfig(
        plan=plan,
        source=source,
        results_dir=_resolve_under(root, results_dir),
        iterations=body.get("iterations", 10),
        baseline_iterations=body.get("baseline_iterations", 10),
        auto_advance=body.get("auto_advance", False),
        seed=body.get("seed", 0),
        warn_threshold=body.get("warn_threshold", 1000),
        post_pad_s=body.get("post_pad_s", 0.25),
        rerun_config=body.get("rerun_config"),
    )
    device_body = body.get("device", {})
    device = SimulatedDevice(
        api_level=device_body.get("api_level", 30),
        test_duration_s=device_body.get("test_duration_s", 1.0),
        start_offset_s=device_body.get("start_offset_s", 0.25),
        duration_jitter=device_body.get("duration_jitter", 0.0),
    )
    return config, device


def _resolve_under(root: Path, relative: str) -> Path:
    candidate = (root / relative).resolve()
    if not str(candidate).startswith(str(root.resolve())):
        raise InvalidInputError(f"path {relative!r} escapes the server root")
    return candidate


class ControlService:
    """Owns the campaign worker, the event history, and stream fan-out."""

    def __init__(self, root_dir: Path | str, host: str = "127.0.0.1", port: int = 0,
                 ui_dir: Path | str | None = None):
        self.root_dir = Path(root_dir)
        self.root_dir.mkdir(parents=True, exist_ok=True)
        self.ui_dir = Path(ui_dir) if ui_dir else None
        self._host = host
        self._requested_port = port
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None
        self._engine: CampaignEngine | None = None
        self._device: SimulatedDevice | None = None
        self._worker: threading.Thread | None = None
        self._decision_q: queue.Queue = queue.Queue()
        self._events: list[CampaignEvent] = []
        self._subscribers: list[queue.Queue] = []
        self._campaign_error: str | None = None
        self._lock = threading.RLock()
        self._stopping = False

    # -- server lifecycle ---------------------------------------------------

    def start(self) -> None:
        handler = _make_handler(self)
        self._httpd = ThreadingHTTPServer((self._host, self._requested_port), handler)
        self._httpd.daemon_threads = True
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def address(self) -> str:
        return f"http://{self._host}:{self.port}"

    def stop(self) -> None:
        self._stopping = True
        with self._lock:
            for q in self._subscribers:
                q.put(None)
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
        if self._worker is not None and self._worker.is_alive():
            # unblock a worker waiting for a decision
            self._decision_q.put(None)
            self._worker.join(timeout=5)

    def serve_forever(self) -> None:
        handler = _make_handler(self)
        self._httpd = ThreadingHTTPServer((self._host, self._requested_port), handler)
        self._httpd.daemon_threads = True
        log.info("control service on %s", self.address)
        self._httpd.serve_forever()

    # -- campaign control -----------------------------------------------------

    def start_campaign(self, body: dict) -> dict:
        with self._lock:
            if self._engine is not None and self._engine.state.phase not in (Phase.DONE,):
                if self._worker is not None and self._worker.is_alive():
                    raise ConflictError("a campaign is already active")
            config, device = _campaign_config_from_json(body, self.root_dir)
            engine = CampaignEngine(config, device, on_event=self._publish)
            self._events = []
            self._campaign_error = None
            self._decision_q = queue.Queue()
            engine.start()  # synchronous preflight; raises PreflightError to the client
            self._engine = engine
            self._device = device
            self._worker = threading.Thread(
                target=self._campaign_worker, args=(engine,), daemon=True
            )
            self._worker.start()
            return engine.state_dict()

    def _campaign_worker(self, engine: CampaignEngine) -> None:
        try:
            while engine.state.phase is not Phase.DONE and not self._stopping:
                if engine.state.pending is not None:
                    action = self._decision_q.get()
                    if action is None:
                        return
                    engine.decide(action)
                else:
                    engine.execute_iteration()
        except AppEnergyError as exc:
            log.exception("campaign worker stopped")
            with self._lock:
                self._campaign_error = str(exc)

    def post_decision(self, kind: str) -> dict:
        with self._lock:
            if self._engine is None:
                raise ConflictError("no campaign")
            if self._engine.state.pending is None:
                raise ConflictError("no decision pending")
            try:
                action = DeviceAction(kind)
            except ValueError:
                raise InvalidInputError(f"unknown decision kind {kind!r}") from None
            self._decision_q.put(action)
            return {"accepted": action.value}

    def campaign_state(self) -> dict:
        with self._lock:
            if self._engine is None:
                raise FileNotFoundError("no campaign has been started")
            state = self._engine.state_dict()
            if self._campaign_error:
                state["error"] = self._campaign_error
            return state

    # -- event stream -----------------------------------------------------------

    def _publish(self, event: CampaignEvent) -> None:
        with self._lock:
            self._events.append(event)
            for q in self._subscribers:
                q.put(event)

    def subscribe(self) -> tuple[queue.Queue, list[CampaignEvent]]:
        with self._lock:
            q: queue.Queue = queue.Queue()
            self._subscribers.append(q)
            return q, list(self._events)

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)


def _make_handler(service: ControlService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        # -- plumbing -----------------------------------------------------

        def log_message(self, fmt, *args):  # quiet by default
            log.debug("%s - %s", self.address_string(), fmt % args)

        def _cors(self) -> None:
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")

        def _send_json(self, status: int, obj) -> None:
            data = json.dumps(obj).encode("utf-8")
            self.send_response(status)
            self._cors()
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _send_error_json(self, status: int, exc: Exception) -> None:
            self._send_json(
                status, {"error": type(exc).__name__, "message": str(exc)}
            )

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length", 0))
            if length == 0:
                return {}
            raw = self.rfile.read(length)
            try:
                return json.loads(raw)
            except json.JSONDecodeError as exc:
                raise InvalidInputError(f"invalid JSON body: {exc}") from exc

        def _dispatch(self, method: str) -> None:
            path = urlparse(self.path).path
            try:
                route = _ROUTES.get((method, path))
                if route is not None:
                    route(self)
                elif method == "GET" and (
                    path.startswith("/ui") or path == "/"
                ) and service.ui_dir:
                    self._serve_ui(path)
                else:
                    self._send_json(404, {"error": "NotFound", "message": path})
            except ConflictError as exc:
                self._send_error_json(409, exc)
            except FileNotFoundError as exc:
                self._send_error_json(404, exc)
            except PreflightError as exc:
                self._send_error_json(400, exc)
            except AppEnergyError as exc:
                self._send_error_json(400, exc)
            except BrokenPipeError:
                pass
            except Exception as exc:  # pragma: no cover - defensive
                log.exception("unhandled service error")
                self._send_error_json(500, exc)

        def do_GET(self) -> None:
            self._dispatch("GET")

        def do_POST(self) -> None:
            self._dispatch("POST")

        def do_OPTIONS(self) -> None:
            self.send_response(204)
            self._cors()
            self.send_header("Content-Length", "0")
            self.end_headers()

        # -- routes ---------------------------------------------------------

        def route_start_campaign(self) -> None:
            state = service.start_campaign(self._read_body())
            self._send_json(201, state)

        def route_campaign_state(self) -> None:
            self._send_json(200, service.campaign_state())

        def route_decision(self) -> None:
            body = self._read_body()
            if "kind" not in body:
                raise InvalidInputError("decision body needs a 'kind' field")
            self._send_json(202, service.post_decision(body["kind"]))

        def route_events(self) -> None:
            params = parse_qs(urlparse(self.path).query)
            since = int(params.get("since", ["0"])[0])
            q, history = service.subscribe()
            try:
                self.send_response(200)
                self._cors()
                self.send_header("Content-Type", "text/event-stream")
                self.send_header("Cache-Control", "no-cache")
                self.send_header("Connection", "close")
                self.end_headers()
                last = since
                done = False
                for event in history:
                    if event.seq > last:
                        self._write_event(event)
                        last = event.seq
                        done = done or event.kind == "campaign_done"
                while not done and not service._stopping:
                    try:
                        event = q.get(timeout=0.5)
                    except queue.Empty:
                        continue
                    if event is None:
                        break
                    if event.seq <= last:
                        continue
                    self._write_event(event)
                    last = event.seq
                    done = event.kind == "campaign_done"
            except (BrokenPipeError, ConnectionResetError):
                pass
            finally:
                service.unsubscribe(q)

        def _write_event(self, event: CampaignEvent) -> None:
            payload = json.dumps(event.payload)
            chunk = f"id: {event.seq}\nevent: {event.kind}\ndata: {payload}\n\n"
            self.wfile.write(chunk.encode("utf-8"))
            self.wfile.flush()

        def route_artifacts(self) -> None:
            files = []
            for path in sorted(service.root_dir.rglob("*")):
                if path.is_file():
                    files.append(
                        {
                            "path": str(path.relative_to(service.root_dir)),
                            "size": path.stat().st_size,
                        }
                    )
            self._send_json(200, {"files": files})

        def route_columns(self) -> None:
            params = parse_qs(urlparse(self.path).query)
            if "file" not in params:
                raise InvalidInputError("columns endpoint needs ?file=")
            path = _resolve_under(service.root_dir, params["file"][0])
            if not path.exists():
                raise FileNotFoundError(f"no such artifact: {params['file'][0]}")
            dataset = Dataset.from_csv(path)
            self._send_json(
                200,
                {
                    "columns": dataset.column_names,
                    "numeric": {
                        name: dataset.is_numeric(name) for name in dataset.column_names
                    },
                },
            )

        def route_preprocess(self) -> None:
            body = self._read_body()
            results_dir = self._results_dir_from(body)
            result = preprocess(results_dir)
            self._send_json(
                200,
                {
                    "data_csv": str(result.data_csv.relative_to(service.root_dir)),
                    "average_csv": str(result.average_csv.relative_to(service.root_dir)),
                    "rows": len(result.rows),
                    "skipped_failed": result.skipped_failed,
                },
            )

        def route_analyze(self) -> None:
            body = self._read_body()
            data_paths = self._data_paths_from(body)
            spec = AnalysisSpec(
                test=body.get("test", "summary"),
                dependent=body["dependent"],
                independent=body.get("independent"),
                filter=parse_filter(body["filter"]) if body.get("filter") else None,
            )
            out_dir = _resolve_under(service.root_dir, body.get("out", "analysis"))
            md, html, report = analyze(
                data_paths, spec, out_dir, alpha=body.get("alpha", 0.05)
            )
            result = None
            if report.result is not None:
                result = {
                    "test": report.result.test.value,
                    "statistic": report.result.statistic,
                    "df": list(report.result.df),
                    "p_value": report.result.p_value,
                    "interpretation": report.result.interpretation,
                }
            self._send_json(
                200,
                {
                    "report_md": str(md.relative_to(service.root_dir)),
                    "report_html": str(html.relative_to(service.root_dir)),
                    "result": result,
                    "markdown": report.markdown,
                },
            )

        def route_plot(self) -> None:
            body = self._read_body()
            data_paths = self._data_paths_from(body)
            spec = PlotSpec(
                kind=body.get("kind", "box"),
                dependent=body["dependent"],
                independent=body["independent"],
                filter=parse_filter(body["filter"]) if body.get("filter") else None,
                title=body.get("title", ""),
                label_font_pt=body.get("label_font_pt", 12),
                legend_colors=tuple(body["legend_colors"])
                if body.get("legend_colors")
                else DEFAULT_COLORS,
                width_px=body.get("width_px", 640),
                height_px=body.get("height_px", 480),
                x_label_order=body.get("x_label_order"),
            )
            out = _resolve_under(service.root_dir, body.get("out", "plot.svg"))
            path = plot(data_paths, spec, out)
            svg = path.read_bytes()
            self.send_response(200)
            self._cors()
            self.send_header("Content-Type", "image/svg+xml")
            self.send_header("Content-Length", str(len(svg)))
            self.send_header("X-Plot-Path", str(path.relative_to(service.root_dir)))
            self.end_headers()
            self.wfile.write(svg)

        def _results_dir_from(self, body: dict) -> Path:
            if "results_dir" in body:
                return _resolve_under(service.root_dir, body["results_dir"])
            with service._lock:
                if service._engine is None:
                    raise InvalidInputError(
                        "no active campaign; pass results_dir explicitly"
                    )
                return service._engine.config.results_dir

        def _data_paths_from(self, body: dict) -> list[Path]:
            data = body.get("data")
            if not data:
                raise InvalidInputError("need 'data': [paths to data.csv]")
            if isinstance(data, str):
                data = [data]
            return [_resolve_under(service.root_dir, p) for p in data]

        def _serve_ui(self, path: str) -> None:
            rel = path[len("/ui"):].lstrip("/") if path.startswith("/ui") else ""
            rel = rel or "index.html"
            target = (service.ui_dir / rel).resolve()
            if not str(target).startswith(str(service.ui_dir.resolve())) or not target.is_file():
                self._send_json(404, {"error": "NotFound", "message": path})
                return
            data = target.read_bytes()
            ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
            self.send_response(200)
            self._cors()
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

    _ROUTES = {
        ("POST", "/api/campaigns"): Handler.route_start_campaign,
        ("GET", "/api/campaign"): Handler.route_campaign_state,
        ("POST", "/api/campaign/decision"): Handler.route_decision,
        ("GET", "/api/events"): Handler.route_events,
        ("GET", "/api/artifacts"): Handler.route_artifacts,
        ("GET", "/api/columns"): Handler.route_columns,
        ("POST", "/api/preprocess"): Handler.route_preprocess,
        ("POST", "/api/analyze"): Handler.route_analyze,
        ("POST", "/api/plot"): Handler.route_plot,
    }

    return Handler
