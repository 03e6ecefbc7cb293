"""Control service tests over real HTTP connections."""

import json
import time
import urllib.error
import urllib.request
from http.client import HTTPConnection

import pytest

from appenergy.pipeline import preprocess, run_campaign
from appenergy.service import ControlService

CAMPAIGN_BODY = {
    "package": "com.example.app",
    "results_dir": "camp1",
    "iterations": 3,
    "baseline_iterations": 2,
    "seed": 7,
    "auto_advance": True,
    "rate_hz": 400,
    "post_pad_s": 0.05,
    "profile": {
        "baseline_current": 0.2,
        "active_current": 0.5,
        "voltage": 4.0,
        "noise_sd": 0.002,
    },
    "device": {"api_level": 30, "test_duration_s": 0.2, "start_offset_s": 0.05},
}


@pytest.fixture
def service(tmp_path):
    svc = ControlService(tmp_path / "root")
    svc.start()
    yield svc
    svc.stop()


def request_json(service, method, path, body=None, timeout=10):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(
        f"{service.address}{path}",
        data=data,
        method=method,
        headers={"Content-Type": "application/json"} if data else {},
    )
    with urllib.request.urlopen(req, timeout=timeout) as resp:
        return resp.status, json.loads(resp.read() or b"{}"), dict(resp.headers)


def wait_for_done(service, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        status, state, _ = request_json(service, "GET", "/api/campaign")
        if state.get("done"):
            return state
        time.sleep(0.05)
    raise TimeoutError("campaign did not finish")


def read_event_stream(service, since=0, timeout=30.0):
    """Consume the SSE stream until it closes; returns (seq, kind, payload) rows."""
    conn = HTTPConnection("127.0.0.1", service.port, timeout=timeout)
    conn.request("GET", f"/api/events?since={since}")
    resp = conn.getresponse()
    assert resp.status == 200
    assert resp.headers["Content-Type"] == "text/event-stream"
    raw = resp.read().decode()
    conn.close()
    events = []
    for block in raw.strip().split("\n\n"):
        lines = dict(line.split(": ", 1) for line in block.splitlines())
        events.append((int(lines["id"]), lines["event"], json.loads(lines["data"])))
    return events


class TestCampaignEndpoints:
    def test_create_run_and_inspect(self, service):
        status, state, _ = request_json(service, "POST", "/api/campaigns", CAMPAIGN_BODY)
        assert status == 201
        assert state["phase"] in ("baseline", "aut")
        final = wait_for_done(service)
        assert final["phase"] == "done"
        assert len(final["records"]) == 5

    def test_second_concurrent_campaign_conflicts(self, service):
        body = dict(CAMPAIGN_BODY, iterations=20, baseline_iterations=5)
        request_json(service, "POST", "/api/campaigns", body)
        with pytest.raises(urllib.error.HTTPError) as exc:
            request_json(service, "POST", "/api/campaigns", dict(body, results_dir="camp2"))
        assert exc.value.code == 409
        wait_for_done(service)

    def test_new_campaign_allowed_after_done(self, service):
        request_json(service, "POST", "/api/campaigns", CAMPAIGN_BODY)
        wait_for_done(service)
        status, _, _ = request_json(
            service, "POST", "/api/campaigns", dict(CAMPAIGN_BODY, results_dir="camp2")
        )
        assert status == 201
        wait_for_done(service)

    def test_state_before_any_campaign_is_404(self, service):
        with pytest.raises(urllib.error.HTTPError) as exc:
            request_json(service, "GET", "/api/campaign")
        assert exc.value.code == 404

    def test_preflight_failure_is_synchronous_400(self, service):
        body = dict(CAMPAIGN_BODY, device={"api_level": 19})
        with pytest.raises(urllib.error.HTTPError) as exc:
            request_json(service, "POST", "/api/campaigns", body)
        assert exc.value.code == 400

    def test_decision_without_pending_conflicts(self, service):
        request_json(service, "POST", "/api/campaigns", CAMPAIGN_BODY)
        wait_for_done(service)
        with pytest.raises(urllib.error.HTTPError) as exc:
            request_json(
                service, "POST", "/api/campaign/decision", {"kind": "next_iteration"}
            )
        assert exc.value.code == 409


class TestEventStream:
    def test_stream_delivers_all_iterations_in_order(self, service):
        request_json(service, "POST", "/api/campaigns", CAMPAIGN_BODY)
        wait_for_done(service)
        events = read_event_stream(service)
        seqs = [s for s, _, _ in events]
        assert seqs == sorted(seqs)
        assert len(set(seqs)) == len(seqs)
        kinds = [k for _, k, _ in events]
        assert kinds.count("iteration_completed") == 5
        assert kinds[-1] == "campaign_done"

    def test_since_resume_skips_history(self, service):
        request_json(service, "POST", "/api/campaigns", CAMPAIGN_BODY)
        wait_for_done(service)
        all_events = read_event_stream(service)
        midpoint = all_events[len(all_events) // 2][0]
        resumed = read_event_stream(service, since=midpoint)
        assert [s for s, _, _ in resumed] == [
            s for s, _, _ in all_events if s > midpoint
        ]

    def test_live_stream_during_campaign(self, service):
        body = dict(CAMPAIGN_BODY, iterations=2, baseline_iterations=1)
        request_json(service, "POST", "/api/campaigns", body)
        events = read_event_stream(service)  # blocks until campaign_done
        kinds = [k for _, k, _ in events]
        assert "samples_progress" in kinds
        assert kinds[-1] == "campaign_done"

    def test_decision_flow_over_http(self, service, tmp_path):
        # force a pause on every iteration: injected drops cross the threshold
        body = dict(
            CAMPAIGN_BODY,
            results_dir="camp-pause",
            iterations=1,
            baseline_iterations=0,
            auto_advance=False,
            rate_hz=5000,
            profile=dict(CAMPAIGN_BODY["profile"], dropped_samples=1100),
        )
        request_json(service, "POST", "/api/campaigns", body)
        deadline = time.time() + 20
        while time.time() < deadline:
            _, state, _ = request_json(service, "GET", "/api/campaign")
            if state.get("pending"):
                break
            time.sleep(0.05)
        assert state["pending"]["reason"] == "warning"
        before = state["current_iteration"]
        status, accepted, _ = request_json(
            service, "POST", "/api/campaign/decision", {"kind": "rerun_iteration"}
        )
        assert status == 202
        assert accepted == {"accepted": "rerun_iteration"}
        deadline = time.time() + 20
        while time.time() < deadline:
            _, state, _ = request_json(service, "GET", "/api/campaign")
            if state.get("pending"):
                break
            time.sleep(0.05)
        # re-ran the same index, warned again
        assert state["current_iteration"] == before
        request_json(service, "POST", "/api/campaign/decision", {"kind": "next_iteration"})
        wait_for_done(service)


class TestStageEndpoints:
    def test_preprocess_analyze_plot_round_trip(self, service):
        request_json(service, "POST", "/api/campaigns", CAMPAIGN_BODY)
        wait_for_done(service)
        status, pre, _ = request_json(
            service, "POST", "/api/preprocess", {"results_dir": "camp1"}
        )
        assert status == 200
        assert pre["rows"] == 3

        status, cols, _ = request_json(
            service, "GET", "/api/columns?file=camp1/data.csv"
        )
        assert cols["columns"] == [
            "package", "iteration", "energy_j", "cpu_pct", "mem_pct",
            "rx_bytes", "tx_bytes",
        ]
        assert cols["numeric"]["package"] is False
        assert cols["numeric"]["energy_j"] is True

        status, analysis, _ = request_json(
            service,
            "POST",
            "/api/analyze",
            {
                "data": ["camp1/data.csv"],
                "test": "summary",
                "dependent": "energy_j",
                "out": "camp1",
            },
        )
        assert status == 200
        assert analysis["report_md"] == "camp1/report.md"
        assert "Summary statistics" in analysis["markdown"]

        req = urllib.request.Request(
            f"{service.address}/api/plot",
            data=json.dumps(
                {
                    "data": ["camp1/data.csv"],
                    "kind": "scatter",
                    "dependent": "energy_j",
                    "independent": "iteration",
                    "out": "camp1/plot.svg",
                }
            ).encode(),
            method="POST",
            headers={"Content-Type": "application/json"},
        )
        with urllib.request.urlopen(req, timeout=10) as resp:
            assert resp.status == 200
            assert resp.headers["Content-Type"] == "image/svg+xml"
            svg = resp.read().decode()
        assert svg.count('class="point"') == 3

    def test_artifacts_listing(self, service):
        request_json(service, "POST", "/api/campaigns", CAMPAIGN_BODY)
        wait_for_done(service)
        _, listing, _ = request_json(service, "GET", "/api/artifacts")
        paths = [f["path"] for f in listing["files"]]
        assert "camp1/campaign.json" in paths
        assert any(p.endswith("Logcat_R1") for p in paths)

    def test_path_escape_rejected(self, service):
        with pytest.raises(urllib.error.HTTPError) as exc:
            request_json(service, "GET", "/api/columns?file=../../etc/passwd")
        assert exc.value.code == 400

    def test_missing_artifact_404(self, service):
        with pytest.raises(urllib.error.HTTPError) as exc:
            request_json(service, "GET", "/api/columns?file=nope.csv")
        assert exc.value.code == 404

    def test_cli_service_parity(self, service, tmp_path):
        """The preprocess endpoint and the library stage produce identical bytes."""
        request_json(service, "POST", "/api/campaigns", CAMPAIGN_BODY)
        wait_for_done(service)
        request_json(service, "POST", "/api/preprocess", {"results_dir": "camp1"})
        service_bytes = (service.root_dir / "camp1" / "data.csv").read_bytes()

        from appenergy.service import _campaign_config_from_json
        config, device = _campaign_config_from_json(
            dict(CAMPAIGN_BODY, results_dir="local"), tmp_path
        )
        run_campaign(config, device)
        local = preprocess(config.results_dir)
        assert local.data_csv.read_bytes() == service_bytes


class TestUnknownRoute:
    def test_404_json(self, service):
        with pytest.raises(urllib.error.HTTPError) as exc:
            request_json(service, "GET", "/api/nope")
        assert exc.value.code == 404
