import random

import pytest

from appenergy.errors import (
    AcquisitionError,
    BackendUnavailableError,
    InvalidInputError,
    ParseError,
    TraceFormatError,
)
from appenergy.sampling import (
    PowerSample,
    SampleTrace,
    SourceConfig,
    WorkloadProfile,
    acquire_trace,
    check_reliability,
    read_trace,
    write_trace,
)


def simulated_source(**profile_kwargs) -> SourceConfig:
    defaults = dict(baseline_current=0.2, active_current=0.5, voltage=4.0, seed=42)
    defaults.update(profile_kwargs)
    return SourceConfig(kind="simulated", rate_hz=5000, profile=WorkloadProfile(**defaults))


class TestSimulatedAcquisition:
    def test_zero_noise_constant_profile(self):
        src = simulated_source(noise_sd=0.0)
        trace = acquire_trace(src, duration=1.0)
        assert len(trace.samples) == 5000
        assert all(s.current == 0.2 and s.voltage == 4.0 for s in trace.samples)
        assert trace.dropped_count == 0

    def test_determinism_under_seed(self):
        src = simulated_source(noise_sd=0.01)
        t1 = acquire_trace(src, duration=0.5)
        t2 = acquire_trace(src, duration=0.5)
        assert t1.samples == t2.samples

    def test_different_seeds_differ(self):
        t1 = acquire_trace(simulated_source(noise_sd=0.01, seed=1), duration=0.2)
        t2 = acquire_trace(simulated_source(noise_sd=0.01, seed=2), duration=0.2)
        assert t1.samples != t2.samples

    def test_sample_count_plus_dropped_matches_duration(self):
        rng = random.Random(7)
        for _ in range(20):
            rate = rng.choice([500, 1000, 5000])
            duration = rng.uniform(0.05, 0.8)
            dropped = rng.choice([0, 3, 50])
            src = SourceConfig(
                kind="simulated",
                rate_hz=rate,
                profile=WorkloadProfile(
                    baseline_current=0.1,
                    active_current=0.1,
                    voltage=3.8,
                    seed=rng.randrange(1000),
                    dropped_samples=dropped,
                ),
            )
            trace = acquire_trace(src, duration)
            assert abs(len(trace.samples) + trace.dropped_count - duration * rate) <= 1
            assert trace.dropped_count == min(dropped, round(duration * rate))

    def test_active_window_raises_current(self):
        # 0.25 and 0.5 are exact binary fractions, so the window edges are
        # bit-identical however they are computed
        src = simulated_source(
            noise_sd=0.0, active_start_s=0.25, active_duration_s=0.5
        )
        trace = acquire_trace(src, duration=1.0)
        active = [s for s in trace.samples if 0.25 <= s.t < 0.75]
        idle = [s for s in trace.samples if not (0.25 <= s.t < 0.75)]
        assert len(active) == 2500
        assert all(s.current == 0.5 for s in active)
        assert all(s.current == 0.2 for s in idle)

    def test_noise_clipped_at_zero(self):
        src = simulated_source(baseline_current=0.0, active_current=0.0, noise_sd=0.5)
        trace = acquire_trace(src, duration=0.1)
        assert all(s.current >= 0 for s in trace.samples)

    def test_duration_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            acquire_trace(simulated_source(), duration=0)


class TestReliability:
    @pytest.mark.parametrize(
        "dropped,expected_warn",
        [(0, False), (999, False), (1000, True), (1001, True)],
    )
    def test_threshold_boundary(self, dropped, expected_warn):
        trace = SampleTrace(samples=[], dropped_count=dropped, source_id="rig-1")
        report = check_reliability(trace)
        assert report.warn is expected_warn
        assert report.dropped_count == dropped

    def test_message_names_source(self):
        trace = SampleTrace(samples=[], dropped_count=1200, source_id="rig-7")
        report = check_reliability(trace)
        assert "rig-7" in report.message
        assert report.warn

    def test_custom_threshold(self):
        trace = SampleTrace(samples=[], dropped_count=10, source_id="x")
        assert check_reliability(trace, threshold=10).warn
        assert not check_reliability(trace, threshold=11).warn


class TestTraceIO:
    def test_round_trip_exact(self, tmp_path):
        src = simulated_source(noise_sd=0.013)
        trace = acquire_trace(src, duration=0.25)
        path = write_trace(trace, tmp_path / "trace.csv")
        assert read_trace(path) == trace

    def test_empty_trace_round_trip(self, tmp_path):
        trace = SampleTrace(samples=[], nominal_rate_hz=1234, source_id="empty")
        path = write_trace(trace, tmp_path / "empty.csv")
        back = read_trace(path)
        assert back == trace
        assert back.samples == []

    def test_three_samples_three_rows(self, tmp_path):
        samples = [PowerSample(i / 10, 0.1, 4.0) for i in range(3)]
        trace = SampleTrace(samples=samples, nominal_rate_hz=10)
        path = write_trace(trace, tmp_path / "t.csv")
        lines = path.read_text().splitlines()
        assert lines[1] == "t_s,current_a,voltage_v"
        assert len(lines) == 2 + 3

    def test_non_numeric_current_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t_s,current_a,voltage_v\n0.0,abc,4.0\n")
        with pytest.raises(ParseError) as exc:
            read_trace(path)
        assert exc.value.line == 2

    def test_header_mismatch(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,amps,volts\n0.0,0.1,4.0\n")
        with pytest.raises(TraceFormatError):
            read_trace(path)

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t_s,current_a,voltage_v\n0.0,0.1\n")
        with pytest.raises(ParseError) as exc:
            read_trace(path)
        assert exc.value.line == 2

    def test_round_trip_random_traces(self, tmp_path):
        rng = random.Random(99)
        for trial in range(25):
            n = rng.randrange(0, 200)
            t = 0.0
            samples = []
            for _ in range(n):
                t += rng.uniform(0, 0.01)
                samples.append(
                    PowerSample(t, rng.uniform(0, 3), rng.uniform(0.5, 5))
                )
            trace = SampleTrace(
                samples=samples,
                nominal_rate_hz=rng.choice([100, 5000, 12345]),
                dropped_count=rng.randrange(0, 2000),
                source_id=f"fuzz-{trial}",
            )
            path = write_trace(trace, tmp_path / f"t{trial}.csv")
            assert read_trace(path) == trace

    def test_headerless_file_without_metadata_line(self, tmp_path):
        # metadata comment is optional on read
        path = tmp_path / "plain.csv"
        path.write_text("t_s,current_a,voltage_v\n0.0,0.1,4.0\n")
        trace = read_trace(path)
        assert trace.nominal_rate_hz == 5000
        assert trace.samples == [PowerSample(0.0, 0.1, 4.0)]


class TestReplaySource:
    def test_replay_round_trips(self, tmp_path):
        original = acquire_trace(simulated_source(noise_sd=0.005), duration=0.2)
        path = write_trace(original, tmp_path / "rec.csv")
        replay = SourceConfig(kind="replay", replay_path=path)
        assert acquire_trace(replay, duration=0.2) == original

    def test_missing_file(self, tmp_path):
        replay = SourceConfig(kind="replay", replay_path=tmp_path / "nope.csv")
        with pytest.raises(AcquisitionError):
            acquire_trace(replay, duration=1.0)

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "corrupt.csv"
        path.write_text("t_s,current_a,voltage_v\n0.0,bogus,4.0\n")
        replay = SourceConfig(kind="replay", replay_path=path)
        with pytest.raises(AcquisitionError):
            acquire_trace(replay, duration=1.0)


class TestMonitorSource:
    def test_unavailable_without_transport(self):
        src = SourceConfig(kind="monitor", rate_hz=100)
        with pytest.raises(BackendUnavailableError):
            acquire_trace(src, duration=0.1)


class TestInvariantValidation:
    def test_unordered_times_rejected(self):
        with pytest.raises(InvalidInputError):
            SampleTrace(samples=[PowerSample(0.2, 0.1, 4.0), PowerSample(0.1, 0.1, 4.0)])

    def test_nonpositive_voltage_rejected(self):
        with pytest.raises(InvalidInputError):
            SampleTrace(samples=[PowerSample(0.0, 0.1, 0.0)])

    def test_negative_current_rejected(self):
        with pytest.raises(InvalidInputError):
            SampleTrace(samples=[PowerSample(0.0, -0.1, 4.0)])

    def test_profile_invariants(self):
        with pytest.raises(InvalidInputError):
            WorkloadProfile(baseline_current=0.5, active_current=0.2, voltage=4.0)
        with pytest.raises(InvalidInputError):
            WorkloadProfile(baseline_current=0.1, active_current=0.2, voltage=4.0, noise_sd=-1)

    def test_source_config_invariants(self):
        with pytest.raises(InvalidInputError):
            SourceConfig(kind="replay")  # missing replay_path
        with pytest.raises(InvalidInputError):
            SourceConfig(kind="simulated")  # missing profile
