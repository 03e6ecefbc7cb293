import math

import pytest

from appenergy.energy import (
    AggregateRow,
    EnergyRow,
    Window,
    aggregate_rows,
    emit_data_files,
    extract_window,
    integrate_energy,
    subtract_baseline,
    window_from_log,
)
from appenergy.errors import (
    EmptyTraceError,
    InvalidInputError,
    MissingBaselineError,
    WindowOutOfRangeError,
)
from appenergy.parsers import parse_logcat
from appenergy.sampling import PowerSample, SampleTrace


def constant_trace(current=0.2, voltage=4.0, rate=5000, duration=1.0) -> SampleTrace:
    n = round(rate * duration)
    samples = [PowerSample(k / rate, current, voltage) for k in range(n)]
    return SampleTrace(samples=samples, nominal_rate_hz=rate, source_id="const")


def ramp_trace(rate=5000, duration=1.0, voltage=4.0) -> SampleTrace:
    n = round(rate * duration)
    samples = [PowerSample(k / rate, k / n, voltage) for k in range(n)]
    return SampleTrace(samples=samples, nominal_rate_hz=rate, source_id="ramp")


class TestIntegration:
    def test_constant_trace_energy(self):
        # 0.2 A * 4.0 V * 1 s
        assert integrate_energy(constant_trace()) == pytest.approx(0.8, rel=1e-9)

    def test_zero_current(self):
        assert integrate_energy(constant_trace(current=0.0)) == 0.0

    def test_linear_ramp_vs_closed_form(self):
        # independent oracle: closed-form 4 * int_0^1 t dt = 2 J; the
        # left-rectangle sum underestimates by at most one sample of full power
        rate = 5000
        energy = integrate_energy(ramp_trace(rate=rate))
        assert abs(energy - 2.0) <= 2 * 4.0 / rate
        # the rectangle sum itself is exactly 2 - 2/n
        assert energy == pytest.approx(2.0 - 2.0 / rate, rel=1e-12)

    def test_empty_trace(self):
        with pytest.raises(EmptyTraceError):
            integrate_energy(SampleTrace(samples=[]))

    def test_scaling_doubles_energy(self):
        t1 = constant_trace(current=0.1, duration=0.2)
        t2 = constant_trace(current=0.2, duration=0.2)
        assert integrate_energy(t2) == pytest.approx(2 * integrate_energy(t1), rel=1e-12)

    def test_additivity_adjacent_windows(self):
        trace = ramp_trace(rate=1000, duration=1.0)
        left = extract_window(trace, Window(0.0, 0.5))
        right = extract_window(trace, Window(0.5, 1.0))
        total = integrate_energy(trace)
        parts = integrate_energy(left) + integrate_energy(right)
        assert abs(parts - total) <= 1e-9 * total


class TestExtractWindow:
    def test_identity_window(self):
        trace = constant_trace(duration=0.5)
        out = extract_window(trace, Window(0.0, 0.5))
        assert out.samples == trace.samples
        assert out.nominal_rate_hz == trace.nominal_rate_hz

    def test_rate_times_width(self):
        trace = constant_trace(duration=1.0, rate=5000)
        out = extract_window(trace, Window(0.2, 0.4))
        assert len(out.samples) == 1000

    def test_beyond_trace_end(self):
        trace = constant_trace(duration=0.5)
        with pytest.raises(WindowOutOfRangeError):
            extract_window(trace, Window(0.2, 1.5))

    def test_edge_tolerance_one_period(self):
        trace = constant_trace(duration=0.5, rate=1000)
        # end = last sample t + 2 periods is tolerated
        out = extract_window(trace, Window(0.0, 0.4995 + 0.001))
        assert len(out.samples) == 500

    def test_window_validation(self):
        with pytest.raises(InvalidInputError):
            Window(0.5, 0.5)
        with pytest.raises(InvalidInputError):
            Window(-0.1, 0.5)

    def test_empty_trace_rejected(self):
        with pytest.raises(EmptyTraceError):
            extract_window(SampleTrace(samples=[]), Window(0.0, 1.0))


class TestBaseline:
    def test_mean_subtraction(self):
        assert subtract_baseline([10.0, 12.0], [3.0, 5.0]) == [6.0, 8.0]

    def test_cancellation(self):
        assert subtract_baseline([4.0, 4.0], [4.0]) == [0.0, 0.0]

    def test_empty_baseline(self):
        with pytest.raises(MissingBaselineError):
            subtract_baseline([1.0], [])

    def test_empty_aut(self):
        with pytest.raises(InvalidInputError):
            subtract_baseline([], [1.0])

    def test_negative_results_returned(self):
        assert subtract_baseline([1.0], [2.0]) == [-1.0]


class TestWindowFromLog:
    def test_maps_marker_width_onto_trace_time(self):
        text = (
            "06-12 14:32:01.000  1234  1250 I TestMeta: PKG com.x UID 10001 PID 1234\n"
            "06-12 14:32:01.250  1234  1250 I TestMarker: TEST_START\n"
            "06-12 14:32:02.250  1234  1250 I TestMarker: TEST_END\n"
        )
        clean = parse_logcat(text, api_level=30)
        window = window_from_log(clean, trigger_offset=0.25)
        assert window.start == 0.25
        assert window.duration == pytest.approx(1.0)


def make_rows(energies, package="com.x"):
    return [
        EnergyRow(
            package=package,
            iteration=i + 1,
            energy_j=e,
            cpu_pct=10.0 + i,
            mem_pct=2.0,
            rx_bytes=100 * (i + 1),
            tx_bytes=10,
            baseline_subtracted=True,
        )
        for i, e in enumerate(energies)
    ]


class TestEmitDataFiles:
    def test_ten_rows(self, tmp_path):
        data, avg = emit_data_files(make_rows([1.0] * 10), tmp_path)
        data_lines = data.read_text().splitlines()
        avg_lines = avg.read_text().splitlines()
        assert data_lines[0] == "package,iteration,energy_j,cpu_pct,mem_pct,rx_bytes,tx_bytes"
        assert len(data_lines) == 11
        assert avg_lines[0] == "package,n,energy_j_mean,cpu_pct_mean,mem_pct_mean,rx_mean,tx_mean"
        assert len(avg_lines) == 2
        assert avg_lines[1].split(",")[1] == "10"

    def test_single_row_average_equals_row(self, tmp_path):
        data, avg = emit_data_files(make_rows([3.5]), tmp_path)
        fields = avg.read_text().splitlines()[1].split(",")
        assert float(fields[2]) == 3.5

    def test_mean_of_two(self, tmp_path):
        data, avg = emit_data_files(make_rows([6.0, 8.0]), tmp_path)
        assert float(avg.read_text().splitlines()[1].split(",")[2]) == 7.0

    def test_mixed_packages_rejected(self, tmp_path):
        rows = make_rows([1.0], package="com.a") + make_rows([2.0], package="com.b")
        with pytest.raises(InvalidInputError):
            emit_data_files(rows, tmp_path)

    def test_empty_rows_rejected(self, tmp_path):
        with pytest.raises(InvalidInputError):
            emit_data_files([], tmp_path)

    def test_aggregation_consistency(self, tmp_path):
        import random

        rng = random.Random(3)
        energies = [rng.uniform(0.5, 3.0) for _ in range(25)]
        data, avg = emit_data_files(make_rows(energies), tmp_path)
        rows = [l.split(",") for l in data.read_text().splitlines()[1:]]
        recomputed = math.fsum(float(r[2]) for r in rows) / len(rows)
        written = float(avg.read_text().splitlines()[1].split(",")[2])
        assert abs(written - recomputed) <= 1e-12 * abs(recomputed)

    def test_negative_energy_flagged_not_clamped(self, tmp_path, caplog):
        import logging

        with caplog.at_level(logging.WARNING, logger="appenergy.energy"):
            data, _ = emit_data_files(make_rows([-0.5, 1.0]), tmp_path)
        assert "-0.5" in data.read_text()
        assert any("negative net energy" in r.message for r in caplog.records)


class TestEnergyRowInvariants:
    def test_negative_raw_energy_rejected(self):
        with pytest.raises(InvalidInputError):
            EnergyRow("com.x", 1, -1.0, 0, 0, 0, 0, baseline_subtracted=False)

    def test_iteration_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            EnergyRow("com.x", 0, 1.0, 0, 0, 0, 0)

    def test_negative_flag(self):
        row = EnergyRow("com.x", 1, -0.1, 0, 0, 0, 0, baseline_subtracted=True)
        assert row.negative_flagged
