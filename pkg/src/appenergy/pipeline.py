"""Stage functions shared by the CLI and the control service.

Each stage consumes the previous stage's on-disk outputs, so stages can be
re-run independently or skipped when their inputs already exist:

  run_campaign  -> <results>/<phase>/..., campaign.json
  preprocess    -> <results>/cleaned/..., data.csv, average_data.csv
  analyze       -> report.md, report.html
  plot          -> plot svg
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .analysis import AnalysisReport, AnalysisSpec, run_analysis
from .campaign import (
    CampaignConfig,
    CampaignEngine,
    CampaignState,
    Phase,
    read_manifest,
)
from .dataset import Dataset
from .device import SimulatedDevice
from .energy import (
    EnergyRow,
    Window,
    emit_data_files,
    extract_window,
    integrate_energy,
    subtract_baseline,
    window_from_log,
)
from .errors import InvalidInputError, MissingBaselineError
from .parsers import parse_cpu_mem, parse_logcat, parse_netstats, write_clean_log
from .plots import PlotSpec, render_plot
from .sampling import read_trace, write_trace

CLEANED_DIR = "cleaned"


def run_campaign(
    config: CampaignConfig, device: SimulatedDevice | None = None, on_event=None
) -> CampaignState:
    """Execute a full campaign unattended (auto-advance on warnings)."""
    device = device if device is not None else SimulatedDevice()
    engine = CampaignEngine(config, device, on_event=on_event)
    return engine.run_to_completion()


@dataclass
class PreprocessResult:
    data_csv: Path
    average_csv: Path
    cleaned_dir: Path
    rows: list[EnergyRow]
    baseline_energies: list[float]
    skipped_failed: int


def preprocess(results_dir: Path | str, tags: frozenset[str] = frozenset()) -> PreprocessResult:
    """Clean logs, window the traces, integrate, subtract baseline, emit CSVs."""
    results_dir = Path(results_dir)
    manifest = read_manifest(results_dir)
    package = manifest["package"]
    cleaned_dir = results_dir / CLEANED_DIR
    cleaned_dir.mkdir(parents=True, exist_ok=True)

    baseline_energies: list[float] = []
    aut_entries: list[tuple[int, float, float, float, int, int]] = []
    skipped_failed = 0

    for record in manifest["records"]:
        if record["failed"]:
            skipped_failed += 1
            continue
        trace = read_trace(results_dir / record["files"]["trace"])
        if record["phase"] == Phase.BASELINE.value:
            window = Window(record["window_start_s"], record["window_end_s"])
            baseline_energies.append(integrate_energy(extract_window(trace, window)))
            continue

        logcat_text = (results_dir / record["files"]["logcat"]).read_text(encoding="utf-8")
        clean = parse_logcat(
            logcat_text, record["api_level"], tags=tags, package=package
        )
        index = record["index"]
        write_clean_log(clean, cleaned_dir / f"Logcat_R{index}.csv")
        window = window_from_log(clean, record["trigger_offset"])
        windowed = extract_window(trace, window)
        write_trace(windowed, cleaned_dir / f"trace_R{index}.csv")
        energy = integrate_energy(windowed)

        cpu_mem_text = (results_dir / record["files"]["cpu_mem"]).read_text(encoding="utf-8")
        stats = parse_cpu_mem(cpu_mem_text, package, record["api_level"])
        net_text = (results_dir / record["files"]["net"]).read_text(encoding="utf-8")
        net = parse_netstats(net_text, clean.uid)
        aut_entries.append(
            (index, energy, stats.cpu_pct, stats.mem_pct, net.rx_bytes, net.tx_bytes)
        )

    if not aut_entries:
        raise InvalidInputError(f"no completed app iterations in {results_dir}")
    if not baseline_energies:
        raise MissingBaselineError(
            f"no completed baseline iterations in {results_dir}; "
            "run a campaign with baseline iterations first"
        )

    aut_entries.sort(key=lambda entry: entry[0])
    net_energies = subtract_baseline([e[1] for e in aut_entries], baseline_energies)
    rows = [
        EnergyRow(
            package=package,
            iteration=index,
            energy_j=energy,
            cpu_pct=cpu,
            mem_pct=mem,
            rx_bytes=rx,
            tx_bytes=tx,
            baseline_subtracted=True,
        )
        for (index, _, cpu, mem, rx, tx), energy in zip(aut_entries, net_energies)
    ]
    data_csv, average_csv = emit_data_files(rows, results_dir)
    return PreprocessResult(
        data_csv=data_csv,
        average_csv=average_csv,
        cleaned_dir=cleaned_dir,
        rows=rows,
        baseline_energies=baseline_energies,
        skipped_failed=skipped_failed,
    )


def analyze(
    data_paths: list[Path | str],
    spec: AnalysisSpec,
    out_dir: Path | str,
    alpha: float = 0.05,
) -> tuple[Path, Path, AnalysisReport]:
    """Run one analysis over the given data.csv files; write report.md/.html."""
    for path in data_paths:
        if not Path(path).exists():
            raise FileNotFoundError(f"missing data file: {path}")
    dataset = Dataset.from_csv(list(data_paths))
    report = run_analysis(dataset, spec, alpha=alpha)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    md_path = out_dir / "report.md"
    html_path = out_dir / "report.html"
    md_path.write_text(report.markdown, encoding="utf-8", newline="\n")
    html_path.write_text(report.html, encoding="utf-8", newline="\n")
    return md_path, html_path, report


def plot(
    data_paths: list[Path | str], spec: PlotSpec, out_path: Path | str
) -> Path:
    """Render one figure over the given data.csv files."""
    for path in data_paths:
        if not Path(path).exists():
            raise FileNotFoundError(f"missing data file: {path}")
    dataset = Dataset.from_csv(list(data_paths))
    svg = render_plot(dataset, spec)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(svg, encoding="utf-8", newline="\n")
    return out_path
