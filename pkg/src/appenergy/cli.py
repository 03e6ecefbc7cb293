"""Command-line front end for the measurement pipeline.

Stages mirror the toolkit workflow and can be run independently on each
other's outputs: ``campaign run`` collects raw data, ``preprocess`` turns
it into data.csv/average_data.csv, ``analyze`` writes an interpreted
report, ``plot`` renders a figure, and ``serve`` exposes everything over
HTTP for the dashboard.

Exit codes: 0 ok, 2 missing input artifact, 3 invalid configuration or
selection, 4 device/preflight refusal, 5 degenerate data for the requested
statistic, 6 campaign stopped awaiting an operator decision, 1 anything
else.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import AnalysisSpec
from .campaign import CampaignConfig, CampaignEngine, Phase
from .dataset import parse_filter
from .device import DeviceAction, RunPlan, SimulatedDevice
from .errors import (
    AppEnergyError,
    ColumnTypeError,
    DecisionRequiredError,
    DegenerateDataError,
    EmptySelectionError,
    InvalidInputError,
    InvalidTransitionError,
    MissingBaselineError,
    ParseError,
    PreflightError,
    StatsError,
    UndefinedCorrelationError,
    UnknownColumnError,
)
from .pipeline import analyze, plot, preprocess
from .plots import DEFAULT_COLORS, PlotSpec
from .sampling import SourceConfig, WorkloadProfile
from .service import DEFAULT_PORT_ENV, ControlService

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MISSING_INPUT = 2
EXIT_INVALID = 3
EXIT_PREFLIGHT = 4
EXIT_DEGENERATE = 5
EXIT_DECISION_REQUIRED = 6


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="appenergy",
        description="Measure and analyze the energy consumption of mobile app tests.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    campaign = sub.add_parser("campaign", help="campaign control")
    campaign_sub = campaign.add_subparsers(dest="campaign_command", required=True)
    run = campaign_sub.add_parser("run", help="run a measurement campaign")
    run.add_argument("--results-dir", required=True, type=Path)
    run.add_argument("--package", required=True, help="app under test package name")
    run.add_argument("--iterations", type=int, default=10,
                     help="test iterations (10-30 recommended)")
    run.add_argument("--baseline-iterations", type=int, default=10)
    run.add_argument("--app-apk", type=Path)
    run.add_argument("--test-apk", type=Path)
    run.add_argument("--device-data-path", type=Path)
    run.add_argument("--test-class", default="")
    run.add_argument("--test-runner", default="")
    run.add_argument("--rerun-config", choices=["reinstall", "clear-data"])
    run.add_argument("--source", choices=["simulated", "replay", "monitor"],
                     default="simulated")
    run.add_argument("--replay-path", type=Path)
    run.add_argument("--rate-hz", type=int, default=5000)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--warn-threshold", type=int, default=1000)
    run.add_argument("--baseline-current", type=float, default=0.2, help="amperes")
    run.add_argument("--active-current", type=float, default=0.5, help="amperes")
    run.add_argument("--voltage", type=float, default=4.0, help="volts")
    run.add_argument("--noise-sd", type=float, default=0.0, help="amperes")
    run.add_argument("--dropped-samples", type=int, default=0)
    run.add_argument("--api-level", type=int, default=30)
    run.add_argument("--test-duration", type=float, default=1.0, help="seconds")
    run.add_argument("--start-offset", type=float, default=0.25, help="seconds")
    run.add_argument("--interactive", action="store_true",
                     help="pause on warnings and prompt for a decision")

    pre = sub.add_parser("preprocess", help="clean logs and emit data.csv")
    pre.add_argument("--results-dir", required=True, type=Path)
    pre.add_argument("--tag", action="append", default=[],
                     help="extra log tags to keep (repeatable)")

    ana = sub.add_parser("analyze", help="statistical analysis with a report")
    ana.add_argument("--data", action="append", required=True, type=Path,
                     help="data.csv path (repeatable to pool campaigns)")
    ana.add_argument("--test", choices=["summary", "kruskal_wallis", "anova", "spearman"],
                     default="summary")
    ana.add_argument("--dependent", required=True)
    ana.add_argument("--independent")
    ana.add_argument("--filter", help="row filter, e.g. package==com.example")
    ana.add_argument("--alpha", type=float, default=0.05)
    ana.add_argument("--out", type=Path, help="report directory (default: first data dir)")

    plt = sub.add_parser("plot", help="render a scatter or box plot")
    plt.add_argument("--data", action="append", required=True, type=Path)
    plt.add_argument("--kind", choices=["scatter", "box"], required=True)
    plt.add_argument("--dependent", required=True)
    plt.add_argument("--independent", required=True)
    plt.add_argument("--filter")
    plt.add_argument("--title", default="")
    plt.add_argument("--label-font-pt", type=int, default=12)
    plt.add_argument("--legend-colors", help="comma-separated hex colors")
    plt.add_argument("--width", type=int, default=640)
    plt.add_argument("--height", type=int, default=480)
    plt.add_argument("--x-label-order", help="comma-separated category order")
    plt.add_argument("--out", type=Path, help="output svg (default: plot.svg beside data)")

    srv = sub.add_parser("serve", help="start the HTTP control service")
    srv.add_argument("--root", type=Path, default=Path("."),
                     help="directory holding campaign results")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int,
                     default=int(os.environ.get(DEFAULT_PORT_ENV, "8800")))
    srv.add_argument("--ui-dir", type=Path, help="serve a built dashboard from /ui")

    return parser


def _cmd_campaign_run(args) -> int:
    profile = WorkloadProfile(
        baseline_current=args.baseline_current,
        active_current=args.active_current,
        voltage=args.voltage,
        noise_sd=args.noise_sd,
        dropped_samples=args.dropped_samples,
    )
    source_kwargs = dict(kind=args.source, rate_hz=args.rate_hz)
    if args.source == "simulated":
        source_kwargs["profile"] = profile
    elif args.source == "replay":
        source_kwargs["replay_path"] = args.replay_path
    source = SourceConfig(**source_kwargs)
    plan = RunPlan(
        app_package=args.package,
        app_apk_path=args.app_apk,
        test_apk_path=args.test_apk,
        test_class=args.test_class,
        test_runner=args.test_runner,
        device_data_path=args.device_data_path,
    )
    config = CampaignConfig(
        plan=plan,
        source=source,
        results_dir=args.results_dir,
        iterations=args.iterations,
        baseline_iterations=args.baseline_iterations,
        auto_advance=not args.interactive,
        seed=args.seed,
        warn_threshold=args.warn_threshold,
        rerun_config=args.rerun_config,
    )
    device = SimulatedDevice(
        api_level=args.api_level,
        test_duration_s=args.test_duration,
        start_offset_s=args.start_offset,
    )

    def on_event(event) -> None:
        if event.kind in ("phase_changed", "iteration_completed", "warning"):
            print(f"[{event.seq}] {event.kind}: {event.payload}")

    engine = CampaignEngine(config, device, on_event=on_event)
    decide_cb = _prompt_decision if args.interactive else None
    state = engine.run_to_completion(decide_cb)
    print(
        f"campaign done: {len(state.records)} iterations recorded in "
        f"{config.results_dir}"
    )
    return EXIT_OK


def _prompt_decision(state) -> DeviceAction:
    prompt = (
        f"{state.pending.reason}: {state.pending.message}\n"
        "decision [rerun/next/uninstall/clear]: "
    )
    mapping = {
        "rerun": DeviceAction.RERUN_ITERATION,
        "next": DeviceAction.NEXT_ITERATION,
        "uninstall": DeviceAction.UNINSTALL_AUT,
        "clear": DeviceAction.CLEAR_AUT_DATA,
    }
    while True:
        answer = input(prompt).strip().lower()
        if answer in mapping:
            return mapping[answer]
        print(f"unknown choice {answer!r}")


def _cmd_preprocess(args) -> int:
    result = preprocess(args.results_dir, tags=frozenset(args.tag))
    print(f"wrote {result.data_csv} ({len(result.rows)} iterations)")
    print(f"wrote {result.average_csv}")
    if result.skipped_failed:
        print(f"skipped {result.skipped_failed} failed iteration(s)")
    negative = [r.iteration for r in result.rows if r.negative_flagged]
    if negative:
        print(f"warning: negative net energy in iteration(s) {negative}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    spec = AnalysisSpec(
        test=args.test,
        dependent=args.dependent,
        independent=args.independent,
        filter=parse_filter(args.filter) if args.filter else None,
    )
    out_dir = args.out if args.out else Path(args.data[0]).parent
    md, html, report = analyze(args.data, spec, out_dir, alpha=args.alpha)
    print(f"wrote {md}")
    print(f"wrote {html}")
    if report.result is not None:
        print(report.result.interpretation)
    return EXIT_OK


def _cmd_plot(args) -> int:
    spec = PlotSpec(
        kind=args.kind,
        dependent=args.dependent,
        independent=args.independent,
        filter=parse_filter(args.filter) if args.filter else None,
        title=args.title,
        label_font_pt=args.label_font_pt,
        legend_colors=tuple(args.legend_colors.split(","))
        if args.legend_colors
        else DEFAULT_COLORS,
        width_px=args.width,
        height_px=args.height,
        x_label_order=args.x_label_order.split(",") if args.x_label_order else None,
    )
    out = args.out if args.out else Path(args.data[0]).parent / "plot.svg"
    path = plot(args.data, spec, out)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    service = ControlService(args.root, host=args.host, port=args.port,
                             ui_dir=args.ui_dir)
    print(f"control service listening on http://{args.host}:{args.port}")
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        print("stopped")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "campaign":
            return _cmd_campaign_run(args)
        if args.command == "preprocess":
            return _cmd_preprocess(args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "plot":
            return _cmd_plot(args)
        return _cmd_serve(args)
    except FileNotFoundError as exc:
        print(f"error: missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except MissingBaselineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except PreflightError as exc:
        print(f"error: device refused: {exc}", file=sys.stderr)
        return EXIT_PREFLIGHT
    except DecisionRequiredError as exc:
        print(f"error: campaign paused: {exc}", file=sys.stderr)
        print("re-run with --interactive to resolve decisions", file=sys.stderr)
        return EXIT_DECISION_REQUIRED
    except (DegenerateDataError, UndefinedCorrelationError) as exc:
        print(f"error: degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (
        InvalidInputError,
        InvalidTransitionError,
        UnknownColumnError,
        ColumnTypeError,
        EmptySelectionError,
        ParseError,
        StatsError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except AppEnergyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
