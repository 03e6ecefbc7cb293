import json

import pytest

from appenergy.cli import (
    EXIT_DEGENERATE,
    EXIT_INVALID,
    EXIT_MISSING_INPUT,
    EXIT_OK,
    EXIT_PREFLIGHT,
    main,
)


def run_cli(*argv) -> int:
    return main(list(argv))


def run_campaign_cli(tmp_path, package="com.example.app", **overrides):
    results = tmp_path / f"results-{package}"
    args = {
        "--results-dir": str(results),
        "--package": package,
        "--iterations": "3",
        "--baseline-iterations": "2",
        "--rate-hz": "400",
        "--test-duration": "0.2",
        "--start-offset": "0.05",
        "--noise-sd": "0.002",
    }
    args.update({k: str(v) for k, v in overrides.items()})
    argv = ["campaign", "run"]
    for key, value in args.items():
        argv += [key, value]
    assert run_cli(*argv) == EXIT_OK
    return results


class TestCampaignRun:
    def test_full_campaign(self, tmp_path, capsys):
        results = run_campaign_cli(tmp_path)
        out = capsys.readouterr().out
        assert "campaign done" in out
        assert (results / "campaign.json").exists()
        assert (results / "aut" / "Logcat_R3").exists()

    def test_preflight_refusal_exit_code(self, tmp_path):
        code = run_cli(
            "campaign", "run",
            "--results-dir", str(tmp_path / "r"),
            "--package", "com.x",
            "--api-level", "19",
        )
        assert code == EXIT_PREFLIGHT

    def test_invalid_iterations(self, tmp_path):
        code = run_cli(
            "campaign", "run",
            "--results-dir", str(tmp_path / "r"),
            "--package", "com.x",
            "--iterations", "0",
        )
        assert code == EXIT_INVALID


class TestPreprocess:
    def test_stage_outputs(self, tmp_path, capsys):
        results = run_campaign_cli(tmp_path)
        assert run_cli("preprocess", "--results-dir", str(results)) == EXIT_OK
        out = capsys.readouterr().out
        assert "data.csv" in out
        assert (results / "data.csv").exists()
        assert (results / "average_data.csv").exists()

    def test_missing_campaign_folder(self, tmp_path):
        code = run_cli("preprocess", "--results-dir", str(tmp_path / "nothing"))
        assert code == EXIT_MISSING_INPUT


class TestAnalyze:
    def test_report_written(self, tmp_path, capsys):
        results = run_campaign_cli(tmp_path)
        run_cli("preprocess", "--results-dir", str(results))
        code = run_cli(
            "analyze",
            "--data", str(results / "data.csv"),
            "--test", "summary",
            "--dependent", "energy_j",
        )
        assert code == EXIT_OK
        assert (results / "report.md").exists()
        assert (results / "report.html").exists()

    def test_missing_data_csv(self, tmp_path):
        code = run_cli(
            "analyze", "--data", str(tmp_path / "data.csv"),
            "--dependent", "energy_j",
        )
        assert code == EXIT_MISSING_INPUT

    def test_unknown_column(self, tmp_path):
        results = run_campaign_cli(tmp_path)
        run_cli("preprocess", "--results-dir", str(results))
        code = run_cli(
            "analyze", "--data", str(results / "data.csv"),
            "--dependent", "watts",
        )
        assert code == EXIT_INVALID

    def test_degenerate_data(self, tmp_path):
        data = tmp_path / "data.csv"
        data.write_text(
            "package,iteration,energy_j\n"
            "com.a,1,1.0\ncom.a,2,1.0\ncom.b,1,1.0\ncom.b,2,1.0\n"
        )
        code = run_cli(
            "analyze", "--data", str(data),
            "--test", "kruskal_wallis",
            "--dependent", "energy_j",
            "--independent", "package",
        )
        assert code == EXIT_DEGENERATE

    def test_kruskal_wallis_over_pooled_campaigns(self, tmp_path, capsys):
        data_files = []
        for i, current in enumerate(("0.3", "0.6")):
            results = run_campaign_cli(
                tmp_path, package=f"com.v{i}", **{"--active-current": current, "--seed": str(i)}
            )
            run_cli("preprocess", "--results-dir", str(results))
            data_files.append(results / "data.csv")
        capsys.readouterr()
        code = run_cli(
            "analyze",
            "--data", str(data_files[0]),
            "--data", str(data_files[1]),
            "--test", "kruskal_wallis",
            "--dependent", "energy_j",
            "--independent", "package",
        )
        assert code == EXIT_OK
        assert "hypothesis" in capsys.readouterr().out


class TestPlot:
    def test_box_plot(self, tmp_path):
        results = run_campaign_cli(tmp_path)
        run_cli("preprocess", "--results-dir", str(results))
        code = run_cli(
            "plot",
            "--data", str(results / "data.csv"),
            "--kind", "box",
            "--dependent", "energy_j",
            "--independent", "package",
            "--out", str(results / "fig.svg"),
        )
        assert code == EXIT_OK
        assert (results / "fig.svg").read_text().startswith("<?xml")

    def test_empty_selection_message(self, tmp_path, capsys):
        results = run_campaign_cli(tmp_path)
        run_cli("preprocess", "--results-dir", str(results))
        capsys.readouterr()
        code = run_cli(
            "plot",
            "--data", str(results / "data.csv"),
            "--kind", "box",
            "--dependent", "energy_j",
            "--independent", "package",
            "--filter", "package==com.none",
        )
        assert code == EXIT_INVALID
        assert "zero rows" in capsys.readouterr().err

    def test_empty_data_csv_nonzero_exit(self, tmp_path, capsys):
        data = tmp_path / "data.csv"
        data.write_text(
            "package,iteration,energy_j,cpu_pct,mem_pct,rx_bytes,tx_bytes\n"
        )
        code = run_cli(
            "plot",
            "--data", str(data),
            "--kind", "box",
            "--dependent", "energy_j",
            "--independent", "package",
        )
        assert code == EXIT_INVALID
        assert "no rows" in capsys.readouterr().err

    def test_filter_and_order_flags(self, tmp_path):
        data = tmp_path / "data.csv"
        data.write_text(
            "package,iteration,energy_j\n"
            "com.a,1,1.0\ncom.a,2,1.2\ncom.b,1,2.0\ncom.b,2,2.2\n"
        )
        code = run_cli(
            "plot",
            "--data", str(data),
            "--kind", "box",
            "--dependent", "energy_j",
            "--independent", "package",
            "--x-label-order", "com.b,com.a",
            "--out", str(tmp_path / "p.svg"),
        )
        assert code == EXIT_OK
        svg = (tmp_path / "p.svg").read_text()
        assert svg.index('category="com.b"') < svg.index('category="com.a"')


class TestManifestShape:
    def test_manifest_echoes_config(self, tmp_path):
        results = run_campaign_cli(tmp_path)
        manifest = json.loads((results / "campaign.json").read_text())
        assert manifest["config"]["iterations"] == 3
        assert manifest["config"]["source_kind"] == "simulated"
        assert manifest["package"] == "com.example.app"
