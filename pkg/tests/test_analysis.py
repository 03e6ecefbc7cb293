import pytest

from appenergy.analysis import AnalysisSpec, run_analysis
from appenergy.dataset import Dataset, FilterSpec, parse_filter
from appenergy.errors import (
    ColumnTypeError,
    EmptySelectionError,
    InvalidInputError,
    UnknownColumnError,
)


@pytest.fixture
def campaign_dataset() -> Dataset:
    packages = ["com.a"] * 5 + ["com.b"] * 5 + ["com.c"] * 5
    energies = [1.0, 1.1, 0.9, 1.05, 0.95, 2.0, 2.1, 1.9, 2.05, 1.95, 3.0, 3.1, 2.9, 3.05, 2.95]
    return Dataset(
        {
            "package": packages,
            "iteration": [float(i % 5 + 1) for i in range(15)],
            "energy_j": energies,
        }
    )


class TestDataset:
    def test_csv_round_trip(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("package,iteration,energy_j\ncom.a,1,1.5\ncom.a,2,2.5\n")
        ds = Dataset.from_csv(p)
        assert ds.column_names == ["package", "iteration", "energy_j"]
        assert ds.n_rows == 2
        assert ds.is_numeric("energy_j")
        assert not ds.is_numeric("package")

    def test_concat_multiple_files(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        a.write_text("package,energy_j\ncom.a,1.0\n")
        b.write_text("package,energy_j\ncom.b,2.0\n")
        ds = Dataset.from_csv([a, b])
        assert ds.n_rows == 2
        assert ds.column("package") == ["com.a", "com.b"]

    def test_header_mismatch_rejected(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        a.write_text("x,y\n1,2\n")
        b.write_text("x,z\n1,2\n")
        with pytest.raises(InvalidInputError):
            Dataset.from_csv([a, b])

    def test_unknown_column(self, campaign_dataset):
        with pytest.raises(UnknownColumnError, match="nope"):
            campaign_dataset.column("nope")

    def test_filter_equality(self, campaign_dataset):
        out = campaign_dataset.filtered(FilterSpec("package", "==", "com.a"))
        assert out.n_rows == 5

    def test_filter_numeric_order(self, campaign_dataset):
        out = campaign_dataset.filtered(FilterSpec("energy_j", ">", "2.5"))
        assert out.n_rows == 5

    def test_filter_zero_rows(self, campaign_dataset):
        with pytest.raises(EmptySelectionError):
            campaign_dataset.filtered(FilterSpec("package", "==", "com.zzz"))

    def test_order_op_on_categorical_rejected(self, campaign_dataset):
        with pytest.raises(ColumnTypeError):
            campaign_dataset.filtered(FilterSpec("package", "<", "com.b"))

    def test_parse_filter(self):
        spec = parse_filter("package==com.a")
        assert spec == FilterSpec("package", "==", "com.a")
        spec = parse_filter("energy_j >= 1.5")
        assert spec == FilterSpec("energy_j", ">=", "1.5")
        with pytest.raises(InvalidInputError):
            parse_filter("garbage")


class TestRunAnalysis:
    def test_kruskal_wallis_rejects_on_separated_groups(self, campaign_dataset):
        spec = AnalysisSpec(test="kruskal_wallis", dependent="energy_j", independent="package")
        report = run_analysis(campaign_dataset, spec)
        assert report.result.p_value < 0.05
        assert report.result.interpretation.startswith("Reject")
        assert "Kruskal-Wallis" in report.markdown
        assert "reject" in report.markdown.lower()

    def test_anova_on_same_data(self, campaign_dataset):
        spec = AnalysisSpec(test="anova", dependent="energy_j", independent="package")
        report = run_analysis(campaign_dataset, spec)
        assert report.result.p_value < 0.05
        assert len(report.result.group_summaries) == 3

    def test_spearman_needs_numeric_independent(self, campaign_dataset):
        spec = AnalysisSpec(test="spearman", dependent="energy_j", independent="package")
        with pytest.raises(ColumnTypeError):
            run_analysis(campaign_dataset, spec)

    def test_spearman_on_numeric(self, campaign_dataset):
        spec = AnalysisSpec(test="spearman", dependent="energy_j", independent="iteration")
        report = run_analysis(campaign_dataset, spec)
        assert report.result is not None
        assert -1.0 <= report.result.statistic <= 1.0

    def test_group_tests_need_categorical_independent(self, campaign_dataset):
        spec = AnalysisSpec(test="kruskal_wallis", dependent="energy_j", independent="iteration")
        with pytest.raises(ColumnTypeError):
            run_analysis(campaign_dataset, spec)

    def test_summary_has_table_but_no_p_value(self, campaign_dataset):
        spec = AnalysisSpec(test="summary", dependent="energy_j")
        report = run_analysis(campaign_dataset, spec)
        assert report.result is None
        assert "| group |" in report.markdown
        assert "p-value" not in report.markdown
        assert "no hypothesis was tested" in report.markdown.lower()

    def test_summary_grouped_by_independent(self, campaign_dataset):
        spec = AnalysisSpec(test="summary", dependent="energy_j", independent="package")
        report = run_analysis(campaign_dataset, spec)
        assert len(report.summaries) == 3

    def test_filter_applied_before_test(self, campaign_dataset):
        spec = AnalysisSpec(
            test="summary",
            dependent="energy_j",
            filter=FilterSpec("package", "!=", "com.c"),
        )
        report = run_analysis(campaign_dataset, spec)
        assert report.n_rows == 10

    def test_filter_selecting_zero_rows(self, campaign_dataset):
        spec = AnalysisSpec(
            test="summary",
            dependent="energy_j",
            filter=FilterSpec("package", "==", "com.nope"),
        )
        with pytest.raises(EmptySelectionError):
            run_analysis(campaign_dataset, spec)

    def test_unknown_dependent_named_in_error(self, campaign_dataset):
        spec = AnalysisSpec(test="summary", dependent="watts")
        with pytest.raises(UnknownColumnError, match="watts"):
            run_analysis(campaign_dataset, spec)

    def test_non_numeric_dependent_rejected(self, campaign_dataset):
        spec = AnalysisSpec(test="summary", dependent="package")
        with pytest.raises(ColumnTypeError):
            run_analysis(campaign_dataset, spec)

    def test_independent_required_for_tests(self):
        with pytest.raises(InvalidInputError):
            AnalysisSpec(test="kruskal_wallis", dependent="energy_j")

    def test_fail_to_reject_wording(self):
        ds = Dataset(
            {
                "package": ["a", "a", "a", "b", "b", "b"],
                "energy_j": [1.0, 2.0, 3.0, 1.1, 2.1, 2.9],
            }
        )
        spec = AnalysisSpec(test="kruskal_wallis", dependent="energy_j", independent="package")
        report = run_analysis(ds, spec)
        assert report.result.p_value >= 0.05
        assert report.result.interpretation.startswith("Fail to reject")

    def test_html_is_emitted_and_escaped(self, campaign_dataset):
        spec = AnalysisSpec(test="kruskal_wallis", dependent="energy_j", independent="package")
        report = run_analysis(campaign_dataset, spec)
        assert report.html.startswith("<!DOCTYPE html>")
        assert "<table>" in report.html
        assert "α = 0.05" in report.html

    def test_alpha_configurable(self, campaign_dataset):
        spec = AnalysisSpec(test="kruskal_wallis", dependent="energy_j", independent="package")
        report = run_analysis(campaign_dataset, spec, alpha=1e-9)
        assert report.result.interpretation.startswith("Fail to reject")
        assert "α = 1e-09" in report.result.interpretation
