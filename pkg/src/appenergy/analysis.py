"""Variable selection, test dispatch, and interpreted reports.

An analysis names a dependent (numeric) column, optionally an independent
column (categorical for the group tests, numeric for correlation) and an
optional row filter. Reports are rendered to Markdown and HTML with an
interpretation sentence at the chosen significance level.
"""

from __future__ import annotations

import html as _html
from dataclasses import dataclass

from .dataset import Dataset, FilterSpec
from .errors import ColumnTypeError, InvalidInputError
from .stats import (
    DEFAULT_ALPHA,
    SummaryStats,
    TestKind,
    TestResult,
    kruskal_wallis,
    one_way_anova,
    spearman,
    summary_stats,
)

_TEST_TITLES = {
    TestKind.SUMMARY: "Summary statistics",
    TestKind.KRUSKAL_WALLIS: "Kruskal-Wallis",
    TestKind.ANOVA: "One-way ANOVA",
    TestKind.SPEARMAN: "Spearman correlation",
}


@dataclass
class AnalysisSpec:
    test: TestKind
    dependent: str
    independent: str | None = None
    filter: FilterSpec | None = None

    def __post_init__(self):
        self.test = TestKind(self.test)
        if self.test in (TestKind.KRUSKAL_WALLIS, TestKind.ANOVA, TestKind.SPEARMAN):
            if not self.independent:
                raise InvalidInputError(f"{self.test.value} needs an independent column")


@dataclass
class AnalysisReport:
    spec: AnalysisSpec
    n_rows: int
    markdown: str
    html: str
    result: TestResult | None = None
    summaries: list[tuple[str, SummaryStats]] | None = None


def group_by_category(
    dataset: Dataset, dependent: str, independent: str
) -> tuple[list[str], list[list[float]]]:
    """Split the dependent column by the categories of the independent one."""
    values = dataset.numeric_column(dependent)
    cats = dataset.column(independent)
    if dataset.is_numeric(independent):
        raise ColumnTypeError(
            f"column {independent!r} is numeric; group tests need categories"
        )
    order: list[str] = sorted(set(cats))
    groups = [[v for v, c in zip(values, cats) if c == cat] for cat in order]
    return order, groups


def run_analysis(
    dataset: Dataset, spec: AnalysisSpec, alpha: float = DEFAULT_ALPHA
) -> AnalysisReport:
    """Execute the analysis and render its report."""
    data = dataset.filtered(spec.filter)
    dependent = data.numeric_column(spec.dependent)

    result: TestResult | None = None
    summaries: list[tuple[str, SummaryStats]] | None = None

    if spec.test is TestKind.SUMMARY:
        if spec.independent:
            labels, groups = group_by_category(data, spec.dependent, spec.independent)
            summaries = [(lbl, summary_stats(g)) for lbl, g in zip(labels, groups)]
        else:
            summaries = [(spec.dependent, summary_stats(dependent))]
    elif spec.test is TestKind.KRUSKAL_WALLIS:
        labels, groups = group_by_category(data, spec.dependent, spec.independent)
        result = kruskal_wallis(groups, labels)
    elif spec.test is TestKind.ANOVA:
        labels, groups = group_by_category(data, spec.dependent, spec.independent)
        result = one_way_anova(groups, labels)
    else:
        independent = data.numeric_column(spec.independent)
        result = spearman(independent, dependent)

    if result is not None:
        result.interpretation = _interpret(result, spec, alpha)

    markdown = _render_markdown(spec, data.n_rows, result, summaries, alpha)
    return AnalysisReport(
        spec=spec,
        n_rows=data.n_rows,
        markdown=markdown,
        html=_markdown_to_html(markdown),
        result=result,
        summaries=summaries if summaries is not None else
        (result.group_summaries if result else None),
    )


def _interpret(result: TestResult, spec: AnalysisSpec, alpha: float) -> str:
    significant = result.p_value < alpha
    if result.test is TestKind.SPEARMAN:
        direction = "positive" if result.statistic >= 0 else "negative"
        strength = abs(result.statistic)
        if strength >= 0.7:
            size = "strong"
        elif strength >= 0.4:
            size = "moderate"
        else:
            size = "weak"
        if significant:
            return (
                f"Reject the null hypothesis at α = {alpha:g}: "
                f"{spec.dependent} and {spec.independent} show a {size} "
                f"{direction} monotonic association "
                f"(ρ = {result.statistic:.4f}, p = {result.p_value:.4g})."
            )
        return (
            f"Fail to reject the null hypothesis at α = {alpha:g}: no "
            f"significant monotonic association between {spec.dependent} and "
            f"{spec.independent} (ρ = {result.statistic:.4f}, "
            f"p = {result.p_value:.4g})."
        )
    stat_name = "H" if result.test is TestKind.KRUSKAL_WALLIS else "F"
    if significant:
        return (
            f"Reject the null hypothesis at α = {alpha:g}: {spec.dependent} "
            f"differs across {spec.independent} groups "
            f"({stat_name} = {result.statistic:.4f}, p = {result.p_value:.4g})."
        )
    return (
        f"Fail to reject the null hypothesis at α = {alpha:g}: no significant "
        f"difference in {spec.dependent} across {spec.independent} groups "
        f"({stat_name} = {result.statistic:.4f}, p = {result.p_value:.4g})."
    )


def _summary_table(summaries: list[tuple[str, SummaryStats]]) -> list[str]:
    lines = [
        "| group | n | mean | median | sd | min | q1 | q3 | max |",
        "| --- | --- | --- | --- | --- | --- | --- | --- | --- |",
    ]
    for label, s in summaries:
        sd_cell = f"{s.sd:.6g}" if s.sd_defined else f"{s.sd:.6g} (n<2)"
        lines.append(
            f"| {label} | {s.n} | {s.mean:.6g} | {s.median:.6g} | {sd_cell} | "
            f"{s.minimum:.6g} | {s.q1:.6g} | {s.q3:.6g} | {s.maximum:.6g} |"
        )
    return lines


def _render_markdown(
    spec: AnalysisSpec,
    n_rows: int,
    result: TestResult | None,
    summaries: list[tuple[str, SummaryStats]] | None,
    alpha: float,
) -> str:
    filter_text = (
        f"{spec.filter.column}{spec.filter.op}{spec.filter.value}"
        if spec.filter
        else "none"
    )
    lines = [
        "# Statistical analysis report",
        "",
        f"- Test: {_TEST_TITLES[spec.test]}",
        f"- Dependent variable: {spec.dependent}",
        f"- Independent variable: {spec.independent or 'none'}",
        f"- Filter: {filter_text}",
        f"- Rows analyzed: {n_rows}",
        "",
    ]
    if result is not None:
        df_text = ", ".join(f"{d:g}" for d in result.df)
        lines += [
            "## Result",
            "",
            "| statistic | df | p-value |",
            "| --- | --- | --- |",
            f"| {result.statistic:.6g} | {df_text} | {result.p_value:.6g} |",
            "",
        ]
        if result.flags:
            lines += [f"Flags: {', '.join(result.flags)}", ""]
        if result.group_summaries:
            lines += ["## Group summaries", ""]
            lines += _summary_table(result.group_summaries)
            lines += [""]
        lines += ["## Interpretation", "", result.interpretation, ""]
    if summaries is not None:
        lines += ["## Summary statistics", ""]
        lines += _summary_table(summaries)
        lines += [
            "",
            "## Interpretation",
            "",
            "Descriptive summary only; no hypothesis was tested "
            f"(significance level α = {alpha:g} not applied).",
            "",
        ]
    return "\n".join(lines)


def _markdown_to_html(markdown: str) -> str:
    """Render the report's restricted Markdown (headings, lists, tables)."""
    body: list[str] = []
    lines = markdown.splitlines()
    i = 0
    in_list = False
    while i < len(lines):
        line = lines[i]
        if line.startswith("|"):
            rows: list[list[str]] = []
            while i < len(lines) and lines[i].startswith("|"):
                cells = [c.strip() for c in lines[i].strip("|").split("|")]
                rows.append(cells)
                i += 1
            body.append("<table>")
            header, *rest = rows
            body.append(
                "<tr>" + "".join(f"<th>{_html.escape(c)}</th>" for c in header) + "</tr>"
            )
            for row in rest:
                if all(set(c) <= {"-"} for c in row):
                    continue
                body.append(
                    "<tr>" + "".join(f"<td>{_html.escape(c)}</td>" for c in row) + "</tr>"
                )
            body.append("</table>")
            continue
        if line.startswith("- "):
            if not in_list:
                body.append("<ul>")
                in_list = True
            body.append(f"<li>{_html.escape(line[2:])}</li>")
            i += 1
            continue
        if in_list:
            body.append("</ul>")
            in_list = False
        if line.startswith("# "):
            body.append(f"<h1>{_html.escape(line[2:])}</h1>")
        elif line.startswith("## "):
            body.append(f"<h2>{_html.escape(line[3:])}</h2>")
        elif line.strip():
            body.append(f"<p>{_html.escape(line)}</p>")
        i += 1
    if in_list:
        body.append("</ul>")
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
        "<title>Statistical analysis report</title>"
        "<style>body{font-family:sans-serif;margin:2em}"
        "table{border-collapse:collapse}"
        "td,th{border:1px solid #999;padding:4px 8px}</style>"
        "</head><body>\n" + "\n".join(body) + "\n</body></html>\n"
    )
