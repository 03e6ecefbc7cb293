"""Scatter and box plots rendered as self-contained SVG 1.1 documents.

Box glyphs use the Tukey convention: whiskers reach the farthest points
within 1.5 IQR of the quartile box, everything beyond is drawn as an
outlier point. Quartiles come from the same quantile rule as
:func:`appenergy.stats.summary_stats`, so plotted statistics match report
tables exactly. Each figure embeds structured comments
(``<!-- box ... -->`` etc.) so tests and tools can read the plotted
statistics back without rasterizing.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr

from .dataset import Dataset, FilterSpec
from .errors import ColumnTypeError, EmptySelectionError, InvalidInputError
from .stats import summary_stats

DEFAULT_COLORS = (
    "#4c78a8",
    "#f58518",
    "#54a24b",
    "#e45756",
    "#72b7b2",
    "#b279a2",
)

_MARGIN_LEFT = 64
_MARGIN_RIGHT = 20
_MARGIN_TOP = 46
_MARGIN_BOTTOM = 56


@dataclass
class PlotSpec:
    kind: str  # "scatter" | "box"
    dependent: str
    independent: str
    filter: FilterSpec | None = None
    title: str = ""
    label_font_pt: int = 12
    legend_colors: tuple[str, ...] = DEFAULT_COLORS
    width_px: int = 640
    height_px: int = 480
    x_label_order: list[str] | None = None

    def __post_init__(self):
        if self.kind not in ("scatter", "box"):
            raise InvalidInputError(f"unknown plot kind {self.kind!r}")
        if self.width_px <= 0 or self.height_px <= 0:
            raise InvalidInputError("plot size must be positive")
        if not self.legend_colors:
            raise InvalidInputError("need at least one legend color")


def _fmt(value: float) -> str:
    return f"{value:.2f}"


class _Canvas:
    def __init__(self, spec: PlotSpec):
        self.spec = spec
        self.parts: list[str] = []
        self.x0 = _MARGIN_LEFT
        self.x1 = spec.width_px - _MARGIN_RIGHT
        self.y0 = _MARGIN_TOP
        self.y1 = spec.height_px - _MARGIN_BOTTOM

    def comment(self, text: str) -> None:
        self.parts.append(f"<!-- {text} -->")

    def line(self, x1, y1, x2, y2, color="#333", width=1.0) -> None:
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{color}" stroke-width="{width}"/>'
        )

    def rect(self, x, y, w, h, fill, stroke="#333") -> None:
        self.parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" '
            f'fill="{fill}" stroke="{stroke}"/>'
        )

    def circle(self, cx, cy, r, fill, cls, stroke=None) -> None:
        stroke_attr = f' stroke="{stroke}"' if stroke else ""
        self.parts.append(
            f'<circle class="{cls}" cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" '
            f'fill="{fill}"{stroke_attr}/>'
        )

    def text(self, x, y, content, *, size=None, anchor="middle", rotate=None) -> None:
        size = size if size is not None else self.spec.label_font_pt
        transform = (
            f' transform="rotate({rotate} {_fmt(x)} {_fmt(y)})"' if rotate else ""
        )
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" '
            f'text-anchor="{anchor}" font-family="sans-serif"{transform}>'
            f"{escape(str(content))}</text>"
        )

    def y_scale(self, lo: float, hi: float):
        if hi == lo:
            lo, hi = lo - 1.0, hi + 1.0
        pad = 0.05 * (hi - lo)
        lo -= pad
        hi += pad
        span = hi - lo

        def to_px(v: float) -> float:
            return self.y1 - (v - lo) / span * (self.y1 - self.y0)

        return lo, hi, to_px

    def y_axis(self, lo: float, hi: float, to_px, label: str) -> None:
        self.line(self.x0, self.y0, self.x0, self.y1)
        for i in range(6):
            v = lo + i * (hi - lo) / 5
            y = to_px(v)
            self.line(self.x0 - 4, y, self.x0, y)
            self.text(self.x0 - 8, y + 4, f"{v:.3g}", anchor="end", size=self.spec.label_font_pt - 2)
        mid_y = (self.y0 + self.y1) / 2
        self.text(16, mid_y, label, rotate=-90)

    def x_axis_line(self) -> None:
        self.line(self.x0, self.y1, self.x1, self.y1)

    def title_and_frame(self) -> None:
        if self.spec.title:
            self.text(
                (self.x0 + self.x1) / 2,
                24,
                self.spec.title,
                size=self.spec.label_font_pt + 4,
            )

    def document(self) -> str:
        body = "\n".join(self.parts)
        return (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{self.spec.width_px}" height="{self.spec.height_px}" '
            f'viewBox="0 0 {self.spec.width_px} {self.spec.height_px}">\n'
            f'<rect x="0" y="0" width="{self.spec.width_px}" '
            f'height="{self.spec.height_px}" fill="white"/>\n'
            f"{body}\n</svg>\n"
        )


def render_plot(dataset: Dataset, spec: PlotSpec) -> str:
    """Render the dataset to an SVG string; deterministic for fixed inputs."""
    data = dataset.filtered(spec.filter)
    if data.n_rows == 0:
        raise EmptySelectionError("no rows to plot")
    dependent = data.numeric_column(spec.dependent)
    if spec.kind == "box":
        return _render_box(data, spec, dependent)
    return _render_scatter(data, spec, dependent)


def _category_order(spec: PlotSpec, categories: set[str]) -> list[str]:
    if spec.x_label_order is None:
        return sorted(categories)
    if set(spec.x_label_order) != categories or len(spec.x_label_order) != len(categories):
        raise InvalidInputError(
            "x_label_order must be a permutation of the categories "
            f"{sorted(categories)}"
        )
    return list(spec.x_label_order)


def _render_box(data: Dataset, spec: PlotSpec, dependent: list[float]) -> str:
    cats = data.column(spec.independent)
    if data.is_numeric(spec.independent):
        raise ColumnTypeError(
            f"box plot needs a categorical independent column, {spec.independent!r} is numeric"
        )
    order = _category_order(spec, set(cats))
    groups = {cat: [v for v, c in zip(dependent, cats) if c == cat] for cat in order}

    per_cat = []
    y_min, y_max = min(dependent), max(dependent)
    for cat in order:
        values = groups[cat]
        s = summary_stats(values)
        iqr = s.q3 - s.q1
        lo_fence = s.q1 - 1.5 * iqr
        hi_fence = s.q3 + 1.5 * iqr
        inside = [v for v in values if lo_fence <= v <= hi_fence]
        whisker_lo = min(inside) if inside else s.q1
        whisker_hi = max(inside) if inside else s.q3
        outliers = [v for v in values if v < lo_fence or v > hi_fence]
        per_cat.append((cat, s, whisker_lo, whisker_hi, outliers))

    canvas = _Canvas(spec)
    canvas.comment(
        f'plot kind="box" dependent={quoteattr(spec.dependent)} '
        f"independent={quoteattr(spec.independent)} n={data.n_rows} "
        f"categories={len(order)}"
    )
    lo, hi, to_px = canvas.y_scale(y_min, y_max)
    canvas.title_and_frame()
    canvas.y_axis(lo, hi, to_px, spec.dependent)
    canvas.x_axis_line()

    slot = (canvas.x1 - canvas.x0) / len(order)
    box_w = slot * 0.5
    for i, (cat, s, w_lo, w_hi, outliers) in enumerate(per_cat):
        cx = canvas.x0 + (i + 0.5) * slot
        color = spec.legend_colors[i % len(spec.legend_colors)]
        canvas.comment(
            f"box category={quoteattr(cat)} x={_fmt(cx)} "
            f"q1={s.q1!r} median={s.median!r} q3={s.q3!r} "
            f"whisker_lo={w_lo!r} whisker_hi={w_hi!r} outliers={len(outliers)}"
        )
        # whisker stem and caps
        canvas.line(cx, to_px(w_lo), cx, to_px(s.q1))
        canvas.line(cx, to_px(s.q3), cx, to_px(w_hi))
        canvas.line(cx - box_w / 4, to_px(w_lo), cx + box_w / 4, to_px(w_lo))
        canvas.line(cx - box_w / 4, to_px(w_hi), cx + box_w / 4, to_px(w_hi))
        # the box itself carries its category for inspectability
        canvas.parts.append(
            f'<g class="box" data-category={quoteattr(cat)}>'
        )
        canvas.rect(cx - box_w / 2, to_px(s.q3), box_w, to_px(s.q1) - to_px(s.q3), fill=color)
        canvas.line(cx - box_w / 2, to_px(s.median), cx + box_w / 2, to_px(s.median), width=2.0)
        canvas.parts.append("</g>")
        for v in outliers:
            canvas.circle(cx, to_px(v), 3, "none", cls="outlier", stroke="#333")
        canvas.text(cx, canvas.y1 + 18, cat)
    canvas.text(
        (canvas.x0 + canvas.x1) / 2, spec.height_px - 12, spec.independent
    )
    _legend(canvas, order, spec)
    return canvas.document()


def _render_scatter(data: Dataset, spec: PlotSpec, dependent: list[float]) -> str:
    xs = data.numeric_column(spec.independent)
    canvas = _Canvas(spec)
    canvas.comment(
        f'plot kind="scatter" dependent={quoteattr(spec.dependent)} '
        f"independent={quoteattr(spec.independent)} n={data.n_rows}"
    )
    lo, hi, to_py = canvas.y_scale(min(dependent), max(dependent))
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    x_pad = 0.05 * (x_hi - x_lo)
    x_lo -= x_pad
    x_hi += x_pad

    def to_px(v: float) -> float:
        return canvas.x0 + (v - x_lo) / (x_hi - x_lo) * (canvas.x1 - canvas.x0)

    canvas.title_and_frame()
    canvas.y_axis(lo, hi, to_py, spec.dependent)
    canvas.x_axis_line()
    for i in range(6):
        v = x_lo + i * (x_hi - x_lo) / 5
        x = to_px(v)
        canvas.line(x, canvas.y1, x, canvas.y1 + 4)
        canvas.text(x, canvas.y1 + 18, f"{v:.3g}", size=spec.label_font_pt - 2)
    canvas.text((canvas.x0 + canvas.x1) / 2, spec.height_px - 12, spec.independent)
    color = spec.legend_colors[0]
    canvas.comment(f"points n={data.n_rows}")
    for x, y in zip(xs, dependent):
        canvas.circle(to_px(x), to_py(y), 3, color, cls="point")
    return canvas.document()


def _legend(canvas: _Canvas, labels: list[str], spec: PlotSpec) -> None:
    if len(labels) < 2:
        return
    x = canvas.x1 - 130
    y = canvas.y0 + 4
    for i, label in enumerate(labels):
        color = spec.legend_colors[i % len(spec.legend_colors)]
        canvas.rect(x, y + i * 16, 10, 10, fill=color)
        canvas.text(x + 16, y + i * 16 + 9, label, anchor="start", size=spec.label_font_pt - 2)
