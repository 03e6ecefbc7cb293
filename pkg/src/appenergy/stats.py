"""Native statistical engine: summaries, rank tests, ANOVA, correlation.

Nothing here shells out to an external statistics runtime; tail
probabilities come from the regularized incomplete gamma and beta
functions (series/continued-fraction evaluation, double precision).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .dataset import Dataset, FilterSpec
from .errors import (
    ColumnTypeError,
    DegenerateDataError,
    InvalidInputError,
    StatsError,
    UndefinedCorrelationError,
)

DEFAULT_ALPHA = 0.05

_EPS = 3e-16
_FPMIN = 1e-300
_MAX_ITER = 500


class TestKind(str, Enum):
    SUMMARY = "summary"
    KRUSKAL_WALLIS = "kruskal_wallis"
    ANOVA = "anova"
    SPEARMAN = "spearman"


# ---------------------------------------------------------------------------
# special functions


def _gamma_p_series(a: float, x: float) -> float:
    """Lower regularized incomplete gamma P(a, x), series expansion."""
    ap = a
    total = 1.0 / a
    delta = total
    for _ in range(_MAX_ITER):
        ap += 1.0
        delta *= x / ap
        total += delta
        if abs(delta) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))

def _gamma_q_contfrac(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x), Lentz continued fraction."""
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma_q(a: float, x: float) -> float:
    """Q(a, x) = 1 - P(a, x) for a > 0, x >= 0."""
    if a <= 0:
        raise StatsError("gamma shape must be positive")
    if x < 0:
        raise StatsError("gamma argument must be non-negative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


def _beta_contfrac(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def regularized_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise StatsError("beta parameters must be positive")
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_contfrac(a, b, x) / a
    return 1.0 - front * _beta_contfrac(b, a, 1.0 - x) / b


def tail_probability(dist: str, statistic: float, params) -> float:
    """Survival probability P(X > statistic).

    ``dist`` is ``chi_square`` (params: df), ``f`` (params: (df1, df2)) or
    ``student_t`` (params: df; one-sided survival, symmetric about 0).
    """
    if dist == "chi_square":
        df = params
        if df <= 0:
            raise StatsError("chi-square df must be positive")
        if statistic <= 0:
            return 1.0
        return regularized_gamma_q(df / 2.0, statistic / 2.0)
    if dist == "f":
        d1, d2 = params
        if d1 <= 0 or d2 <= 0:
            raise StatsError("F df must be positive")
        if statistic <= 0:
            return 1.0
        x = d2 / (d2 + d1 * statistic)
        return regularized_beta(d2 / 2.0, d1 / 2.0, x)
    if dist == "student_t":
        df = params
        if df <= 0:
            raise StatsError("t df must be positive")
        if statistic == 0:
            return 0.5
        x = df / (df + statistic * statistic)
        half = 0.5 * regularized_beta(df / 2.0, 0.5, x)
        return half if statistic > 0 else 1.0 - half
    raise StatsError(f"unknown distribution {dist!r}")


# ---------------------------------------------------------------------------
# descriptive statistics


def rankdata(values: list[float]) -> list[float]:
    """1-based ranks with ties sharing their mid-rank."""
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j + 2) / 2.0
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def _quantile(sorted_values: list[float], p: float) -> float:
    """Linear interpolation between closest ranks (the common type-7 rule)."""
    n = len(sorted_values)
    if n == 1:
        return sorted_values[0]
    pos = (n - 1) * p
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return sorted_values[lo]
    frac = pos - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    median: float
    sd: float
    minimum: float
    maximum: float
    q1: float
    q3: float
    sd_defined: bool = True  # False when n < 2 and sd is reported as 0


def summary_stats(values: list[float]) -> SummaryStats:
    """n, mean, median, sample sd, min/max and quartiles of one vector."""
    if not values:
        raise StatsError("cannot summarize an empty vector")
    n = len(values)
    mean = math.fsum(values) / n
    ordered = sorted(values)
    if n >= 2:
        var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
        sd = math.sqrt(var)
        sd_defined = True
    else:
        sd = 0.0
        sd_defined = False
    return SummaryStats(
        n=n,
        mean=mean,
        median=_quantile(ordered, 0.5),
        sd=sd,
        minimum=ordered[0],
        maximum=ordered[-1],
        q1=_quantile(ordered, 0.25),
        q3=_quantile(ordered, 0.75),
        sd_defined=sd_defined,
    )


# ---------------------------------------------------------------------------
# hypothesis tests


@dataclass
class TestResult:
    test: TestKind
    statistic: float
    df: tuple[float, ...]
    p_value: float
    group_summaries: list[tuple[str, SummaryStats]] = field(default_factory=list)
    interpretation: str = ""
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not (0.0 <= self.p_value <= 1.0):
            raise StatsError(f"p-value {self.p_value} outside [0, 1]")


def _check_groups(groups: list[list[float]], min_size: int = 1) -> None:
    if len(groups) < 2:
        raise StatsError("need at least 2 groups")
    for g in groups:
        if len(g) < min_size:
            raise StatsError(f"every group needs at least {min_size} values")


def _group_labels(groups, labels) -> list[str]:
    if labels is None:
        return [f"group{i + 1}" for i in range(len(groups))]
    if len(labels) != len(groups):
        raise InvalidInputError("labels must match groups")
    return [str(lbl) for lbl in labels]


def kruskal_wallis(groups: list[list[float]], labels=None) -> TestResult:
    """Tie-corrected Kruskal-Wallis H with a chi-square tail probability."""
    _check_groups(groups, min_size=1)
    labels = _group_labels(groups, labels)
    pooled = [v for g in groups for v in g]
    n_total = len(pooled)
    if len(set(pooled)) == 1:
        raise DegenerateDataError("all values identical; ranks are meaningless")
    ranks = rankdata(pooled)
    rank_sum_sq = 0.0
    idx = 0
    for g in groups:
        r = math.fsum(ranks[idx : idx + len(g)])
        rank_sum_sq += r * r / len(g)
        idx += len(g)
    h = 12.0 / (n_total * (n_total + 1)) * rank_sum_sq - 3.0 * (n_total + 1)
    tie_sum = 0.0
    counts: dict[float, int] = {}
    for v in pooled:
        counts[v] = counts.get(v, 0) + 1
    for t in counts.values():
        tie_sum += t**3 - t
    correction = 1.0 - tie_sum / (n_total**3 - n_total)
    if correction == 0.0:
        raise DegenerateDataError("tie correction is zero")
    h = max(h / correction, 0.0)
    df = len(groups) - 1
    p = tail_probability("chi_square", h, df)
    return TestResult(
        test=TestKind.KRUSKAL_WALLIS,
        statistic=h,
        df=(float(df),),
        p_value=p,
        group_summaries=[(lbl, summary_stats(g)) for lbl, g in zip(labels, groups)],
    )


def one_way_anova(groups: list[list[float]], labels=None) -> TestResult:
    """Classic F = MSB/MSW over k groups."""
    _check_groups(groups, min_size=2)
    labels = _group_labels(groups, labels)
    k = len(groups)
    n_total = sum(len(g) for g in groups)
    grand = math.fsum(v for g in groups for v in g) / n_total
    means = [math.fsum(g) / len(g) for g in groups]
    ssb = math.fsum(len(g) * (m - grand) ** 2 for g, m in zip(groups, means))
    ssw = math.fsum(
        math.fsum((v - m) ** 2 for v in g) for g, m in zip(groups, means)
    )
    if ssw == 0.0:
        raise DegenerateDataError("zero within-group variance")
    df_between = k - 1
    df_within = n_total - k
    f_stat = (ssb / df_between) / (ssw / df_within)
    p = tail_probability("f", f_stat, (df_between, df_within))
    return TestResult(
        test=TestKind.ANOVA,
        statistic=f_stat,
        df=(float(df_between), float(df_within)),
        p_value=p,
        group_summaries=[(lbl, summary_stats(g)) for lbl, g in zip(labels, groups)],
    )


def spearman(x: list[float], y: list[float]) -> TestResult:
    """Rank correlation (mid-rank ties) with a two-sided t-based p-value."""
    if len(x) != len(y):
        raise InvalidInputError("x and y must have equal length")
    n = len(x)
    if n < 3:
        raise StatsError("spearman needs n >= 3")
    if len(set(x)) == 1 or len(set(y)) == 1:
        raise UndefinedCorrelationError("constant vector has no rank correlation")
    rx = rankdata(x)
    ry = rankdata(y)
    mx = math.fsum(rx) / n
    my = math.fsum(ry) / n
    cov = math.fsum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = math.fsum((a - mx) ** 2 for a in rx)
    vy = math.fsum((b - my) ** 2 for b in ry)
    rho = cov / math.sqrt(vx * vy)
    flags: list[str] = []
    if abs(rho) >= 1.0 - 1e-12:
        rho = 1.0 if rho > 0 else -1.0
        p = 0.0
        flags.append("exact-monotone")
    else:
        t_stat = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = 2.0 * tail_probability("student_t", abs(t_stat), n - 2)
    return TestResult(
        test=TestKind.SPEARMAN,
        statistic=rho,
        df=(float(n - 2),),
        p_value=p,
        flags=flags,
    )
