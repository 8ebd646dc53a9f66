"""Small statistics kit for the evaluation harness.

Implemented directly rather than pulled from a stats package so the exact
tie-handling and degrees-of-freedom conventions are pinned down by our own
tests: Spearman uses average ranks for ties and is the Pearson correlation
of the rank vectors; the one-way F statistic is the usual between/within
mean-square ratio.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Sequence

from .errors import StatsError


def _check_finite(name: str, values: Sequence[float]) -> None:
    for v in values:
        if not math.isfinite(v):
            raise StatsError(f"{name} contains a non-finite value: {v!r}")


def ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks, ties sharing the average of the ranks they span."""
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    out = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            out[order[k]] = avg
        i = j + 1
    return out


def _pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise StatsError("correlation undefined: a variable has zero variance")
    return sxy / math.sqrt(sxx * syy)


def spearman_rank(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Rank correlation of two equal-length samples."""
    if len(xs) != len(ys):
        raise StatsError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise StatsError("need at least two pairs")
    _check_finite("xs", xs)
    _check_finite("ys", ys)
    return _pearson(ranks(xs), ranks(ys))


def one_way_anova_f(groups: Sequence[Sequence[float]]) -> tuple[float, int, int]:
    """F statistic with its (between, within) degrees of freedom."""
    k = len(groups)
    if k < 2:
        raise StatsError("need at least two groups")
    sizes = [len(g) for g in groups]
    if any(n == 0 for n in sizes):
        raise StatsError("empty group")
    total = sum(sizes)
    if total <= k:
        raise StatsError("within-group degrees of freedom would be zero")
    for idx, g in enumerate(groups):
        _check_finite(f"group {idx}", g)

    grand = sum(sum(g) for g in groups) / total
    means = [sum(g) / len(g) for g in groups]
    ss_between = sum(n * (m - grand) ** 2 for n, m in zip(sizes, means))
    ss_within = sum(sum((x - m) ** 2 for x in g) for g, m in zip(groups, means))
    df_between = k - 1
    df_within = total - k
    if ss_within == 0.0:
        raise StatsError("F undefined: zero within-group variance")
    return (ss_between / df_between) / (ss_within / df_within), df_between, df_within


@dataclass(frozen=True)
class ErrorSummary:
    count: int
    mean: float
    sd: float

    def as_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean, "sd": self.sd}


def summarize_errors(values: Sequence[float]) -> ErrorSummary:
    """Mean and sample standard deviation (zero for a single value)."""
    if not values:
        raise StatsError("cannot summarize an empty sample")
    _check_finite("values", values)
    mean = statistics.fmean(values)
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return ErrorSummary(len(values), mean, sd)
