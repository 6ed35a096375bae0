"""Competition-style scoring and paired statistics.

Formula-1 scoring ranks methods per instance by median best cost and awards
(10, 8, 6, 5, 4, 3, 2, 1) points to the top eight, splitting tied positions
by the arithmetic mean of their point values. Medians are compared across
methods via per-instance min-max normalization and one-sided Wilcoxon
signed-rank tests (exact distribution for small samples, normal
approximation with continuity and tie corrections for large ones).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from statistics import median
from typing import Iterable, Mapping, Optional, Sequence

from .core import EngineError

DEFAULT_POINTS = (10.0, 8.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0)

# Largest number of non-zero pairs for which the exact signed-rank
# distribution is used; above this the normal approximation takes over.
# 30 covers the customary 30-instance evaluation protocols while the
# subset-sum table stays tiny.
EXACT_WILCOXON_LIMIT = 30


class ScoringError(EngineError):
    """The record set cannot be scored (incomplete matrix, empty cell)."""


# ---------------------------------------------------------------------------
# Formula-1 scoring
# ---------------------------------------------------------------------------


def rank_points(
    medians: Mapping[str, float], points: Sequence[float] = DEFAULT_POINTS
) -> dict[str, float]:
    """Points per method for one instance, lower median is better.

    Methods with exactly equal medians share the arithmetic mean of the
    point values of the positions they span; positions beyond the points
    vector score zero.
    """
    order = sorted(medians, key=lambda m: medians[m])
    awarded: dict[str, float] = {}
    pos = 0
    while pos < len(order):
        tied = [order[pos]]
        while pos + len(tied) < len(order) and medians[order[pos + len(tied)]] == medians[tied[0]]:
            tied.append(order[pos + len(tied)])
        span = [points[p] if p < len(points) else 0.0 for p in range(pos, pos + len(tied))]
        share = sum(span) / len(tied)
        for m in tied:
            awarded[m] = share
        pos += len(tied)
    return awarded


@dataclass
class F1Table:
    """Aggregate scores: per-method totals and per-(method, instance) points."""

    totals: dict[str, float] = field(default_factory=dict)
    per_instance: dict[str, dict[str, float]] = field(default_factory=dict)

    def ranking(self) -> list[tuple[str, float]]:
        return sorted(self.totals.items(), key=lambda kv: (-kv[1], kv[0]))


def cell_medians(records: Iterable) -> dict[tuple[str, str], float]:
    """Median best cost per (method, instance) cell.

    Failed runs (no best cost) are excluded; a cell whose runs all failed
    gets an infinite median and thus ranks last on its instance.
    """
    by_cell: dict[tuple[str, str], list[float]] = {}
    for r in records:
        key = (r.method, r.instance)
        by_cell.setdefault(key, [])
        if r.best_cost is not None and r.error is None:
            by_cell[key].append(r.best_cost)
    return {
        key: (median(vals) if vals else math.inf) for key, vals in by_cell.items()
    }


def f1_scores(
    records: Iterable,
    reference_medians: Optional[Mapping[tuple[str, str], float]] = None,
    points: Sequence[float] = DEFAULT_POINTS,
) -> F1Table:
    """Formula-1 table over a record set, optionally against reference medians.

    Every method must cover every instance present in the records; reference
    medians join the per-instance rankings as extra competitors on the
    instances they cover.
    """
    medians = cell_medians(records)
    methods = sorted({m for m, _ in medians})
    instances = sorted({i for _, i in medians})
    if not methods:
        raise ScoringError("no records to score")
    missing = [
        (m, i) for m in methods for i in instances if (m, i) not in medians
    ]
    if missing:
        raise ScoringError(f"missing (method, instance) cells: {missing}")

    table = F1Table()
    for inst in instances:
        row = {m: medians[(m, inst)] for m in methods}
        if reference_medians:
            for (ref_m, ref_i), value in reference_medians.items():
                if ref_i == inst:
                    row[ref_m] = value
        awarded = rank_points(row, points)
        for m, pts in awarded.items():
            table.per_instance.setdefault(m, {})[inst] = pts
            table.totals[m] = table.totals.get(m, 0.0) + pts
    return table


# ---------------------------------------------------------------------------
# min-max normalization
# ---------------------------------------------------------------------------


def normalize_medians(
    records: Iterable,
    reference_min_max: Optional[Mapping[str, tuple[float, float]]] = None,
) -> dict[tuple[str, str], float]:
    """Per-instance min-max normalized medians in [0, 1] (lower is better).

    Bounds default to the extremes within the supplied record set; when
    external per-instance bounds are given, values falling outside them are
    clamped to [0, 1]. Degenerate instances (min == max) map every method to
    zero, with a warning.
    """
    medians = cell_medians(records)
    instances = sorted({i for _, i in medians})
    out: dict[tuple[str, str], float] = {}
    for inst in instances:
        row = {m: v for (m, i), v in medians.items() if i == inst}
        finite = [v for v in row.values() if math.isfinite(v)]
        external = reference_min_max is not None and inst in reference_min_max
        if external:
            lo, hi = reference_min_max[inst]
        elif finite:
            lo, hi = min(finite), max(finite)
        else:
            lo, hi = 0.0, 0.0
        if hi <= lo:
            warnings.warn(
                f"instance {inst!r} has degenerate bounds (min == max); "
                f"normalized medians set to 0"
            )
            for m in row:
                out[(m, inst)] = 0.0
            continue
        for m, v in row.items():
            if math.isinf(v):
                z = 1.0
            else:
                z = (v - lo) / (hi - lo)
            if external:
                z = min(1.0, max(0.0, z))
            out[(m, inst)] = z
    return out


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank test
# ---------------------------------------------------------------------------


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    pos = 0
    while pos < len(order):
        tied = [order[pos]]
        while (
            pos + len(tied) < len(order)
            and values[order[pos + len(tied)]] == values[tied[0]]
        ):
            tied.append(order[pos + len(tied)])
        avg = (2 * pos + len(tied) + 1) / 2  # mean of ranks pos+1 .. pos+len
        for i in tied:
            ranks[i] = avg
        pos += len(tied)
    return ranks


def _exact_upper_tail(doubled_ranks: Sequence[int], w2: int) -> float:
    """P(W+ >= w2/2) by subset-sum counting over the doubled (integer) ranks."""
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled_ranks:
        for s in range(total, r - 1, -1):
            counts[s] += counts[s - r]
    favourable = sum(counts[w2:])
    return favourable / (1 << len(doubled_ranks))


@dataclass(frozen=True)
class WilcoxonResult:
    p_value: float
    w_plus: float
    n_pairs: int
    exact: bool


def wilcoxon_signed_rank_detail(pairs: Sequence[tuple[float, float]], warn: bool = True) -> WilcoxonResult:
    """One-sided Wilcoxon signed-rank test of "a is lower (better) than b".

    Zero differences are dropped and tied absolute differences get averaged
    ranks. With fewer than five non-zero pairs there is no usable evidence
    and p = 1 is reported (with a warning).
    """
    diffs = [b - a for a, b in pairs]  # positive difference: a is better
    nonzero = [d for d in diffs if d != 0.0]
    n = len(nonzero)
    if n < 5:
        if warn:
            warnings.warn(
                f"only {n} non-zero differences; Wilcoxon test reported as p = 1"
            )
        return WilcoxonResult(1.0, 0.0, n, False)
    ranks = _average_ranks([abs(d) for d in nonzero])
    w_plus = sum(r for d, r in zip(nonzero, ranks) if d > 0)
    if n <= EXACT_WILCOXON_LIMIT:
        doubled = [round(2 * r) for r in ranks]
        p = _exact_upper_tail(doubled, round(2 * w_plus))
        return WilcoxonResult(p, w_plus, n, True)
    mean = n * (n + 1) / 4
    var = n * (n + 1) * (2 * n + 1) / 24
    # tie correction
    seen: dict[float, int] = {}
    for r in ranks:
        seen[r] = seen.get(r, 0) + 1
    for count in seen.values():
        if count > 1:
            var -= (count ** 3 - count) / 48
    z = (w_plus - mean - 0.5) / math.sqrt(var)
    p = 0.5 * math.erfc(z / math.sqrt(2))
    return WilcoxonResult(p, w_plus, n, False)


def wilcoxon_signed_rank(pairs: Sequence[tuple[float, float]], warn: bool = True) -> float:
    """One-sided p-value for the alternative "a is lower (better) than b"."""
    return wilcoxon_signed_rank_detail(pairs, warn=warn).p_value
