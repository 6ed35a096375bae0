"""Cross-domain solution acceptance.

Acceptance criteria such as Metropolis, threshold acceptance, and
record-to-record travel need a scale for "how much worse is still
acceptable". Objective ranges differ wildly between domains, between
instances, and even within one run, so all thresholds here are expressed in
units of the running mean improvement ``mu``: the average of all strictly
improving cost deltas observed so far in the run. The threshold parameter
``tau`` is therefore dimensionless and portable across domains.

Three criteria are provided, each with a constant or exponentially decaying
``tau`` schedule, plus the two trivial policies (accept everything, discard
anything not strictly better). Strictly improving candidates are accepted by
every strategy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Union

from .core import ConfigurationError

# exp() underflows to 0.0 below roughly -745; clamping the (non-positive)
# Metropolis exponent there avoids spurious overflow errors.
_MIN_EXPONENT = -745.0


class ImprovementStats:
    """Running mean of strictly improving cost deltas, starting from zero.

    ``mu`` is the arithmetic mean of the deltas ``c_cur - c_new`` over all
    strictly improving steps seen so far, ``n_imp`` their count. Both are
    global to a run and shared by every acceptance decision in it.
    """

    __slots__ = ("mu", "n_imp")

    def __init__(self, mu: float = 0.0, n_imp: int = 0):
        self.mu = mu
        self.n_imp = n_imp

    def copy(self) -> "ImprovementStats":
        return ImprovementStats(self.mu, self.n_imp)

    def __repr__(self):
        return f"ImprovementStats(mu={self.mu!r}, n_imp={self.n_imp})"


def update_mu(stats: ImprovementStats, c_cur: float, c_new: float) -> ImprovementStats:
    """Fold one step into the mean-improvement statistic (in place).

    Only strictly improving steps (``c_new < c_cur``) count; equal cost is
    not an improvement. Uses the incremental-mean rule
    ``mu += (delta - mu) / n_imp``.
    """
    if c_new < c_cur:
        stats.n_imp += 1
        stats.mu += (c_cur - c_new - stats.mu) / stats.n_imp
    return stats


# ---------------------------------------------------------------------------
# tau schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstTau:
    """Fixed threshold parameter."""

    tau: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigurationError("tau must be positive")

    def effective_tau(self, x: float) -> float:
        return self.tau


@dataclass(frozen=True)
class ExpTau:
    """Exponential decay from ``tau_start`` at x=0 to ``tau_end`` at x=1.

    The unique base-e exponential through the two endpoints:
    ``f(x) = exp((1-x) ln tau_start + x ln tau_end)``. Endpoints are returned
    exactly; ``x`` outside [0, 1] is clamped (late wall-clock loops may
    slightly overshoot the budget).
    """

    tau_start: float
    tau_end: float

    def __post_init__(self):
        if self.tau_start <= 0 or self.tau_end <= 0:
            raise ConfigurationError("tau_start and tau_end must be positive")

    def effective_tau(self, x: float) -> float:
        if x <= 0.0:
            return self.tau_start
        if x >= 1.0:
            return self.tau_end
        return math.exp((1.0 - x) * math.log(self.tau_start) + x * math.log(self.tau_end))


TauSchedule = Union[ConstTau, ExpTau]


def effective_tau(schedule: TauSchedule, x: float) -> float:
    """Threshold parameter at consumed-budget fraction ``x``."""
    return schedule.effective_tau(x)


# ---------------------------------------------------------------------------
# acceptance strategies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AcceptAll:
    """Every candidate is accepted."""

    uses_randomness = False

    def decide_non_improving(self, mu, c_best, c_cur, c_new, x, rand01) -> bool:
        return True


@dataclass(frozen=True)
class DiscardWorse:
    """Only strictly improving candidates pass; equal cost is rejected."""

    uses_randomness = False

    def decide_non_improving(self, mu, c_best, c_cur, c_new, x, rand01) -> bool:
        return False


@dataclass(frozen=True)
class Metropolis:
    """Accept a deterioration of d with probability exp(-d / (tau * mu))."""

    schedule: TauSchedule
    uses_randomness = True

    def acceptance_probability(self, mu, c_cur, c_new, x) -> float:
        """Probability of keeping a non-improving candidate."""
        if mu <= 0.0:
            return 0.0
        tau = self.schedule.effective_tau(x)
        exponent = (c_cur - c_new) / (tau * mu)
        exponent = min(0.0, max(exponent, _MIN_EXPONENT))
        return math.exp(exponent)

    def decide_non_improving(self, mu, c_best, c_cur, c_new, x, rand01) -> bool:
        return rand01 < self.acceptance_probability(mu, c_cur, c_new, x)


@dataclass(frozen=True)
class Threshold:
    """Accept while the candidate stays within tau*mu of the current cost."""

    schedule: TauSchedule
    uses_randomness = False

    def decide_non_improving(self, mu, c_best, c_cur, c_new, x, rand01) -> bool:
        if mu <= 0.0:
            return False
        return c_new <= c_cur + self.schedule.effective_tau(x) * mu


@dataclass(frozen=True)
class RecordToRecord:
    """Accept while the candidate stays within tau*mu of the run's best cost."""

    schedule: TauSchedule
    uses_randomness = False

    def decide_non_improving(self, mu, c_best, c_cur, c_new, x, rand01) -> bool:
        if mu <= 0.0:
            return False
        return c_new <= c_best + self.schedule.effective_tau(x) * mu


AcceptanceStrategy = Union[AcceptAll, DiscardWorse, Metropolis, Threshold, RecordToRecord]


def accept(
    strategy: AcceptanceStrategy,
    mu: float,
    c_best: float,
    c_cur: float,
    c_new: float,
    x: float,
    rand01: float,
) -> bool:
    """Acceptance decision for a candidate solution.

    ``rand01`` is a uniform draw from [0, 1) supplied by the caller (only
    Metropolis consumes it; passing it in keeps decisions testable). With
    ``mu == 0`` (no improvement seen yet) the three mu-normalized strategies
    reject every non-improving candidate: the thresholds collapse to zero
    and the Metropolis exponent diverges, so strict rejection is the
    continuous limit and no division by zero can occur.
    """
    if c_new < c_cur:
        return True
    return strategy.decide_non_improving(mu, c_best, c_cur, c_new, x, rand01)


# ---------------------------------------------------------------------------
# parameter presets
# ---------------------------------------------------------------------------

NHH = "NHH"
MC_LUBY = "MC_LUBY"

# 5-point parameter scales per (selector family, criterion, schedule variant):
# (tau_min, tau_max, tau_step, tau_end). CONST scales run tau from tau_min to
# tau_max; EXP scales run tau_start over the same grid with tau_end fixed.
# The higher MC_LUBY values reflect those selectors' regular intensifying
# restarts to the best-so-far solution.
_PRESET_SCALES: dict[tuple[str, str, str], tuple[str, str, str, str | None]] = {
    (NHH, "R2R", "CONST"): ("1.0", "6.0", "1.25", None),
    (NHH, "MA", "CONST"): ("0.25", "1.25", "0.25", None),
    (NHH, "TA", "CONST"): ("0.25", "1.25", "0.25", None),
    (NHH, "R2R", "EXP"): ("2.5", "7.5", "1.25", "1.0"),
    (NHH, "MA", "EXP"): ("0.5", "1.5", "0.25", "0.25"),
    (NHH, "TA", "EXP"): ("0.5", "1.5", "0.25", "0.25"),
    (MC_LUBY, "R2R", "CONST"): ("1.0", "6.0", "1.25", None),
    (MC_LUBY, "MA", "CONST"): ("0.25", "2.25", "0.5", None),
    (MC_LUBY, "TA", "CONST"): ("1.0", "2.0", "0.25", None),
    (MC_LUBY, "R2R", "EXP"): ("2.5", "12.5", "2.5", "1.0"),
    (MC_LUBY, "MA", "EXP"): ("0.75", "2.75", "0.5", "0.25"),
    (MC_LUBY, "TA", "EXP"): ("1.25", "2.25", "0.25", "1.0"),
}

_STRATEGY_KINDS = {"MA": Metropolis, "TA": Threshold, "R2R": RecordToRecord}


def preset_table(method: str, strategy_kind: str, variant: str) -> list[AcceptanceStrategy]:
    """The five built-in parameterizations of one acceptance criterion.

    ``method`` is ``"NHH"`` or ``"MC_LUBY"``, ``strategy_kind`` one of
    ``MA``/``TA``/``R2R``, ``variant`` ``CONST`` or ``EXP``. The grid is
    expanded with exact decimal arithmetic and converted to floats.
    """
    method = method.upper()
    strategy_kind = strategy_kind.upper()
    variant = variant.upper()
    key = (method, strategy_kind, variant)
    if key not in _PRESET_SCALES:
        raise ConfigurationError(f"no preset for {key}")
    tau_min, tau_max, tau_step, tau_end = _PRESET_SCALES[key]
    lo, hi, step = Decimal(tau_min), Decimal(tau_max), Decimal(tau_step)
    values = [lo + i * step for i in range(5)]
    assert values[-1] == hi, "preset grid must end at tau_max"
    cls = _STRATEGY_KINDS[strategy_kind]
    if variant == "CONST":
        return [cls(ConstTau(float(v))) for v in values]
    end = float(Decimal(tau_end))
    return [cls(ExpTau(float(v), end)) for v in values]
