"""Virtual low-level heuristics.

A virtual LLH wraps one base heuristic with up to three modifiers: an
acceptance strategy filtering what survives each application, a repetition
timeout during which the base heuristic is applied over and over, and a
perturbation-intensity override. Set-level builders turn a domain's original
roster into a transformed roster: per-category acceptance/duration
transforms, duplication over a list of intensities, and the classic
"amplification" that doubles a set with 10 ms discard-worse repeaters.

Application keeps the standard single-LLH interface: the wrapped heuristic
is applied to the solution in a source register, the result lands in a
target register, and its cost is returned.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .acceptance import (
    AcceptAll,
    AcceptanceStrategy,
    DiscardWorse,
    ExpTau,
    ImprovementStats,
    RecordToRecord,
    accept,
    update_mu,
)
from .core import (
    BudgetClock,
    ConfigurationError,
    LLHCategory,
    LLHDescriptor,
    PERTURBATIVE_CATEGORIES,
    SearchEngine,
)

# Perturbation-intensity duplication lists. SETUP_I covers the whole scale
# uniformly, SETUP_II the lower half with an exponential ramp-up that
# prioritizes low intensities, SETUP_III slight deviations around the
# customary 0.2 default.
SETUP_I = tuple(i / 10 for i in range(1, 11))
SETUP_II = (0.05, 0.05, 0.05, 0.05, 0.1, 0.1, 0.2, 0.3, 0.5)
SETUP_III = (0.1, 0.2, 0.3)

INTENSITY_SETUPS = {"I": SETUP_I, "II": SETUP_II, "III": SETUP_III}


@dataclass(frozen=True)
class VirtualLLH:
    """One base heuristic plus its acceptance/duration/intensity modifiers.

    ``duration_ms`` absent means the base heuristic runs exactly once per
    application. ``intensity`` absent means the domain's current intensity
    parameter is left alone; it may only be set on RR/MUT heuristics.
    """

    base: LLHDescriptor
    acceptance: AcceptanceStrategy = field(default_factory=AcceptAll)
    duration_ms: Optional[float] = None
    intensity: Optional[float] = None

    def __post_init__(self):
        if self.duration_ms is not None and self.duration_ms <= 0:
            raise ConfigurationError("duration_ms must be positive when given")
        if self.intensity is not None:
            if not 0.0 <= self.intensity <= 1.0:
                raise ConfigurationError("intensity must be in [0,1]")
            if self.base.category not in PERTURBATIVE_CATEGORIES:
                raise ConfigurationError(
                    f"intensity override not allowed on {self.base.category} heuristics"
                )


class VirtualLLHSet:
    """Immutable ordered collection of virtual LLHs with a category index."""

    def __init__(self, entries: Sequence[VirtualLLH]):
        self.entries: tuple[VirtualLLH, ...] = tuple(entries)
        index: dict[LLHCategory, list[int]] = {}
        for i, entry in enumerate(self.entries):
            index.setdefault(entry.base.category, []).append(i)
        self.category_index: dict[LLHCategory, tuple[int, ...]] = {
            cat: tuple(idxs) for cat, idxs in index.items()
        }

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i: int) -> VirtualLLH:
        return self.entries[i]

    def in_category(self, category: LLHCategory) -> tuple[int, ...]:
        return self.category_index.get(category, ())


@dataclass(frozen=True)
class TransformSpec:
    """One per-category transformation: acceptance, duration, intensity list.

    Later specs targeting the same category refine earlier ones field by
    field; an intensities list duplicates every intensity-sensitive heuristic
    in the category once per value.
    """

    categories: frozenset[LLHCategory]
    acceptance: Optional[AcceptanceStrategy] = None
    duration_ms: Optional[float] = None
    intensities: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "categories", frozenset(self.categories))
        if self.intensities is not None:
            object.__setattr__(self, "intensities", tuple(self.intensities))
            if not self.intensities:
                raise ConfigurationError("intensities list must be non-empty when given")
            for v in self.intensities:
                if not 0.0 <= v <= 1.0:
                    raise ConfigurationError(f"intensity {v} outside [0,1]")
        if self.duration_ms is not None and self.duration_ms <= 0:
            raise ConfigurationError("duration_ms must be positive when given")


def transform(
    source: Sequence[LLHDescriptor],
    specs: Sequence[TransformSpec],
    default_accept: AcceptanceStrategy | None = None,
) -> VirtualLLHSet:
    """Build a virtual LLH set from a base roster and a list of transforms.

    Per targeted category the specs are merged in order (later fields
    override earlier ones when present). Each heuristic in a targeted
    category yields one entry per intensity value if the merged spec carries
    an intensities list and the heuristic is intensity sensitive, otherwise a
    single entry. Untargeted heuristics pass through once with the default
    acceptance and no modifiers.
    """
    if default_accept is None:
        default_accept = AcceptAll()

    merged: dict[LLHCategory, dict] = {}
    for spec in specs:
        for cat in spec.categories:
            slot = merged.setdefault(
                cat, {"acceptance": None, "duration_ms": None, "intensities": None}
            )
            if spec.acceptance is not None:
                slot["acceptance"] = spec.acceptance
            if spec.duration_ms is not None:
                slot["duration_ms"] = spec.duration_ms
            if spec.intensities is not None:
                slot["intensities"] = spec.intensities

    for cat, slot in merged.items():
        if slot["intensities"] is not None and cat is not LLHCategory.XO:
            # specs targeting XO are accepted but pass through unduplicated
            if not any(d.intensity_sensitive for d in source if d.category == cat):
                raise ConfigurationError(
                    f"intensity duplication on {cat} but no intensity-sensitive "
                    f"heuristic exists in that category"
                )

    entries: list[VirtualLLH] = []
    for desc in source:
        slot = merged.get(desc.category)
        if slot is None:
            entries.append(VirtualLLH(desc, default_accept))
            continue
        acceptance = slot["acceptance"] if slot["acceptance"] is not None else default_accept
        duration = slot["duration_ms"]
        if slot["intensities"] and desc.intensity_sensitive:
            for value in slot["intensities"]:
                entries.append(VirtualLLH(desc, acceptance, duration, value))
        else:
            entries.append(VirtualLLH(desc, acceptance, duration))
    return VirtualLLHSet(entries)


def domain_amplification(source: Sequence[LLHDescriptor]) -> VirtualLLHSet:
    """Double a roster with an "amplified" duplicate per heuristic.

    The duplicates repeat their base heuristic for 10 ms while rejecting
    every non-improving solution; the originals pass through unmodified.
    """
    originals = [VirtualLLH(d, AcceptAll()) for d in source]
    amplified = [VirtualLLH(d, DiscardWorse(), duration_ms=10.0) for d in source]
    return VirtualLLHSet(originals + amplified)


STAR_TAU_START = {"NHH": 5.0, "LUBY": 7.5, "MC": 10.0}
STAR_TAU_END = 1.0
STAR_DURATION_MS = {"NHH": 1.0, "LUBY": 0.5, "MC": 0.5}
REAL_WORLD_DURATION_MS = 10.0
STAR_SETUP = {"NHH": SETUP_II, "LUBY": SETUP_III, "MC": SETUP_II}


def star_preset(method: str, context: str = "benchmark") -> list[TransformSpec]:
    """The final fixed transformation stack for a selector family.

    Record-to-record acceptance with exponential cooling on the perturbative
    categories, repetition timeouts on LS/RR/MUT (longer in the real-world
    context, where single applications are roughly an order of magnitude
    slower), and intensity duplication (setup II, or III for LUBY).
    """
    method = method.upper()
    if method not in STAR_TAU_START:
        raise ConfigurationError(f"unknown method {method!r}")
    if context not in ("benchmark", "real_world"):
        raise ConfigurationError(f"unknown context {context!r}")
    duration = REAL_WORLD_DURATION_MS if context == "real_world" else STAR_DURATION_MS[method]
    return [
        TransformSpec(
            frozenset({LLHCategory.RR, LLHCategory.MUT}),
            acceptance=RecordToRecord(ExpTau(STAR_TAU_START[method], STAR_TAU_END)),
        ),
        TransformSpec(
            frozenset({LLHCategory.LS, LLHCategory.RR, LLHCategory.MUT}),
            duration_ms=duration,
        ),
        TransformSpec(
            frozenset({LLHCategory.RR, LLHCategory.MUT}),
            intensities=STAR_SETUP[method],
        ),
    ]


class _Deadline:
    """Repetition timeout for one virtual-LLH application.

    Checked between iterations against the elapsed time since entry; an
    iteration in flight is never interrupted and the first iteration always
    runs. Wall clocks measure real time; virtual clocks count ticks at the
    clock's ticks-per-millisecond rate.
    """

    __slots__ = ("_limit", "_clock", "_entry")

    def __init__(self, duration_ms: Optional[float], clock: BudgetClock):
        self._clock = clock
        if duration_ms is None:
            self._limit = None
            self._entry = 0.0
        elif clock.mode == BudgetClock.VIRTUAL:
            self._limit = duration_ms * clock.ticks_per_ms
            self._entry = clock.elapsed
        else:
            self._limit = duration_ms / 1000.0
            self._entry = time.perf_counter()

    def exceeded(self) -> bool:
        if self._limit is None:
            return True
        if self._clock.mode == BudgetClock.VIRTUAL:
            return self._clock.elapsed - self._entry >= self._limit
        return time.perf_counter() - self._entry >= self._limit


def apply_virtual_llh(
    engine: SearchEngine,
    h: VirtualLLH,
    stats: ImprovementStats,
    clock: BudgetClock,
    rng: random.Random,
    s_star: int,
    s_star2: int,
) -> float:
    """Apply a virtual LLH from register ``s_star`` into register ``s_star2``.

    The engine's two scratch registers hold the working pair: the current
    solution starts as a copy of ``s_star``; each iteration applies the base
    heuristic into the new-solution scratch, folds any strict improvement
    into the global mean-improvement statistic, and lets the entry's
    acceptance strategy decide whether the candidate replaces the current
    solution. When the repetition timeout runs out the last accepted solution
    is copied to ``s_star2`` and its cost returned. The intensity override,
    when present, is installed on entry and restored on exit.
    """
    s_cur = engine.scratch_cur
    s_new = engine.scratch_new
    engine.copy_solution(s_star, s_cur)
    if h.intensity is not None:
        engine.set_perturbation_intensity(h.intensity)
    strategy = h.acceptance
    needs_rand = strategy.uses_randomness
    deadline = _Deadline(h.duration_ms, clock)
    while True:
        c_best = engine.global_best_cost()
        c_cur = engine.cost(s_cur)
        c_new = engine.apply_llh(h.base.id, s_cur, s_new)
        update_mu(stats, c_cur, c_new)
        rand01 = rng.random() if needs_rand else 0.0
        if accept(strategy, stats.mu, c_best, c_cur, c_new, clock.consumed_fraction(), rand01):
            engine.copy_solution(s_new, s_cur)
        if deadline.exceeded():
            break
    if h.intensity is not None:
        engine.restore_perturbation_intensity()
    engine.copy_solution(s_cur, s_star2)
    return engine.cost(s_star2)
