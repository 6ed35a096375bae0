"""Selection strategies and the run loop.

Two built-in selectors drive a search over a virtual LLH set:

* NHH: uniformly picks a heuristic category (LS, RR, or MUT), then a
  heuristic within it, always keeping the returned solution. All steering
  comes from the virtual LLH set itself.
* LUBY: uniform selection over all (non-crossover) entries, with regular
  intensifying restarts back to the best-so-far solution whose segment
  lengths follow the Luby sequence.

The variant ladder builds the standard configurations on top of either:
identity set, amplified set, acceptance transform, acceptance+repetition,
and the full preset stack. An external selector implementing ``step(run)``
can be plugged into the same machinery.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .acceptance import ExpTau, ImprovementStats, RecordToRecord
from .core import (
    BudgetClock,
    ConfigurationError,
    Domain,
    LLHCategory,
    SearchEngine,
)
from .virtual import (
    REAL_WORLD_DURATION_MS,
    STAR_DURATION_MS,
    STAR_TAU_END,
    STAR_TAU_START,
    TransformSpec,
    VirtualLLH,
    VirtualLLHSet,
    apply_virtual_llh,
    domain_amplification,
    star_preset,
    transform,
)

NHH_CATEGORIES = (LLHCategory.LS, LLHCategory.RR, LLHCategory.MUT)


def luby(i: int) -> int:
    """The i-th term of the Luby restart sequence (1-based): 1,1,2,1,1,2,4,...

    Term i equals 2**(k-1) when i == 2**k - 1, and otherwise the term at
    position i - 2**(k-1) + 1 for the largest k with 2**(k-1) <= i < 2**k - 1.
    """
    if i < 1:
        raise ValueError(f"Luby sequence is defined for i >= 1, got {i}")
    while True:
        k = i.bit_length()
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i = i - (1 << (k - 1)) + 1


@dataclass
class SelectorState:
    """Mutable per-run selector bookkeeping."""

    current_register: int = 0
    best_register: int = 1
    steps_since_restart: int = 0
    luby_index: int = 1
    restart_unit: int = 50


class HyperHeuristicRun:
    """One search run: engine, virtual LLH set, selector, and statistics."""

    def __init__(
        self,
        engine: SearchEngine,
        vllh_set: VirtualLLHSet,
        selector: "Selector",
        rng: random.Random,
        state: SelectorState | None = None,
        record_trajectory: bool = False,
    ):
        self.engine = engine
        self.vllh_set = vllh_set
        self.selector = selector
        self.rng = rng
        self.state = state if state is not None else SelectorState()
        self.stats = ImprovementStats()
        self.clock = engine.clock
        self.record_trajectory = record_trajectory
        self.trajectory: list[tuple[float, float]] = []
        self.steps = 0
        self.best_cost = float("inf")

    def execute(self) -> float:
        """Run until the budget clock is exhausted; returns the best cost seen."""
        self.clock.start()
        engine = self.engine
        state = self.state
        engine.init_solution(state.current_register)
        engine.copy_solution(state.current_register, state.best_register)
        self.best_cost = engine.cost(state.best_register)
        if self.record_trajectory:
            self.trajectory.append((self.clock.elapsed, engine.global_best_cost()))
        last_best = engine.global_best_cost()
        while not self.clock.exhausted():
            self.selector.step(self)
            self.steps += 1
            if self.record_trajectory:
                gb = engine.global_best_cost()
                if gb < last_best:
                    self.trajectory.append((self.clock.elapsed, gb))
                    last_best = gb
        return engine.global_best_cost()

    def apply_to_current(self, entry: VirtualLLH) -> float:
        """Apply one virtual LLH current->current and refresh the best register."""
        state = self.state
        c = apply_virtual_llh(
            self.engine,
            entry,
            self.stats,
            self.clock,
            self.rng,
            state.current_register,
            state.current_register,
        )
        if c < self.best_cost:
            self.engine.copy_solution(state.current_register, state.best_register)
            self.best_cost = c
        return c


class Selector:
    """Interface for pluggable selection strategies."""

    name = "selector"

    def step(self, run: HyperHeuristicRun) -> None:
        raise NotImplementedError


def nhh_select(rng: random.Random, vllh_set: VirtualLLHSet) -> VirtualLLH:
    """Category-uniform draw: pick LS/RR/MUT uniformly, then an entry within.

    Crossover entries are never drawn. Empty categories are excluded from the
    first draw (the remaining ones share the probability mass equally); if
    all three are empty the set is unusable.
    """
    candidates = [c for c in NHH_CATEGORIES if vllh_set.in_category(c)]
    if not candidates:
        raise ConfigurationError("virtual LLH set has no LS, RR, or MUT entries")
    cat = candidates[rng.randrange(len(candidates))]
    idxs = vllh_set.in_category(cat)
    return vllh_set[idxs[rng.randrange(len(idxs))]]


class NHHSelector(Selector):
    """Unbiased two-level random selection, always keeping the new solution."""

    name = "nhh"

    def step(self, run: HyperHeuristicRun) -> None:
        entry = nhh_select(run.rng, run.vllh_set)
        run.apply_to_current(entry)


def nhh_step(run: HyperHeuristicRun) -> None:
    """One NHH selection-application step on ``run``."""
    NHHSelector().step(run)


class LubySelector(Selector):
    """Uniform selection with Luby-scheduled restarts to the best solution.

    Selection is uniform over every non-crossover entry with no category
    stratification, so duplicated entries directly bias the sampling
    probabilities. After ``restart_unit * luby(luby_index)`` applications the
    current solution is reset to the best-so-far and the next Luby segment
    begins. Restarts never fire mid-application.
    """

    name = "luby"

    def __init__(self):
        self._selectable: tuple[int, ...] | None = None
        self._for_set: VirtualLLHSet | None = None

    def _selectable_entries(self, vllh_set: VirtualLLHSet) -> tuple[int, ...]:
        if self._for_set is not vllh_set:
            idxs = tuple(
                i for i, e in enumerate(vllh_set.entries) if e.base.category != LLHCategory.XO
            )
            if not idxs:
                raise ConfigurationError("virtual LLH set has no selectable entries")
            self._selectable = idxs
            self._for_set = vllh_set
        return self._selectable

    def step(self, run: HyperHeuristicRun) -> None:
        idxs = self._selectable_entries(run.vllh_set)
        entry = run.vllh_set[idxs[run.rng.randrange(len(idxs))]]
        run.apply_to_current(entry)
        state = run.state
        state.steps_since_restart += 1
        if state.steps_since_restart >= state.restart_unit * luby(state.luby_index):
            run.engine.copy_solution(state.best_register, state.current_register)
            state.steps_since_restart = 0
            state.luby_index += 1


def luby_step(run: HyperHeuristicRun) -> None:
    """One LUBY selection-application step (including any due restart)."""
    selector = run.selector if isinstance(run.selector, LubySelector) else LubySelector()
    selector.step(run)


VARIANTS = ("X0", "Xplus", "XA", "XAR", "Xstar")
METHODS = ("NHH", "LUBY", "MC")


def _ladder_specs(method: str, variant: str, context: str) -> list[TransformSpec] | None:
    """Transform stack for one rung of the variant ladder (None => amplification)."""
    tau_start = STAR_TAU_START[method]
    acceptance_spec = TransformSpec(
        frozenset({LLHCategory.RR, LLHCategory.MUT}),
        acceptance=RecordToRecord(ExpTau(tau_start, STAR_TAU_END)),
    )
    duration = REAL_WORLD_DURATION_MS if context == "real_world" else STAR_DURATION_MS[method]
    if variant == "X0":
        return []
    if variant == "Xplus":
        return None
    if variant == "XA":
        return [acceptance_spec]
    if variant == "XAR":
        return [
            acceptance_spec,
            TransformSpec(
                frozenset({LLHCategory.LS, LLHCategory.RR, LLHCategory.MUT}),
                duration_ms=duration,
            ),
        ]
    if variant == "Xstar":
        return star_preset(method, context)
    raise ConfigurationError(f"unknown variant {variant!r}")


@dataclass
class RunFactory:
    """Reusable, immutable recipe for constructing configured runs."""

    method: str
    variant: str = "X0"
    context: str = "benchmark"
    restart_unit: int = 50
    transform_specs: Optional[Sequence[TransformSpec]] = None
    selector_factory: Optional[Callable[[], Selector]] = None

    def build_set(self, domain: Domain) -> VirtualLLHSet:
        source = domain.llh_set()
        if self.transform_specs is not None:
            return transform(source, list(self.transform_specs))
        specs = _ladder_specs(self.method, self.variant, self.context)
        if specs is None:
            return domain_amplification(source)
        return transform(source, specs)

    def make_selector(self) -> Selector:
        if self.selector_factory is not None:
            return self.selector_factory()
        if self.method == "NHH":
            return NHHSelector()
        if self.method == "LUBY":
            return LubySelector()
        raise ConfigurationError(
            f"method {self.method!r} needs an externally supplied selector"
        )

    def make_run(
        self,
        domain: Domain,
        clock: BudgetClock,
        rng: random.Random,
        record_trajectory: bool = False,
    ) -> HyperHeuristicRun:
        engine = SearchEngine(domain, clock)
        vllh_set = self.build_set(domain)
        state = SelectorState(restart_unit=self.restart_unit)
        return HyperHeuristicRun(
            engine,
            vllh_set,
            self.make_selector(),
            rng,
            state=state,
            record_trajectory=record_trajectory,
        )


def build_variant(
    method: str,
    variant: str,
    context: str = "benchmark",
    restart_unit: int = 50,
    selector: Optional[Callable[[], Selector]] = None,
    transform_specs: Optional[Sequence[TransformSpec]] = None,
) -> RunFactory:
    """Configured run factory for one (method, variant) combination.

    ``method`` is NHH, LUBY, or MC; MC is a slot for an external selector and
    requires ``selector``. ``transform_specs`` overrides the ladder's set
    construction with an explicit transform stack.
    """
    method = method.upper()
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}")
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if context not in ("benchmark", "real_world"):
        raise ConfigurationError(f"unknown context {context!r}")
    if restart_unit < 1:
        raise ConfigurationError("restart_unit must be >= 1")
    if method == "MC" and selector is None:
        raise ConfigurationError("the MC slot requires an externally supplied selector")
    return RunFactory(
        method=method,
        variant=variant,
        context=context,
        restart_unit=restart_unit,
        transform_specs=list(transform_specs) if transform_specs is not None else None,
        selector_factory=selector,
    )
