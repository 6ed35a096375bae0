"""Engine primitives: heuristic identity, the domain contract, solution
registers, and the search budget clock.

A problem domain exposes a set of categorized low-level heuristics (LLHs)
and a bank of addressable solution registers. Everything a selection
strategy may do goes through this surface: initialize/copy/inspect register
contents, apply an LLH from one register into another, and adjust the
domain's perturbation-intensity parameter. The ``SearchEngine`` wrapper adds
the two pieces of run-global bookkeeping every strategy relies on: the best
cost seen so far and the consumed-budget clock.
"""

from __future__ import annotations

import math
import random
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum


class EngineError(Exception):
    """Base class for errors raised by the search engine."""


class EmptyRegisterError(EngineError):
    """A register was read or copied before any solution was stored in it."""


class ConfigurationError(EngineError):
    """Invalid static configuration (bad parameter, unusable setup)."""


class ValidationError(EngineError):
    """A constructed object violates one of its declared invariants."""


class LLHCategory(Enum):
    """The four HyFlex-style heuristic categories.

    LS heuristics carry a quality guarantee: applying one never returns a
    strictly worse solution. RR (ruin-and-recreate) and MUT (mutation) are
    perturbative and give no guarantee; XO combines two solutions.
    """

    LS = "LS"
    RR = "RR"
    MUT = "MUT"
    XO = "XO"


#: Categories whose heuristics respond to the perturbation-intensity parameter.
PERTURBATIVE_CATEGORIES = frozenset({LLHCategory.RR, LLHCategory.MUT})


@dataclass(frozen=True)
class LLHDescriptor:
    """Identity of one base heuristic: id, category, intensity sensitivity.

    Ids are dense ``0..n-1`` within a domain's LLH set. Only RR and MUT
    heuristics may be intensity sensitive.
    """

    id: int
    category: LLHCategory
    intensity_sensitive: bool = False

    def __post_init__(self):
        if self.id < 0:
            raise ConfigurationError(f"LLH id must be non-negative, got {self.id}")
        if self.intensity_sensitive and self.category not in PERTURBATIVE_CATEGORIES:
            raise ConfigurationError(
                f"only RR/MUT heuristics can be intensity sensitive, got {self.category}"
            )


class BudgetClock:
    """Tracks consumed search budget in wall-clock seconds or virtual ticks.

    In virtual mode every LLH application advances the clock by a
    domain-reported tick count, which makes runs bit-reproducible. The
    ``ticks_per_ms`` conversion maps millisecond repetition timeouts onto
    ticks (default: 1 ms == 1000 ticks).
    """

    WALL = "wall_clock"
    VIRTUAL = "virtual"

    def __init__(self, mode: str, total_budget: float, ticks_per_ms: int = 1000):
        if mode not in (self.WALL, self.VIRTUAL):
            raise ConfigurationError(f"unknown clock mode {mode!r}")
        if total_budget <= 0:
            raise ConfigurationError("total budget must be positive")
        if ticks_per_ms <= 0:
            raise ConfigurationError("ticks_per_ms must be positive")
        self.mode = mode
        self.total_budget = total_budget
        self.ticks_per_ms = ticks_per_ms
        self._virtual_elapsed = 0
        self._wall_start: float | None = None

    @classmethod
    def wall(cls, seconds: float) -> "BudgetClock":
        return cls(cls.WALL, seconds)

    @classmethod
    def virtual(cls, ticks: int, ticks_per_ms: int = 1000) -> "BudgetClock":
        return cls(cls.VIRTUAL, ticks, ticks_per_ms)

    def start(self) -> None:
        """Begin measuring. Wall mode records the start timestamp."""
        if self.mode == self.WALL:
            self._wall_start = time.perf_counter()
        else:
            self._virtual_elapsed = 0

    @property
    def elapsed(self) -> float:
        if self.mode == self.VIRTUAL:
            return self._virtual_elapsed
        if self._wall_start is None:
            return 0.0
        return time.perf_counter() - self._wall_start

    def on_apply(self, ticks: int) -> None:
        """Advance the virtual clock after one base-LLH application."""
        if self.mode == self.VIRTUAL:
            self._virtual_elapsed += max(1, int(ticks))

    def consumed_fraction(self) -> float:
        return min(self.elapsed / self.total_budget, 1.0)

    def exhausted(self) -> bool:
        return self.elapsed >= self.total_budget


def consumed_fraction(clock: BudgetClock) -> float:
    """Proportion of the search budget spent so far, clamped to [0, 1]."""
    return clock.consumed_fraction()


class Domain(ABC):
    """A problem instance plus its bank of solution registers.

    One instance of this class is confined to a single run. Registers hold
    independent solutions; copying produces a detached duplicate, and reading
    an empty register raises :class:`EmptyRegisterError` rather than
    returning a default.

    Subclasses store per-register state objects exposing a ``cost`` attribute
    and a ``copy()`` method, and implement the heuristic roster.
    """

    DEFAULT_INTENSITY = 0.2

    def __init__(self, n_registers: int = 8, rng: random.Random | None = None):
        if n_registers < 4:
            raise ConfigurationError("need at least 4 registers (current/best + scratch)")
        self._registers: list = [None] * n_registers
        self.rng = rng if rng is not None else random.Random()
        self._intensity = self.DEFAULT_INTENSITY
        self._saved_intensity = self.DEFAULT_INTENSITY
        # Register used as the second parent by XO heuristics; falls back to
        # the source register when unset or empty.
        self.xo_mate_register: int | None = None

    @property
    def n_registers(self) -> int:
        return len(self._registers)

    @property
    def perturbation_intensity(self) -> float:
        return self._intensity

    def set_perturbation_intensity(self, value: float) -> None:
        """Override the intensity parameter, saving the previous value.

        Single-level save: each call overwrites the saved slot, and
        ``restore_perturbation_intensity`` returns to the value in effect
        before the most recent call.
        """
        if not 0.0 <= value <= 1.0:
            raise ConfigurationError(f"perturbation intensity must be in [0,1], got {value}")
        self._saved_intensity = self._intensity
        self._intensity = value

    def restore_perturbation_intensity(self) -> None:
        self._intensity = self._saved_intensity

    def _slot(self, register: int):
        if not 0 <= register < len(self._registers):
            raise ConfigurationError(
                f"register {register} out of range 0..{len(self._registers) - 1}"
            )
        state = self._registers[register]
        if state is None:
            raise EmptyRegisterError(f"register {register} holds no solution")
        return state

    def _check_register(self, register: int) -> None:
        if not 0 <= register < len(self._registers):
            raise ConfigurationError(
                f"register {register} out of range 0..{len(self._registers) - 1}"
            )

    def copy_solution(self, src: int, dst: int) -> None:
        """Duplicate the solution in ``src`` into ``dst`` (self-copy is a no-op)."""
        state = self._slot(src)
        self._check_register(dst)
        if src == dst:
            return
        self._registers[dst] = state.copy()

    def cost(self, register: int) -> float:
        """Cached cost of the solution in ``register`` (minimization)."""
        return self._slot(register).cost

    def register_empty(self, register: int) -> bool:
        self._check_register(register)
        return self._registers[register] is None

    @abstractmethod
    def llh_set(self) -> list[LLHDescriptor]:
        """The domain's heuristic roster, ids dense 0..n-1."""

    @abstractmethod
    def init_solution(self, register: int) -> None:
        """Create a fresh (randomized or constructive) solution in ``register``."""

    @abstractmethod
    def apply_llh(self, llh_id: int, src: int, dst: int) -> float:
        """Apply heuristic ``llh_id`` to ``src``, store the result in ``dst``.

        Returns the cost of the new solution. ``src`` is left untouched
        (unless ``src == dst``).
        """

    def apply_ticks(self, llh_id: int) -> int:
        """Virtual-clock cost of one application (roughly microseconds of work)."""
        return 1

    @abstractmethod
    def recompute_cost(self, register: int) -> float:
        """From-scratch cost of the stored solution; test hook for cache checks."""


def register_bank_copy(domain: Domain, src: int, dst: int) -> None:
    """Copy a solution between registers; afterwards the two are independent."""
    domain.copy_solution(src, dst)


class SearchEngine:
    """Run-scoped wrapper around a :class:`Domain`.

    Adds the two pieces of global bookkeeping the domain contract promises:
    ``global_best_cost()`` (minimum over every cost ever returned by
    ``apply_llh``/``init_solution`` in this run, including solutions later
    discarded) and virtual-clock ticking. The top two registers of the bank
    are reserved as scratch space for virtual-LLH application and must not
    be touched by selection strategies.
    """

    def __init__(self, domain: Domain, clock: BudgetClock):
        self.domain = domain
        self.clock = clock
        self._best = math.inf
        self.scratch_cur = domain.n_registers - 2
        self.scratch_new = domain.n_registers - 1

    # -- contract pass-through -------------------------------------------------

    def llh_set(self) -> list[LLHDescriptor]:
        return self.domain.llh_set()

    def copy_solution(self, src: int, dst: int) -> None:
        self.domain.copy_solution(src, dst)

    def cost(self, register: int) -> float:
        return self.domain.cost(register)

    def set_perturbation_intensity(self, value: float) -> None:
        self.domain.set_perturbation_intensity(value)

    def restore_perturbation_intensity(self) -> None:
        self.domain.restore_perturbation_intensity()

    @property
    def perturbation_intensity(self) -> float:
        return self.domain.perturbation_intensity

    # -- tracked operations ----------------------------------------------------

    def init_solution(self, register: int) -> float:
        self.domain.init_solution(register)
        c = self.domain.cost(register)
        if c < self._best:
            self._best = c
        return c

    def apply_llh(self, llh_id: int, src: int, dst: int) -> float:
        c = self.domain.apply_llh(llh_id, src, dst)
        if c < self._best:
            self._best = c
        self.clock.on_apply(self.domain.apply_ticks(llh_id))
        return c

    def global_best_cost(self) -> float:
        """Best cost observed in this run; non-increasing over time."""
        return self._best
