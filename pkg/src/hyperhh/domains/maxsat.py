"""Maximum satisfiability domain.

Solutions are complete truth assignments; the cost is the number of
unsatisfied clauses, so improvements come in atomic integer units. Register
state keeps a per-clause count of satisfied literals, making single-variable
flips O(occurrences) instead of O(clauses).
"""

from __future__ import annotations

import math
import random

from dataclasses import dataclass

from ..core import ConfigurationError, Domain, LLHCategory, LLHDescriptor, ValidationError

LS_FLIP_CANDIDATES = 10  # pool size of the best-of-k flip climber


@dataclass(frozen=True)
class MaxSatInstance:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.num_vars < 1:
            raise ValidationError("instance needs at least one variable")
        for idx, clause in enumerate(self.clauses):
            if not clause:
                raise ValidationError(f"clause {idx} is empty")
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValidationError(f"clause {idx} has invalid literal {lit}")


class _State:
    __slots__ = ("assignment", "true_counts", "unsat")

    def __init__(self, assignment: bytearray, true_counts: list[int], unsat: int):
        self.assignment = assignment
        self.true_counts = true_counts
        self.unsat = unsat

    @property
    def cost(self) -> float:
        return float(self.unsat)

    def copy(self) -> "_State":
        return _State(bytearray(self.assignment), self.true_counts.copy(), self.unsat)


class MaxSatDomain(Domain):
    """Flip-based LLH roster over a CNF instance."""

    def __init__(self, instance: MaxSatInstance, n_registers: int = 8,
                 rng: random.Random | None = None):
        super().__init__(n_registers=n_registers, rng=rng)
        self.instance = instance
        n = instance.num_vars
        # clause indices where each variable occurs positively / negatively
        pos: list[list[int]] = [[] for _ in range(n)]
        neg: list[list[int]] = [[] for _ in range(n)]
        for ci, clause in enumerate(instance.clauses):
            for lit in clause:
                (pos if lit > 0 else neg)[abs(lit) - 1].append(ci)
        self._pos = [tuple(p) for p in pos]
        self._neg = [tuple(p) for p in neg]
        self._descriptors = [
            LLHDescriptor(0, LLHCategory.LS),
            LLHDescriptor(1, LLHCategory.RR, intensity_sensitive=True),
            LLHDescriptor(2, LLHCategory.MUT, intensity_sensitive=True),
            LLHDescriptor(3, LLHCategory.XO),
        ]

    def llh_set(self) -> list[LLHDescriptor]:
        return list(self._descriptors)

    # -- state construction ------------------------------------------------

    def _fresh_state(self, assignment: bytearray) -> _State:
        true_counts = [0] * len(self.instance.clauses)
        for ci, clause in enumerate(self.instance.clauses):
            true_counts[ci] = sum(
                1 for lit in clause
                if (assignment[abs(lit) - 1] == 1) == (lit > 0)
            )
        unsat = sum(1 for tc in true_counts if tc == 0)
        return _State(assignment, true_counts, unsat)

    def init_solution(self, register: int) -> None:
        self._check_register(register)
        n = self.instance.num_vars
        assignment = bytearray(self.rng.getrandbits(1) for _ in range(n))
        self._registers[register] = self._fresh_state(assignment)

    def recompute_cost(self, register: int) -> float:
        state = self._slot(register)
        return self._fresh_state(bytearray(state.assignment)).cost

    # -- flip primitives ----------------------------------------------------

    def _flip_delta(self, state: _State, v: int) -> int:
        if state.assignment[v]:
            now_true, now_false = self._pos[v], self._neg[v]
        else:
            now_true, now_false = self._neg[v], self._pos[v]
        tc = state.true_counts
        delta = 0
        for c in now_true:
            if tc[c] == 1:
                delta += 1
        for c in now_false:
            if tc[c] == 0:
                delta -= 1
        return delta

    def _flip(self, state: _State, v: int) -> None:
        if state.assignment[v]:
            now_true, now_false = self._pos[v], self._neg[v]
        else:
            now_true, now_false = self._neg[v], self._pos[v]
        tc = state.true_counts
        unsat = state.unsat
        for c in now_true:
            tc[c] -= 1
            if tc[c] == 0:
                unsat += 1
        for c in now_false:
            if tc[c] == 0:
                unsat -= 1
            tc[c] += 1
        state.unsat = unsat
        state.assignment[v] ^= 1

    # -- heuristics ----------------------------------------------------------

    def _ls(self, state: _State) -> None:
        """Best flip among a random candidate pool, applied if equal-or-better."""
        n = self.instance.num_vars
        k = min(LS_FLIP_CANDIDATES, n)
        best_v = -1
        best_d = 1
        for v in self.rng.sample(range(n), k):
            d = self._flip_delta(state, v)
            if d < best_d:
                best_v, best_d = v, d
        if best_d <= 0 and best_v >= 0:
            self._flip(state, best_v)

    def _mut(self, state: _State) -> None:
        n = self.instance.num_vars
        m = min(n, math.ceil(self._intensity * n))
        if m < 1:
            m = 1
        for v in self.rng.sample(range(n), m):
            self._flip(state, v)

    def _rr(self, state: _State) -> None:
        """Unassign a fraction of the variables, greedily reassign each.

        Greedy order is random; each variable takes the polarity satisfying
        more of the currently unsatisfied clauses, ties broken by coin flip.
        """
        n = self.instance.num_vars
        m = min(n, math.ceil(self._intensity * n))
        if m < 1:
            m = 1
        chosen = self.rng.sample(range(n), m)
        tc = state.true_counts
        unsat = state.unsat
        for v in chosen:
            occ = self._pos[v] if state.assignment[v] else self._neg[v]
            for c in occ:
                tc[c] -= 1
                if tc[c] == 0:
                    unsat += 1
        self.rng.shuffle(chosen)
        for v in chosen:
            gain_true = sum(1 for c in self._pos[v] if tc[c] == 0)
            gain_false = sum(1 for c in self._neg[v] if tc[c] == 0)
            if gain_true > gain_false:
                value = 1
            elif gain_false > gain_true:
                value = 0
            else:
                value = self.rng.getrandbits(1)
            state.assignment[v] = value
            for c in (self._pos[v] if value else self._neg[v]):
                if tc[c] == 0:
                    unsat -= 1
                tc[c] += 1
        state.unsat = unsat

    def _xo(self, state: _State, src: int) -> _State:
        mate = self.xo_mate_register
        other = state
        if mate is not None and mate != src and not self.register_empty(mate):
            other = self._slot(mate)
        n = self.instance.num_vars
        child = bytearray(
            state.assignment[v] if self.rng.getrandbits(1) else other.assignment[v]
            for v in range(n)
        )
        return self._fresh_state(child)

    def apply_llh(self, llh_id: int, src: int, dst: int) -> float:
        state = self._slot(src)
        self._check_register(dst)
        if llh_id == 3:
            new_state = self._xo(state, src)
            self._registers[dst] = new_state
            return new_state.cost
        new_state = state.copy() if dst != src else state
        if llh_id == 0:
            self._ls(new_state)
        elif llh_id == 1:
            self._rr(new_state)
        elif llh_id == 2:
            self._mut(new_state)
        else:
            raise ConfigurationError(f"unknown LLH id {llh_id}")
        self._registers[dst] = new_state
        return new_state.cost

    def apply_ticks(self, llh_id: int) -> int:
        # rough microsecond-scale work estimates per application
        n = self.instance.num_vars
        if llh_id == 0:
            return 12
        m = max(1, math.ceil(self._intensity * n))
        if llh_id == 1:
            return 2 * m
        if llh_id == 2:
            return m
        return max(1, n // 2)
