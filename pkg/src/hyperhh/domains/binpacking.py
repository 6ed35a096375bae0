"""One-dimensional bin packing domain.

Cost is the number of bins plus a fractional slack term in [0, 1):
``B + 1 - (1/B) * sum((load_i / capacity)^2)``. Fewer bins always dominates,
and within a bin count the term rewards concentrating load into full bins,
which breaks the plateaus that a pure bin count would create.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is an optional accelerator
    njit = None

from ..core import ConfigurationError, Domain, LLHCategory, LLHDescriptor, ValidationError


def _first_improvement_move_py(sizes, item_bin, loads, order, cap, sum_sq, cost, eps):
    """Find the first strictly improving single-item move, or (-1, -1).

    Items are visited in ``order``; destination bins in index order. The
    candidate cost mirrors `_cost_of` exactly (products, not powers, so the
    jitted twin produces bit-identical floats).
    """
    n_bins = loads.shape[0]
    for oi in range(order.shape[0]):
        item = order[oi]
        a = item_bin[item]
        s = sizes[item]
        la = loads[a]
        for b in range(n_bins):
            if b == a:
                continue
            lb = loads[b]
            if lb + s > cap:
                continue
            if la == s:  # source bin would empty: one bin fewer
                nb = n_bins - 1
                nssq = sum_sq + ((lb + s) * (lb + s) - lb * lb - la * la) / (cap * cap)
            else:
                nb = n_bins
                nssq = sum_sq + (
                    (la - s) * (la - s) + (lb + s) * (lb + s) - la * la - lb * lb
                ) / (cap * cap)
            cand = nb + 1.0 - nssq / nb
            if cand < cost - eps:
                return item, b
    return -1, -1


if njit is not None:
    _first_improvement_move = njit(cache=True)(_first_improvement_move_py)
else:
    _first_improvement_move = _first_improvement_move_py


@dataclass(frozen=True)
class BinPackingInstance:
    capacity: float
    item_sizes: tuple[float, ...]

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValidationError("capacity must be positive")
        if not self.item_sizes:
            raise ValidationError("instance needs at least one item")
        for idx, s in enumerate(self.item_sizes):
            if not 0 < s <= self.capacity:
                raise ValidationError(
                    f"item {idx} has size {s}, outside (0, capacity={self.capacity}]"
                )


class _State:
    __slots__ = ("bins", "loads", "item_bin", "sum_sq", "cost")

    def __init__(self, bins, loads, item_bin, sum_sq, cost):
        self.bins: list[list[int]] = bins
        self.loads: list[float] = loads
        self.item_bin: list[int] = item_bin
        self.sum_sq: float = sum_sq  # sum over bins of (load/capacity)^2
        self.cost: float = cost

    def copy(self) -> "_State":
        return _State(
            [b.copy() for b in self.bins],
            self.loads.copy(),
            self.item_bin.copy(),
            self.sum_sq,
            self.cost,
        )


def _cost_of(n_bins: int, sum_sq: float) -> float:
    return n_bins + 1.0 - sum_sq / n_bins


class BinPackingDomain(Domain):
    """Item-move / pair-swap / bin-emptying roster over a packing instance."""

    def __init__(self, instance: BinPackingInstance, n_registers: int = 8,
                 rng: random.Random | None = None):
        super().__init__(n_registers=n_registers, rng=rng)
        self.instance = instance
        self._sizes_arr = np.asarray(instance.item_sizes, dtype=np.float64)
        self._descriptors = [
            LLHDescriptor(0, LLHCategory.LS),
            LLHDescriptor(1, LLHCategory.RR, intensity_sensitive=True),
            LLHDescriptor(2, LLHCategory.MUT, intensity_sensitive=True),
            LLHDescriptor(3, LLHCategory.XO),
        ]

    def llh_set(self) -> list[LLHDescriptor]:
        return list(self._descriptors)

    # -- state construction ----------------------------------------------------

    def _build_state(self, bins: list[list[int]]) -> _State:
        sizes = self.instance.item_sizes
        cap = self.instance.capacity
        loads = [sum(sizes[i] for i in b) for b in bins]
        item_bin = [0] * len(sizes)
        for bi, b in enumerate(bins):
            for i in b:
                item_bin[i] = bi
        sum_sq = sum((ld / cap) ** 2 for ld in loads)
        return _State(bins, loads, item_bin, sum_sq, _cost_of(len(bins), sum_sq))

    def init_solution(self, register: int) -> None:
        """Randomized first-fit over a shuffled item order."""
        self._check_register(register)
        sizes = self.instance.item_sizes
        cap = self.instance.capacity
        order = list(range(len(sizes)))
        self.rng.shuffle(order)
        bins: list[list[int]] = []
        loads: list[float] = []
        for i in order:
            for bi, ld in enumerate(loads):
                if ld + sizes[i] <= cap:
                    bins[bi].append(i)
                    loads[bi] = ld + sizes[i]
                    break
            else:
                bins.append([i])
                loads.append(sizes[i])
        self._registers[register] = self._build_state(bins)

    def recompute_cost(self, register: int) -> float:
        state = self._slot(register)
        return self._build_state([b.copy() for b in state.bins]).cost

    # -- heuristics --------------------------------------------------------------

    def _ls(self, state: _State) -> None:
        """Move one item to another bin, first strictly improving move found."""
        cap = self.instance.capacity
        n = len(self.instance.item_sizes)
        order = np.array(self.rng.sample(range(n), n), dtype=np.int64)
        loads = np.array(state.loads, dtype=np.float64)
        item_bin = np.array(state.item_bin, dtype=np.int64)
        item, b = _first_improvement_move(
            self._sizes_arr, item_bin, loads, order, cap, state.sum_sq, state.cost, 1e-12
        )
        if item < 0:
            return
        item, b = int(item), int(b)
        a = state.item_bin[item]
        s = self.instance.item_sizes[item]
        la, lb = state.loads[a], state.loads[b]
        n_bins = len(state.bins)
        if la == s:
            new_bins = n_bins - 1
            new_ssq = state.sum_sq + ((lb + s) * (lb + s) - lb * lb - la * la) / (cap * cap)
        else:
            new_bins = n_bins
            new_ssq = state.sum_sq + (
                (la - s) * (la - s) + (lb + s) * (lb + s) - la * la - lb * lb
            ) / (cap * cap)
        self._move_item(state, item, a, b)
        state.sum_sq = new_ssq
        state.cost = _cost_of(new_bins, new_ssq)

    def _move_item(self, state: _State, item: int, a: int, b: int) -> None:
        """Structural move of one item; caller refreshes sum_sq and cost."""
        sizes = self.instance.item_sizes
        s = sizes[item]
        state.bins[a].remove(item)
        state.loads[a] -= s
        state.bins[b].append(item)
        state.loads[b] += s
        state.item_bin[item] = b
        if not state.bins[a]:
            state.bins.pop(a)
            state.loads.pop(a)
            for bi in range(a, len(state.bins)):
                for i in state.bins[bi]:
                    state.item_bin[i] = bi

    def _mut(self, state: _State) -> None:
        """Attempt a batch of random feasible item-pair swaps between bins."""
        sizes = self.instance.item_sizes
        cap = self.instance.capacity
        n = len(sizes)
        if n < 2:
            return
        m = max(1, math.ceil(self._intensity * n / 4))
        for _ in range(m):
            i, j = self.rng.sample(range(n), 2)
            a, b = state.item_bin[i], state.item_bin[j]
            if a == b:
                continue
            si, sj = sizes[i], sizes[j]
            la, lb = state.loads[a], state.loads[b]
            if la - si + sj > cap or lb - sj + si > cap:
                continue
            state.bins[a].remove(i)
            state.bins[b].remove(j)
            state.bins[a].append(j)
            state.bins[b].append(i)
            state.item_bin[i], state.item_bin[j] = b, a
            new_la, new_lb = la - si + sj, lb - sj + si
            state.loads[a], state.loads[b] = new_la, new_lb
            state.sum_sq += (new_la * new_la + new_lb * new_lb - la * la - lb * lb) / (cap * cap)
        state.cost = _cost_of(len(state.bins), state.sum_sq)

    def _best_fit_insert(self, state: _State, item: int) -> None:
        """Place one item into the fullest bin that fits (lowest index on ties)."""
        sizes = self.instance.item_sizes
        cap = self.instance.capacity
        s = sizes[item]
        best = -1
        best_load = -1.0
        for bi, ld in enumerate(state.loads):
            if ld + s <= cap and ld > best_load:
                best, best_load = bi, ld
        if best < 0:
            state.bins.append([item])
            state.loads.append(s)
            state.item_bin[item] = len(state.bins) - 1
            state.sum_sq += (s / cap) ** 2
        else:
            state.bins[best].append(item)
            old = state.loads[best]
            state.loads[best] = old + s
            state.item_bin[item] = best
            state.sum_sq += ((old + s) ** 2 - old * old) / (cap * cap)

    def _rr(self, state: _State) -> None:
        """Empty a fraction of the bins, reinsert their items best-fit-decreasing."""
        cap = self.instance.capacity
        n_bins = len(state.bins)
        k = min(n_bins, max(1, math.ceil(self._intensity * n_bins)))
        chosen = set(self.rng.sample(range(n_bins), k))
        pool = [i for bi in chosen for i in state.bins[bi]]
        state.bins = [b for bi, b in enumerate(state.bins) if bi not in chosen]
        state.loads = [ld for bi, ld in enumerate(state.loads) if bi not in chosen]
        for bi, b in enumerate(state.bins):
            for i in b:
                state.item_bin[i] = bi
        state.sum_sq = sum((ld / cap) ** 2 for ld in state.loads)
        sizes = self.instance.item_sizes
        pool.sort(key=lambda i: (-sizes[i], i))
        for item in pool:
            self._best_fit_insert(state, item)
        state.cost = _cost_of(len(state.bins), state.sum_sq)

    def _xo(self, state: _State, src: int) -> _State:
        """Keep a random half of the mate's bins intact, strip those items from
        this solution's bins, and adopt the mate's bins as-is."""
        mate = self.xo_mate_register
        other = state
        if mate is not None and mate != src and not self.register_empty(mate):
            other = self._slot(mate)
        taken_bins = [b for b in other.bins if self.rng.random() < 0.5]
        taken_items = {i for b in taken_bins for i in b}
        bins = [
            [i for i in b if i not in taken_items]
            for b in state.bins
        ]
        bins = [b for b in bins if b]
        bins.extend([b.copy() for b in taken_bins])
        return self._build_state(bins)

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
        n = len(self.instance.item_sizes)
        if llh_id == 0:
            return max(1, n // 2)
        if llh_id == 1:
            return max(1, math.ceil(self._intensity * n))
        if llh_id == 2:
            return max(1, math.ceil(self._intensity * n / 4))
        return max(1, n // 2)
