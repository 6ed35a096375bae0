"""Symmetric Euclidean traveling salesman domain.

Solutions are closed tours (permutations of all cities); the cost is the
exact Euclidean tour length over a precomputed distance matrix. Local search
applies one first-improvement 2-opt exchange per call; costs are maintained
incrementally from the applied move deltas.
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

_EPS = 1e-12  # improvement threshold for 2-opt moves


def _two_opt_first_improvement_py(dist, tour, cost, eps):
    """Apply the first improving 2-opt exchange found, scanning (i, j) pairs
    in lexicographic order; one move per call (first-improvement pivoting).

    Returns the updated cost; the tour is modified in place. A call on a
    2-opt-optimal tour scans every pair and changes nothing.
    """
    n = tour.shape[0]
    for i in range(n - 1):
        a = tour[i]
        b = tour[i + 1]
        d_ab = dist[a, b]
        for j in range(i + 1, n):
            c = tour[j]
            d = tour[j + 1] if j + 1 < n else tour[0]
            delta = dist[a, c] + dist[b, d] - d_ab - dist[c, d]
            if delta < -eps:
                lo = i + 1
                hi = j
                while lo < hi:
                    tmp = tour[lo]
                    tour[lo] = tour[hi]
                    tour[hi] = tmp
                    lo += 1
                    hi -= 1
                return cost + delta
    return cost


if njit is not None:
    _two_opt_first_improvement = njit(cache=True)(_two_opt_first_improvement_py)
else:
    _two_opt_first_improvement = _two_opt_first_improvement_py


@dataclass(frozen=True)
class TspInstance:
    coords: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.coords) < 3:
            raise ValidationError("instance needs at least 3 cities")

    @property
    def n_cities(self) -> int:
        return len(self.coords)


class _State:
    __slots__ = ("tour", "cost")

    def __init__(self, tour: np.ndarray, cost: float):
        self.tour = tour
        self.cost = cost

    def copy(self) -> "_State":
        return _State(self.tour.copy(), self.cost)


class TspDomain(Domain):
    """2-opt / segment-reversal / city-reinsertion roster over a point set."""

    def __init__(self, instance: TspInstance, n_registers: int = 8,
                 rng: random.Random | None = None):
        super().__init__(n_registers=n_registers, rng=rng)
        self.instance = instance
        pts = np.asarray(instance.coords, dtype=np.float64)
        diff = pts[:, None, :] - pts[None, :, :]
        self._dist = np.sqrt((diff * diff).sum(axis=-1))
        self._descriptors = [
            LLHDescriptor(0, LLHCategory.LS),
            LLHDescriptor(1, LLHCategory.RR, intensity_sensitive=True),
            LLHDescriptor(2, LLHCategory.MUT, intensity_sensitive=True),
            LLHDescriptor(3, LLHCategory.XO),
        ]

    def llh_set(self) -> list[LLHDescriptor]:
        return list(self._descriptors)

    def _tour_cost(self, tour: np.ndarray) -> float:
        return float(self._dist[tour, np.roll(tour, -1)].sum())

    def init_solution(self, register: int) -> None:
        self._check_register(register)
        n = self.instance.n_cities
        tour = np.array(self.rng.sample(range(n), n), dtype=np.int64)
        self._registers[register] = _State(tour, self._tour_cost(tour))

    def recompute_cost(self, register: int) -> float:
        return self._tour_cost(self._slot(register).tour)

    # -- heuristics --------------------------------------------------------------

    def _ls(self, state: _State) -> None:
        """One first-improvement 2-opt move (jitted kernel when available)."""
        state.cost = float(
            _two_opt_first_improvement(self._dist, state.tour, state.cost, _EPS)
        )

    def _reverse_segment(self, state: _State, i: int, j: int) -> None:
        """Reverse tour[i..j] inclusive, updating the cost from the move delta."""
        tour = state.tour
        n = len(tour)
        if j - i + 1 >= n:  # whole-tour reversal is a no-op
            return
        D = self._dist
        prev = tour[i - 1] if i > 0 else tour[n - 1]
        nxt = tour[(j + 1) % n]
        a, b = tour[i], tour[j]
        delta = D[prev, b] + D[a, nxt] - D[prev, a] - D[b, nxt]
        tour[i:j + 1] = tour[i:j + 1][::-1]
        state.cost += float(delta)

    def _mut(self, state: _State) -> None:
        """A burst of random segment reversals."""
        n = self.instance.n_cities
        m = max(1, math.ceil(self._intensity * n / 10))
        for _ in range(m):
            i, j = sorted(self.rng.sample(range(n), 2))
            self._reverse_segment(state, i, j)

    def _rr(self, state: _State) -> None:
        """Remove a fraction of the cities, reinsert each at its cheapest edge."""
        n = self.instance.n_cities
        m = min(n, max(1, math.ceil(self._intensity * n)))
        D = self._dist
        positions = set(self.rng.sample(range(n), m))
        removed = [int(city) for p, city in enumerate(state.tour) if p in positions]
        route = [int(city) for p, city in enumerate(state.tour) if p not in positions]
        self.rng.shuffle(removed)
        if not route:
            route.append(removed.pop())
        for city in removed:
            if len(route) == 1:
                route.append(city)
                continue
            cur = np.array(route, dtype=np.int64)
            nxt = np.roll(cur, -1)
            costs = D[cur, city] + D[city, nxt] - D[cur, nxt]
            pos = int(np.argmin(costs))
            route.insert(pos + 1, city)
        tour = np.array(route, dtype=np.int64)
        state.tour = tour
        state.cost = self._tour_cost(tour)

    def _xo(self, state: _State, src: int) -> _State:
        """Order crossover: keep a segment of this tour, fill from the mate."""
        mate = self.xo_mate_register
        other = state
        if mate is not None and mate != src and not self.register_empty(mate):
            other = self._slot(mate)
        n = self.instance.n_cities
        a, b = sorted(self.rng.sample(range(n), 2))
        child = [-1] * n
        child[a:b + 1] = [int(c) for c in state.tour[a:b + 1]]
        used = set(child[a:b + 1])
        other_order = [int(c) for c in other.tour]
        fill = [c for c in other_order[b + 1:] + other_order[:b + 1] if c not in used]
        idx = 0
        for p in list(range(b + 1, n)) + list(range(a)):
            child[p] = fill[idx]
            idx += 1
        tour = np.array(child, dtype=np.int64)
        return _State(tour, self._tour_cost(tour))

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
        n = self.instance.n_cities
        if llh_id == 0:
            return max(1, n // 8)
        if llh_id == 1:
            return max(1, 3 * math.ceil(self._intensity * n))
        if llh_id == 2:
            return max(1, 3 * math.ceil(self._intensity * n / 10))
        return n
