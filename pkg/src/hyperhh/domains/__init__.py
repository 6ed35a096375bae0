"""Built-in desk-scale problem domains and their instance I/O.

Three domains implement the engine contract: Max-SAT (DIMACS CNF files),
bin packing (capacity + one item size per line), and Euclidean TSP (TSPLIB
NODE_COORD_SECTION subset, EUC_2D). Each also has a seeded generator that
emits the same formats.
"""

from __future__ import annotations

import math
import random
from pathlib import Path
from typing import Union

from ..core import ConfigurationError, Domain, EngineError
from .binpacking import BinPackingDomain, BinPackingInstance
from .maxsat import MaxSatDomain, MaxSatInstance
from .tsp import TspDomain, TspInstance

Instance = Union[MaxSatInstance, BinPackingInstance, TspInstance]

DOMAIN_NAMES = ("maxsat", "binpacking", "tsp")

# documented desk-scale generator ranges: (min size, max size)
GENERATOR_RANGES = {"maxsat": (4, 500), "binpacking": (1, 500), "tsp": (3, 500)}

MAXSAT_CLAUSE_RATIO = 4.0
# clause lengths drawn uniformly from this set: the 2-literal share keeps
# desk-scale instances over-constrained (graded nonzero optimum) while the
# 3-literal share keeps the landscape rugged
MAXSAT_CLAUSE_LENGTHS = (2, 3)
BPP_CAPACITY = 100.0
BPP_SIZE_RANGE = (0.1, 0.7)  # item sizes uniform in this fraction of capacity


class ParseError(EngineError):
    """Malformed instance file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def make_domain(name: str, instance: Instance, n_registers: int = 8,
                rng: random.Random | None = None) -> Domain:
    if name == "maxsat":
        return MaxSatDomain(instance, n_registers=n_registers, rng=rng)
    if name == "binpacking":
        return BinPackingDomain(instance, n_registers=n_registers, rng=rng)
    if name == "tsp":
        return TspDomain(instance, n_registers=n_registers, rng=rng)
    raise ConfigurationError(f"unknown domain {name!r}; expected one of {DOMAIN_NAMES}")


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def _load_cnf(text: str) -> MaxSatInstance:
    num_vars = None
    num_clauses = None
    clauses: list[tuple[int, ...]] = []
    pending: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"malformed problem line {line!r}", lineno)
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError(f"non-integer counts in problem line {line!r}", lineno)
            continue
        if num_vars is None:
            raise ParseError("clause data before 'p cnf' header", lineno)
        try:
            lits = [int(tok) for tok in line.split()]
        except ValueError:
            raise ParseError(f"non-integer literal in {line!r}", lineno)
        for lit in lits:
            if lit == 0:
                if not pending:
                    raise ParseError("empty clause", lineno)
                clauses.append(tuple(pending))
                pending.clear()
            else:
                pending.append(lit)
    if pending:
        clauses.append(tuple(pending))  # tolerate a missing trailing 0
    if num_vars is None:
        raise ParseError("missing 'p cnf' header")
    if num_clauses is not None and len(clauses) != num_clauses:
        raise ParseError(
            f"header declares {num_clauses} clauses but file has {len(clauses)}"
        )
    return MaxSatInstance(num_vars, tuple(clauses))


def _load_bpp(text: str) -> BinPackingInstance:
    capacity = None
    sizes: list[float] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if capacity is None:
            tokens = line.split()
            if tokens[0].lower() == "capacity":
                tokens = tokens[1:]
            if len(tokens) != 1:
                raise ParseError(f"expected a capacity value, got {line!r}", lineno)
            try:
                capacity = float(tokens[0])
            except ValueError:
                raise ParseError(f"non-numeric capacity {tokens[0]!r}", lineno)
            continue
        try:
            sizes.append(float(line))
        except ValueError:
            raise ParseError(f"non-numeric item size {line!r}", lineno)
    if capacity is None:
        raise ParseError("missing capacity line")
    return BinPackingInstance(capacity, tuple(sizes))


def _load_tsp(text: str) -> TspInstance:
    lines = text.splitlines()
    dimension = None
    coords: dict[int, tuple[float, float]] = {}
    in_coords = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if not in_coords:
            if upper.startswith("DIMENSION"):
                try:
                    dimension = int(line.split(":")[-1].strip())
                except ValueError:
                    raise ParseError(f"non-integer dimension in {line!r}", lineno)
            elif upper.startswith("EDGE_WEIGHT_TYPE"):
                weight = line.split(":")[-1].strip().upper()
                if weight != "EUC_2D":
                    raise ParseError(f"unsupported edge weight type {weight!r}", lineno)
            elif upper == "NODE_COORD_SECTION":
                in_coords = True
            continue
        if upper == "EOF":
            break
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"expected 'index x y', got {line!r}", lineno)
        try:
            idx = int(parts[0])
            x, y = float(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"non-numeric coordinate in {line!r}", lineno)
        if idx in coords:
            raise ParseError(f"duplicate node index {idx}", lineno)
        coords[idx] = (x, y)
    if not in_coords:
        raise ParseError("missing NODE_COORD_SECTION")
    if dimension is not None and len(coords) != dimension:
        raise ParseError(f"header declares {dimension} nodes but file has {len(coords)}")
    ordered = tuple(coords[i] for i in sorted(coords))
    return TspInstance(ordered)


_LOADERS = {"cnf": _load_cnf, "bpp_text": _load_bpp, "tsp_coords": _load_tsp}
_EXTENSION_FORMATS = {".cnf": "cnf", ".bpp": "bpp_text", ".tsp": "tsp_coords"}
_FORMAT_DOMAIN = {"cnf": "maxsat", "bpp_text": "binpacking", "tsp_coords": "tsp"}
_DOMAIN_FORMAT = {v: k for k, v in _FORMAT_DOMAIN.items()}


def load_instance(path: str | Path, format: str | None = None) -> Instance:
    """Parse an instance file; the format is inferred from the extension
    unless given explicitly (one of ``cnf``, ``bpp_text``, ``tsp_coords``)."""
    path = Path(path)
    if format is None:
        format = _EXTENSION_FORMATS.get(path.suffix.lower())
        if format is None:
            raise ConfigurationError(
                f"cannot infer instance format from {path.name!r}; pass format explicitly"
            )
    if format not in _LOADERS:
        raise ConfigurationError(f"unknown instance format {format!r}")
    return _LOADERS[format](path.read_text())


def domain_of(instance: Instance) -> str:
    if isinstance(instance, MaxSatInstance):
        return "maxsat"
    if isinstance(instance, BinPackingInstance):
        return "binpacking"
    return "tsp"


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


def generate_instance(domain: str, size: int, seed: int) -> Instance:
    """Deterministic non-degenerate random instance for (domain, size, seed)."""
    if domain not in DOMAIN_NAMES:
        raise ConfigurationError(f"unknown domain {domain!r}")
    lo, hi = GENERATOR_RANGES[domain]
    if not lo <= size <= hi:
        raise ConfigurationError(
            f"{domain} generator size must be in [{lo}, {hi}], got {size}"
        )
    rng = random.Random(f"{domain}-{size}-{seed}")
    if domain == "maxsat":
        n_clauses = round(MAXSAT_CLAUSE_RATIO * size)
        clauses = []
        for _ in range(n_clauses):
            length = MAXSAT_CLAUSE_LENGTHS[rng.randrange(len(MAXSAT_CLAUSE_LENGTHS))]
            variables = rng.sample(range(1, size + 1), length)
            clauses.append(tuple(v if rng.random() < 0.5 else -v for v in variables))
        return MaxSatInstance(size, tuple(clauses))
    if domain == "binpacking":
        lo_s = BPP_SIZE_RANGE[0] * BPP_CAPACITY
        hi_s = BPP_SIZE_RANGE[1] * BPP_CAPACITY
        sizes = tuple(rng.uniform(lo_s, hi_s) for _ in range(size))
        return BinPackingInstance(BPP_CAPACITY, sizes)
    coords = tuple((rng.random(), rng.random()) for _ in range(size))
    return TspInstance(coords)


# ---------------------------------------------------------------------------
# writing (generators emit the same formats the loaders accept)
# ---------------------------------------------------------------------------


def write_instance(instance: Instance, path: str | Path) -> None:
    path = Path(path)
    if isinstance(instance, MaxSatInstance):
        lines = [f"p cnf {instance.num_vars} {len(instance.clauses)}"]
        lines += [" ".join(str(l) for l in clause) + " 0" for clause in instance.clauses]
    elif isinstance(instance, BinPackingInstance):
        lines = [f"capacity {instance.capacity!r}"]
        lines += [repr(s) for s in instance.item_sizes]
    else:
        n = instance.n_cities
        lines = [
            "NAME : generated",
            "TYPE : TSP",
            f"DIMENSION : {n}",
            "EDGE_WEIGHT_TYPE : EUC_2D",
            "NODE_COORD_SECTION",
        ]
        lines += [
            f"{i + 1} {x!r} {y!r}" for i, (x, y) in enumerate(instance.coords)
        ]
        lines.append("EOF")
    path.write_text("\n".join(lines) + "\n")


__all__ = [
    "BinPackingDomain",
    "BinPackingInstance",
    "DOMAIN_NAMES",
    "Instance",
    "MaxSatDomain",
    "MaxSatInstance",
    "ParseError",
    "TspDomain",
    "TspInstance",
    "domain_of",
    "generate_instance",
    "load_instance",
    "make_domain",
    "write_instance",
]
