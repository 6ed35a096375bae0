"""Experiment harness.

Runs a (method x instance x seed) matrix under a shared time budget,
journaling each completed run so an interrupted matrix resumes without
recomputing finished cells, then aggregates the records into Formula-1
scores, per-instance normalized medians, and pairwise one-sided Wilcoxon
tests, and emits machine-readable results plus a human-readable report.

Configs are single YAML (or JSON) documents; see ``ExperimentConfig``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from hashlib import sha256
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import yaml

from .acceptance import (
    AcceptAll,
    AcceptanceStrategy,
    ConstTau,
    DiscardWorse,
    ExpTau,
    Metropolis,
    RecordToRecord,
    Threshold,
)
from .core import BudgetClock, ConfigurationError, LLHCategory
from .domains import domain_of, generate_instance, load_instance, make_domain
from .selectors import RunFactory, build_variant
from .stats import (
    DEFAULT_POINTS,
    F1Table,
    cell_medians,
    f1_scores,
    normalize_medians,
    wilcoxon_signed_rank,
)
from .virtual import TransformSpec

log = logging.getLogger(__name__)

WORKERS_ENV_VAR = "HYPERHH_WORKERS"

CSV_COLUMNS = ("method", "instance", "seed", "best_cost", "wall_time_ms")


@dataclass
class RunRecord:
    """Outcome of one (method, instance, seed) run."""

    method: str
    instance: str
    seed: int
    best_cost: Optional[float]
    wall_time_ms: float
    error: Optional[str] = None
    trajectory: Optional[list[tuple[float, float]]] = None

    def key(self) -> tuple[str, str, int]:
        return (self.method, self.instance, self.seed)

    def to_dict(self) -> dict:
        d = {
            "method": self.method,
            "instance": self.instance,
            "seed": self.seed,
            "best_cost": self.best_cost,
            "wall_time_ms": self.wall_time_ms,
        }
        if self.error is not None:
            d["error"] = self.error
        if self.trajectory is not None:
            d["trajectory"] = [[t, c] for t, c in self.trajectory]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunRecord":
        return cls(
            method=d["method"],
            instance=d["instance"],
            seed=int(d["seed"]),
            best_cost=d.get("best_cost"),
            wall_time_ms=float(d.get("wall_time_ms", 0.0)),
            error=d.get("error"),
            trajectory=[tuple(p) for p in d["trajectory"]] if d.get("trajectory") else None,
        )


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

_ACCEPTANCE_KINDS = {
    "accept_all": "accept_all",
    "discard_worse": "discard_worse",
    "ma": "ma",
    "metropolis": "ma",
    "ta": "ta",
    "threshold": "ta",
    "r2r": "r2r",
    "record_to_record": "r2r",
}


def acceptance_from_dict(d: Mapping) -> AcceptanceStrategy:
    """Deserialize an acceptance strategy: {kind, variant, tau | tau_start+tau_end}."""
    kind = _ACCEPTANCE_KINDS.get(str(d.get("kind", "")).lower())
    if kind is None:
        raise ConfigurationError(f"unknown acceptance kind {d.get('kind')!r}")
    if kind == "accept_all":
        return AcceptAll()
    if kind == "discard_worse":
        return DiscardWorse()
    variant = str(d.get("variant", "")).upper()
    if variant == "CONST":
        schedule = ConstTau(float(d["tau"]))
    elif variant == "EXP":
        schedule = ExpTau(float(d["tau_start"]), float(d["tau_end"]))
    else:
        raise ConfigurationError(f"unknown schedule variant {d.get('variant')!r}")
    return {"ma": Metropolis, "ta": Threshold, "r2r": RecordToRecord}[kind](schedule)


def transform_spec_from_dict(d: Mapping) -> TransformSpec:
    try:
        categories = frozenset(LLHCategory[str(c).upper()] for c in d["categories"])
    except KeyError as exc:
        raise ConfigurationError(f"unknown LLH category in {d.get('categories')!r}") from exc
    acceptance = acceptance_from_dict(d["acceptance"]) if d.get("acceptance") else None
    intensities = tuple(float(v) for v in d["intensities"]) if d.get("intensities") else None
    duration = float(d["duration_ms"]) if d.get("duration_ms") is not None else None
    return TransformSpec(categories, acceptance, duration, intensities)


def factory_from_method_spec(spec: Mapping) -> RunFactory:
    selector = str(spec.get("selector", "nhh")).upper()
    transforms = spec.get("transforms")
    specs = [transform_spec_from_dict(t) for t in transforms] if transforms is not None else None
    return build_variant(
        method=selector,
        variant=str(spec.get("variant", "X0")),
        context=str(spec.get("context", "benchmark")),
        restart_unit=int(spec.get("restart_unit", 50)),
        transform_specs=specs,
    )


def method_name(spec: Mapping) -> str:
    name = spec.get("name")
    if name:
        return str(name)
    return f"{str(spec.get('selector', 'nhh')).upper()}-{spec.get('variant', 'X0')}"


def instance_id(spec: Mapping) -> str:
    domain = spec["domain"]
    if "generate" in spec:
        g = spec["generate"]
        return f"{domain}/g{g['size']}-s{g['seed']}"
    return f"{domain}/{Path(spec['path']).stem}"


def resolve_instance(spec: Mapping):
    domain = str(spec.get("domain", ""))
    if "generate" in spec:
        g = spec["generate"]
        return generate_instance(domain, int(g["size"]), int(g["seed"]))
    if "path" in spec:
        instance = load_instance(spec["path"], spec.get("format"))
        if domain and domain_of(instance) != domain:
            raise ConfigurationError(
                f"instance {spec['path']!r} parsed as {domain_of(instance)}, "
                f"config says {domain!r}"
            )
        return instance
    raise ConfigurationError(f"instance spec needs 'generate' or 'path': {dict(spec)!r}")


def clock_from_budget(budget: Mapping) -> BudgetClock:
    mode = str(budget.get("mode", "wall"))
    if mode in ("wall", "wall_clock"):
        return BudgetClock.wall(float(budget["seconds"]))
    if mode == "virtual":
        return BudgetClock.virtual(
            int(budget["ticks"]), int(budget.get("ticks_per_ms", 1000))
        )
    raise ConfigurationError(f"unknown budget mode {mode!r}")


@dataclass
class ExperimentConfig:
    """Validated experiment description.

    ``methods``/``instances`` keep their raw dict form (they are shipped to
    worker processes); ``validate()`` builds everything once up front so a
    bad config or unreadable instance aborts before any run starts.
    """

    methods: list[dict]
    instances: list[dict]
    seeds: list[int]
    budget: dict
    output_dir: str
    workers: Optional[int] = None
    record_trajectory: bool = False

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        try:
            return cls(
                methods=[dict(m) for m in d["methods"]],
                instances=[dict(i) for i in d["instances"]],
                seeds=[int(s) for s in d["seeds"]],
                budget=dict(d["budget"]),
                output_dir=str(d["output_dir"]),
                workers=int(d["workers"]) if d.get("workers") is not None else None,
                record_trajectory=bool(d.get("record_trajectory", False)),
            )
        except KeyError as exc:
            raise ConfigurationError(f"config is missing required field {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as f:
            data = yaml.safe_load(f)
        if not isinstance(data, dict):
            raise ConfigurationError(f"config file {path} does not hold a mapping")
        return cls.from_dict(data)

    def validate(self) -> None:
        if not self.methods:
            raise ConfigurationError("config needs at least one method")
        if not self.instances:
            raise ConfigurationError("config needs at least one instance")
        if not self.seeds:
            raise ConfigurationError("config needs at least one seed")
        names = [method_name(m) for m in self.methods]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate method names: {names}")
        ids = [instance_id(i) for i in self.instances]
        if len(set(ids)) != len(ids):
            raise ConfigurationError(f"duplicate instance ids: {ids}")
        for m in self.methods:
            factory_from_method_spec(m)
        for spec in self.instances:
            resolve_instance(spec)
        clock_from_budget(self.budget)


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def derive_seed(*parts) -> int:
    """Stable cross-process seed derivation for independent RNG streams."""
    digest = sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def execute_cell(
    method_spec: Mapping,
    instance_spec: Mapping,
    seed: int,
    budget: Mapping,
    record_trajectory: bool = False,
) -> RunRecord:
    """Run one cell; crashes are captured into the record, not raised."""
    name = method_name(method_spec)
    inst_id = instance_id(instance_spec)
    try:
        instance = resolve_instance(instance_spec)
        domain = make_domain(
            domain_of(instance),
            instance,
            rng=random.Random(derive_seed("domain", name, inst_id, seed)),
        )
        clock = clock_from_budget(budget)
        factory = factory_from_method_spec(method_spec)
        rng = random.Random(derive_seed("run", name, inst_id, seed))
        run = factory.make_run(domain, clock, rng, record_trajectory=record_trajectory)
        t0 = time.perf_counter()
        best = run.execute()
        wall_ms = (time.perf_counter() - t0) * 1000.0
        if clock.mode == BudgetClock.VIRTUAL:
            wall_ms = clock.elapsed / clock.ticks_per_ms
        return RunRecord(
            method=name,
            instance=inst_id,
            seed=seed,
            best_cost=best,
            wall_time_ms=wall_ms,
            trajectory=run.trajectory if record_trajectory else None,
        )
    except Exception as exc:  # noqa: BLE001 - a failed cell must not kill the matrix
        return RunRecord(
            method=name,
            instance=inst_id,
            seed=seed,
            best_cost=None,
            wall_time_ms=0.0,
            error=f"{type(exc).__name__}: {exc}",
        )


def _run_cell_payload(payload: dict) -> dict:
    record = execute_cell(
        payload["method"],
        payload["instance"],
        payload["seed"],
        payload["budget"],
        payload.get("record_trajectory", False),
    )
    return record.to_dict()


_worker_slot = None


def _pin_worker(counter) -> None:
    """Give each pool worker its own CPU so timed runs do not interfere."""
    try:
        with counter.get_lock():
            slot = counter.value
            counter.value += 1
        cores = sorted(os.sched_getaffinity(0))
        os.sched_setaffinity(0, {cores[slot % len(cores)]})
    except (AttributeError, OSError):  # non-Linux or restricted environment
        pass


def journal_path(output_dir: str | Path) -> Path:
    return Path(output_dir) / "records.jsonl"


def load_journal(output_dir: str | Path) -> list[RunRecord]:
    path = journal_path(output_dir)
    records = []
    if path.exists():
        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(RunRecord.from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError):
                    # a run interrupted mid-write leaves a torn final line;
                    # drop it and let the matrix recompute that cell
                    log.warning("skipping malformed journal line in %s", path)
    return records


def worker_count(config: ExperimentConfig, n_pending: int) -> int:
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        workers = int(env)
    elif config.workers is not None:
        workers = config.workers
    else:
        workers = os.cpu_count() or 1
    return max(1, min(workers, n_pending)) if n_pending else 1


def run_matrix(config: ExperimentConfig, progress: bool = True) -> list[RunRecord]:
    """Execute every (method, instance, seed) cell of the experiment.

    Completed cells found in the output journal are not re-run; each newly
    completed cell is appended to the journal immediately, so interrupting
    and restarting the matrix loses at most the cells in flight.
    """
    config.validate()
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    journaled = {r.key(): r for r in load_journal(out_dir)}
    wanted = {
        (method_name(m), instance_id(i), seed)
        for m in config.methods
        for i in config.instances
        for seed in config.seeds
    }
    # journal entries outside the current config (e.g. after a config edit)
    # are kept on disk but never returned
    done = {k: r for k, r in journaled.items() if k in wanted}
    cells = []
    for m in config.methods:
        for i in config.instances:
            for seed in config.seeds:
                key = (method_name(m), instance_id(i), seed)
                if key not in done:
                    cells.append({"method": m, "instance": i, "seed": seed,
                                  "budget": config.budget,
                                  "record_trajectory": config.record_trajectory})
    total = len(wanted)
    if progress and done:
        log.info("resuming: %d/%d cells already complete", len(done), total)

    workers = worker_count(config, len(cells))
    completed = len(done)
    records = list(done.values())
    journal = journal_path(out_dir)

    def _commit(record: RunRecord) -> None:
        nonlocal completed
        with open(journal, "a") as f:
            f.write(json.dumps(record.to_dict()) + "\n")
            f.flush()
        records.append(record)
        completed += 1
        if record.error:
            log.warning("cell %s failed: %s", record.key(), record.error)
        if progress:
            log.info("[%d/%d] %s best=%s", completed, total, record.key(), record.best_cost)

    if workers <= 1:
        for payload in cells:
            _commit(RunRecord.from_dict(_run_cell_payload(payload)))
    else:
        import multiprocessing as mp

        counter = mp.Value("i", 0)
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_pin_worker, initargs=(counter,)
        ) as pool:
            futures = [pool.submit(_run_cell_payload, payload) for payload in cells]
            for fut in as_completed(futures):
                _commit(RunRecord.from_dict(fut.result()))

    records.sort(key=lambda r: r.key())
    return records


# ---------------------------------------------------------------------------
# aggregation and reporting
# ---------------------------------------------------------------------------


def load_reference_csv(path: str | Path) -> dict[tuple[str, str], float]:
    """Reference medians from a CSV of (instance, method, median) rows."""
    out: dict[tuple[str, str], float] = {}
    with open(path, newline="") as f:
        for row_no, row in enumerate(csv.reader(f), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 3:
                raise ConfigurationError(
                    f"{path}:{row_no}: expected 3 columns (instance, method, median)"
                )
            inst, meth, value = (c.strip() for c in row)
            try:
                out[(meth, inst)] = float(value)
            except ValueError:
                if row_no == 1:
                    continue  # header row
                raise ConfigurationError(f"{path}:{row_no}: non-numeric median {value!r}")
    return out


def reference_bounds(
    reference: Mapping[tuple[str, str], float]
) -> dict[str, tuple[float, float]]:
    by_instance: dict[str, list[float]] = {}
    for (_, inst), v in reference.items():
        by_instance.setdefault(inst, []).append(v)
    return {inst: (min(vs), max(vs)) for inst, vs in by_instance.items()}


def score_records(
    records: Sequence[RunRecord],
    reference: Optional[Mapping[tuple[str, str], float]] = None,
    points: Sequence[float] = DEFAULT_POINTS,
) -> dict:
    """All aggregates for a record set: F1, normalized medians, Wilcoxon matrix."""
    f1 = f1_scores(records, reference_medians=reference, points=points)
    bounds = reference_bounds(reference) if reference else None
    normalized = normalize_medians(records, reference_min_max=bounds)
    methods = sorted({r.method for r in records})
    instances = sorted({r.instance for r in records})

    wilcoxon: dict[str, dict[str, float]] = {}
    for a in methods:
        for b in methods:
            if a == b:
                continue
            pairs = [
                (normalized[(a, inst)], normalized[(b, inst)])
                for inst in instances
                if (a, inst) in normalized and (b, inst) in normalized
            ]
            wilcoxon.setdefault(a, {})[b] = wilcoxon_signed_rank(pairs, warn=False)

    warning_notes = []
    failed = sorted({(r.method, r.instance) for r in records if r.error is not None})
    for method, inst in failed:
        ok = any(
            r.error is None and r.method == method and r.instance == inst for r in records
        )
        note = "some runs failed" if ok else "ALL runs failed; cell ranks last"
        warning_notes.append(f"{method} on {inst}: {note}")

    return {
        "f1": {"totals": f1.totals, "per_instance": f1.per_instance},
        "normalized_medians": {
            m: {inst: v for (mm, inst), v in normalized.items() if mm == m}
            for m in sorted({m for m, _ in normalized})
        },
        "wilcoxon": wilcoxon,
        "warnings": warning_notes,
    }


def write_results_csv(records: Sequence[RunRecord], path: str | Path) -> None:
    ordered = sorted(records, key=lambda r: r.key())
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for r in ordered:
            best = "" if r.best_cost is None else repr(r.best_cost)
            writer.writerow([r.method, r.instance, r.seed, best, repr(r.wall_time_ms)])


def load_records_csv(path: str | Path) -> list[RunRecord]:
    records = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            best = row["best_cost"]
            records.append(
                RunRecord(
                    method=row["method"],
                    instance=row["instance"],
                    seed=int(row["seed"]),
                    best_cost=float(best) if best else None,
                    wall_time_ms=float(row["wall_time_ms"]),
                    error=None if best else "missing best_cost",
                )
            )
    return records


def emit_report(
    aggregates: Mapping,
    out_dir: str | Path,
    records: Optional[Sequence[RunRecord]] = None,
) -> dict[str, Path]:
    """Write results.csv (when records are given), aggregates.json, report.md."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"output directory {out_dir} is not writable")

    paths = {}
    if records is not None:
        paths["results_csv"] = out_dir / "results.csv"
        write_results_csv(records, paths["results_csv"])

    paths["aggregates_json"] = out_dir / "aggregates.json"
    with open(paths["aggregates_json"], "w") as f:
        json.dump(aggregates, f, indent=2, sort_keys=True)
        f.write("\n")

    paths["report_md"] = out_dir / "report.md"
    with open(paths["report_md"], "w") as f:
        f.write(render_report_md(aggregates))
    return paths


def render_report_md(aggregates: Mapping) -> str:
    totals: Mapping[str, float] = aggregates["f1"]["totals"]
    per_instance: Mapping[str, Mapping[str, float]] = aggregates["f1"]["per_instance"]
    normalized: Mapping[str, Mapping[str, float]] = aggregates["normalized_medians"]
    wilcoxon: Mapping[str, Mapping[str, float]] = aggregates["wilcoxon"]
    ranking = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    instances = sorted({i for row in per_instance.values() for i in row})

    lines = ["# Benchmark report", "", "## F1 scores", ""]
    if aggregates.get("warnings"):
        lines = ["# Benchmark report", "", "## WARNINGS", ""]
        lines += [f"- **{w}**" for w in aggregates["warnings"]]
        lines += ["", "## F1 scores", ""]
    lines.append("| rank | method | F1 total |")
    lines.append("| --- | --- | --- |")
    for rank, (m, total) in enumerate(ranking, start=1):
        lines.append(f"| {rank} | {m} | {total:g} |")

    lines += ["", "## Per-instance points", ""]
    lines.append("| method | " + " | ".join(instances) + " |")
    lines.append("| --- |" + " --- |" * len(instances))
    for m, _ in ranking:
        row = per_instance.get(m, {})
        lines.append(
            f"| {m} | " + " | ".join(f"{row.get(i, 0):g}" for i in instances) + " |"
        )

    lines += ["", "## Normalized medians (lower is better)", ""]
    lines.append("| method | " + " | ".join(instances) + " | mean |")
    lines.append("| --- |" + " --- |" * (len(instances) + 1))
    for m, _ in ranking:
        row = normalized.get(m, {})
        vals = [row.get(i) for i in instances]
        mean = sum(v for v in vals if v is not None) / max(
            1, sum(1 for v in vals if v is not None)
        )
        lines.append(
            f"| {m} | "
            + " | ".join("-" if v is None else f"{v:.4f}" for v in vals)
            + f" | {mean:.4f} |"
        )

    if wilcoxon:
        methods = [m for m, _ in ranking if m in wilcoxon]
        lines += ["", "## One-sided Wilcoxon p-values (row better than column)", ""]
        lines.append("| vs | " + " | ".join(methods) + " |")
        lines.append("| --- |" + " --- |" * len(methods))
        for a in methods:
            cells = []
            for b in methods:
                if a == b:
                    cells.append("-")
                else:
                    cells.append(f"{wilcoxon[a].get(b, float('nan')):.4f}")
            lines.append(f"| {a} | " + " | ".join(cells) + " |")
    lines.append("")
    return "\n".join(lines)
