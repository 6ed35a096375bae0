"""The fixed desk-scale mini-benchmark.

Nine generated instances (three per built-in domain), fifteen seeds, and a
10-second wall budget per run. The method set covers the NHH variant ladder
(identity set, amplified set, acceptance transform, acceptance+repetition,
full preset), the LUBY ladder, and NHH with each of the six acceptance
criteria at the middle of its built-in parameter scale.

The matrix journals into its output directory, so it can be (re)run
incrementally: ``python -m hyperhh.minibench --out DIR`` executes whatever
cells are missing and is safe to interrupt. The directional acceptance tests
consume the same directory.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .acceptance import preset_table
from .bench import ExperimentConfig, RunRecord, run_matrix
from .virtual import TransformSpec

#: wall seconds per run, and the virtual-mode budget used for determinism checks
WALL_SECONDS = 10.0
VIRTUAL_TICKS = 25_000

SEEDS = list(range(1, 16))

_INSTANCES = [
    {"domain": "tsp", "generate": {"size": 60, "seed": 101}},
    {"domain": "tsp", "generate": {"size": 90, "seed": 102}},
    {"domain": "tsp", "generate": {"size": 120, "seed": 103}},
    {"domain": "maxsat", "generate": {"size": 120, "seed": 201}},
    {"domain": "maxsat", "generate": {"size": 160, "seed": 202}},
    {"domain": "maxsat", "generate": {"size": 200, "seed": 203}},
    {"domain": "binpacking", "generate": {"size": 80, "seed": 301}},
    {"domain": "binpacking", "generate": {"size": 120, "seed": 302}},
    {"domain": "binpacking", "generate": {"size": 160, "seed": 303}},
]

NHH_LADDER = ["NHH-X0", "NHH-Xplus", "NHH-XA", "NHH-XAR", "NHH-Xstar"]
LUBY_LADDER = ["LUBY-X0", "LUBY-Xplus", "LUBY-Xstar"]
ACCEPTANCE_SINGLES = [
    "NHH-MA-CONST", "NHH-TA-CONST", "NHH-R2R-CONST",
    "NHH-MA-EXP", "NHH-TA-EXP", "NHH-R2R-EXP",
]


def _acceptance_to_dict(strategy) -> dict:
    from .acceptance import ConstTau, ExpTau, Metropolis, RecordToRecord, Threshold

    kind = {Metropolis: "ma", Threshold: "ta", RecordToRecord: "r2r"}[type(strategy)]
    schedule = strategy.schedule
    if isinstance(schedule, ConstTau):
        return {"kind": kind, "variant": "CONST", "tau": schedule.tau}
    assert isinstance(schedule, ExpTau)
    return {
        "kind": kind,
        "variant": "EXP",
        "tau_start": schedule.tau_start,
        "tau_end": schedule.tau_end,
    }


def method_specs() -> list[dict]:
    specs = []
    for variant in ("X0", "Xplus", "XA", "XAR", "Xstar"):
        specs.append({"name": f"NHH-{variant}", "selector": "nhh", "variant": variant})
    for variant in ("X0", "Xplus", "Xstar"):
        specs.append({"name": f"LUBY-{variant}", "selector": "luby", "variant": variant})
    # the middle of each five-point acceptance scale, applied to RR+MUT only
    for kind in ("MA", "TA", "R2R"):
        for variant in ("CONST", "EXP"):
            middle = preset_table("NHH", kind, variant)[2]
            specs.append(
                {
                    "name": f"NHH-{kind}-{variant}",
                    "selector": "nhh",
                    "transforms": [
                        {
                            "categories": ["RR", "MUT"],
                            "acceptance": _acceptance_to_dict(middle),
                        }
                    ],
                }
            )
    return specs


def instance_specs() -> list[dict]:
    return [dict(spec) for spec in _INSTANCES]


def config_dict(
    output_dir: str,
    mode: str = "wall",
    seconds: float = WALL_SECONDS,
    ticks: int = VIRTUAL_TICKS,
    seeds: list[int] | None = None,
    workers: int | None = None,
    methods: list[dict] | None = None,
) -> dict:
    budget = {"mode": "wall", "seconds": seconds}
    if mode == "virtual":
        budget = {"mode": "virtual", "ticks": ticks, "ticks_per_ms": 1000}
    return {
        "methods": methods if methods is not None else method_specs(),
        "instances": instance_specs(),
        "seeds": seeds if seeds is not None else list(SEEDS),
        "budget": budget,
        "output_dir": output_dir,
        "workers": workers,
    }


def ensure_results(
    output_dir: str,
    mode: str = "wall",
    workers: int | None = None,
    seconds: float = WALL_SECONDS,
    progress: bool = True,
) -> list[RunRecord]:
    """Run (or resume) the mini-benchmark matrix and return all records."""
    config = ExperimentConfig.from_dict(
        config_dict(output_dir, mode=mode, seconds=seconds, workers=workers)
    )
    return run_matrix(config, progress=progress)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Run the built-in mini-benchmark matrix.")
    parser.add_argument("--out", required=True, help="output/journal directory")
    parser.add_argument("--mode", choices=("wall", "virtual"), default="wall")
    parser.add_argument("--seconds", type=float, default=WALL_SECONDS,
                        help="wall budget per run (wall mode)")
    parser.add_argument("--workers", type=int, default=None)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    records = ensure_results(
        args.out, mode=args.mode, workers=args.workers, seconds=args.seconds
    )
    failed = sum(1 for r in records if r.error)
    print(f"{len(records)} records complete, {failed} failed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
