import os
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent

# The directional acceptance tests consume a wall-clock benchmark matrix that
# takes several CPU-hours from cold. It journals into this directory and
# resumes, so it can (and should) be pre-run in the background:
#     python3 -m hyperhh.minibench --out .minibench
MINIBENCH_DIR_VAR = "HYPERHH_MINIBENCH_DIR"


def mini_benchmark_dir() -> str:
    return os.environ.get(MINIBENCH_DIR_VAR, str(REPO_ROOT / ".minibench"))


@pytest.fixture(scope="session")
def wall_matrix_records():
    from hyperhh import minibench

    return minibench.ensure_results(mini_benchmark_dir(), mode="wall", progress=True)
