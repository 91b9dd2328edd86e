import os
import sys
from functools import lru_cache
from pathlib import Path

import pytest

# Make the package importable without installing it
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from arca.backend import SolverConfig, solver_responds
from arca.config import Config
from generators import read_formula

BENCHMARKS = Path(__file__).resolve().parent.parent / 'benchmarks'


@lru_cache(maxsize=1)
def _solver_available() -> bool:
    return solver_responds(Config.solver_config())


@pytest.fixture
def solver_cfg() -> SolverConfig:
    """Solver configuration from the environment; skips when no solver answers."""
    if not _solver_available():
        pytest.skip("no SMT solver available")
    return Config.solver_config()


@pytest.fixture
def missing_solver_cfg() -> SolverConfig:
    return SolverConfig(executable='arca-no-such-solver', timeout_ms=1000)


@pytest.fixture
def benchmarks() -> Path:
    return BENCHMARKS


@pytest.fixture
def write_formula():
    """The array-write encoding: b agrees with a except possibly at y, where it holds z."""
    return read_formula((BENCHMARKS / 'write.arca').read_text())[1]
