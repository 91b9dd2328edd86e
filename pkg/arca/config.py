"""
Configuration for the ArCa toolchain.

Values come from the environment (optionally a .env file in the working
directory); command-line flags override them.
"""

import logging
import os
import shlex
from typing import Optional

from dotenv import load_dotenv

from .errors import ConfigError

# Load environment variables from .env file
load_dotenv()


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from e


class Config:
    """Toolchain configuration."""

    # Solver backend
    SOLVER: str = os.getenv('ARCA_SOLVER', 'z3')
    SOLVER_ARGS: str = os.getenv('ARCA_SOLVER_ARGS', '-smt2 -in')
    TIMEOUT_MS: int = _int_env('ARCA_TIMEOUT_MS', 60000)
    LOGIC: Optional[str] = os.getenv('ARCA_LOGIC') or None

    # Resource caps
    MAX_SIGMA: int = _int_env('ARCA_MAX_SIGMA', 4096)
    MAX_SUBSETS: int = _int_env('ARCA_MAX_SUBSETS', 10000)
    MAX_VENN_CARDS: int = _int_env('ARCA_MAX_VENN_CARDS', 8)
    ORACLE_CAP: int = _int_env('ARCA_ORACLE_CAP', 10_000_000)
    MATERIALIZE_LIMIT: int = _int_env('ARCA_MATERIALIZE_LIMIT', 64)
    WORKERS: int = _int_env('ARCA_WORKERS', 1)

    LOG_LEVEL: str = os.getenv('ARCA_LOG_LEVEL', 'WARNING')

    @classmethod
    def validate(cls) -> bool:
        """Check numeric settings; raises ConfigError on the first bad one."""
        for name in ('TIMEOUT_MS', 'MAX_SIGMA', 'MAX_SUBSETS', 'MAX_VENN_CARDS', 'ORACLE_CAP', 'WORKERS'):
            if getattr(cls, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(cls, name)}")
        if cls.MATERIALIZE_LIMIT < 0:
            raise ConfigError("MATERIALIZE_LIMIT must be non-negative")
        if logging.getLevelName(cls.LOG_LEVEL.upper()) == f"Level {cls.LOG_LEVEL.upper()}":
            raise ConfigError(f"unknown log level {cls.LOG_LEVEL!r}")
        return True

    @classmethod
    def solver_config(cls):
        """Build the backend SolverConfig from these settings."""
        from .backend import SolverConfig
        return SolverConfig(
            executable=cls.SOLVER,
            args=tuple(shlex.split(cls.SOLVER_ARGS)),
            timeout_ms=cls.TIMEOUT_MS,
            logic=cls.LOGIC,
        )

    @classmethod
    def log_level(cls) -> int:
        return getattr(logging, cls.LOG_LEVEL.upper(), logging.WARNING)


class DevelopmentConfig(Config):
    """Development configuration."""
    LOG_LEVEL = 'DEBUG'


class ProductionConfig(Config):
    """Production configuration."""
    LOG_LEVEL = os.getenv('ARCA_LOG_LEVEL', 'WARNING')


# Configuration mapping
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'default': ProductionConfig,
}


def get_config() -> type:
    """Configuration class selected by ARCA_ENV."""
    return config.get(os.getenv('ARCA_ENV', 'default'), config['default'])
