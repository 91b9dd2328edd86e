#!/usr/bin/env python3
"""
Startup script: loads the environment, validates configuration, checks that
the SMT solver answers, then runs the command line.
"""

import logging
import sys
from pathlib import Path

from dotenv import load_dotenv


def load_environment() -> bool:
    """Load environment variables from .env when present."""
    if Path('.env').exists():
        load_dotenv()
        print("Environment variables loaded from .env file", file=sys.stderr)
        return True
    print("No .env file found, using process environment and defaults", file=sys.stderr)
    return False


def validate_environment() -> bool:
    """Check numeric settings and the log level."""
    from arca.config import get_config
    from arca.errors import ConfigError
    try:
        get_config().validate()
    except ConfigError as e:
        print(f"Invalid configuration: {e}", file=sys.stderr)
        return False
    return True


def check_solver() -> bool:
    """Ask the configured solver a trivial query."""
    from arca.backend import solver_responds
    from arca.config import get_config
    try:
        return solver_responds(get_config().solver_config())
    except Exception as e:
        print(f"Solver check failed: {e}", file=sys.stderr)
        return False


def main() -> None:
    # Step 1: environment
    load_environment()

    from arca.config import get_config
    logging.basicConfig(level=get_config().log_level(),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    # Step 2: configuration
    if not validate_environment():
        sys.exit(1)

    # Step 3: solver
    if not check_solver():
        print("Solver is not reachable; solving commands will report unknown", file=sys.stderr)

    # Step 4: command line
    from arca.cli import dispatch
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == '__main__':
    main()
