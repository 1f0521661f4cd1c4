from omega_orbits.cli import main, models
from omega_orbits.cli.main import parse_args, run

__all__ = ["main", "models", "parse_args", "run"]
