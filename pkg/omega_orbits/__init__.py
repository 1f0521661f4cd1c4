from omega_orbits import cli, core

__all__ = ["cli", "core"]
