from omega_orbits.core import cohomology, descent, errors, forms, projective, sarith, utils
from omega_orbits.core.cohomology import h1_finite, h1_zr, six_term_check, toy_sequences
from omega_orbits.core.descent import h1_pgl2_check, orbit_fiber_report
from omega_orbits.core.errors import CapacityError, DomainError, NotSplitError
from omega_orbits.core.forms import enumerate_omega_forms, is_omega_form, orbit_partition
from omega_orbits.core.projective import colliding_primes, omega_member
from omega_orbits.core.utils import write_schema

__all__ = [
    "cohomology",
    "descent",
    "errors",
    "forms",
    "projective",
    "sarith",
    "utils",
    "CapacityError",
    "DomainError",
    "NotSplitError",
    "colliding_primes",
    "enumerate_omega_forms",
    "h1_finite",
    "h1_pgl2_check",
    "h1_zr",
    "is_omega_form",
    "omega_member",
    "orbit_fiber_report",
    "orbit_partition",
    "six_term_check",
    "toy_sequences",
    "write_schema",
]
