"""Exact arithmetic relative to a finite set S of rational primes.

Integers are Python ints and rationals are ``fractions.Fraction``; nothing in
this module touches floating point.
"""

from fractions import Fraction
from math import prod

from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from sympy import factorint, isprime, multiplicity

from omega_orbits.core.errors import DomainError

Rational = int | Fraction


class SPrimeSet(BaseModel):
    """A finite set of rational primes, stored strictly increasing."""

    model_config = ConfigDict(frozen=True)

    primes: tuple[int, ...] = ()

    @field_validator("primes")
    @classmethod
    def _check_primes(cls, primes: tuple[int, ...]) -> tuple[int, ...]:
        for p in primes:
            if not isprime(p):
                raise DomainError(f"{p} is not a prime")
        if any(a >= b for a, b in zip(primes, primes[1:])):
            raise DomainError(f"Primes {primes} must be distinct and increasing")
        return primes

    @classmethod
    def of(cls, primes=()) -> "SPrimeSet":
        return cls(primes=tuple(sorted(set(int(p) for p in primes))))

    @classmethod
    def parse(cls, text: str) -> "SPrimeSet":
        """Parses a comma-separated list of primes; the empty string is S = {}."""
        items = [t.strip() for t in text.split(",") if t.strip()]
        try:
            values = [int(t) for t in items]
        except ValueError as e:
            raise DomainError(f"Malformed prime list {text!r}") from e
        return cls.of(values)

    def __contains__(self, p: int) -> bool:
        return p in self.primes

    def __len__(self) -> int:
        return len(self.primes)

    def __str__(self) -> str:
        return ",".join(str(p) for p in self.primes)


class Factorization(BaseModel):
    model_config = ConfigDict(frozen=True)

    sign: int
    factors: tuple[tuple[int, int], ...] = ()

    @model_validator(mode="after")
    def _check(self) -> "Factorization":
        if self.sign not in (1, -1):
            raise DomainError(f"Sign must be +1 or -1, got {self.sign}")
        ps = [p for p, _ in self.factors]
        if any(a >= b for a, b in zip(ps, ps[1:])):
            raise DomainError("Factor primes must be strictly increasing")
        if any(e < 1 for _, e in self.factors):
            raise DomainError("Exponents must be positive")
        return self

    def value(self) -> int:
        return self.sign * prod(p**e for p, e in self.factors)

    def primes(self) -> list[int]:
        return [p for p, _ in self.factors]


def _as_fraction(n: Rational) -> Fraction:
    n = Fraction(n)
    if n == 0:
        raise DomainError("Zero has no factorization, valuation or unit status")
    return n


def require_prime(p: int) -> None:
    if not isprime(p):
        raise DomainError(f"{p} is not a prime")


def factorize(n: int) -> Factorization:
    """Exact prime factorization of a nonzero integer.

    sympy's ``factorint`` runs trial division, then Pollard rho / p-1 on the
    cofactor with a BPSW primality test, which is deterministic at the sizes
    handled here.
    """
    if n == 0:
        raise DomainError("Cannot factor 0")
    sign = 1 if n > 0 else -1
    factors = factorint(abs(n))
    return Factorization(
        sign=sign, factors=tuple(sorted((int(p), int(e)) for p, e in factors.items()))
    )


def valuation(n: Rational, p: int) -> int:
    """The exponent of p in the nonzero rational n (negative for denominators)."""
    n = _as_fraction(n)
    require_prime(p)
    return int(multiplicity(p, abs(n.numerator))) - int(
        multiplicity(p, n.denominator)
    )


def _strip(n: int, S: SPrimeSet) -> int:
    for p in S.primes:
        while n % p == 0:
            n //= p
    return n


def is_s_unit(n: Rational, S: SPrimeSet) -> bool:
    """True iff n has valuation 0 at every prime outside S."""
    n = _as_fraction(n)
    return abs(_strip(n.numerator, S)) == 1 and _strip(n.denominator, S) == 1


def s_part_split(n: int, S: SPrimeSet) -> tuple[int, int]:
    """Splits n = s_part * coprime_part with s_part > 0 supported on S."""
    if n == 0:
        raise DomainError("Cannot split 0")
    coprime = _strip(n, S)
    return n // coprime, coprime


def s_unit_exponents(u: Rational, S: SPrimeSet) -> tuple[int, dict[int, int]]:
    """Coordinates of an S-unit in {+-1} x prod_{p in S} p^Z."""
    u = _as_fraction(u)
    if not is_s_unit(u, S):
        raise DomainError(f"{u} is not an S-unit for S = {{{S}}}")
    return (1 if u > 0 else -1), {p: valuation(u, p) for p in S.primes}


def is_s_integer(n: Rational, S: SPrimeSet) -> bool:
    """True iff the denominator of n is supported on S."""
    return _strip(Fraction(n).denominator, S) == 1
