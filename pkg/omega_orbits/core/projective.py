"""Points and finite configurations on P^1(Q), reduction mod p and the GL_2(Z_S) action.

Points are stored in a single normalized form (coprime coordinates, b > 0 or
the point [1:0]); equality, hashing and cross determinants all rely on it.

Action convention: a matrix acts on points through column vectors,
``[a:b] -> [m11*a + m12*b : m21*a + m22*b]``, which is a left action. Forms are
acted on by row substitution ``f((x, y) * gamma)`` (see ``forms.act``), so the
two are linked by
``roots_config(act(gamma, f)) == apply_gl2(gamma.contragredient(), roots_config(f))``.
"""

import logging
import re
from fractions import Fraction
from itertools import combinations
from math import gcd, lcm

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from omega_orbits.core.errors import DomainError
from omega_orbits.core.sarith import (
    SPrimeSet,
    factorize,
    is_s_integer,
    is_s_unit,
    require_prime,
)

logger = logging.getLogger(__name__)


class ProjPoint(BaseModel):
    """The point [a : b] of P^1(Q) in normalized coordinates."""

    model_config = ConfigDict(frozen=True)

    a: int
    b: int

    @model_validator(mode="after")
    def _check_normalized(self) -> "ProjPoint":
        if gcd(self.a, self.b) != 1:
            raise DomainError(f"[{self.a}:{self.b}] is not in normalized coordinates")
        if self.b < 0 or (self.b == 0 and self.a != 1):
            raise DomainError(f"[{self.a}:{self.b}] violates the sign convention")
        return self

    def sort_key(self) -> tuple:
        return (self.b == 0, Fraction(self.a, self.b) if self.b else 0)

    def __str__(self) -> str:
        return f"{self.a}:{self.b}"


class PointConfig(BaseModel):
    """A set A of n >= 1 distinct points of P^1(Q)."""

    model_config = ConfigDict(frozen=True)

    points: frozenset[ProjPoint]

    @field_validator("points")
    @classmethod
    def _nonempty(cls, points: frozenset[ProjPoint]) -> frozenset[ProjPoint]:
        if not points:
            raise DomainError("A configuration needs at least one point")
        return points

    @classmethod
    def of(cls, points) -> "PointConfig":
        points = list(points)
        distinct = frozenset(points)
        if len(distinct) != len(points):
            raise DomainError(f"Configuration points must be distinct: {points}")
        return cls(points=distinct)

    @property
    def n(self) -> int:
        return len(self.points)

    def sorted_points(self) -> list[ProjPoint]:
        return sorted(self.points, key=ProjPoint.sort_key)

    def __str__(self) -> str:
        return format_config(self)


class ProjPointModP(BaseModel):
    """A point of P^1(F_p), scaled so its first nonzero coordinate is 1."""

    model_config = ConfigDict(frozen=True)

    p: int
    a_bar: int
    b_bar: int

    @model_validator(mode="after")
    def _check(self) -> "ProjPointModP":
        a, b = self.a_bar, self.b_bar
        if not (0 <= a < self.p and 0 <= b < self.p):
            raise DomainError(f"Residues ({a}, {b}) are not reduced mod {self.p}")
        if (a, b) != (0, 1) and a != 1:
            raise DomainError(f"({a}, {b}) mod {self.p} is not normalized")
        return self

    def __str__(self) -> str:
        return f"{self.a_bar}:{self.b_bar} mod {self.p}"


class GL2ZS(BaseModel):
    """A matrix [[m11, m12], [m21, m22]] over Z_S with S-unit determinant."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    m11: Fraction
    m12: Fraction
    m21: Fraction
    m22: Fraction
    S: SPrimeSet = SPrimeSet()

    @field_validator("m11", "m12", "m21", "m22", mode="before")
    @classmethod
    def _to_fraction(cls, v) -> Fraction:
        return Fraction(v)

    @model_validator(mode="after")
    def _check(self) -> "GL2ZS":
        for m in self.entries():
            if not is_s_integer(m, self.S):
                raise DomainError(f"Entry {m} is not an S-integer for S = {{{self.S}}}")
        det = self.det()
        if det == 0 or not is_s_unit(det, self.S):
            raise DomainError(
                f"Determinant {det} is not an S-unit for S = {{{self.S}}}"
            )
        return self

    @classmethod
    def of(cls, rows, S: SPrimeSet | None = None) -> "GL2ZS":
        (m11, m12), (m21, m22) = rows
        return cls(m11=m11, m12=m12, m21=m21, m22=m22, S=S or SPrimeSet())

    @classmethod
    def identity(cls, S: SPrimeSet | None = None) -> "GL2ZS":
        return cls.of([[1, 0], [0, 1]], S)

    def entries(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.m11, self.m12, self.m21, self.m22)

    def rows(self) -> list[list[Fraction]]:
        return [[self.m11, self.m12], [self.m21, self.m22]]

    def det(self) -> Fraction:
        return self.m11 * self.m22 - self.m12 * self.m21

    def is_integral(self) -> bool:
        return all(m.denominator == 1 for m in self.entries())

    def compose(self, other: "GL2ZS") -> "GL2ZS":
        """The matrix product self * other."""
        return GL2ZS.of(
            [
                [
                    self.m11 * other.m11 + self.m12 * other.m21,
                    self.m11 * other.m12 + self.m12 * other.m22,
                ],
                [
                    self.m21 * other.m11 + self.m22 * other.m21,
                    self.m21 * other.m12 + self.m22 * other.m22,
                ],
            ],
            self.S,
        )

    __matmul__ = compose

    def inverse(self) -> "GL2ZS":
        d = self.det()
        return GL2ZS.of(
            [[self.m22 / d, -self.m12 / d], [-self.m21 / d, self.m11 / d]], self.S
        )

    def transpose(self) -> "GL2ZS":
        return GL2ZS.of([[self.m11, self.m21], [self.m12, self.m22]], self.S)

    def contragredient(self) -> "GL2ZS":
        """The inverse transpose, which moves roots the way ``act`` moves forms."""
        return self.inverse().transpose()

    def __str__(self) -> str:
        return "[[{}, {}], [{}, {}]]".format(*self.entries())


def normalize(a: int, b: int) -> ProjPoint:
    if a == 0 and b == 0:
        raise DomainError("[0:0] is not a point of P^1")
    g = gcd(a, b)
    a, b = a // g, b // g
    if b < 0 or (b == 0 and a < 0):
        a, b = -a, -b
    return ProjPoint(a=a, b=b)


def cross_det(P: ProjPoint, Q: ProjPoint) -> int:
    """alpha * beta' - alpha' * beta on normalized coordinates; zero iff P == Q."""
    return P.a * Q.b - Q.a * P.b


def reduce_point(P: ProjPoint, p: int) -> ProjPointModP:
    """r_p on a rational point: coordinate reduction of the coprime pair."""
    require_prime(p)
    a, b = P.a % p, P.b % p
    if a == 0:
        return ProjPointModP(p=p, a_bar=0, b_bar=1)
    return ProjPointModP(p=p, a_bar=1, b_bar=b * pow(a, -1, p) % p)


def reduce_config(A: PointConfig, p: int) -> frozenset[ProjPointModP]:
    return frozenset(reduce_point(P, p) for P in A.points)


def omega_member(A: PointConfig, S: SPrimeSet) -> bool:
    """Membership of A in Omega_{n,Q}(P^1; S).

    Two normalized points collide mod p exactly when p divides their cross
    determinant, so it suffices to test every pairwise cross determinant for
    being an S-unit.
    """
    return all(
        is_s_unit(cross_det(P, Q), S) for P, Q in combinations(A.sorted_points(), 2)
    )


def colliding_primes(A: PointConfig) -> set[int]:
    """The primes p with #r_p(A) < n."""
    primes: set[int] = set()
    for P, Q in combinations(A.sorted_points(), 2):
        primes.update(factorize(cross_det(P, Q)).primes())
    return primes


def _act_on_pair(gamma: GL2ZS, a: int, b: int) -> ProjPoint:
    x = gamma.m11 * a + gamma.m12 * b
    y = gamma.m21 * a + gamma.m22 * b
    scale = lcm(x.denominator, y.denominator)
    return normalize(int(x * scale), int(y * scale))


def apply_gl2(gamma: GL2ZS, A: PointConfig) -> PointConfig:
    """Applies the fractional linear map of gamma to every point of A."""
    det = gamma.det()
    if det == 0 or not is_s_unit(det, gamma.S):
        raise DomainError(f"Determinant {det} is not an S-unit")
    return PointConfig(points=frozenset(_act_on_pair(gamma, P.a, P.b) for P in A.points))


_POINT_RE = re.compile(r"^\s*(-?\d+)\s*:\s*(-?\d+)\s*$")


def parse_point(text: str) -> ProjPoint:
    match = _POINT_RE.match(text)
    if match is None:
        raise DomainError(f"Malformed point {text!r}, expected 'a:b'")
    return normalize(int(match.group(1)), int(match.group(2)))


def parse_config(text: str) -> PointConfig:
    """Parses '{a:b, c:d, ...}'; the braces are optional."""
    body = text.strip()
    if body.startswith("{") and body.endswith("}"):
        body = body[1:-1]
    items = [t for t in body.split(",") if t.strip()]
    if not items:
        raise DomainError(f"Configuration {text!r} has no points")
    return PointConfig.of(parse_point(t) for t in items)


def format_point(P: ProjPoint) -> str:
    return str(P)


def format_config(A: PointConfig) -> str:
    return "{" + ", ".join(format_point(P) for P in A.sorted_points()) + "}"
