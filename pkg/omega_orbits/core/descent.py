"""A finite-field model of Galois descent for point configurations on P^1.

The extension F_{q^k} / F_q plays the role of the field extension, with
G = <Frobenius> cyclic of order k. Field elements are the integers
``0..q^k - 1`` read as base-q digit vectors (constant term first) modulo a
fixed irreducible polynomial. Points of P^1(F_{q^k}) are indexed by ``x`` for
``[x : 1]`` and by ``q^k`` for ``[1 : 0]``. Matrices are 4-tuples
``(a, b, c, d)`` for ``[[a, b], [c, d]]`` acting on column vectors, scaled so
that their first nonzero entry is 1.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from itertools import combinations, product
from math import comb, factorial
from typing import Literal

from pydantic import BaseModel, ConfigDict, model_validator
from sympy import isprime
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_irreducible_p, gf_mul, gf_rem, gf_strip

from omega_orbits import config as cf
from omega_orbits.core.cohomology import (
    Cocycle,
    EquivariantSet,
    FiniteGroup,
    GGroup,
    GSet,
    cohomologous,
    h1_finite,
)
from omega_orbits.core.errors import DomainError
from omega_orbits.core.utils import UnionFind, check_capacity

logger = logging.getLogger(__name__)

# (p, k) -> monic irreducible modulus, coefficients from the leading one down
MODULI: dict[tuple[int, int], tuple[int, ...]] = {
    (2, 2): (1, 1, 1),
    (2, 3): (1, 0, 1, 1),
    (2, 4): (1, 0, 0, 1, 1),
    (3, 2): (1, 0, 1),
    (3, 3): (1, 0, 2, 1),
    (5, 2): (1, 0, 2),
    (7, 2): (1, 0, 1),
}

Matrix2 = tuple[int, int, int, int]


class FqField(BaseModel):
    """F_{p^k} = F_p[t] / (modulus)."""

    model_config = ConfigDict(frozen=True)

    p: int
    k: int
    modulus: tuple[int, ...]

    @model_validator(mode="after")
    def _check_modulus(self) -> "FqField":
        if not isprime(self.p):
            raise DomainError(f"{self.p} is not a prime")
        if self.k < 1:
            raise DomainError(f"Extension degree must be positive, got {self.k}")
        if len(self.modulus) != self.k + 1 or self.modulus[0] != 1:
            raise DomainError(f"Modulus must be monic of degree {self.k}")
        if not gf_irreducible_p([ZZ(c) for c in self.modulus], self.p, ZZ):
            raise DomainError(f"Modulus {self.modulus} is reducible over F_{self.p}")
        return self

    @classmethod
    def of(cls, p: int, k: int) -> "FqField":
        """The field with the tabulated modulus, or the least irreducible one in lexicographic order."""
        if k == 1:
            return cls(p=p, k=1, modulus=(1, 0))
        if (p, k) in MODULI:
            return cls(p=p, k=k, modulus=MODULI[(p, k)])
        if not isprime(p):
            raise DomainError(f"{p} is not a prime")
        for tail in product(range(p), repeat=k):
            modulus = (1, *tail)
            if gf_irreducible_p([ZZ(c) for c in modulus], p, ZZ):
                return cls(p=p, k=k, modulus=modulus)
        raise DomainError(f"No irreducible polynomial of degree {k} over F_{p}")

    @property
    def size(self) -> int:
        return self.p**self.k

    @property
    def infinity(self) -> int:
        return self.size

    def tables(self) -> "_FieldTables":
        return _tables(self.p, self.k, self.modulus)

    def add(self, x: int, y: int) -> int:
        return self.tables().add[x][y]

    def neg(self, x: int) -> int:
        return self.tables().neg[x]

    def mul(self, x: int, y: int) -> int:
        return self.tables().mul[x][y]

    def inv(self, x: int) -> int:
        if x == 0:
            raise DomainError("0 has no inverse")
        return self.tables().inv[x]

    def frobenius(self, x: int, times: int = 1) -> int:
        frob = self.tables().frob
        for _ in range(times % self.k):
            x = frob[x]
        return x

    def is_base(self, x: int) -> bool:
        return x < self.p

    def format(self, x: int) -> str:
        terms = []
        for i in reversed(range(self.k)):
            digit = x // self.p**i % self.p
            if digit:
                power = "" if i == 0 else ("t" if i == 1 else f"t^{i}")
                coefficient = str(digit) if digit != 1 or not power else ""
                terms.append(coefficient + power)
        return "+".join(terms) or "0"

    def format_point(self, x: int) -> str:
        return "1:0" if x == self.infinity else f"{self.format(x)}:1"


class _FieldTables:
    def __init__(self, p: int, k: int, modulus: tuple[int, ...]):
        q = p**k
        modulus_gf = [ZZ(c) for c in modulus]

        def to_gf(x: int) -> list:
            return gf_strip([ZZ(x // p**i % p) for i in reversed(range(k))])

        def from_gf(poly: list) -> int:
            return sum(int(c) * p**i for i, c in enumerate(reversed(poly)))

        digits = [[x // p**i % p for i in range(k)] for x in range(q)]
        self.add = [
            [sum((a + b) % p * p**i for i, (a, b) in enumerate(zip(digits[x], digits[y]))) for y in range(q)]
            for x in range(q)
        ]
        self.neg = [sum((-a) % p * p**i for i, a in enumerate(digits[x])) for x in range(q)]
        self.mul = [
            [from_gf(gf_rem(gf_mul(to_gf(x), to_gf(y), p, ZZ), modulus_gf, p, ZZ)) for y in range(q)]
            for x in range(q)
        ]
        self.inv = [0] + [next(y for y in range(1, q) if self.mul[x][y] == 1) for x in range(1, q)]
        self.frob = [self._power(x, p) for x in range(q)]

    def _power(self, x: int, e: int) -> int:
        result = 1
        for _ in range(e):
            result = self.mul[result][x]
        return result


@lru_cache(maxsize=None)
def _tables(p: int, k: int, modulus: tuple[int, ...]) -> _FieldTables:
    logger.debug("Building arithmetic tables of F_%d^%d", p, k)
    return _FieldTables(p, k, modulus)


def _normalize(F: FqField, m: Matrix2) -> Matrix2:
    T = F.tables()
    scale = T.inv[next(x for x in m if x)]
    return tuple(T.mul[scale][x] for x in m)


def _det(F: FqField, m: Matrix2) -> int:
    T = F.tables()
    a, b, c, d = m
    return T.add[T.mul[a][d]][T.neg[T.mul[b][c]]]


def _compose(F: FqField, m: Matrix2, n: Matrix2) -> Matrix2:
    T = F.tables()
    mul, add = T.mul, T.add
    a, b, c, d = m
    e, f, g, h = n
    return _normalize(
        F,
        (
            add[mul[a][e]][mul[b][g]],
            add[mul[a][f]][mul[b][h]],
            add[mul[c][e]][mul[d][g]],
            add[mul[c][f]][mul[d][h]],
        ),
    )


def _inverse(F: FqField, m: Matrix2) -> Matrix2:
    a, b, c, d = m
    return _normalize(F, (d, F.neg(b), F.neg(c), a))


def _frobenius(F: FqField, m: Matrix2, times: int = 1) -> Matrix2:
    return tuple(F.frobenius(x, times) for x in m)


def _apply(F: FqField, m: Matrix2, x: int) -> int:
    a, b, c, d = m
    if x == F.infinity:
        num, den = a, c
    else:
        num, den = F.add(F.mul(a, x), b), F.add(F.mul(c, x), d)
    if den == 0:
        return F.infinity
    return F.mul(num, F.inv(den))


def _apply_set(F: FqField, m: Matrix2, points: frozenset[int]) -> frozenset[int]:
    return frozenset(_apply(F, m, x) for x in points)


def frobenius_point(F: FqField, x: int, times: int = 1) -> int:
    return x if x == F.infinity else F.frobenius(x, times)


class PGL2Fq(BaseModel):
    """A coset in PGL_2(F_{q^k}), represented with first nonzero entry 1."""

    model_config = ConfigDict(frozen=True)

    field: FqField
    entries: tuple[int, int, int, int]

    @model_validator(mode="after")
    def _check(self) -> "PGL2Fq":
        size = self.field.size
        if any(not 0 <= x < size for x in self.entries):
            raise DomainError(f"Entries {self.entries} are not elements of the field")
        if _det(self.field, self.entries) == 0:
            raise DomainError(f"{self.entries} is singular")
        if _normalize(self.field, self.entries) != self.entries:
            raise DomainError(f"{self.entries} is not normalized")
        return self

    @classmethod
    def of(cls, field: FqField, entries) -> "PGL2Fq":
        entries = tuple(int(x) for x in entries)
        if not any(entries):
            raise DomainError("The zero matrix is not invertible")
        return cls(field=field, entries=_normalize(field, entries))

    @classmethod
    def identity(cls, field: FqField) -> "PGL2Fq":
        return cls(field=field, entries=(1, 0, 0, 1))

    def compose(self, other: "PGL2Fq") -> "PGL2Fq":
        return PGL2Fq(field=self.field, entries=_compose(self.field, self.entries, other.entries))

    __matmul__ = compose

    def inverse(self) -> "PGL2Fq":
        return PGL2Fq(field=self.field, entries=_inverse(self.field, self.entries))

    def frobenius(self, times: int = 1) -> "PGL2Fq":
        return PGL2Fq(field=self.field, entries=_frobenius(self.field, self.entries, times))

    def is_base(self) -> bool:
        return all(self.field.is_base(x) for x in self.entries)

    def apply(self, x: int) -> int:
        return _apply(self.field, self.entries, x)

    def __str__(self) -> str:
        return "[[{}, {}], [{}, {}]]".format(*(self.field.format(x) for x in self.entries))


class FqConfig(BaseModel):
    """A Frobenius-stable set of points of P^1(F_{q^k})."""

    model_config = ConfigDict(frozen=True)

    field: FqField
    points: frozenset[int]

    @model_validator(mode="after")
    def _check(self) -> "FqConfig":
        if not self.points:
            raise DomainError("A configuration needs at least one point")
        if any(not 0 <= x <= self.field.infinity for x in self.points):
            raise DomainError(f"{sorted(self.points)} are not all points of P^1")
        if frozenset(frobenius_point(self.field, x) for x in self.points) != self.points:
            raise DomainError(f"{self.format()} is not Frobenius-stable")
        return self

    @property
    def n(self) -> int:
        return len(self.points)

    def sorted_points(self) -> list[int]:
        return sorted(self.points)

    def format(self) -> list[str]:
        return [self.field.format_point(x) for x in self.sorted_points()]

    def __str__(self) -> str:
        return "{" + ", ".join(self.format()) + "}"


class StabilizerGroup(BaseModel):
    """M_A = {F : F(A) = A} inside PGL_2(F_{q^k}), a G-group under Frobenius."""

    model_config = ConfigDict(frozen=True)

    config: FqConfig
    elements: tuple[PGL2Fq, ...]

    @model_validator(mode="after")
    def _check_subgroup(self) -> "StabilizerGroup":
        F = self.config.field
        members = {g.entries for g in self.elements}
        if (1, 0, 0, 1) not in members:
            raise DomainError("A stabilizer must contain the identity")
        for g in members:
            if _inverse(F, g) not in members or _frobenius(F, g) not in members:
                raise DomainError("A stabilizer must be closed under inverses and Frobenius")
            if any(_compose(F, g, h) not in members for h in members):
                raise DomainError("A stabilizer must be closed under composition")
        return self

    @property
    def order(self) -> int:
        return len(self.elements)

    def index(self, g: PGL2Fq | Matrix2) -> int:
        entries = g.entries if isinstance(g, PGL2Fq) else tuple(g)
        return [h.entries for h in self.elements].index(entries)

    def to_ggroup(self) -> GGroup:
        return _stabilizer_ggroup(self)


def _matrix_ggroup(F: FqField, matrices: list[Matrix2]) -> GGroup:
    """The group of the given matrices with Frobenius acting entrywise."""
    group = FiniteGroup.from_elements(
        matrices,
        lambda m, n: _compose(F, m, n),
        ["[[{}, {}], [{}, {}]]".format(*(F.format(x) for x in m)) for m in matrices],
    )
    index = {m: i for i, m in enumerate(matrices)}
    return GGroup.from_function(
        FiniteGroup.cyclic(F.k), group, lambda s, i: index[_frobenius(F, matrices[i], s)]
    )


@lru_cache(maxsize=64)
def _stabilizer_ggroup(stab: StabilizerGroup) -> GGroup:
    return _matrix_ggroup(stab.config.field, [g.entries for g in stab.elements])


def pgl2_elements(field: FqField) -> list[Matrix2]:
    """PGL_2(F_{q^k}) as normalized matrices in lexicographic order: q^k (q^{2k} - 1) of them."""
    Q = field.size
    check_capacity("PGL_2 scan", Q * (Q * Q - 1))
    found = [(0, 1, c, d) for c in range(1, Q) for d in range(Q)]
    found += [
        (1, b, c, d) for b in range(Q) for c in range(Q) for d in range(Q) if _det(field, (1, b, c, d))
    ]
    return sorted(found)


def base_elements(field: FqField) -> list[Matrix2]:
    """The Frobenius-fixed subgroup PGL_2(F_q)."""
    return [m for m in pgl2_elements(field) if all(field.is_base(x) for x in m)]


def frobenius_orbits(n: int, q: int, k: int) -> list[FqConfig]:
    """All Frobenius-stable n-subsets of P^1(F_{q^k}), sorted by their points.

    Stable sets are exactly the unions of Frobenius orbits of points.
    """
    field = FqField.of(q, k)
    total = field.size + 1
    if not 1 <= n <= total:
        raise DomainError(f"n must lie in 1..{total}, got {n}")
    check_capacity("Configuration scan", comb(total, n))
    orbits: list[tuple[int, ...]] = []
    seen: set[int] = set()
    for x in range(total):
        if x not in seen:
            orbit = tuple(sorted({frobenius_point(field, x, i) for i in range(k)}))
            seen.update(orbit)
            orbits.append(orbit)
    found = []
    for r in range(1, n + 1):
        for chosen in combinations(orbits, r):
            if sum(map(len, chosen)) == n:
                found.append(frozenset(x for orbit in chosen for x in orbit))
    found.sort(key=sorted)
    return [FqConfig(field=field, points=points) for points in found]


def stabilizer(A: FqConfig) -> StabilizerGroup:
    field = A.field
    elements = [
        PGL2Fq(field=field, entries=m)
        for m in pgl2_elements(field)
        if _apply_set(field, m, A.points) == A.points
    ]
    return StabilizerGroup(config=A, elements=tuple(elements))


class StabilizerCase(BaseModel):
    case: Literal["borel", "torus-swap", "finite"]
    order: int
    expected: str
    holds: bool


def stabilizer_case(A: FqConfig) -> StabilizerCase:
    """The structure of M_A by the size of A.

    - n = 1: the Borel subgroup, of order Q(Q - 1) where Q = q^k.
    - n = 2: 1 -> torus -> M_A -> Z/2 -> 1, the torus fixing both points.
    - n >= 3: M_A acts faithfully on A, so |M_A| <= n!.
    """
    field, M = A.field, stabilizer(A)
    Q, n = field.size, A.n
    if n == 1:
        return StabilizerCase(
            case="borel", order=M.order, expected=f"{Q * (Q - 1)}", holds=M.order == Q * (Q - 1)
        )
    if n == 2:
        torus = [
            i for i, g in enumerate(M.elements) if all(g.apply(x) == x for x in A.points)
        ]
        group = M.to_ggroup().A
        exact = (
            len(torus) == Q - 1
            and group.is_normal(torus)
            and M.order == 2 * len(torus)
        )
        return StabilizerCase(
            case="torus-swap", order=M.order, expected=f"{2 * (Q - 1)}", holds=exact
        )
    permutations = {tuple(g.apply(x) for x in A.sorted_points()) for g in M.elements}
    faithful = len(permutations) == M.order
    return StabilizerCase(
        case="finite",
        order=M.order,
        expected=f"<= {factorial(n)}",
        holds=faithful and M.order <= factorial(n),
    )


def psi_cocycle(
    A: FqConfig, B: FqConfig, F: PGL2Fq, stab: StabilizerGroup | None = None
) -> Cocycle:
    """psi_{B,F}: sigma -> F^-1 sigma(F), a cocycle with values in M_A."""
    field = A.field
    if B.field != field or F.field != field:
        raise DomainError("Configurations and matrix live over different fields")
    if _apply_set(field, F.entries, A.points) != B.points:
        raise DomainError(f"{F} does not map {A} to {B}")
    stab = stab or stabilizer(A)
    F_inv = _inverse(field, F.entries)
    values = tuple(
        stab.index(_compose(field, F_inv, _frobenius(field, F.entries, s))) for s in range(field.k)
    )
    return Cocycle(parent=stab.to_ggroup(), values=values)


class BaseWitness(BaseModel):
    source: list[str]
    target: list[str]
    matrix: str


class OrbitFiber(BaseModel):
    representative: list[str]
    configs: int
    stabilizer_order: int
    h1_size: int
    base_orbits: list[list[list[str]]]
    classes: list[int]
    witnesses: list[BaseWitness]
    checks: dict[str, bool]


class DescentReport(BaseModel):
    n: int
    q: int
    k: int
    stable_configs: int
    extension_orbits: int
    base_orbit_count: int
    orbits: list[OrbitFiber]
    partition_consistent: bool
    passed: bool


def _partition(field: FqField, configs: list[FqConfig], group: list[Matrix2]) -> list[list[FqConfig]]:
    position = {A.points: i for i, A in enumerate(configs)}
    uf = UnionFind(range(len(configs)))
    for i, A in enumerate(configs):
        for m in group:
            j = position.get(_apply_set(field, m, A.points))
            if j is not None:
                uf.union(i, j)
    return [[configs[i] for i in cls] for cls in uf.classes(range(len(configs)))]


def _fiber(field: FqField, orbit: list[FqConfig], big: list[Matrix2], base: list[Matrix2]) -> OrbitFiber:
    A = orbit[0]
    stab = stabilizer(A)
    classes = h1_finite(stab.to_ggroup())
    transporters = {
        B.points: [m for m in big if _apply_set(field, m, A.points) == B.points] for B in orbit
    }
    psi = {
        B.points: psi_cocycle(A, B, PGL2Fq(field=field, entries=transporters[B.points][0]), stab)
        for B in orbit
    }

    def class_of(f: Cocycle) -> int:
        return next(i for i, c in enumerate(classes) if cohomologous(c.representative, f) is not None)

    well_defined = all(
        cohomologous(psi[B.points], psi_cocycle(A, B, PGL2Fq(field=field, entries=m), stab)) is not None
        for B in orbit
        for m in transporters[B.points]
    )
    base_orbits = _partition(field, orbit, base)
    labels = [[class_of(psi[B.points]) for B in members] for members in base_orbits]
    base_invariant = all(len(set(row)) == 1 for row in labels)
    injective = len({row[0] for row in labels}) == len(labels)

    witnesses = []
    witnessed = True
    for members in base_orbits:
        B = members[0]
        for C in members[1:]:
            N = cohomologous(psi[C.points], psi[B.points])
            if N is None:
                witnessed = False
                continue
            F1, F2 = transporters[B.points][0], transporters[C.points][0]
            R = _compose(field, _compose(field, F2, stab.elements[N].entries), _inverse(field, F1))
            ok = _frobenius(field, R) == R and _apply_set(field, R, B.points) == C.points
            witnessed = witnessed and ok
            witnesses.append(
                BaseWitness(source=B.format(), target=C.format(), matrix=str(PGL2Fq(field=field, entries=R)))
            )
    return OrbitFiber(
        representative=A.format(),
        configs=len(orbit),
        stabilizer_order=stab.order,
        h1_size=len(classes),
        base_orbits=[[B.format() for B in members] for members in base_orbits],
        classes=[row[0] for row in labels],
        witnesses=witnesses,
        checks={
            "psi_well_defined": well_defined,
            "base_invariant": base_invariant,
            "injective": injective,
            "base_witnesses": witnessed,
        },
    )


def orbit_fiber_report(n: int, q: int, k: int) -> DescentReport:
    """Decomposes each PGL_2(F_{q^k})-orbit of Frobenius-stable configurations into
    PGL_2(F_q)-orbits and checks that psi embeds these base orbits into H^1(G, M_A).

    For base orbits B, C inside one extension orbit, psi_B ~ psi_C through
    N in M_A gives the base-field element R = F_C N F_B^-1 with R(B) = C.
    """
    configs = frobenius_orbits(n, q, k)
    field = FqField.of(q, k)
    big, base = pgl2_elements(field), base_elements(field)
    check_capacity("Orbit scan", len(configs) * len(big))
    orbits = _partition(field, configs, big)
    with ThreadPoolExecutor(max_workers=cf.THREADS) as executor:
        fibers = list(executor.map(lambda orbit: _fiber(field, orbit, big, base), orbits))
    base_count = len(_partition(field, configs, base))
    consistent = sum(len(f.base_orbits) for f in fibers) == base_count
    logger.info(
        "n=%d q=%d k=%d: %d stable configurations, %d extension orbits, %d base orbits",
        n, q, k, len(configs), len(orbits), base_count,
    )
    return DescentReport(
        n=n,
        q=q,
        k=k,
        stable_configs=len(configs),
        extension_orbits=len(orbits),
        base_orbit_count=base_count,
        orbits=fibers,
        partition_consistent=consistent,
        passed=consistent and all(all(f.checks.values()) for f in fibers),
    )


def frobenius_pgl2(field: FqField) -> GGroup:
    """PGL_2(F_{q^k}) as a G-group under the Frobenius."""
    return _matrix_ggroup(field, pgl2_elements(field))


def projective_line(field: FqField, M: GGroup | None = None) -> EquivariantSet:
    """P^1(F_{q^k}) with PGL_2 acting by fractional linear maps and G by Frobenius."""
    M = M or frobenius_pgl2(field)
    matrices = pgl2_elements(field)
    points = range(field.infinity + 1)
    g_action = GSet(
        G=M.G,
        size=len(points),
        action=tuple(tuple(frobenius_point(field, x, s) for x in points) for s in M.G.elements),
    )
    return EquivariantSet(
        parent=M,
        b_action=tuple(tuple(_apply(field, m, x) for x in points) for m in matrices),
        g_action=g_action,
    )


def h1_pgl2_check(q: int, k: int) -> bool:
    """Whether H^1(G, PGL_2(F_{q^k})) is trivial, by brute force."""
    if k == 1:
        return True
    field = FqField.of(q, k)
    check_capacity("PGL_2 table", len(pgl2_elements(field)), cf.MAX_TABLE_ORDER)
    return len(h1_finite(frobenius_pgl2(field))) == 1
