"""Non-abelian cohomology in degrees 0 and 1 for finite groups.

Groups are multiplication tables over the indices ``0..m-1``; G-groups carry
the action as a table ``action[sigma][a]``. Cocycles are stored on all of G.
Cocycle classes are found by enumerating the orbit of a cocycle under the
relation ``g(sigma) = c^-1 f(sigma) sigma(c)``, so every equality between two
classes comes with an explicit witness ``c``.
"""

import logging
from collections import deque
from collections.abc import Callable, Hashable, Iterable, Sequence
from itertools import product
from math import gcd, prod

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator
from sympy import Matrix, eye, zeros
from sympy.combinatorics import PermutationGroup
from sympy.matrices.normalforms import smith_normal_form
from sympy.polys.domains import ZZ

from omega_orbits import config as cf
from omega_orbits.core.errors import DomainError
from omega_orbits.core.utils import check_capacity

logger = logging.getLogger(__name__)

# above this order associativity is only checked through verify_associativity()
ASSOCIATIVITY_CHECK_ORDER = 64

Table = tuple[tuple[int, ...], ...]


class FiniteGroup(BaseModel):
    """A finite group given by its Cayley table on the indices 0..m-1."""

    model_config = ConfigDict(frozen=True)

    mul: Table
    identity: int
    inv: tuple[int, ...]
    labels: tuple[str, ...] = ()

    @model_validator(mode="after")
    def _check_laws(self) -> "FiniteGroup":
        m = len(self.mul)
        if m == 0:
            raise DomainError("A group needs at least one element")
        full = set(range(m))
        for row in self.mul:
            if len(row) != m or set(row) != full:
                raise DomainError("Every row of a group table must be a permutation of 0..m-1")
        e = self.identity
        if not 0 <= e < m or any(self.mul[e][a] != a or self.mul[a][e] != a for a in range(m)):
            raise DomainError(f"{e} is not a two-sided identity")
        if len(self.inv) != m or any(self.mul[a][self.inv[a]] != e for a in range(m)):
            raise DomainError("Inverse table does not satisfy a * inv(a) = 1")
        if self.labels and len(self.labels) != m:
            raise DomainError(f"Expected {m} labels, got {len(self.labels)}")
        if m <= ASSOCIATIVITY_CHECK_ORDER and not self.verify_associativity():
            raise DomainError("Group table is not associative")
        return self

    @classmethod
    def from_table(cls, mul: Sequence[Sequence[int]], labels: Sequence[str] = ()) -> "FiniteGroup":
        mul = tuple(tuple(int(x) for x in row) for row in mul)
        m = len(mul)
        e = next((a for a in range(m) if all(mul[a][b] == b for b in range(m))), None)
        if e is None:
            raise DomainError("Table has no left identity")
        inv = []
        for a in range(m):
            b = next((b for b in range(m) if mul[a][b] == e), None)
            if b is None:
                raise DomainError(f"Element {a} has no inverse")
            inv.append(b)
        return cls(mul=mul, identity=e, inv=tuple(inv), labels=tuple(labels))

    @classmethod
    def from_elements(
        cls,
        elements: Sequence[Hashable],
        mul: Callable[[Hashable, Hashable], Hashable],
        labels: Sequence[str] | None = None,
    ) -> "FiniteGroup":
        """Materializes the table of a group given by its elements and their product."""
        elements = list(elements)
        check_capacity("Group table", len(elements), cf.MAX_TABLE_ORDER)
        index = {x: i for i, x in enumerate(elements)}
        if len(index) != len(elements):
            raise DomainError("Group elements must be distinct")
        try:
            table = [[index[mul(a, b)] for b in elements] for a in elements]
        except KeyError as e:
            raise DomainError(f"Product {e.args[0]} leaves the element list") from e
        return cls.from_table(table, labels if labels is not None else [str(x) for x in elements])

    @classmethod
    def from_permutations(cls, group: PermutationGroup) -> "FiniteGroup":
        elements = sorted(group.elements, key=lambda p: p.array_form)
        return cls.from_elements(
            elements, lambda a, b: a * b, [str(p.cyclic_form) for p in elements]
        )

    @classmethod
    def cyclic(cls, m: int) -> "FiniteGroup":
        if m < 1:
            raise DomainError(f"Cyclic group order must be positive, got {m}")
        return cls.from_table(
            [[(i + j) % m for j in range(m)] for i in range(m)], [str(i) for i in range(m)]
        )

    @classmethod
    def dihedral(cls, m: int) -> "FiniteGroup":
        """The group of order 2m; element i + m*j is r^i s^j, with s r s = r^-1."""
        if m < 1:
            raise DomainError(f"Dihedral parameter must be positive, got {m}")

        def mul(x: int, y: int) -> int:
            i, j = x % m, x // m
            k, t = y % m, y // m
            return (i + (-1) ** j * k) % m + m * ((j + t) % 2)

        labels = [f"r{x % m}" + ("s" if x >= m else "") for x in range(2 * m)]
        return cls.from_table([[mul(x, y) for y in range(2 * m)] for x in range(2 * m)], labels)

    @classmethod
    def direct_product(cls, G: "FiniteGroup", H: "FiniteGroup") -> "FiniteGroup":
        """Element g*|H| + h is the pair (g, h)."""
        n = H.order

        def mul(x: int, y: int) -> int:
            return G.mul[x // n][y // n] * n + H.mul[x % n][y % n]

        labels = [f"({G.label(x // n)},{H.label(x % n)})" for x in range(G.order * n)]
        return cls.from_table(
            [[mul(x, y) for y in range(G.order * n)] for x in range(G.order * n)], labels
        )

    @property
    def order(self) -> int:
        return len(self.mul)

    @property
    def elements(self) -> range:
        return range(self.order)

    def label(self, a: int) -> str:
        return self.labels[a] if self.labels else str(a)

    def op(self, a: int, b: int) -> int:
        return self.mul[a][b]

    def power(self, a: int, k: int) -> int:
        result = self.identity
        base = a if k >= 0 else self.inv[a]
        for _ in range(abs(k)):
            result = self.mul[result][base]
        return result

    def is_abelian(self) -> bool:
        return all(
            self.mul[a][b] == self.mul[b][a] for a in self.elements for b in range(a)
        )

    def verify_associativity(self) -> bool:
        mul = self.mul
        return all(
            mul[mul[a][b]][c] == mul[a][mul[b][c]]
            for a in self.elements
            for b in self.elements
            for c in self.elements
        )

    def closure(self, gens: Iterable[int]) -> frozenset[int]:
        gens = list(gens)
        seen = {self.identity}
        queue = deque([self.identity])
        while queue:
            x = queue.popleft()
            for g in gens:
                y = self.mul[x][g]
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        return frozenset(seen)

    def generators(self) -> list[int]:
        """A generating set chosen greedily in index order."""
        gens: list[int] = []
        span = frozenset({self.identity})
        for g in self.elements:
            if g not in span:
                gens.append(g)
                span = self.closure(gens)
                if len(span) == self.order:
                    break
        return gens

    def is_subgroup(self, members: Iterable[int]) -> bool:
        members = set(members)
        return self.identity in members and all(
            self.mul[a][self.inv[b]] in members for a in members for b in members
        )

    def is_normal(self, members: Iterable[int]) -> bool:
        members = set(members)
        return self.is_subgroup(members) and all(
            self.mul[self.mul[g][a]][self.inv[g]] in members for g in self.elements for a in members
        )

    def quotient(self, members: Iterable[int]) -> tuple["FiniteGroup", tuple[int, ...]]:
        """G/N with cosets numbered by their least element, and the projection G -> G/N."""
        members = sorted(set(members))
        if not self.is_normal(members):
            raise DomainError(f"{members} is not a normal subgroup")
        projection = [-1] * self.order
        reps = []
        for g in self.elements:
            if projection[g] < 0:
                for a in members:
                    projection[self.mul[g][a]] = len(reps)
                reps.append(g)
        table = [[projection[self.mul[x][y]] for y in reps] for x in reps]
        labels = [self.label(x) + "N" for x in reps]
        return FiniteGroup.from_table(table, labels), tuple(projection)


class GGroup(BaseModel):
    """A group A with an action of G by automorphisms: ``action[sigma][a] = sigma(a)``."""

    model_config = ConfigDict(frozen=True)

    G: FiniteGroup
    A: FiniteGroup
    action: Table

    @model_validator(mode="after")
    def _check_action(self) -> "GGroup":
        G, A, act = self.G, self.A, self.action
        if len(act) != G.order or any(len(row) != A.order for row in act):
            raise DomainError("Action table must have shape |G| x |A|")
        if any(act[G.identity][a] != a for a in A.elements):
            raise DomainError("The identity of G must act trivially")
        for s in G.elements:
            row = act[s]
            if set(row) != set(A.elements):
                raise DomainError(f"{G.label(s)} does not act bijectively")
            if any(row[A.mul[a][b]] != A.mul[row[a]][row[b]] for a in A.elements for b in A.elements):
                raise DomainError(f"{G.label(s)} does not act by a homomorphism")
        for s in G.elements:
            for t in G.elements:
                st = act[G.mul[s][t]]
                if any(st[a] != act[s][act[t][a]] for a in A.elements):
                    raise DomainError(
                        f"Action of {G.label(s)}{G.label(t)} differs from the composite action"
                    )
        return self

    @classmethod
    def from_function(
        cls, G: FiniteGroup, A: FiniteGroup, fn: Callable[[int, int], int]
    ) -> "GGroup":
        return cls(
            G=G, A=A, action=tuple(tuple(fn(s, a) for a in A.elements) for s in G.elements)
        )

    @classmethod
    def trivial(cls, G: FiniteGroup, A: FiniteGroup) -> "GGroup":
        return cls.from_function(G, A, lambda s, a: a)

    def act(self, s: int, a: int) -> int:
        return self.action[s][a]


class GSet(BaseModel):
    """A finite set {0..size-1} with an action of G: ``action[sigma][x] = sigma * x``."""

    model_config = ConfigDict(frozen=True)

    G: FiniteGroup
    size: int
    action: Table

    @model_validator(mode="after")
    def _check_action(self) -> "GSet":
        G, act = self.G, self.action
        points = set(range(self.size))
        if len(act) != G.order or any(set(row) != points or len(row) != self.size for row in act):
            raise DomainError("Every group element must permute the set")
        if any(act[G.identity][x] != x for x in points):
            raise DomainError("The identity of G must act trivially")
        for s in G.elements:
            for t in G.elements:
                st = act[G.mul[s][t]]
                if any(st[x] != act[s][act[t][x]] for x in points):
                    raise DomainError("Action fails the homomorphism law")
        return self

    def fixed_points(self) -> list[int]:
        return [x for x in range(self.size) if all(row[x] == x for row in self.action)]

    def orbits(self) -> list[list[int]]:
        seen: set[int] = set()
        orbits = []
        for x in range(self.size):
            if x not in seen:
                orbit = sorted({row[x] for row in self.action})
                seen.update(orbit)
                orbits.append(orbit)
        return orbits


class EquivariantSet(BaseModel):
    """A finite set carrying an action of B = parent.A and a compatible action of G.

    Compatibility: sigma(b * x) = sigma(b) * sigma(x).
    """

    model_config = ConfigDict(frozen=True)

    parent: GGroup
    b_action: Table
    g_action: GSet

    @model_validator(mode="after")
    def _check_compatible(self) -> "EquivariantSet":
        B, G, size = self.parent.A, self.parent.G, self.g_action.size
        b_act, g_act = self.b_action, self.g_action.action
        if len(b_act) != B.order or any(len(row) != size for row in b_act):
            raise DomainError("B-action table must have shape |B| x |X|")
        if any(b_act[B.mul[b][c]][x] != b_act[b][b_act[c][x]] for b in B.elements for c in B.elements for x in range(size)):
            raise DomainError("B does not act on the set")
        for s in G.elements:
            for b in B.elements:
                sb = b_act[self.parent.act(s, b)]
                if any(g_act[s][b_act[b][x]] != sb[g_act[s][x]] for x in range(size)):
                    raise DomainError("The actions of B and G are not compatible")
        return self


class Cocycle(BaseModel):
    """A 1-cocycle f: G -> A with f(st) = f(s) * s(f(t)); ``values[sigma] = f(sigma)``."""

    model_config = ConfigDict(frozen=True)

    parent: GGroup
    values: tuple[int, ...]

    @model_validator(mode="after")
    def _check_cocycle(self) -> "Cocycle":
        if len(self.values) != self.parent.G.order:
            raise DomainError("A cocycle needs one value per element of G")
        if not _cocycle_law_holds(self.parent, self.values):
            raise DomainError(f"{self.values} violates the cocycle law")
        return self

    def __call__(self, s: int) -> int:
        return self.values[s]


class CohClass(BaseModel):
    """A class in H^1(G, A), held by a representative cocycle; compare with ``cohomologous``."""

    model_config = ConfigDict(frozen=True)

    representative: Cocycle

    def is_principal(self) -> bool:
        return is_principal(self.representative)


class ShortExactSequence(BaseModel):
    """1 -> A -> B -> C -> 1 of G-groups, A given by its members inside B and v: B -> C by table."""

    model_config = ConfigDict(frozen=True)

    B: GGroup
    A_members: tuple[int, ...]
    C: GGroup
    v: tuple[int, ...]
    name: str = ""

    @classmethod
    def from_normal_subgroup(cls, B: GGroup, members: Iterable[int], name: str = "") -> "ShortExactSequence":
        """A -> B -> B/A, with the induced action of G on the cosets."""
        members = tuple(sorted(set(members)))
        quotient, projection = B.A.quotient(members)
        reps = sorted(set(range(B.A.order)), key=lambda b: (projection[b], b))
        lift = {}
        for b in reps:
            lift.setdefault(projection[b], b)
        C = GGroup.from_function(
            B.G, quotient, lambda s, c: projection[B.act(s, lift[c])]
        )
        return cls(B=B, A_members=members, C=C, v=projection, name=name)

    def verify_exact(self) -> None:
        """Raises DomainError unless the sequence is a G-equivariant short exact sequence."""
        B, C, v = self.B, self.C, self.v
        if B.G != C.G:
            raise DomainError("B and C carry actions of different groups")
        members = set(self.A_members)
        if not B.A.is_normal(members):
            raise DomainError("A is not a normal subgroup of B")
        if any(B.act(s, a) not in members for s in B.G.elements for a in members):
            raise DomainError("A is not stable under G")
        if len(v) != B.A.order or set(v) != set(C.A.elements):
            raise DomainError("v is not a surjection B -> C")
        if any(v[B.A.mul[a][b]] != C.A.mul[v[a]][v[b]] for a in B.A.elements for b in B.A.elements):
            raise DomainError("v is not a homomorphism")
        if any(v[B.act(s, b)] != C.act(s, v[b]) for s in B.G.elements for b in B.A.elements):
            raise DomainError("v is not G-equivariant")
        if {b for b in B.A.elements if v[b] == C.A.identity} != members:
            raise DomainError("The kernel of v differs from A")


class SixTermReport(BaseModel):
    name: str = ""
    a_fixed: int
    b_fixed: int
    c_fixed: int
    h1_a: int
    h1_b: int
    h1_c: int
    delta_image: int
    checks: dict[str, bool]
    passed: bool


class TwistedFiberReport(BaseModel):
    name: str = ""
    fiber_size: int
    twisted_h1_a: int
    image_size: int
    checks: dict[str, bool]
    passed: bool


class FiberBoundReport(BaseModel):
    name: str = ""
    h1_b: int
    bound: int
    fibers: list[tuple[int, int]]
    holds: bool


def _cocycle_law_holds(M: GGroup, values: Sequence[int]) -> bool:
    G, A = M.G, M.A
    if values[G.identity] != A.identity:
        return False
    return all(
        values[G.mul[s][t]] == A.mul[values[s]][M.action[s][values[t]]]
        for s in G.elements
        for t in G.elements
    )


def h0(M: GGroup) -> list[int]:
    """A^G, the elements fixed by every sigma."""
    return [a for a in M.A.elements if all(row[a] == a for row in M.action)]


def coboundary(M: GGroup, b: int) -> Cocycle:
    """The principal cocycle sigma -> b^-1 sigma(b)."""
    A = M.A
    return Cocycle(parent=M, values=tuple(A.mul[A.inv[b]][M.act(s, b)] for s in M.G.elements))


def trivial_cocycle(M: GGroup) -> Cocycle:
    return Cocycle(parent=M, values=(M.A.identity,) * M.G.order)


def _extend_from_generators(M: GGroup, gens: list[int], images: Sequence[int]) -> tuple[int, ...] | None:
    G, A = M.G, M.A
    values = {G.identity: A.identity}
    queue = deque([G.identity])
    while queue:
        g = queue.popleft()
        for s, f_s in zip(gens, images):
            gs = G.mul[g][s]
            value = A.mul[values[g]][M.action[g][f_s]]
            if gs not in values:
                values[gs] = value
                queue.append(gs)
            elif values[gs] != value:
                return None
    return tuple(values[g] for g in G.elements)


def cocycles(M: GGroup) -> list[Cocycle]:
    """Z^1(G, A), enumerated through the values on a fixed generating set of G."""
    gens = M.G.generators()
    check_capacity("Cocycle candidates", M.A.order ** len(gens))
    found = []
    for images in product(M.A.elements, repeat=len(gens)):
        values = _extend_from_generators(M, gens, images)
        if values is not None and _cocycle_law_holds(M, values):
            found.append(Cocycle(parent=M, values=values))
    logger.debug("Found %d cocycles from %d generators", len(found), len(gens))
    return found


def _conjugate(M: GGroup, values: Sequence[int], c: int) -> tuple[int, ...]:
    """sigma -> c^-1 f(sigma) sigma(c)."""
    A = M.A
    c_inv = A.inv[c]
    return tuple(A.mul[A.mul[c_inv][values[s]]][M.action[s][c]] for s in M.G.elements)


def cohomologous(f: Cocycle, g: Cocycle) -> int | None:
    """A witness c in A with g(sigma) = c^-1 f(sigma) sigma(c), or None."""
    if f.parent != g.parent:
        raise DomainError("Cocycles belong to different G-groups")
    return next((c for c in f.parent.A.elements if _conjugate(f.parent, f.values, c) == g.values), None)


def is_principal(f: Cocycle) -> bool:
    return cohomologous(trivial_cocycle(f.parent), f) is not None


class _H1Table:
    """H^1 classes with a lookup from every cocycle in a class to its class index."""

    def __init__(self, M: GGroup):
        self.M = M
        self.classes: list[CohClass] = []
        self.index: dict[tuple[int, ...], int] = {}
        trivial = trivial_cocycle(M)
        for f in [trivial, *cocycles(M)]:
            if f.values in self.index:
                continue
            k = len(self.classes)
            for c in M.A.elements:
                self.index[_conjugate(M, f.values, c)] = k
            self.classes.append(CohClass(representative=f))

    def __len__(self) -> int:
        return len(self.classes)

    def class_of(self, values: Sequence[int]) -> int:
        return self.index[tuple(values)]


def h1_finite(M: GGroup) -> list[CohClass]:
    """H^1(G, A) as a list of class representatives, the principal class first."""
    table = _H1Table(M)
    logger.info("|H^1| = %d for |G| = %d, |A| = %d", len(table), M.G.order, M.A.order)
    return table.classes


def restrict(M: GGroup, members: Iterable[int]) -> tuple[GGroup, tuple[int, ...]]:
    """The G-stable subgroup ``members`` as a G-group, and its positions inside M.A."""
    members = tuple(sorted(set(members)))
    position = {a: i for i, a in enumerate(members)}
    A = M.A
    try:
        sub = FiniteGroup.from_table(
            [[position[A.mul[a][b]] for b in members] for a in members],
            [A.label(a) for a in members],
        )
        action = tuple(tuple(position[M.act(s, a)] for a in members) for s in M.G.elements)
    except KeyError as e:
        raise DomainError(f"{list(members)} is not a G-stable subgroup") from e
    return GGroup(G=M.G, A=sub, action=action), members


def twist_subgroup(M: GGroup, f: Cocycle, members: Iterable[int]) -> GGroup:
    """_f A for a normal G-stable A of B = M.A: sigma * a = f(sigma) sigma(a) f(sigma)^-1."""
    if f.parent != M:
        raise DomainError("The cocycle does not belong to this G-group")
    B = M.A
    members = tuple(sorted(set(members)))
    position = {a: i for i, a in enumerate(members)}
    restricted, _ = restrict(M, members)

    def twisted(s: int, a: int) -> int:
        b = B.mul[B.mul[f.values[s]][M.act(s, members[a])]][B.inv[f.values[s]]]
        if b not in position:
            raise DomainError("A is not normal in B")
        return position[b]

    try:
        return GGroup.from_function(M.G, restricted.A, twisted)
    except ValidationError as e:
        raise DomainError(f"Twisting by {f.values} does not give a G-group") from e


def twist(M: GGroup, f: Cocycle, X: EquivariantSet | None = None) -> GGroup | GSet:
    """The twisted action sigma * s = f(sigma) sigma(s).

    On an equivariant set X this gives a new G-set; without X, B acts on itself
    by inner automorphisms and the result is the twisted G-group _f B.
    """
    if X is None:
        return twist_subgroup(M, f, M.A.elements)
    if X.parent != M or f.parent != M:
        raise DomainError("The cocycle and the set belong to different G-groups")
    g_act, b_act = X.g_action.action, X.b_action
    table = tuple(
        tuple(b_act[f.values[s]][g_act[s][x]] for x in range(X.g_action.size))
        for s in M.G.elements
    )
    try:
        return GSet(G=M.G, size=X.g_action.size, action=table)
    except ValidationError as e:
        raise DomainError(f"Twisting by {f.values} does not give a G-action") from e


def six_term_check(seq: ShortExactSequence) -> SixTermReport:
    """Brute-force verification of the exact sequence of pointed sets

    1 -> A^G -> B^G -> C^G -> H^1(G,A) -> H^1(G,B) -> H^1(G,C).

    Checked: exactness of the H^0 row; that delta(c) = [sigma -> b^-1 sigma(b)]
    is independent of the lift b and has kernel v(B^G); that ker u^1 is the
    image of delta; that the fibers of u^1 are the C^G-orbits under
    (c . alpha)(sigma) = b^-1 alpha(sigma) sigma(b); and that ker v^1 = im u^1.
    """
    seq.verify_exact()
    B, C, v = seq.B, seq.C, seq.v
    M_A, members = restrict(B, seq.A_members)
    G, BA = B.G, B.A
    position = {b: i for i, b in enumerate(members)}
    t_a, t_b, t_c = _H1Table(M_A), _H1Table(B), _H1Table(C)
    a_fixed, b_fixed, c_fixed = h0(M_A), h0(B), h0(C)

    lifts = {c: [b for b in BA.elements if v[b] == c] for c in c_fixed}

    def shifted(values: Sequence[int], b: int) -> tuple[int, ...]:
        return tuple(
            position[BA.mul[BA.mul[BA.inv[b]][members[values[s]]]][B.act(s, b)]]
            for s in G.elements
        )

    trivial = (M_A.A.identity,) * G.order
    delta_classes = {c: {t_a.class_of(shifted(trivial, b)) for b in lifts[c]} for c in c_fixed}
    delta = {c: min(k) for c, k in delta_classes.items()}
    u1 = [
        t_b.class_of(tuple(members[x] for x in cls.representative.values)) for cls in t_a.classes
    ]
    v1 = [t_c.class_of(tuple(v[x] for x in cls.representative.values)) for cls in t_b.classes]
    checks = {
        "h0_exact": {b for b in b_fixed if v[b] == C.A.identity} == {members[a] for a in a_fixed},
        "v0_lands_in_fixed": {v[b] for b in b_fixed} <= set(c_fixed),
        "delta_well_defined": all(len(k) == 1 for k in delta_classes.values()),
        "delta_kernel": {c for c in c_fixed if delta[c] == 0} == {v[b] for b in b_fixed},
        "u1_kernel": {i for i, j in enumerate(u1) if j == 0} == set(delta.values()),
        "u1_fibers_are_orbits": all(
            {t_a.class_of(shifted(cls.representative.values, lifts[c][0])) for c in c_fixed}
            == {j for j in range(len(u1)) if u1[j] == u1[i]}
            for i, cls in enumerate(t_a.classes)
        ),
        "v1_kernel": {i for i, j in enumerate(v1) if j == 0} == set(u1),
    }
    report = SixTermReport(
        name=seq.name,
        a_fixed=len(a_fixed),
        b_fixed=len(b_fixed),
        c_fixed=len(c_fixed),
        h1_a=len(t_a),
        h1_b=len(t_b),
        h1_c=len(t_c),
        delta_image=len(set(delta.values())),
        checks=checks,
        passed=all(checks.values()),
    )
    if not report.passed:
        logger.warning("Six-term check failed for %s: %s", seq.name or "sequence", checks)
    return report


def _shift_basepoint(B: FiniteGroup, g: Sequence[int], f: Sequence[int]) -> tuple[int, ...]:
    """[g] -> [g . f], the bijection H^1(G, _f B) -> H^1(G, B)."""
    return tuple(B.mul[x][y] for x, y in zip(g, f))


def twisted_fiber_check(seq: ShortExactSequence, f: Cocycle) -> TwistedFiberReport:
    """Checks that the fiber of v^1 over v^1([f]) is the image of H^1(G, _f A)
    under u^1 followed by the basepoint shift H^1(G, _f B) -> H^1(G, B)."""
    seq.verify_exact()
    if f.parent != seq.B:
        raise DomainError("The cocycle must take values in B")
    B, v = seq.B, seq.v
    members = tuple(sorted(seq.A_members))
    t_b, t_c = _H1Table(B), _H1Table(seq.C)
    t_fa = _H1Table(twist_subgroup(B, f, members))
    t_fb = _H1Table(twist(B, f))

    def v1(values: Sequence[int]) -> int:
        return t_c.class_of(tuple(v[x] for x in values))

    target = v1(f.values)
    fiber = {i for i, cls in enumerate(t_b.classes) if v1(cls.representative.values) == target}
    image = {
        t_b.class_of(_shift_basepoint(B.A, [members[x] for x in cls.representative.values], f.values))
        for cls in t_fa.classes
    }
    shifted = [
        t_b.class_of(_shift_basepoint(B.A, cls.representative.values, f.values))
        for cls in t_fb.classes
    ]
    checks = {
        "basepoint_shift_bijective": sorted(shifted) == list(range(len(t_b))),
        "fiber_is_shifted_image": image == fiber,
    }
    return TwistedFiberReport(
        name=seq.name,
        fiber_size=len(fiber),
        twisted_h1_a=len(t_fa),
        image_size=len(image),
        checks=checks,
        passed=all(checks.values()),
    )


def fiber_bound_check(seq: ShortExactSequence) -> FiberBoundReport:
    """|H^1(G,B)| <= sum over the classes [f] in the image of v^1 of |H^1(G, _f A)|."""
    seq.verify_exact()
    B, v = seq.B, seq.v
    t_b, t_c = _H1Table(B), _H1Table(seq.C)
    groups: dict[int, list[CohClass]] = {}
    for cls in t_b.classes:
        groups.setdefault(t_c.class_of(tuple(v[x] for x in cls.representative.values)), []).append(cls)
    fibers = []
    for _, fiber in sorted(groups.items()):
        twisted = twist_subgroup(B, fiber[0].representative, seq.A_members)
        fibers.append((len(fiber), len(_H1Table(twisted))))
    bound = sum(t for _, t in fibers)
    return FiberBoundReport(
        name=seq.name,
        h1_b=len(t_b),
        bound=bound,
        fibers=fibers,
        holds=len(t_b) <= bound and all(s <= t for s, t in fibers),
    )


def n_torsion_check(M: GGroup, cls: CohClass) -> bool:
    """Verifies that n[f] is principal for n = |G|, with witness b = prod_tau f(tau)^-1:
    f(sigma)^n = b^-1 sigma(b) for every sigma."""
    A, G = M.A, M.G
    if not A.is_abelian():
        raise DomainError("The n-torsion check needs an abelian A")
    f = cls.representative
    if f.parent != M:
        raise DomainError("The class does not belong to this G-group")
    b = A.identity
    for t in G.elements:
        b = A.mul[b][A.inv[f.values[t]]]
    return all(
        A.power(f.values[s], G.order) == A.mul[A.inv[b]][M.act(s, b)] for s in G.elements
    )


class GModuleZr(BaseModel):
    """A = Z^r with G acting through integer matrices ``rho[sigma]`` of determinant +-1."""

    model_config = ConfigDict(frozen=True)

    G: FiniteGroup
    rank: int
    rho: tuple[tuple[tuple[int, ...], ...], ...]

    @model_validator(mode="after")
    def _check_representation(self) -> "GModuleZr":
        r = self.rank
        if r < 1:
            raise DomainError(f"Rank must be positive, got {r}")
        if len(self.rho) != self.G.order:
            raise DomainError("rho needs one matrix per element of G")
        if any(len(m) != r or any(len(row) != r for row in m) for m in self.rho):
            raise DomainError(f"Every rho(sigma) must be {r} x {r}")
        if any(abs(self.matrix(s).det()) != 1 for s in self.G.elements):
            raise DomainError("Every rho(sigma) must be invertible over Z")
        if self.matrix(self.G.identity) != eye(r):
            raise DomainError("rho(1) must be the identity")
        for s in self.G.elements:
            for t in self.G.elements:
                if self.matrix(self.G.mul[s][t]) != self.matrix(s) * self.matrix(t):
                    raise DomainError("rho is not a homomorphism")
        return self

    @classmethod
    def cyclic(cls, m: int, generator: Sequence[Sequence[int]]) -> "GModuleZr":
        """Z/m acting through the powers of ``generator``."""
        g = Matrix(generator)
        powers, current = [], eye(g.rows)
        for _ in range(m):
            powers.append(tuple(tuple(int(x) for x in current.row(i)) for i in range(g.rows)))
            current = current * g
        return cls(G=FiniteGroup.cyclic(m), rank=g.rows, rho=tuple(powers))

    def matrix(self, s: int) -> Matrix:
        return Matrix(self.rho[s])

    def reduce_mod(self, m: int) -> GGroup:
        """The G-group (Z/m)^r; vector (x_1..x_r) has index sum x_i m^(r-i)."""
        r = self.rank
        check_capacity("Module reduction", m**r, cf.MAX_TABLE_ORDER)
        vectors = list(product(range(m), repeat=r))
        index = {x: i for i, x in enumerate(vectors)}
        A = FiniteGroup.from_table(
            [[index[tuple((a + b) % m for a, b in zip(x, y))] for y in vectors] for x in vectors],
            [",".join(map(str, x)) for x in vectors],
        )

        def act(s: int, i: int) -> int:
            x = vectors[i]
            return index[
                tuple(sum(row[j] * x[j] for j in range(r)) % m for row in self.rho[s])
            ]

        return GGroup.from_function(self.G, A, act)


def _coboundary_matrices(M: GModuleZr) -> tuple[Matrix, Matrix]:
    """d0: a -> (sigma -> rho(sigma) a - a) and d1: f -> ((s,t) -> f(s) + rho(s) f(t) - f(st))."""
    G, r = M.G, M.rank
    m = G.order
    check_capacity("Coboundary matrices", r * m * m * r * m)
    d0 = Matrix.vstack(*(M.matrix(s) - eye(r) for s in G.elements))
    d1 = zeros(r * m * m, r * m)
    for s in G.elements:
        rho_s = M.matrix(s)
        for t in G.elements:
            row = (s * m + t) * r
            st = G.mul[s][t]
            for i in range(r):
                d1[row + i, s * r + i] += 1
                d1[row + i, st * r + i] -= 1
                for j in range(r):
                    d1[row + i, t * r + j] += rho_s[i, j]
    return d0, d1


def _snf_diagonal(D: Matrix) -> list[int]:
    snf = smith_normal_form(D, domain=ZZ)
    return [abs(int(snf[i, i])) for i in range(min(snf.shape)) if snf[i, i] != 0]


def h1_zr(M: GModuleZr) -> list[int]:
    """Elementary divisors of H^1(G, Z^r) = Z^1 / B^1.

    Z^1 = ker d1 is saturated and has the rank of B^1 = im d0 (H^1 is
    torsion for finite G), so H^1 is the torsion of coker d0: the Smith
    diagonal entries of d0 that exceed 1.
    """
    d0, d1 = _coboundary_matrices(M)
    if d0.rank() != d1.cols - d1.rank():
        raise ArithmeticError("Cocycles and coboundaries have different ranks")
    return [d for d in _snf_diagonal(d0) if d > 1]


def _kernel_size_mod(D: Matrix, m: int) -> int:
    diagonal = _snf_diagonal(D)
    return prod(gcd(d, m) for d in diagonal) * m ** (D.cols - len(diagonal))


def h1_zmod_order(M: GModuleZr, m: int) -> int:
    """|H^1(G, (Z/m)^r)| = |ker d1 mod m| / |im d0 mod m|, through Smith normal forms."""
    if m < 2:
        raise DomainError(f"Modulus must be at least 2, got {m}")
    d0, d1 = _coboundary_matrices(M)
    image_d0 = m**M.rank // _kernel_size_mod(d0, m)
    return _kernel_size_mod(d1, m) // image_d0


def _negation(G: FiniteGroup, m: int) -> Callable[[int, int], int]:
    return lambda s, a: (-a) % m if s != G.identity else a


def toy_sequences() -> dict[str, ShortExactSequence]:
    """Built-in short exact sequences of G-groups of order at most 16, G = Z/2 or Z/3."""
    z2 = FiniteGroup.cyclic(2)
    z3 = FiniteGroup.cyclic(3)
    z4 = FiniteGroup.cyclic(4)
    z6 = FiniteGroup.cyclic(6)
    d4 = FiniteGroup.dihedral(4)
    s3 = FiniteGroup.dihedral(3)
    reflection = 3

    def conjugation(s: int, b: int) -> int:
        if s == z2.identity:
            return b
        return s3.mul[s3.mul[reflection][b]][s3.inv[reflection]]

    z4_neg = GGroup.from_function(z2, z4, _negation(z2, 4))
    z6_neg = GGroup.from_function(z2, z6, _negation(z2, 6))
    sequences = [
        ShortExactSequence.from_normal_subgroup(GGroup.trivial(z2, z4), [0, 2], "z4-over-z2"),
        ShortExactSequence.from_normal_subgroup(z4_neg, [0, 2], "z4-negation"),
        ShortExactSequence.from_normal_subgroup(
            GGroup.from_function(z2, z3, _negation(z2, 3)), z3.elements, "degenerate"
        ),
        ShortExactSequence.from_normal_subgroup(GGroup.trivial(z2, d4), [0, 2], "d4-center"),
        ShortExactSequence.from_normal_subgroup(z6_neg, [0, 2, 4], "z6-negation"),
        ShortExactSequence.from_normal_subgroup(z6_neg, [0, 3], "mu2-z6"),
        ShortExactSequence.from_normal_subgroup(
            GGroup.from_function(z2, s3, conjugation), [0, 1, 2], "s3-alternating"
        ),
        ShortExactSequence.from_normal_subgroup(
            GGroup.trivial(z3, FiniteGroup.cyclic(9)), [0, 3, 6], "z9-over-z3"
        ),
    ]
    return {seq.name: seq for seq in sequences}


TOY_SEQUENCE_NAMES = (
    "z4-over-z2",
    "z4-negation",
    "degenerate",
    "d4-center",
    "z6-negation",
    "mu2-z6",
    "s3-alternating",
    "z9-over-z3",
)
