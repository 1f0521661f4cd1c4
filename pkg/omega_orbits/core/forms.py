"""Binary n-ic forms over Z_S and their dictionary with point configurations.

A form of degree n is stored by its coefficients ``(a_n, ..., a_0)`` where
``a_i`` multiplies ``x^i * y^(n-i)``; they are integers unless the form is the
image of a matrix with S-denominators. Polynomial arithmetic goes through
sympy's sparse rings; factorization mod p through ``sympy.polys.galoistools``.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from itertools import chain, combinations, product
from math import gcd, isqrt, lcm, prod

from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from sympy import Poly, Symbol
from sympy.core.intfunc import igcdex
from sympy.polys.domains import QQ, ZZ
from sympy.polys.galoistools import gf_factor, gf_from_int_poly
from sympy.polys.rings import ring

from omega_orbits import config as cf
from omega_orbits.core.errors import DomainError, NotSplitError
from omega_orbits.core.projective import (
    GL2ZS,
    PointConfig,
    ProjPoint,
    cross_det,
    normalize,
    omega_member,
)
from omega_orbits.core.sarith import (
    SPrimeSet,
    factorize,
    is_s_unit,
    require_prime,
    s_part_split,
    s_unit_exponents,
    valuation,
)
from omega_orbits.core.utils import UnionFind, check_capacity

logger = logging.getLogger(__name__)

_ZXY, _ZX, _ZY = ring("x,y", ZZ)
_QXY, _QX, _QY = ring("x,y", QQ)
_T = Symbol("t")


def _coefficient(a) -> int | Fraction:
    if isinstance(a, Fraction):
        return a.numerator if a.denominator == 1 else a
    return int(a)


class BinaryForm(BaseModel):
    """f(x, y) = sum_i a_i x^i y^(n-i), coefficients listed from a_n down to a_0.

    Coefficients are integers except for images under matrices with
    S-denominators, whose coefficients are S-integral fractions.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    coeffs: tuple[int | Fraction, ...]

    @field_validator("coeffs", mode="before")
    @classmethod
    def _normalize_coeffs(cls, coeffs) -> tuple[int | Fraction, ...]:
        return tuple(_coefficient(a) for a in coeffs)

    @model_validator(mode="after")
    def _check(self) -> "BinaryForm":
        if self.n < 1:
            raise DomainError(f"Degree must be at least 1, got {self.n}")
        if len(self.coeffs) != self.n + 1:
            raise DomainError(
                f"A form of degree {self.n} needs {self.n + 1} coefficients, got {len(self.coeffs)}"
            )
        if not any(self.coeffs):
            raise DomainError("The zero form is not allowed")
        return self

    @classmethod
    def of(cls, coeffs) -> "BinaryForm":
        coeffs = tuple(_coefficient(a) for a in coeffs)
        return cls(n=len(coeffs) - 1, coeffs=coeffs)

    @classmethod
    def parse(cls, text: str) -> "BinaryForm":
        """Parses '[a_n, ..., a_0]'."""
        body = text.strip().removeprefix("[").removesuffix("]")
        try:
            return cls.of(int(t) for t in body.split(",") if t.strip())
        except ValueError as e:
            if isinstance(e, DomainError):
                raise
            raise DomainError(f"Malformed form {text!r}, expected '[a_n, ..., a_0]'") from e

    def coefficient(self, i: int) -> int:
        """a_i, the coefficient of x^i y^(n-i)."""
        return self.coeffs[self.n - i]

    def evaluate(self, x: int | Fraction, y: int | Fraction) -> int | Fraction:
        return sum(a * x ** (self.n - j) * y**j for j, a in enumerate(self.coeffs))

    def content(self) -> int | Fraction:
        return content(self)

    def height(self) -> int:
        fractions = map(Fraction, self.coeffs)
        return max(max(abs(a.numerator), a.denominator) for a in fractions)

    def is_integral(self) -> bool:
        return all(isinstance(a, int) for a in self.coeffs)

    def denominator(self) -> int:
        """The least positive integer mu with mu * f integral."""
        return lcm(*(Fraction(a).denominator for a in self.coeffs))

    def integral(self) -> "BinaryForm":
        mu = self.denominator()
        return self if mu == 1 else BinaryForm.of(a * mu for a in self.coeffs)

    def to_ring(self):
        """The integral multiple ``self.integral()`` as an element of Z[x, y]."""
        g = self.integral()
        return sum(
            (a * _ZX ** (g.n - j) * _ZY**j for j, a in enumerate(g.coeffs) if a),
            _ZXY.zero,
        )

    def __str__(self) -> str:
        terms = []
        for j, a in enumerate(self.coeffs):
            if a == 0:
                continue
            i = self.n - j
            monomial = "".join(
                v if e == 1 else f"{v}^{e}" for v, e in (("x", i), ("y", j)) if e
            )
            mag = abs(a)
            if isinstance(mag, Fraction):
                body = f"({mag}){monomial}"
            else:
                body = monomial if mag == 1 and monomial else f"{mag}{monomial}"
            terms.append(("-" if a < 0 else "+", body))
        sign, body = terms[0]
        text = ("-" if sign == "-" else "") + body
        for sign, body in terms[1:]:
            text += f" {sign} {body}"
        return text


class FormClass(BaseModel):
    """A (Q,S)-scaling class, held by its canonical representative."""

    model_config = ConfigDict(frozen=True)

    representative: BinaryForm
    S: SPrimeSet = SPrimeSet()

    @classmethod
    def of(cls, f: BinaryForm, S: SPrimeSet) -> "FormClass":
        return cls(representative=canonical_form(f, S), S=S)


class FactorModP(BaseModel):
    """An irreducible form over F_p, scaled so its first nonzero coefficient is 1."""

    model_config = ConfigDict(frozen=True)

    coeffs: tuple[int, ...]
    mult: int

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


class FactorPatternModP(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: int
    factors: tuple[FactorModP, ...]

    @field_validator("factors")
    @classmethod
    def _distinct(cls, factors: tuple[FactorModP, ...]) -> tuple[FactorModP, ...]:
        if len({f.coeffs for f in factors}) != len(factors):
            raise DomainError("Factors of a pattern must be pairwise distinct")
        return factors

    @property
    def degree(self) -> int:
        return sum(f.mult * f.degree for f in self.factors)

    def is_squarefree(self) -> bool:
        return all(f.mult == 1 for f in self.factors)


class EquivalenceWitness(BaseModel):
    """gamma and lambda with act(gamma, f) == lam * g."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gamma: GL2ZS
    lam: Fraction


def content(f: BinaryForm) -> int | Fraction:
    """gcd of the coefficients; gcd(mu f) / mu for fractional coefficients."""
    if f.is_integral():
        return gcd(*f.coeffs)
    return Fraction(gcd(*f.integral().coeffs), f.denominator())


def _canonical_coeffs(coeffs: tuple[int, ...], S: SPrimeSet) -> tuple[int, ...]:
    s_part, _ = s_part_split(gcd(*coeffs), S)
    coeffs = tuple(a // s_part for a in coeffs)
    if next(a for a in coeffs if a) < 0:
        coeffs = tuple(-a for a in coeffs)
    return coeffs


def canonical_form(f: BinaryForm, S: SPrimeSet) -> BinaryForm:
    """Divides out the S-part of the content and makes the first nonzero coefficient positive."""
    g = f if f.is_integral() else clear_s_denominators(f.coeffs, S)
    return BinaryForm(n=f.n, coeffs=_canonical_coeffs(g.coeffs, S))


def clear_s_denominators(coeffs, S: SPrimeSet) -> BinaryForm:
    """Scales rational coefficients by the least S-supported integer making them integral."""
    coeffs = [Fraction(c) for c in coeffs]
    scale = lcm(*(c.denominator for c in coeffs))
    if not is_s_unit(scale, S):
        raise DomainError(f"Coefficients {coeffs} are not S-integers for S = {{{S}}}")
    return BinaryForm.of(int(c * scale) for c in coeffs)


def _to_fraction(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


def _substitute(entries, coeffs: tuple[int | Fraction, ...]) -> tuple[Fraction, ...]:
    m11, m12, m21, m22 = (QQ(e.numerator, e.denominator) for e in map(Fraction, entries))
    n = len(coeffs) - 1
    first = m11 * _QX + m21 * _QY
    second = m12 * _QX + m22 * _QY
    first_powers = [_QXY.one]
    second_powers = [_QXY.one]
    for _ in range(n):
        first_powers.append(first_powers[-1] * first)
        second_powers.append(second_powers[-1] * second)
    image = _QXY.zero
    for j, a in enumerate(map(Fraction, coeffs)):
        if a:
            image += QQ(a.numerator, a.denominator) * first_powers[n - j] * second_powers[j]
    return tuple(_to_fraction(image.get((n - j, j), QQ.zero)) for j in range(n + 1))


def substitute(gamma: GL2ZS, f: BinaryForm) -> tuple[Fraction, ...]:
    """The exact coefficients of gamma . f(x, y) = f((x, y) gamma), in Z_S."""
    return _substitute(gamma.entries(), f.coeffs)


def act(gamma: GL2ZS, f: BinaryForm) -> BinaryForm:
    """gamma . f(x, y) = f((x, y) gamma), the exact substitution.

    The image has coefficients in Z_S and is integral when gamma and f are;
    ``clear_s_denominators`` gives an integral member of its scaling class.
    The action is a left action: act(g1, act(g2, f)) == act(g1 @ g2, f).
    """
    return BinaryForm.of(substitute(gamma, f))


def _disc_by_resultant(coeffs: tuple[int, ...]) -> int:
    n = len(coeffs) - 1
    shift = next(t for t in range(n + 1) if sum(a * t**j for j, a in enumerate(coeffs)))
    if shift:
        coeffs = tuple(int(c) for c in _substitute((1, shift, 0, 1), coeffs))
    F = Poly(list(coeffs), _T)
    res = int(F.resultant(F.diff(_T)))
    lead = coeffs[0]
    if res % lead:
        raise ArithmeticError(f"Resultant {res} not divisible by leading coefficient {lead}")
    return (-1) ** (n * (n - 1) // 2) * (res // lead)


def _disc(coeffs: tuple[int, ...]) -> int:
    n = len(coeffs) - 1
    if n == 2:
        a, b, c = coeffs
        return b * b - 4 * a * c
    if n == 3:
        a, b, c, d = coeffs
        return (
            18 * a * b * c * d
            - 4 * b**3 * d
            + b * b * c * c
            - 4 * a * c**3
            - 27 * a * a * d * d
        )
    return _disc_by_resultant(coeffs)


def discriminant(f: BinaryForm) -> int:
    """Delta(f) = a^(2n-2) prod_{i<j} (alpha_i beta_j - alpha_j beta_i)^2.

    Degrees 2 and 3 use the classical closed formulas; higher degrees use the
    subresultant resultant of f(x, 1) with its derivative after a unimodular
    shear x -> x, y -> t x + y that makes the x^n coefficient nonzero (the
    discriminant is SL_2-invariant, so the shear does not change it).
    Fractional forms use Delta(mu f) = mu^(2n-2) Delta(f).
    """
    if f.n < 2:
        raise DomainError(f"The discriminant needs degree >= 2, got {f.n}")
    if f.is_integral():
        return _disc(f.coeffs)
    return Fraction(_disc(f.integral().coeffs), f.denominator() ** (2 * f.n - 2))


def closed_points(f: BinaryForm) -> list[tuple[BinaryForm, int]]:
    """Irreducible factors of f over Q with multiplicities: the closed points of its root divisor."""
    _, factors = f.to_ring().factor_list()
    points = []
    for h, k in factors:
        if h.is_ground:
            continue
        deg = sum(h.LM)
        coeffs = tuple(int(h.get((deg - j, j), 0)) for j in range(deg + 1))
        points.append((BinaryForm(n=deg, coeffs=_canonical_coeffs(coeffs, SPrimeSet())), k))
    return sorted(points, key=lambda item: (item[0].n, item[0].coeffs))


def roots_config(f: BinaryForm) -> PointConfig:
    """The map R: the n distinct rational roots [alpha_i : beta_i] of a split squarefree form."""
    points = closed_points(f)
    if any(k > 1 for _, k in points):
        raise DomainError(f"{f} has a repeated root")
    degrees = [h.n for h, _ in points]
    if any(d > 1 for d in degrees):
        raise NotSplitError(degrees)
    # c1*x + c0*y vanishes at [-c0 : c1]
    return PointConfig.of(normalize(-h.coeffs[1], h.coeffs[0]) for h, _ in points)


def config_to_form(A: PointConfig) -> BinaryForm:
    """The map phi: prod (b_i x - a_i y) over the coprime coordinates of A, sign-normalized."""
    image = prod((P.b * _ZX - P.a * _ZY for P in A.sorted_points()), start=_ZXY.one)
    n = A.n
    coeffs = tuple(int(image.get((n - j, j), 0)) for j in range(n + 1))
    return BinaryForm(n=n, coeffs=_canonical_coeffs(coeffs, SPrimeSet()))


def pair_form(A: PointConfig, S: SPrimeSet) -> tuple[Fraction, Fraction, Fraction]:
    """(1/(alpha beta' - alpha' beta)) (beta x - alpha y)(beta' x - alpha' y), of discriminant 1."""
    if A.n != 2:
        raise DomainError(f"pair_form needs a two-point configuration, got {A.n} points")
    if not omega_member(A, S):
        raise DomainError(f"{A} is not in Omega_2(P^1; {{{S}}})")
    P, Q = A.sorted_points()
    d = cross_det(P, Q)
    return (
        Fraction(P.b * Q.b, d),
        Fraction(-(P.b * Q.a + P.a * Q.b), d),
        Fraction(P.a * Q.a, d),
    )


def is_omega_form(f: BinaryForm, S: SPrimeSet) -> bool:
    """Membership of f in T(Q, S): nonzero S-unit discriminant and S-unit content."""
    delta = discriminant(f)
    return delta != 0 and is_s_unit(delta, S) and is_s_unit(content(f), S)


def reduce_form_mod_p(f: BinaryForm, p: int) -> FactorPatternModP:
    """r_p on the root divisor of f: the factorization of f mod p after removing its p-content.

    A drop of the x-degree mod p is the multiplicity of the point at infinity,
    recorded as the factor y.
    """
    require_prime(p)
    f = f.integral()
    scale = p ** valuation(content(f), p)
    reduced = gf_from_int_poly([ZZ(a // scale) for a in f.coeffs], p)
    affine_degree = len(reduced) - 1
    _, factors = gf_factor(reduced, p, ZZ)
    records = [FactorModP(coeffs=tuple(int(c) for c in g), mult=int(k)) for g, k in factors]
    if f.n > affine_degree:
        records.append(FactorModP(coeffs=(0, 1), mult=f.n - affine_degree))
    records.sort(key=lambda r: (r.degree, r.coeffs))
    return FactorPatternModP(p=p, factors=tuple(records))


def _height(v: Fraction) -> int:
    return max(abs(v.numerator), v.denominator)


def _s_values(S: SPrimeSet, bound: int) -> list[Fraction]:
    denominators = [d for d in range(1, bound + 1) if is_s_unit(d, S)]
    values = {Fraction(a, d) for d in denominators for a in range(-bound, bound + 1)}
    return sorted(
        (v for v in values if _height(v) <= bound),
        key=lambda v: (_height(v), abs(v), v < 0),
    )


def _matrices_by_height(values: list[Fraction], S: SPrimeSet, bound: int):
    for h in range(1, bound + 1):
        level = [v for v in values if _height(v) <= h]
        for entries in product(level, repeat=4):
            if max(map(_height, entries)) != h:
                continue
            det = entries[0] * entries[3] - entries[1] * entries[2]
            if det != 0 and is_s_unit(det, S):
                yield entries


def _scalar_ratio(image: tuple[Fraction, ...], g: BinaryForm) -> Fraction | None:
    j = next(j for j, a in enumerate(g.coeffs) if a)
    lam = Fraction(image[j], g.coeffs[j])
    if lam == 0 or any(x != lam * a for x, a in zip(image, g.coeffs)):
        return None
    return lam


def _unit_ratio_admissible(ratio: Fraction, n: int, S: SPrimeSet) -> bool:
    """Can ratio be written det^(n(n-1)) / lam^(2n-2) with det, lam S-units?"""
    if ratio <= 0 or not is_s_unit(ratio, S):
        return False
    step = gcd(n * (n - 1), 2 * n - 2)
    _, exponents = s_unit_exponents(ratio, S)
    return all(e % step == 0 for e in exponents.values())


def equivalent(
    f: BinaryForm, g: BinaryForm, S: SPrimeSet, bound: int
) -> EquivalenceWitness | None:
    """Bounded search for gamma in GL_2(Z_S), lam in Z_S^x with act(gamma, f) == lam * g.

    Matrices are enumerated by increasing height (max of |numerator| and
    denominator over the entries), after a discriminant pre-filter. ``None``
    means no witness of height <= bound exists, not that f and g are inequivalent.
    """
    if f.n != g.n:
        raise DomainError(f"Degrees differ: {f.n} and {g.n}")
    if f.n >= 2:
        df, dg = discriminant(f), discriminant(g)
        if (df == 0) != (dg == 0):
            return None
        if df and not _unit_ratio_admissible(Fraction(dg, df), f.n, S):
            logger.debug("Discriminant classes of %s and %s differ", f, g)
            return None
    values = _s_values(S, bound)
    check_capacity("Equivalence search", len(values) ** 4)
    identity = (Fraction(1), Fraction(0), Fraction(0), Fraction(1))
    searched = 0
    for entries in chain([identity], _matrices_by_height(values, S, bound)):
        searched += 1
        lam = _scalar_ratio(_substitute(entries, f.coeffs), g)
        if lam is None or not is_s_unit(lam, S) or _height(lam) > bound:
            continue
        gamma = GL2ZS.of([entries[:2], entries[2:]], S)
        logger.debug("Witness for %s ~ %s after %d matrices", f, g, searched)
        return EquivalenceWitness(gamma=gamma, lam=lam)
    return None


def _rho(a: int, b: int, c: int, D: int, r: int) -> tuple[int, int, int]:
    """One reduction step (a, b, c) -> (c, b', (b'^2 - D) / 4c), a proper equivalence."""
    m = 2 * abs(c)
    lo = r - m + 1 if abs(c) <= r else -abs(c) + 1
    b_new = lo + (-b - lo) % m
    return c, b_new, (b_new * b_new - D) // (4 * c)


def _is_reduced_indefinite(a: int, b: int, c: int, r: int) -> bool:
    return 0 < b <= r and r < b + 2 * abs(a) and 2 * abs(a) - b <= r


def _reduce_definite(a: int, b: int, c: int) -> tuple[int, int, int]:
    r = (a - b) // (2 * a)
    a, b, c = a, b + 2 * r * a, a * r * r + b * r + c
    while not (a < c or (a == c and b >= 0)):
        s = (c + b) // (2 * c)
        a, b, c = c, -b + 2 * s * c, c * s * s - b * s + a
    return a, b, c


def _reduce_square(a: int, b: int, c: int, k: int) -> tuple[int, int, int]:
    if a == 0:
        roots = [normalize(1, 0), normalize(-c, b)]
    else:
        roots = [normalize(-b + k, 2 * a), normalize(-b - k, 2 * a)]
    candidates = []
    for P in roots:
        v, w, _ = igcdex(P.a, P.b)
        u = -w
        if P.a * v - P.b * u != 1:
            v, u = -v, -u
        _, b1, c1 = _substitute((P.a, P.b, u, v), (a, b, c))
        b1, c1 = int(b1), int(c1)
        candidates.append((0, b1, c1 % abs(b1)))
    return min(candidates, key=lambda t: (t[1] <= 0, t))


def gauss_reduce_quadratic(f: BinaryForm) -> BinaryForm:
    """Canonical SL_2(Z)-representative of a nondegenerate quadratic form.

    - Delta < 0: the Gauss-reduced form |b| <= a <= c (b >= 0 if |b| = a or
      a = c); negative definite forms are reduced through -f.
    - Delta > 0 non-square: the lexicographically least form on the cycle of
      reduced forms.
    - Delta = k^2 > 0: the form (0, k, c) with 0 <= c < k obtained by moving
      a rational root to [1:0].
    """
    if f.n != 2:
        raise DomainError(f"Gauss reduction needs a quadratic form, got degree {f.n}")
    if not f.is_integral():
        raise DomainError(f"Gauss reduction needs integral coefficients, got {f}")
    a, b, c = f.coeffs
    D = b * b - 4 * a * c
    if D == 0:
        raise DomainError(f"{f} is degenerate")
    if D < 0:
        if a > 0:
            return BinaryForm(n=2, coeffs=_reduce_definite(a, b, c))
        return BinaryForm(n=2, coeffs=tuple(-x for x in _reduce_definite(-a, -b, -c)))
    r = isqrt(D)
    if r * r == D:
        return BinaryForm(n=2, coeffs=_reduce_square(a, b, c, r))
    form = (a, b, c)
    while not _is_reduced_indefinite(*form, r):
        form = _rho(*form, D, r)
    cycle = [form]
    current = _rho(*form, D, r)
    while current != form:
        cycle.append(current)
        current = _rho(*current, D, r)
    return BinaryForm(n=2, coeffs=min(cycle))


def count_sl2_orbits(forms: list[BinaryForm]) -> int:
    return len({gauss_reduce_quadratic(f) for f in forms})


def _scan_leading(a_n: int, n: int, S: SPrimeSet, height: int) -> set[tuple[int, ...]]:
    found = set()
    for rest in product(range(-height, height + 1), repeat=n):
        coeffs = (a_n, *rest)
        c = gcd(*coeffs)
        if c == 0 or not is_s_unit(c, S):
            continue
        delta = _disc(coeffs)
        if delta and is_s_unit(delta, S):
            found.add(_canonical_coeffs(coeffs, S))
    return found


def enumerate_omega_forms(n: int, S: SPrimeSet, height: int) -> list[BinaryForm]:
    """All forms of T(Q, S) with |coeffs| <= height, one per S-unit scaling class.

    Sorted by coefficient tuple; the scan is split by leading coefficient over
    cf.THREADS worker threads and merged in order.
    """
    if n < 2:
        raise DomainError(f"Enumeration needs degree >= 2, got {n}")
    if height <= 0:
        return []
    check_capacity("Form enumeration", (2 * height + 1) ** (n + 1))
    found: set[tuple[int, ...]] = set()
    with ThreadPoolExecutor(max_workers=cf.THREADS) as executor:
        chunks = executor.map(
            lambda a_n: _scan_leading(a_n, n, S, height), range(-height, height + 1)
        )
        for chunk in chunks:
            found.update(chunk)
    logger.info("Found %d forms of degree %d, height %d, S = {%s}", len(found), n, height, S)
    return [BinaryForm(n=n, coeffs=c) for c in sorted(found)]


def enumerate_quadratic_forms(disc: int, height: int) -> list[BinaryForm]:
    """Every quadratic (a, b, c) with |a|, |b|, |c| <= height and b^2 - 4ac = disc."""
    found = []
    for a, b in product(range(-height, height + 1), repeat=2):
        if a == 0:
            if b * b == disc:
                found.extend((0, b, c) for c in range(-height, height + 1))
            continue
        num = b * b - disc
        if num % (4 * a) == 0 and abs(num // (4 * a)) <= height:
            found.append((a, b, num // (4 * a)))
    return [BinaryForm(n=2, coeffs=c) for c in sorted(found) if any(c)]


def orbit_partition(
    forms: list[BinaryForm], S: SPrimeSet, bound: int
) -> list[list[BinaryForm]]:
    """Partition into (Q,S)-equivalence classes found within ``bound``.

    Quadratic forms are first bucketed by their Gauss-reduced representative
    (SL_2(Z)-equivalent forms are (Q,S)-equivalent with lam = 1); the bucket
    representatives are then compared pairwise with ``equivalent``.
    """
    if not forms:
        return []
    if len({f.n for f in forms}) != 1:
        raise DomainError("All forms of a partition must have the same degree")
    uf = UnionFind(range(len(forms)))
    if forms[0].n == 2:
        first_seen: dict = {}
        reps = []
        for i, f in enumerate(forms):
            if discriminant(f) == 0:
                reps.append(i)
                continue
            key = gauss_reduce_quadratic(f)
            if key in first_seen:
                uf.union(first_seen[key], i)
            else:
                first_seen[key] = i
                reps.append(i)
    else:
        reps = list(range(len(forms)))
    for i, j in combinations(reps, 2):
        if uf.find(i) != uf.find(j) and equivalent(forms[i], forms[j], S, bound) is not None:
            uf.union(i, j)
    return [[forms[k] for k in cls] for cls in uf.classes(range(len(forms)))]


def field_disc_quadratic(q: BinaryForm) -> int:
    """The fundamental discriminant of Q(sqrt(Delta(q))) for an irreducible quadratic q."""
    if q.n != 2:
        raise DomainError(f"Expected a quadratic form, got degree {q.n}")
    D = discriminant(q.integral())
    if D >= 0 and isqrt(D) ** 2 == D:
        raise DomainError(f"{q} is reducible over Q")
    kernel = factorize(D)
    d = kernel.sign * prod(p for p, e in kernel.factors if e % 2)
    return d if d % 4 == 1 else 4 * d


def ramified_primes(f: BinaryForm) -> set[int]:
    """Primes that may ramify in the residue fields of the closed points of f.

    Exact for quadratic points (primes of the fundamental discriminant); for
    points of degree >= 3 the primes of the factor's discriminant, which
    contain the ramified ones.
    """
    primes: set[int] = set()
    for h, _ in closed_points(f):
        if h.n == 2:
            primes.update(factorize(field_disc_quadratic(h)).primes())
        elif h.n >= 3:
            primes.update(factorize(discriminant(h)).primes())
    return primes


def unramified_outside(f: BinaryForm, S: SPrimeSet) -> bool:
    return ramified_primes(f) <= set(S.primes)
