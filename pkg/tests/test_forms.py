import random
import unittest
from fractions import Fraction
from itertools import combinations
from math import gcd, prod
from unittest.mock import patch

from sympy import primerange

from omega_orbits.core import forms
from omega_orbits.core.errors import CapacityError, DomainError, NotSplitError
from omega_orbits.core.forms import (
    BinaryForm,
    FormClass,
    act,
    canonical_form,
    clear_s_denominators,
    closed_points,
    config_to_form,
    count_sl2_orbits,
    discriminant,
    enumerate_omega_forms,
    enumerate_quadratic_forms,
    equivalent,
    field_disc_quadratic,
    gauss_reduce_quadratic,
    is_omega_form,
    orbit_partition,
    pair_form,
    ramified_primes,
    reduce_form_mod_p,
    roots_config,
    substitute,
    unramified_outside,
)
from omega_orbits.core.projective import (
    GL2ZS,
    PointConfig,
    apply_gl2,
    cross_det,
    normalize,
    omega_member,
)
from omega_orbits.core.sarith import SPrimeSet, factorize, is_s_unit

XY = BinaryForm.of([0, 1, 0])
X2_MINUS_Y2 = BinaryForm.of([1, 0, -1])
X2_PLUS_Y2 = BinaryForm.of([1, 0, 1])


def random_config(rng: random.Random, n: int, height: int) -> PointConfig:
    points = set()
    while len(points) < n:
        a, b = rng.randint(-height, height), rng.randint(0, height)
        if (a, b) != (0, 0) and gcd(a, b) == 1:
            points.add(normalize(a, b))
    return PointConfig.of(points)


def random_form(rng: random.Random, n: int, height: int) -> BinaryForm:
    while True:
        coeffs = [rng.randint(-height, height) for _ in range(n + 1)]
        if any(coeffs):
            return BinaryForm.of(coeffs)


def random_sl2(rng: random.Random, steps: int = 3) -> GL2ZS:
    gamma = GL2ZS.identity()
    for _ in range(steps):
        gamma = gamma @ GL2ZS.of([[1, rng.randint(-2, 2)], [0, 1]]) @ GL2ZS.of([[0, -1], [1, 0]])
    return gamma


class TestBinaryForm(unittest.TestCase):
    def test_parse_and_str(self):
        """Forms parse from coefficient lists and print as polynomials."""
        f = BinaryForm.parse("[1, 0, -1]")
        self.assertEqual(f, X2_MINUS_Y2)
        self.assertEqual(str(f), "x^2 - y^2")
        self.assertEqual(str(BinaryForm.of([0, 1, 1, 0])), "x^2y + xy^2")
        self.assertEqual(f.coefficient(2), 1)
        self.assertEqual(f.evaluate(3, 2), 5)

    def test_rejects_zero_form(self):
        """The zero form is not a form."""
        with self.assertRaises(ValueError):
            BinaryForm.of([0, 0, 0])

    def test_parse_malformed(self):
        """Malformed coefficient lists raise a domain error."""
        with self.assertRaises(DomainError):
            BinaryForm.parse("[1, a]")

    def test_canonical_form(self):
        """f and lam f share a canonical form for S-units lam."""
        S = SPrimeSet.of([2, 3])
        f = BinaryForm.of([5, -1, 2])
        for lam in (-1, 2, -12, 18):
            g = BinaryForm.of([lam * a for a in f.coeffs])
            self.assertEqual(canonical_form(g, S), f)
            self.assertEqual(FormClass.of(g, S), FormClass.of(f, S))
        self.assertEqual(canonical_form(BinaryForm.of([-10, 5]), S), BinaryForm.of([10, -5]))

    def test_clear_s_denominators(self):
        """Rational coefficients are cleared by the least S-supported integer."""
        S = SPrimeSet.of([2])
        self.assertEqual(
            clear_s_denominators([Fraction(1, 2), Fraction(3, 4), 1], S), BinaryForm.of([2, 3, 4])
        )
        with self.assertRaises(DomainError):
            clear_s_denominators([Fraction(1, 3), 1], S)


class TestDiscriminant(unittest.TestCase):
    def test_quadratics(self):
        """b^2 - 4ac on three quadratics."""
        self.assertEqual(discriminant(XY), 1)
        self.assertEqual(discriminant(X2_MINUS_Y2), 4)
        self.assertEqual(discriminant(X2_PLUS_Y2), -4)

    def test_quartic(self):
        """xy(x - y)(x + y) has discriminant 4."""
        self.assertEqual(discriminant(BinaryForm.of([0, 1, 0, -1, 0])), 4)

    def test_degree_one(self):
        """Linear forms have no discriminant."""
        with self.assertRaises(DomainError):
            discriminant(BinaryForm.of([1, 1]))

    def test_product_of_cross_determinants(self):
        """Delta of a split form is the product of squared cross determinants."""
        rng = random.Random(5)
        for n in range(2, 7):
            for _ in range(10):
                A = random_config(rng, n, 9)
                expected = prod(cross_det(P, Q) ** 2 for P, Q in combinations(A.sorted_points(), 2))
                self.assertEqual(discriminant(config_to_form(A)), expected)

    def test_resultant_agrees_with_closed_formulas(self):
        """The resultant route agrees with the classical formulas in degrees 2 and 3."""
        rng = random.Random(13)
        for n in (2, 3):
            for _ in range(100):
                f = random_form(rng, n, 20)
                self.assertEqual(forms._disc_by_resultant(f.coeffs), discriminant(f))

    def test_covariance(self):
        """Delta(gamma . f) = det(gamma)^(n(n-1)) Delta(f)."""
        rng = random.Random(1)
        checked = 0
        while checked < 1000:
            n = rng.randint(2, 5)
            f = random_form(rng, n, 20)
            rows = [[rng.randint(-5, 5) for _ in range(2)] for _ in range(2)]
            det = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
            if det == 0:
                continue
            gamma = GL2ZS.of(rows, SPrimeSet.of(factorize(det).primes()))
            image = BinaryForm.of(int(c) for c in substitute(gamma, f))
            self.assertEqual(discriminant(image), det ** (n * (n - 1)) * discriminant(f))
            checked += 1

    def test_covariance_with_s_denominators(self):
        """The covariance law holds exactly for matrices with entries in Z_S."""
        rng = random.Random(41)
        S = SPrimeSet.of([2, 3])
        checked = 0
        while checked < 200:
            rows = [
                [Fraction(rng.randint(-6, 6), rng.choice([1, 2, 3, 4, 6])) for _ in range(2)]
                for _ in range(2)
            ]
            det = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
            if det == 0 or not is_s_unit(det, S):
                continue
            n = rng.randint(2, 4)
            f = random_form(rng, n, 10)
            gamma = GL2ZS.of(rows, S)
            image = act(gamma, f)
            self.assertEqual(discriminant(image), det ** (n * (n - 1)) * discriminant(f))
            self.assertEqual(act(gamma.inverse(), image), f)
            checked += 1


class TestAction(unittest.TestCase):
    def test_identity(self):
        """The identity acts trivially."""
        f = BinaryForm.of([3, -1, 4, 1])
        self.assertEqual(act(GL2ZS.identity(), f), f)

    def test_swap_on_xy(self):
        """Swapping variables fixes xy."""
        self.assertEqual(act(GL2ZS.of([[0, 1], [1, 0]]), XY), XY)

    def test_substitution(self):
        """[[1,0],[1,1]] sends x^2 to (x + y)^2."""
        image = act(GL2ZS.of([[1, 0], [1, 1]]), BinaryForm.of([1, 0, 0]))
        self.assertEqual(image, BinaryForm.of([1, 2, 1]))

    def test_s_denominators_are_kept(self):
        """Halving x sends x^2 - y^2 to x^2/4 - y^2, of discriminant det^2 * 4 = 1."""
        S = SPrimeSet.of([2])
        image = act(GL2ZS.of([[Fraction(1, 2), 0], [0, 1]], S), X2_MINUS_Y2)
        self.assertEqual(image, BinaryForm.of([Fraction(1, 4), 0, -1]))
        self.assertFalse(image.is_integral())
        self.assertEqual(str(image), "(1/4)x^2 - y^2")
        self.assertEqual(discriminant(image), 1)
        self.assertEqual(image.content(), Fraction(1, 4))
        self.assertTrue(is_omega_form(image, S))
        self.assertEqual(clear_s_denominators(image.coeffs, S), BinaryForm.of([1, 0, -4]))
        self.assertEqual(canonical_form(image, S), BinaryForm.of([1, 0, -4]))
        self.assertEqual(roots_config(image), PointConfig.of([normalize(2, 1), normalize(-2, 1)]))

    def test_left_action_over_z_s(self):
        """The action stays a left action for matrices with S-denominators."""
        S = SPrimeSet.of([3])
        g1 = GL2ZS.of([[Fraction(1, 3), 1], [0, 1]], S)
        g2 = GL2ZS.of([[1, 0], [Fraction(2, 3), 3]], S)
        f = BinaryForm.of([2, -3, 0, 1])
        self.assertEqual(act(g1, act(g2, f)), act(g1 @ g2, f))

    def test_left_action(self):
        """act(g1, act(g2, f)) == act(g1 @ g2, f)."""
        rng = random.Random(17)
        S = SPrimeSet()
        f = BinaryForm.of([2, -3, 0, 1])
        for _ in range(30):
            g1 = GL2ZS.of([[1, rng.randint(-3, 3)], [0, 1]], S)
            g2 = GL2ZS.of([[0, 1], [1, rng.randint(-3, 3)]], S)
            self.assertEqual(act(g1, act(g2, f)), act(g1 @ g2, f))

    def test_roots_move_contragrediently(self):
        """roots_config(act(gamma, f)) == apply_gl2(gamma^-T, roots_config(f))."""
        rng = random.Random(19)
        for _ in range(30):
            A = random_config(rng, 3, 9)
            f = config_to_form(A)
            while True:
                rows = [[rng.randint(-3, 3) for _ in range(2)] for _ in range(2)]
                if rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0] in (1, -1):
                    break
            gamma = GL2ZS.of(rows)
            self.assertEqual(roots_config(act(gamma, f)), apply_gl2(gamma.contragredient(), A))


class TestDictionary(unittest.TestCase):
    def test_roots_config(self):
        """Roots of split forms."""
        self.assertEqual(roots_config(XY), PointConfig.of([normalize(1, 0), normalize(0, 1)]))
        self.assertEqual(
            roots_config(X2_MINUS_Y2), PointConfig.of([normalize(1, 1), normalize(-1, 1)])
        )

    def test_not_split(self):
        """x^2 + y^2 reports an irreducible factor of degree 2."""
        with self.assertRaises(NotSplitError) as ctx:
            roots_config(X2_PLUS_Y2)
        self.assertEqual(ctx.exception.degrees, [2])

    def test_repeated_root(self):
        """Repeated roots are a domain error."""
        with self.assertRaises(DomainError):
            roots_config(BinaryForm.of([1, 2, 1]))

    def test_config_to_form(self):
        """phi on small configurations."""
        self.assertEqual(config_to_form(PointConfig.of([normalize(1, 0), normalize(0, 1)])), XY)
        self.assertEqual(config_to_form(PointConfig.of([normalize(0, 1)])), BinaryForm.of([1, 0]))
        self.assertEqual(
            config_to_form(PointConfig.of([normalize(1, 1), normalize(-1, 1)])), X2_MINUS_Y2
        )

    def test_round_trip_configs(self):
        """roots_config(config_to_form(A)) == A."""
        rng = random.Random(23)
        for _ in range(100):
            A = random_config(rng, rng.randint(1, 6), 50)
            self.assertEqual(roots_config(config_to_form(A)), A)

    def test_round_trip_forms(self):
        """config_to_form(roots_config(f)) is f up to a unit rescaling."""
        S = SPrimeSet.of([2, 3])
        for f in enumerate_omega_forms(3, S, 3):
            try:
                A = roots_config(f)
            except NotSplitError:
                continue
            g = config_to_form(A)
            self.assertEqual(canonical_form(f, S), canonical_form(g, S))

    def test_omega_agrees_with_discriminant(self):
        """omega_member(A, S) iff is_omega_form(phi(A), S)."""
        rng = random.Random(29)
        pool = [2, 3, 5, 7]
        for _ in range(500):
            A = random_config(rng, rng.randint(2, 4), 6)
            S = SPrimeSet.of(rng.sample(pool, rng.randint(0, 3)))
            self.assertEqual(omega_member(A, S), is_omega_form(config_to_form(A), S))

    def test_pair_form(self):
        """The normalized pair form has discriminant 1."""
        A = PointConfig.of([normalize(1, 1), normalize(-1, 1)])
        a, b, c = pair_form(A, SPrimeSet.of([2]))
        self.assertEqual(b * b - 4 * a * c, 1)
        with self.assertRaises(DomainError):
            pair_form(A, SPrimeSet())

    def test_closed_points(self):
        """Irreducible factors with multiplicities."""
        f = BinaryForm.of([1, 0, 1, 0, 0])
        self.assertEqual(
            closed_points(f),
            [(BinaryForm.of([1, 0]), 2), (BinaryForm.of([1, 0, 1]), 1)],
        )


class TestOmegaForms(unittest.TestCase):
    def test_is_omega_form(self):
        """Unit discriminants over S."""
        self.assertTrue(is_omega_form(XY, SPrimeSet()))
        self.assertFalse(is_omega_form(X2_MINUS_Y2, SPrimeSet()))
        self.assertFalse(is_omega_form(BinaryForm.of([1, 1, 1]), SPrimeSet()))
        self.assertTrue(is_omega_form(BinaryForm.of([1, 1, 1]), SPrimeSet.of([3])))

    def test_enumeration_contents(self):
        """Height one quadratics over S = {} contain xy and x^2 + xy."""
        found = enumerate_omega_forms(2, SPrimeSet(), 1)
        self.assertIn(XY, found)
        self.assertIn(BinaryForm.of([1, 1, 0]), found)
        self.assertTrue(all(discriminant(f) == 1 for f in found))
        self.assertEqual(found, sorted(found, key=lambda f: f.coeffs))

    def test_enumeration_empty(self):
        """Height zero gives nothing."""
        self.assertEqual(enumerate_omega_forms(2, SPrimeSet(), 0), [])

    def test_enumeration_cubic(self):
        """xy(x + y) is a cubic of discriminant 1."""
        self.assertIn(BinaryForm.of([0, 1, 1, 0]), enumerate_omega_forms(3, SPrimeSet(), 2))

    def test_enumeration_thread_independent(self):
        """The result does not depend on the thread count."""
        S = SPrimeSet.of([2])
        single = enumerate_omega_forms(3, S, 2)
        with patch("omega_orbits.config.THREADS", 4):
            self.assertEqual(enumerate_omega_forms(3, S, 2), single)

    @patch("omega_orbits.config.MAX_CANDIDATES", 100)
    def test_enumeration_capacity(self):
        """The scan refuses to exceed its capacity guard."""
        with self.assertRaises(CapacityError):
            enumerate_omega_forms(3, SPrimeSet(), 5)

    def test_reduce_examples(self):
        """Factorization patterns mod p."""
        pattern = reduce_form_mod_p(X2_MINUS_Y2, 2)
        self.assertEqual([(f.coeffs, f.mult) for f in pattern.factors], [((1, 1), 2)])
        pattern = reduce_form_mod_p(X2_PLUS_Y2, 3)
        self.assertEqual([(f.coeffs, f.mult) for f in pattern.factors], [((1, 0, 1), 1)])
        for p in (2, 3, 5, 7):
            pattern = reduce_form_mod_p(XY, p)
            self.assertEqual([(f.coeffs, f.mult) for f in pattern.factors], [((0, 1), 1), ((1, 0), 1)])
            self.assertTrue(pattern.is_squarefree())

    def test_reduce_point_at_infinity(self):
        """A vanishing leading coefficient mod p is the point at infinity."""
        pattern = reduce_form_mod_p(BinaryForm.of([3, 1, 1]), 3)
        self.assertIn(((0, 1), 1), [(f.coeffs, f.mult) for f in pattern.factors])
        self.assertEqual(pattern.degree, 2)

    def test_reduce_removes_content(self):
        """The p-content is divided out before reducing."""
        pattern = reduce_form_mod_p(BinaryForm.of([2, 0, 2]), 2)
        self.assertEqual([(f.coeffs, f.mult) for f in pattern.factors], [((1, 1), 2)])

    def test_reduce_preserves_degree(self):
        """Multiplicity-weighted degrees add up to n for every prime below 50."""
        found = enumerate_omega_forms(3, SPrimeSet.of([2, 3]), 2)
        for f in found:
            for p in primerange(2, 50):
                self.assertEqual(reduce_form_mod_p(f, p).degree, f.n)

    def test_omega_forms_stay_squarefree_outside_s(self):
        """Forms of T(Q, S) reduce to squarefree patterns outside S."""
        S = SPrimeSet.of([2])
        for f in enumerate_omega_forms(3, S, 2):
            for p in (3, 5, 7):
                self.assertTrue(reduce_form_mod_p(f, p).is_squarefree())


    def test_squarefree_exactly_outside_discriminant(self):
        """A primitive form reduces squarefree mod p iff p does not divide its discriminant."""
        rng = random.Random(37)
        pool = [2, 3, 5]
        checked = 0
        while checked < 200:
            f = random_form(rng, rng.randint(2, 4), 6)
            delta = discriminant(f)
            if delta == 0 or f.content() != 1:
                continue
            S = SPrimeSet.of(rng.sample(pool, rng.randint(0, 2)))
            outside = [p for p in factorize(delta).primes() if p not in S.primes]
            self.assertEqual(is_omega_form(f, S), not outside)
            for p in outside:
                self.assertFalse(reduce_form_mod_p(f, p).is_squarefree())
            for p in primerange(2, 30):
                if delta % p:
                    self.assertTrue(reduce_form_mod_p(f, p).is_squarefree())
            checked += 1

    def test_reduce_rejects_composite_modulus(self):
        """Reduction is only defined modulo a prime."""
        for m in (1, 4, 9, 15):
            with self.assertRaises(DomainError):
                reduce_form_mod_p(XY, m)


class TestEquivalence(unittest.TestCase):
    def test_self(self):
        """Every form is equivalent to itself through the identity."""
        w = equivalent(XY, XY, SPrimeSet(), 1)
        self.assertEqual(w.gamma, GL2ZS.identity())
        self.assertEqual(w.lam, 1)

    def test_witness(self):
        """xy and x^2 - xy are equivalent within height 3."""
        g = BinaryForm.of([1, -1, 0])
        w = equivalent(XY, g, SPrimeSet(), 3)
        self.assertIsNotNone(w)
        self.assertEqual(substitute(w.gamma, XY), tuple(w.lam * a for a in g.coeffs))

    def test_prefilter(self):
        """Different discriminant classes are never equivalent."""
        self.assertIsNone(equivalent(X2_PLUS_Y2, XY, SPrimeSet(), 3))

    def test_degree_mismatch(self):
        """Forms of different degrees cannot be compared."""
        with self.assertRaises(DomainError):
            equivalent(XY, BinaryForm.of([1, 0, 0, 1]), SPrimeSet(), 1)

    @patch("omega_orbits.config.MAX_CANDIDATES", 10)
    def test_capacity(self):
        """The matrix search refuses to exceed its capacity guard."""
        with self.assertRaises(CapacityError):
            equivalent(XY, BinaryForm.of([1, -1, 0]), SPrimeSet(), 3)


class TestGaussReduction(unittest.TestCase):
    def test_definite(self):
        """Definite forms reduce to |b| <= a <= c."""
        self.assertEqual(gauss_reduce_quadratic(X2_PLUS_Y2), X2_PLUS_Y2)
        self.assertEqual(gauss_reduce_quadratic(BinaryForm.of([2, 2, 1])), X2_PLUS_Y2)
        self.assertEqual(gauss_reduce_quadratic(BinaryForm.of([-2, -2, -1])), BinaryForm.of([-1, 0, -1]))

    def test_square_discriminant(self):
        """Delta = 1 forms reduce to xy."""
        self.assertEqual(gauss_reduce_quadratic(XY), XY)
        self.assertEqual(gauss_reduce_quadratic(BinaryForm.of([1, -1, 0])), XY)

    def test_indefinite_cycle_is_invariant(self):
        """SL_2(Z)-equivalent indefinite forms share a representative."""
        f = BinaryForm.of([1, 1, -1])
        rng = random.Random(31)
        key = gauss_reduce_quadratic(f)
        for _ in range(20):
            t = rng.randint(-4, 4)
            g = act(GL2ZS.of([[1, t], [0, 1]]), f)
            g = act(GL2ZS.of([[0, -1], [1, 0]]), g)
            self.assertEqual(gauss_reduce_quadratic(g), key)

    def test_reduction_over_enumerations(self):
        """The reduced representative is idempotent and constant on SL_2(Z)-orbits."""
        rng = random.Random(43)
        generators = [GL2ZS.of([[1, t], [0, 1]]) for t in (-2, -1, 1, 2)] + [GL2ZS.of([[0, -1], [1, 0]])]
        for D in (-20, -15, -4, -3, 5, 8, 12, 13, 1, 4, 9):
            found = enumerate_quadratic_forms(D, 5)
            self.assertTrue(found)
            for i, f in enumerate(found):
                key = gauss_reduce_quadratic(f)
                self.assertEqual(discriminant(key), D)
                self.assertEqual(gauss_reduce_quadratic(key), key)
                for _ in range(3):
                    self.assertEqual(gauss_reduce_quadratic(act(random_sl2(rng), f)), key)
                if i < 3:
                    g = act(rng.choice(generators), f)
                    w = equivalent(f, g, SPrimeSet(), 2)
                    self.assertIsNotNone(w)
                    self.assertEqual(substitute(w.gamma, f), tuple(w.lam * a for a in g.coeffs))

    def test_degenerate(self):
        """Degenerate forms cannot be reduced."""
        with self.assertRaises(DomainError):
            gauss_reduce_quadratic(BinaryForm.of([1, 2, 1]))

    def test_class_number(self):
        """Two SL_2(Z)-classes of discriminant -20."""
        positive = [f for f in enumerate_quadratic_forms(-20, 6) if f.coeffs[0] > 0]
        self.assertEqual(count_sl2_orbits(positive), 2)


class TestOrbits(unittest.TestCase):
    def test_no_negative_unit_discriminant(self):
        """b^2 - 4ac = -1 has no solutions."""
        self.assertEqual(enumerate_quadratic_forms(-1, 100), [])

    def test_unit_discriminant_single_orbit(self):
        """All Delta = 1 quadratics of height <= 100 form one orbit."""
        found = enumerate_quadratic_forms(1, 100)
        self.assertGreater(len(found), 400)
        self.assertEqual(len(orbit_partition(found, SPrimeSet(), 2)), 1)

    def test_enumerated_quadratics_single_orbit(self):
        """The height 20 enumeration over S = {} is one orbit."""
        found = enumerate_omega_forms(2, SPrimeSet(), 20)
        self.assertEqual(len(orbit_partition(found, SPrimeSet(), 3)), 1)

    def test_separated_by_discriminant(self):
        """xy and x^2 + y^2 lie in different orbits."""
        self.assertEqual(len(orbit_partition([XY, X2_PLUS_Y2], SPrimeSet(), 3)), 2)
        self.assertEqual(orbit_partition([], SPrimeSet(), 3), [])

    def test_cubic_partition(self):
        """xy(x + y) and xy(x - y) are GL_2(Z)-equivalent."""
        f, g = BinaryForm.of([0, 1, 1, 0]), BinaryForm.of([0, 1, -1, 0])
        self.assertEqual(len(orbit_partition([f, g], SPrimeSet(), 1)), 1)


class TestRamification(unittest.TestCase):
    def test_field_discriminants(self):
        """Fundamental discriminants of three quadratic fields."""
        self.assertEqual(field_disc_quadratic(X2_PLUS_Y2), -4)
        self.assertEqual(field_disc_quadratic(BinaryForm.of([1, 1, 1])), -3)
        self.assertEqual(field_disc_quadratic(BinaryForm.of([1, 0, -2])), 8)
        with self.assertRaises(DomainError):
            field_disc_quadratic(X2_MINUS_Y2)

    def test_omega_forms_unramified_outside_s(self):
        """Closed points of forms in T(Q, S) are unramified outside S."""
        for S in (SPrimeSet.of([2]), SPrimeSet.of([3]), SPrimeSet.of([2, 3])):
            for f in enumerate_omega_forms(3, S, 2):
                self.assertTrue(unramified_outside(f, S))
        self.assertEqual(ramified_primes(BinaryForm.of([1, 1, 1])), {3})
