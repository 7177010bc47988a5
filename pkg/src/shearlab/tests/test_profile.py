import numpy as np
from numpy.testing import assert_allclose

from django.test import SimpleTestCase

from shearlab.exceptions import AssumptionViolation, MonotonicityViolation
from shearlab.grids import Grid
from shearlab.profile import (
    ModeParams,
    ProfileKind,
    build_profile,
    check_assumptions,
    invert_profile,
    plateau,
)

#: Integral of the unit bump ``exp(-1 / (1 - y^2))`` over ``[-1, 1]``.
BUMP_MASS = 0.443993816168


class CouetteProfileTestCase(SimpleTestCase):
    def setUp(self):
        self.profile = build_profile(ProfileKind.COUETTE, 0.3, 1.0)
        self.y = np.linspace(-4, 4, 81)

    def test_is_linear(self):
        self.assertTrue(self.profile.is_couette)
        assert_allclose(self.profile.b(self.y), self.y)
        assert_allclose(self.profile.db(self.y), 1.0)
        assert_allclose(self.profile.ddb(self.y), 0.0)

    def test_inversion_is_identity(self):
        assert_allclose(invert_profile(self.profile, self.y), self.y)

    def test_spec(self):
        self.assertEqual(
            self.profile.spec(),
            {"kind": "couette", "amplitude": 0.0, "support_radius": 1.0},
        )


class BumpProfileTestCase(SimpleTestCase):
    def setUp(self):
        self.profile = build_profile(ProfileKind.BUMP, 0.3, 1.0)
        self.y = np.linspace(-3, 3, 601)

    def test_mass(self):
        assert_allclose(self.profile.mass, BUMP_MASS, rtol=1e-9)

    def test_slope_symmetry(self):
        """``b(0) = 0`` and ``b' - 1`` is odd."""
        assert_allclose(self.profile.b(0.0), 0.0, atol=1e-12)
        assert_allclose(self.profile.db(-self.y) + self.profile.db(self.y), 2.0, atol=1e-9)

    def test_slopes_outside_support(self):
        half = 0.3 * BUMP_MASS / 2
        assert_allclose(self.profile.db([-2.0, 2.0]), [1 - half, 1 + half], rtol=1e-9)
        assert_allclose(self.profile.ddb([-2.0, 1.0, 2.5]), 0.0)

    def test_derivatives_are_consistent(self):
        h = self.y[1] - self.y[0]
        assert_allclose(
            np.gradient(self.profile.b(self.y), h)[1:-1],
            self.profile.db(self.y)[1:-1],
            atol=1e-4,
        )
        assert_allclose(
            np.gradient(self.profile.db(self.y), h)[1:-1],
            self.profile.ddb(self.y)[1:-1],
            atol=1e-3,
        )

    def test_measured_constants(self):
        self.assertAlmostEqual(self.profile.db_min, 1 - 0.3 * BUMP_MASS / 2, places=6)
        self.assertEqual(
            self.profile.sigma0, min(self.profile.db_min, 1 / self.profile.db_max)
        )
        self.assertGreater(self.profile.delta0, 0)

    def test_inversion(self):
        v = np.linspace(-5, 5, 41)
        assert_allclose(self.profile.b(invert_profile(self.profile, v)), v, atol=1e-10)
        self.assertIsInstance(invert_profile(self.profile, 0.5), float)

    def test_check_assumptions(self):
        report = check_assumptions(self.profile, Grid(3.0, 0.01))
        self.assertTrue(report.support_ok)
        assert_allclose(report.sigma0_hat, self.profile.sigma0, rtol=1e-4)

    def test_check_assumptions_needs_fine_grid(self):
        with self.assertRaises(ValueError):
            check_assumptions(self.profile, Grid(3.0, 0.05))
        with self.assertRaises(ValueError):
            check_assumptions(self.profile, Grid(2.0, 0.01))


class ProfileValidationTestCase(SimpleTestCase):
    def test_monotonicity_violation(self):
        with self.assertRaises(MonotonicityViolation):
            build_profile(ProfileKind.BUMP, 5.0, 1.0)

    def test_slope_band_violation(self):
        """A slope minimum of about 0.012 is below the default floor."""
        with self.assertRaises(AssumptionViolation):
            build_profile(ProfileKind.BUMP, 4.45, 1.0)

    def test_support_radius(self):
        with self.assertRaises(ValueError):
            build_profile(ProfileKind.BUMP, 0.3, 0.0)

    def test_unknown_kind(self):
        with self.assertRaises(ValueError):
            build_profile("parabola", 0.3, 1.0)


class PlateauTestCase(SimpleTestCase):
    def test_values(self):
        y = np.linspace(-4, 4, 801)
        values = plateau(y, 1.5, 2.5)
        assert_allclose(values[np.abs(y) <= 1.5], 1.0)
        assert_allclose(values[np.abs(y) >= 2.5], 0.0)
        right = values[y >= 0]
        self.assertTrue(np.all(np.diff(right) <= 0))

    def test_invalid_radii(self):
        with self.assertRaises(ValueError):
            plateau(0.0, 2.0, 1.0)


class ModeParamsTestCase(SimpleTestCase):
    def test_signed_scale(self):
        self.assertAlmostEqual(ModeParams(2, 1e-2).eps, 5e-3)
        self.assertAlmostEqual(ModeParams(-2, 1e-2).eps, -5e-3)

    def test_invalid(self):
        for k, nu in ((0, 1e-2), (1.5, 1e-2), (True, 1e-2), (1, 0.0), (1, 1.0)):
            with self.subTest(k=k, nu=nu), self.assertRaises(ValueError):
                ModeParams(k, nu)
