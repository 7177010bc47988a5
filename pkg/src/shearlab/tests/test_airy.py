import warnings

import numpy as np
from numpy.testing import assert_allclose
from scipy.special import gamma

from django.test import SimpleTestCase, override_settings

from shearlab.airy import (
    ResolventQuery,
    airy_kernel_column,
    airy_kernel_vw,
    airy_kernel_vw_direct,
    airy_operator,
    airy_resolvent_solve,
    bracket,
    couette_model_resolvent,
    energy_ratio,
    model_airy_W,
    pointwise_envelope,
    tent_cutoffs,
    verify_airy_bounds,
    verify_vw_bounds,
)
from shearlab.exceptions import (
    CriticalLayerUnresolved,
    InsufficientScan,
    ResidualWarning,
    SignViolation,
)
from shearlab.grids import Grid
from shearlab.profile import ModeParams, ProfileKind, build_profile


class ResolventQueryTestCase(SimpleTestCase):
    def test_scales(self):
        query = ResolventQuery(-1e-3, -2e-2, 0.5)
        self.assertAlmostEqual(query.scale, 0.1)
        self.assertAlmostEqual(query.scaled_alpha, 0.2)
        self.assertTrue(query.in_asymptotic_regime)
        self.assertFalse(ResolventQuery(0.5).in_asymptotic_regime)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            ResolventQuery(0.0)
        with self.assertRaises(SignViolation):
            ResolventQuery(1e-2, -1.0)

    def test_bracket(self):
        assert_allclose(bracket(3.0, 0.0), np.sqrt(10))
        assert_allclose(bracket(np.array([0.0, 1.0])), [1.0, np.sqrt(2)])


class ModelAiryTestCase(SimpleTestCase):
    def test_value_at_origin(self):
        """``W(0) = -3^(-2/3) Gamma(1/3)`` without spectral shift."""
        model = model_airy_W(0.0, [0.0])
        assert_allclose(model.values[0], -(3 ** (-2 / 3)) * gamma(1 / 3), rtol=1e-9)

    def test_solves_model_equation(self):
        model = model_airy_W(0.5, np.linspace(-3, 3, 601))
        self.assertLessEqual(np.max(np.abs(model.residual())), 1e-3)

    def test_negative_shift(self):
        with self.assertRaises(ValueError):
            model_airy_W(-1.0, [0.0])


class CouetteResolventTestCase(SimpleTestCase):
    def setUp(self):
        self.profile = build_profile(ProfileKind.COUETTE, 0.0, 1.0)

    def test_matches_model_solution(self):
        """The resolvent of a constant is the rescaled model solution."""
        eps = 1e-3
        grid = Grid(2.0, eps ** (1 / 3) / 100)
        w = airy_resolvent_solve(
            self.profile, ResolventQuery(eps), np.ones(grid.size), grid
        )
        interior = np.flatnonzero(np.abs(grid.nodes) <= 1.0)[::20]
        for sign in (1, -1):
            with self.subTest(sign=sign):
                solved = w if sign > 0 else -np.conj(w)
                model = couette_model_resolvent(sign * eps, 0.0, grid.nodes[interior])
                error = np.max(np.abs(solved[interior] - model)) / np.max(np.abs(model))
                self.assertLessEqual(error, 1e-4)

    def test_resolution_required(self):
        with self.assertRaises(CriticalLayerUnresolved):
            airy_resolvent_solve(
                self.profile, ResolventQuery(1e-6), np.ones(41), Grid(1.0, 0.05)
            )

    def test_energy_ratio_is_uniform(self):
        grid = Grid(6.0, 0.01)
        f = np.exp(-((grid.nodes - 0.3) ** 2))
        for eps in (1e-2, 1e-3):
            with self.subTest(eps=eps):
                query = ResolventQuery(eps)
                w = airy_resolvent_solve(self.profile, query, f, grid)
                ratio = energy_ratio(query, f, w, grid)
                self.assertGreater(ratio, 0.5)
                self.assertLess(ratio, 5.0)
                value, derivative = pointwise_envelope(query, f, w, grid)
                self.assertTrue(np.isfinite(value) and value > 0)
                self.assertTrue(np.isfinite(derivative) and derivative > 0)


class ResolventSymmetryTestCase(SimpleTestCase):
    def setUp(self):
        self.profile = build_profile(ProfileKind.BUMP, 0.3, 1.0)
        self.grid = Grid(4.0, 0.02)
        self.f = np.exp(-(self.grid.nodes**2))

    def test_conjugation(self):
        """Flipping the signs of ``eps`` and ``alpha`` conjugates and negates."""
        for alpha in (0.0, 1e-2):
            with self.subTest(alpha=alpha):
                w = airy_resolvent_solve(
                    self.profile, ResolventQuery(1e-2, alpha, 0.3), self.f, self.grid
                )
                flipped = airy_resolvent_solve(
                    self.profile, ResolventQuery(-1e-2, -alpha, 0.3), self.f, self.grid
                )
                assert_allclose(flipped, -np.conj(w), rtol=1e-10, atol=1e-12)

    def test_kernel_reciprocity(self):
        """The discrete operator is complex symmetric, so ``K(y, z) = K(z, y)``."""
        query = ResolventQuery(1e-2, 0.0, 0.2)
        first = airy_kernel_column(self.profile, query, -0.5, self.grid)
        second = airy_kernel_column(self.profile, query, 0.7, self.grid)
        assert_allclose(
            first.values[self.grid.nearest_index(0.7)],
            second.values[self.grid.nearest_index(-0.5)],
            rtol=1e-8,
        )

    def test_kernel_column_inverts_delta(self):
        """Applying the operator to a kernel column gives back the discrete delta."""
        query = ResolventQuery(1e-2, 1e-2, 0.2)
        column = airy_kernel_column(self.profile, query, 0.305, self.grid)
        self.assertAlmostEqual(column.source, 0.3)
        applied = airy_operator(self.profile, query, self.grid) @ column.values
        assert_allclose(applied, self.grid.delta(0.305), atol=1e-9 / self.grid.h)

    def test_energy_estimate(self):
        grid = Grid(6.0, 0.01)
        f = np.exp(-((grid.nodes - 0.3) ** 2))
        query = ResolventQuery(1e-3, 0.0, 0.1)
        w = airy_resolvent_solve(self.profile, query, f, grid)
        self.assertLessEqual(energy_ratio(query, f, w, grid), 20.0)

    def test_residual_within_tolerance(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error", ResidualWarning)
            airy_resolvent_solve(self.profile, ResolventQuery(1e-2), self.f, self.grid)

    @override_settings(SHEARLAB={"SOLVE_RESIDUAL": -1.0})
    def test_residual_warning(self):
        with self.assertWarns(ResidualWarning), self.assertLogs("shearlab", "WARNING"):
            airy_resolvent_solve(self.profile, ResolventQuery(1e-2), self.f, self.grid)


class KernelBoundsTestCase(SimpleTestCase):
    def setUp(self):
        self.profile = build_profile(ProfileKind.COUETTE, 0.0, 1.0)
        self.eps = 1e-2
        self.scale = self.eps ** (1 / 3)
        self.grid = Grid(20 * self.scale, self.scale / 10)

    def columns(self):
        return [
            airy_kernel_column(
                self.profile,
                ResolventQuery(self.eps, alpha * self.scale),
                Z * self.scale,
                self.grid,
            )
            for alpha in (0.0, 1.0, 10.0)
            for Z in (-5.0, -2.5, 0.0, 2.5, 5.0)
        ]

    def test_envelope_constants(self):
        report = verify_airy_bounds(self.columns())
        self.assertEqual(report.columns, 15)
        self.assertLessEqual(report.band_ratio, 10)
        self.assertGreater(report.decay_rate, 0)
        self.assertGreater(report.c0, 0)
        self.assertGreaterEqual(report.entanglement_min, -1e-10)
        self.assertTrue(np.isfinite(report.derivative_constant))

    def test_insufficient_scan(self):
        with self.assertRaises(InsufficientScan):
            verify_airy_bounds(self.columns()[:9])
        with self.assertRaises(InsufficientScan):
            verify_vw_bounds([])

    def test_vw_columns(self):
        """Mapped and direct columns coincide for Couette flow."""
        mode = ModeParams(1, self.eps)
        columns = []
        for rho in (-2 * self.scale, 0.0, 2 * self.scale):
            mapped = airy_kernel_vw(self.profile, mode, rho, 0.1, self.grid)
            direct = airy_kernel_vw_direct(self.profile, mode, rho, 0.1, self.grid)
            assert_allclose(direct.values, mapped.values, rtol=1e-8, atol=1e-12)
            self.assertEqual(mapped.shift, 0.1)
            columns.append(mapped)
        report = verify_vw_bounds(columns)
        self.assertEqual(report.columns, 3)
        self.assertGreater(report.decay_rate, 0)
        self.assertGreater(report.value_constant, 0)

    def test_tents_are_sign_definite(self):
        """Tent cutoffs stay on one side of the critical point and avoid the source."""
        for column in self.columns():
            Y = (column.nodes - column.query.y0) / self.scale
            Z = (column.source - column.query.y0) / self.scale
            tents = tent_cutoffs(column)
            self.assertTrue(tents)
            for phi, dphi in tents:
                support = Y[phi > 0]
                self.assertTrue(np.all(support > 0) or np.all(support < 0))
                self.assertFalse(support.min() < Z < support.max())
                self.assertEqual(dphi.shape, phi.shape)


class TransformedKernelTestCase(SimpleTestCase):
    def test_formulations_agree_for_bump(self):
        """Mapped and direct columns agree on a grid fine in the critical layer."""
        profile = build_profile(ProfileKind.BUMP, 0.3, 1.0)
        eps = 1e-2
        scale = eps ** (1 / 3)
        grid = Grid(20 * scale, scale / 40)
        mode = ModeParams(1, eps)
        for rho in (-2 * scale, 0.0, 2 * scale):
            with self.subTest(rho=rho):
                mapped = airy_kernel_vw(profile, mode, rho, 0.1, grid)
                direct = airy_kernel_vw_direct(profile, mode, rho, 0.1, grid)
                gap = np.max(np.abs(direct.values - mapped.values)) / np.max(
                    np.abs(mapped.values)
                )
                self.assertLessEqual(gap, 1e-5)
