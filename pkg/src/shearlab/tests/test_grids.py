import numpy as np
from numpy.testing import assert_allclose

from django.test import SimpleTestCase, override_settings

from shearlab.exceptions import CriticalLayerUnresolved
from shearlab.grids import Grid


class GridTestCase(SimpleTestCase):
    def setUp(self):
        self.grid = Grid(1.0, 0.1)

    def test_nodes(self):
        """Nodes span the domain symmetrically with the requested spacing."""
        self.assertEqual(self.grid.size, 21)
        self.assertAlmostEqual(self.grid.h, 0.1)
        assert_allclose(self.grid.nodes[[0, 10, 20]], [-1.0, 0.0, 1.0], atol=1e-15)

    def test_invalid_dimensions(self):
        with self.assertRaises(ValueError):
            Grid(0.0, 0.1)
        with self.assertRaises(ValueError):
            Grid(1.0, -0.1)

    def test_around_adds_margin(self):
        self.assertEqual(Grid.around(1.0, 0.1).half_width, 1.0 + 12.0)
        self.assertEqual(Grid.around(1.0, 0.1, margin=2).half_width, 3.0)

    def test_nearest_index(self):
        self.assertEqual(self.grid.nearest_index(0.0), 10)
        self.assertEqual(self.grid.nearest_index(0.26), 13)
        with self.assertRaises(ValueError):
            self.grid.nearest_index(1.5)

    def test_delta_has_unit_mass(self):
        self.assertAlmostEqual(abs(self.grid.integrate(self.grid.delta(0.3))), 1.0)

    def test_second_difference_of_quadratic(self):
        """Interior rows differentiate quadratics exactly."""
        y = self.grid.nodes
        values = self.grid.second_difference() @ y**2
        assert_allclose(values[1:-1], 2.0, atol=1e-9)

    def test_h1k_norm_dominates_scaled_l2(self):
        g = np.exp(-(self.grid.nodes**2) * 10)
        for k in (1, 3):
            self.assertGreater(self.grid.h1k_norm(g, k), k * self.grid.l2_norm(g))
        self.assertEqual(self.grid.h1k_norm(np.zeros(self.grid.size), 2), 0.0)

    def test_require_resolution(self):
        self.grid.require_resolution(1.0)
        self.grid.require_resolution(-1.0)
        with self.assertRaises(CriticalLayerUnresolved):
            self.grid.require_resolution(1e-3)

    @override_settings(SHEARLAB={"RESOLUTION_FACTOR": 20.0})
    def test_resolution_factor_setting(self):
        """The resolution rule follows the configured factor."""
        with self.assertRaises(CriticalLayerUnresolved):
            self.grid.require_resolution(1.0)
