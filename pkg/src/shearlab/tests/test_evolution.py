import numpy as np
from numpy.testing import assert_allclose

from django.test import SimpleTestCase

from shearlab.evolution import (
    EvolutionSeries,
    couette_closed_form,
    evolve_direct,
    evolve_representation,
)
from shearlab.exceptions import PhaseUnderresolved, StepTooLarge
from shearlab.grids import Grid
from shearlab.orr_sommerfeld import default_initial_data, spectral_density
from shearlab.profile import ModeParams, ProfileKind, build_profile


class CouetteEvolutionTestCase(SimpleTestCase):
    def setUp(self):
        self.profile = build_profile(ProfileKind.COUETTE, 0.0, 1.0)
        self.mode = ModeParams(1, 1e-3)
        self.grid = Grid(4.0, 0.01)
        self.initial = default_initial_data(self.profile, self.grid)
        self.times = [0.0, 2.5, 5.0]

    def test_direct_matches_closed_form(self):
        exact = couette_closed_form(self.mode, self.initial, self.times)
        direct = evolve_direct(self.profile, self.mode, self.initial, self.times, dt=0.005)
        self.assertLessEqual(direct.relative_difference(exact).max(), 1e-3)

    def test_representation_matches_closed_form(self):
        exact = couette_closed_form(self.mode, self.initial, self.times)
        field = spectral_density(self.profile, self.mode, self.initial, self.grid.nodes)
        series = evolve_representation(field, self.times)
        self.assertLessEqual(series.relative_difference(exact).max(), 5e-3)

    def test_profiles_at_initial_time(self):
        """On Couette flow ``v = y``, so the initial profile is the initial vorticity."""
        exact = couette_closed_form(self.mode, self.initial, self.times)
        assert_allclose(exact.v_nodes, self.grid.nodes, atol=1e-12)
        assert_allclose(exact.F_t[0], self.initial.omega0, atol=1e-12)
        self.assertEqual(len(list(exact.norm_rows())), 3)

    def test_inviscid_closed_form_is_transport(self):
        """Without viscosity the profile ``F`` does not change."""
        exact = couette_closed_form(self.mode, self.initial, self.times, inviscid=True)
        assert_allclose(exact.F_t[-1], self.initial.omega0, atol=1e-10)

    def test_closed_form_needs_couette(self):
        bump = build_profile(ProfileKind.BUMP, 0.3, 1.0)
        with self.assertRaises(ValueError):
            couette_closed_form(self.mode, default_initial_data(bump, self.grid), self.times)


class CoupledEvolutionTestCase(SimpleTestCase):
    def setUp(self):
        self.profile = build_profile(ProfileKind.BUMP, 0.3, 1.0)
        self.mode = ModeParams(1, 1e-2)
        self.grid = Grid(4.0, 0.025)
        self.initial = default_initial_data(self.profile, self.grid)
        self.times = [0.0, 1.0, 2.0]

    def test_two_paths_agree(self):
        """Time stepping and the representation formula give the same vorticity."""
        direct = evolve_direct(self.profile, self.mode, self.initial, self.times, dt=0.005)
        field = spectral_density(self.profile, self.mode, self.initial, self.grid.nodes)
        series = evolve_representation(field, self.times)
        self.assertLessEqual(series.relative_difference(direct).max(), 5e-3)
        self.assertLessEqual(direct.elliptic_defect(), 1e-10)

    def test_negative_wavenumber(self):
        """Real initial data evolves into complex conjugates for ``k`` and ``-k``."""
        direct = evolve_direct(self.profile, self.mode, self.initial, self.times, dt=0.01)
        flipped = evolve_direct(
            self.profile, ModeParams(-1, 1e-2), self.initial, self.times, dt=0.01
        )
        assert_allclose(flipped.omega_t, np.conj(direct.omega_t), atol=1e-12)

    def test_step_limit(self):
        with self.assertRaises(StepTooLarge):
            evolve_direct(self.profile, self.mode, self.initial, self.times, dt=1.0)

    def test_times_must_increase(self):
        with self.assertRaises(ValueError):
            evolve_direct(self.profile, self.mode, self.initial, [1.0, 0.0], dt=0.01)

    def test_phase_resolution(self):
        field = spectral_density(
            self.profile, self.mode, self.initial, np.linspace(-4, 4, 11)
        )
        with self.assertRaises(PhaseUnderresolved):
            evolve_representation(field, self.times)

    def test_profiles_required(self):
        series = EvolutionSeries(
            mode=self.mode,
            grid=self.grid,
            times=np.zeros(1),
            omega_t=np.zeros((1, self.grid.size)),
            psi_t=np.zeros((1, self.grid.size)),
        )
        with self.assertRaises(ValueError):
            list(series.norm_rows())
