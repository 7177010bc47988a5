import numpy as np
from numpy.testing import assert_allclose

from django.test import SimpleTestCase

from shearlab.exceptions import ConfigInvalid
from shearlab.experiments import parse_config
from shearlab.models import CheckResult, ExperimentKind
from shearlab.serializers import CheckResultSerializer, ExperimentConfigSerializer


def simulate_config(**overrides) -> dict:
    config = {
        "kind": "simulate",
        "profile": {"kind": "bump", "amplitude": 0.3, "support_radius": 1.0},
        "grid": {"spacing": 0.025, "margin": 3.0},
        "modes": {"k": [1], "nu": [1e-2]},
        "times": {"t_max": 1.0, "samples": 3},
    }
    config.update(overrides)
    return config


class ExperimentConfigSerializerTestCase(SimpleTestCase):
    def errors(self, data) -> dict:
        serializer = ExperimentConfigSerializer(data=data)
        self.assertFalse(serializer.is_valid())
        return serializer.errors

    def test_valid_configuration(self):
        serializer = ExperimentConfigSerializer(data=simulate_config())
        self.assertTrue(serializer.is_valid(), serializer.errors)
        config = serializer.save()
        self.assertEqual(config.kind, ExperimentKind.SIMULATE)
        self.assertEqual(config.grid.half_width, 4.0)
        self.assertEqual(config.grid.size, 321)
        assert_allclose(config.times, [0.0, 0.5, 1.0])
        assert_allclose(np.diff(config.y0_nodes), 0.025)
        b_max = np.max(np.abs(config.profile.b(config.grid.nodes)))
        self.assertAlmostEqual(config.dt, 0.99 * 0.1 / b_max)
        self.assertEqual(config.nu_values, [1e-2])
        self.assertEqual(config.source["kind"], "simulate")
        self.assertFalse(config.strict)

    def test_defaults(self):
        config = parse_config(simulate_config())
        self.assertEqual(config.fit_window, (0.5, 2.0))
        self.assertEqual(config.scan.lambdas, 201)
        self.assertEqual(config.delta, 0.05)

    def test_times_required(self):
        data = simulate_config()
        del data["times"]
        self.assertIn("times", self.errors(data))

    def test_unresolved_critical_layer(self):
        errors = self.errors(simulate_config(modes={"k": [1], "nu": [1e-4]}))
        self.assertIn("spacing", errors["grid"])

    def test_larger_wavenumbers_are_harder_to_resolve(self):
        errors = self.errors(simulate_config(modes={"k": [1, 8], "nu": [1e-2]}))
        self.assertIn("spacing", errors["grid"])

    def test_time_step(self):
        errors = self.errors(simulate_config(times={"t_max": 1.0, "dt": 1.0}))
        self.assertIn("dt", errors["times"])

    def test_phase_resolution(self):
        errors = self.errors(
            simulate_config(grid={"spacing": 0.025, "margin": 3.0, "y0_spacing": 0.5})
        )
        self.assertIn("y0_spacing", errors["grid"])

    def test_profile_assumptions(self):
        errors = self.errors(simulate_config(profile={"kind": "bump", "amplitude": 5.0}))
        self.assertIn("profile", errors)

    def test_field_level_errors(self):
        cases = [
            ({"modes": {"k": [0], "nu": [1e-2]}}, ("modes", "k")),
            ({"modes": {"k": [1], "nu": [1.5]}}, ("modes", "nu")),
            ({"grid": {"spacing": -0.1}}, ("grid", "spacing")),
            ({"diagnostics": {"fit_window": [2.0, 1.0]}}, ("diagnostics", "fit_window")),
            ({"diagnostics": {"stream_window": [1.0]}}, ("diagnostics", "stream_window")),
            ({"scan": {"limit_eps": [1e-3, 1e-2]}}, ("scan", "limit_eps")),
            ({"scan": {"mu": 1.0}}, ("scan", "mu")),
            ({"scan": {"eps": [0.0]}}, ("scan", "eps")),
        ]
        for overrides, (section, name) in cases:
            with self.subTest(section=section, name=name):
                self.assertIn(name, self.errors(simulate_config(**overrides))[section])

    def test_kernel_scan_size(self):
        errors = self.errors(
            simulate_config(
                kind="kernel_verify",
                scan={"eps": [1e-2], "scaled_alphas": [0.0], "sources": [0.0, 1.0]},
            )
        )
        self.assertIn("sources", errors["scan"])

    def test_critical_points_inside_grid(self):
        scan = {"eps": [1e-2], "y0": [10.0]}
        errors = self.errors(simulate_config(kind="lap_scan", scan=scan))
        self.assertIn("y0", errors["scan"])

    def test_fit_windows_need_long_runs(self):
        errors = self.errors(simulate_config(kind="fit_decay"))
        self.assertIn("t_max", errors["times"])

    def test_dense_cap(self):
        errors = self.errors(
            simulate_config(
                kind="dsr_check", grid={"spacing": 0.001}, modes={"k": [1], "nu": [0.5]}
            )
        )
        self.assertIn("spacing", errors["grid"])


class ParseConfigTestCase(SimpleTestCase):
    def test_kind_default(self):
        data = simulate_config()
        del data["kind"]
        config = parse_config(data, ExperimentKind.SIMULATE)
        self.assertEqual(config.kind, ExperimentKind.SIMULATE)
        self.assertNotIn("kind", data)

    def test_kind_mismatch(self):
        with self.assertRaises(ConfigInvalid) as context:
            parse_config(simulate_config(), "lap_scan")
        self.assertIn("kind", context.exception.detail)

    def test_not_an_object(self):
        with self.assertRaises(ConfigInvalid):
            parse_config([1, 2, 3])

    def test_errors_are_field_level(self):
        with self.assertRaises(ConfigInvalid) as context:
            parse_config(simulate_config(times={"t_max": 1.0, "dt": 1.0}))
        self.assertIn("dt", context.exception.detail["times"])


class CheckResultSerializerTestCase(SimpleTestCase):
    def test_non_finite_values(self):
        data = CheckResultSerializer(CheckResult.info("rate", float("inf"))).data
        self.assertIsNone(data["value"])
        self.assertIsNone(data["threshold"])
        self.assertEqual(data["status"], "INFO")
