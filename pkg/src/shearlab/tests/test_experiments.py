import json
import tempfile
from pathlib import Path

import numpy as np

from django.test import SimpleTestCase, override_settings

from rest_framework.parsers import JSONParser

from shearlab.exceptions import ConfigInvalid, NearSingular, OverflowRisk, ResidualWarning
from shearlab.experiments import (
    MANIFEST_NAME,
    ArtifactWriter,
    _plain,
    load_config,
    parse_config,
    run_experiment,
)
from shearlab.models import CheckResult, ExperimentResult, RunManifest, Status
from shearlab.reports import ReportFormat, emit_report, text_table


def dsr_config(**overrides) -> dict:
    config = {
        "kind": "dsr_check",
        "profile": {"kind": "couette"},
        "grid": {"spacing": 0.05, "margin": 2.0},
        "modes": {"k": [1], "nu": [0.1]},
        "times": {"t_max": 10.0, "samples": 6},
        "scan": {"lambdas": 21},
        "workers": 2,
    }
    config.update(overrides)
    return config


class TemporaryDirectoryMixin:
    def setUp(self):
        super().setUp()
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        self.directory = Path(directory.name)


class RunExperimentTestCase(TemporaryDirectoryMixin, SimpleTestCase):
    def test_semigroup_check(self):
        manifest = run_experiment(parse_config(dsr_config()), self.directory / "run")
        self.assertTrue(manifest.passed)
        result = manifest.experiments[0]
        self.assertEqual(
            result.artifacts, ["semigroup_k1_nu0.1.csv", "resolvent_k1_nu0.1.csv"]
        )
        self.assertEqual(set(manifest.digests), set(result.artifacts))
        names = [check.name for check in manifest.checks]
        self.assertIn("semigroup envelope of the negative identity", names)
        self.assertIn("semigroup envelope constant k1_nu0.1", names)

        lines = (self.directory / "run" / "semigroup_k1_nu0.1.csv").read_text().splitlines()
        self.assertEqual(lines[0], "t,norm")
        self.assertEqual(len(lines), 7)

        with (self.directory / "run" / MANIFEST_NAME).open("rb") as stream:
            data = JSONParser().parse(stream)
        self.assertEqual(
            set(data),
            {"version", "started", "wall_clock", "passed", "config", "experiments", "digests"},
        )
        self.assertTrue(data["passed"])
        self.assertEqual(data["config"]["grid"]["spacing"], 0.05)

    def test_reproducible_artifacts(self):
        config = parse_config(dsr_config())
        first = run_experiment(config, self.directory / "first")
        second = run_experiment(config, self.directory / "second")
        self.assertEqual(first.digests, second.digests)

    def test_errors_name_the_experiment(self):
        config = parse_config(dsr_config(times={"t_max": 700.0, "samples": 3}))
        with self.assertRaises(OverflowRisk) as context:
            run_experiment(config, self.directory)
        self.assertIn("experiment='dsr_check'", str(context.exception))

    @override_settings(SHEARLAB={"WORKERS": 2, "SOLVE_RESIDUAL": -1.0})
    def test_strict_residual(self):
        config = {
            "kind": "resolvent",
            "profile": {"kind": "couette"},
            "grid": {"spacing": 0.025, "margin": 3.0},
            "modes": {"k": [1], "nu": [1e-2]},
            "strict": True,
        }
        with self.assertRaises(ResidualWarning), self.assertLogs("shearlab", "WARNING"):
            run_experiment(parse_config(config), self.directory)


class LoadConfigTestCase(TemporaryDirectoryMixin, SimpleTestCase):
    def test_load(self):
        path = self.directory / "config.json"
        path.write_text(json.dumps(dsr_config()))
        config = load_config(path, "dsr_check")
        self.assertEqual(config.grid.size, 121)
        self.assertEqual(config.workers, 2)

    def test_malformed_json(self):
        path = self.directory / "config.json"
        path.write_text("{not json")
        with self.assertRaises(ConfigInvalid) as context:
            load_config(path)
        self.assertIn("non_field_errors", context.exception.detail)

    def test_missing_file(self):
        with self.assertRaises(OSError):
            load_config(self.directory / "missing.json")


class ArtifactWriterTestCase(TemporaryDirectoryMixin, SimpleTestCase):
    def test_json_is_plain(self):
        writer = ArtifactWriter(self.directory)
        writer.json("values.json", {"rate": np.float64(0.5), "bad": np.inf, "z": 1 + 2j})
        data = json.loads((self.directory / "values.json").read_text())
        self.assertEqual(data, {"rate": 0.5, "bad": None, "z": [1.0, 2.0]})
        self.assertEqual(list(writer.digests()), ["values.json"])

    def test_plain(self):
        self.assertEqual(_plain(np.array([1.0, np.nan])), [1.0, None])
        self.assertEqual(_plain({1: (np.int64(2),)}), {"1": [2]})


class CheckResultTestCase(SimpleTestCase):
    def test_statuses(self):
        self.assertEqual(CheckResult.at_most("a", 1.0, 2.0).status, Status.PASS)
        self.assertEqual(CheckResult.at_least("a", 1.0, 2.0).status, Status.FAIL)
        self.assertTrue(CheckResult.holds("a", False).failed)
        self.assertFalse(CheckResult.info("a", 3.0).failed)
        result = ExperimentResult("lap_scan", checks=[CheckResult.at_least("a", 1.0, 2.0)])
        self.assertFalse(result.passed)

    def test_error_context(self):
        error = NearSingular("sigma_min = 1e-15").with_context(y0=0.5)
        self.assertIsInstance(error, NearSingular)
        self.assertEqual(str(error), "sigma_min = 1e-15 [y0=0.5]")
        self.assertIsInstance(error.__cause__, NearSingular)


class ReportTestCase(TemporaryDirectoryMixin, SimpleTestCase):
    def manifest(self, checks=()) -> RunManifest:
        experiments = [ExperimentResult("lap_scan", checks=list(checks))] if checks else []
        return RunManifest(
            config={"kind": "lap_scan"},
            version="1.0",
            started="2026-01-01T00:00:00+00:00",
            wall_clock=1.5,
            experiments=experiments,
        )

    def test_empty_table(self):
        lines = text_table(self.manifest()).splitlines()
        self.assertEqual(
            lines,
            [
                "shearlab 1.0, started 2026-01-01T00:00:00+00:00, 1.5 s",
                "experiment  check  status  value  threshold  source",
            ],
        )

    def test_table_rows(self):
        checks = [
            CheckResult.at_least("kappa", 0.5, 0.01, "lap_kappa_scan"),
            CheckResult.info("coupling", 0.25),
        ]
        lines = text_table(self.manifest(checks)).splitlines()
        self.assertEqual(len(lines), 4)
        self.assertEqual(
            lines[2].split(), ["lap_scan", "kappa", "PASS", "0.5", "0.01", "lap_kappa_scan"]
        )
        self.assertEqual(lines[3].split(), ["lap_scan", "coupling", "INFO", "0.25", "-"])

    def test_json_report(self):
        path = emit_report(self.manifest(), ReportFormat.JSON, self.directory)
        self.assertEqual(path.name, "report.json")
        with path.open("rb") as stream:
            data = JSONParser().parse(stream)
        self.assertEqual(data["experiments"], [])
        self.assertTrue(data["passed"])
        self.assertEqual(data["wall_clock"], 1.5)

    def test_text_report(self):
        path = emit_report(self.manifest(), "text_table", self.directory)
        self.assertEqual(path.read_text(), text_table(self.manifest()))


class PipelineTestCase(TemporaryDirectoryMixin, SimpleTestCase):
    """Small configurations of every pipeline, checked by their named results."""

    bump = {"kind": "bump", "amplitude": 0.3, "support_radius": 1.0}
    couette = {"kind": "couette"}

    def run_config(self, **config) -> RunManifest:
        config.setdefault("workers", 2)
        manifest = run_experiment(parse_config(config), self.directory / config["kind"])
        self.statuses = {check.name: check.status for check in manifest.checks}
        return manifest

    def assertPassed(self, *names):
        for name in names:
            with self.subTest(check=name):
                self.assertEqual(self.statuses[name], Status.PASS)

    def test_simulate(self):
        manifest = self.run_config(
            kind="simulate",
            profile=self.bump,
            grid={"spacing": 0.025, "margin": 3.0},
            modes={"k": [1], "nu": [1e-2]},
            times={"t_max": 2.0, "samples": 3, "dt": 0.005},
        )
        self.assertGreaterEqual(len(self.statuses), 6)
        self.assertPassed(
            "two-path agreement k1_nu0.01", "stream function consistency k1_nu0.01"
        )
        self.assertEqual(self.statuses["Gevrey profile bound k1_nu0.01"], Status.INFO)
        self.assertTrue((self.directory / "simulate" / "norms_k1_nu0.01.csv").exists())
        self.assertGreaterEqual(len(text_table(manifest).splitlines()) - 2, 6)

    def test_simulate_couette(self):
        self.run_config(
            kind="simulate",
            profile=self.couette,
            grid={"spacing": 0.025, "margin": 3.0},
            modes={"k": [1], "nu": [1e-2]},
            times={"t_max": 2.0, "samples": 3, "dt": 0.005},
        )
        self.assertPassed("two-path agreement k1_nu0.01")
        self.assertIn("Couette closed form, time stepper k1_nu0.01", self.statuses)

    def test_fit_decay(self):
        """Couette decay rates over a viscosity sweep scale like ``nu^(1/3)``."""
        manifest = self.run_config(
            kind="fit_decay",
            profile=self.couette,
            grid={"spacing": 0.00375, "margin": 6.0},
            modes={"k": [1], "nu": [1e-3, 3e-4, 1e-4, 3e-5]},
            times={"t_max": 65.0, "samples": 131},
        )
        self.assertPassed(
            "enhanced dissipation rate exponent k=1 (expected 1/3)",
            "stream function decay power k=1 nu=0.0001 (expected -2)",
        )
        measured = manifest.experiments[0].measured
        self.assertAlmostEqual(measured["k1_rate_exponent"], 1 / 3, delta=0.1)
        header = (self.directory / "fit_decay" / "decay_k1_nu0.0001.csv").read_text()
        self.assertTrue(header.startswith("t,l2_F,gevrey_F,l2_Phi,"))

    def test_resolvent(self):
        self.run_config(
            kind="resolvent",
            profile=self.bump,
            grid={"spacing": 0.025, "margin": 3.0},
            modes={"k": [1], "nu": [1e-2]},
            scan={"y0": [0.0]},
        )
        self.assertPassed(
            "coupled resolvent residual k1_nu0.01",
            "conjugation symmetry k1_nu0.01",
            "model Airy value at the origin",
        )

    def test_kernel_verify(self):
        manifest = self.run_config(
            kind="kernel_verify",
            profile=self.couette,
            grid={"spacing": 0.05},
            modes={"k": [1], "nu": [1e-2]},
            scan={"eps": [1e-2], "y0": [0.0]},
        )
        self.assertPassed("entanglement inequality", "transformed kernel formulations agree")
        self.assertEqual(manifest.experiments[0].measured["airy"]["columns"], 15)

    def test_lap_scan_couette(self):
        self.run_config(
            kind="lap_scan",
            profile=self.couette,
            grid={"spacing": 0.025, "margin": 3.0},
            modes={"k": [1], "nu": [1e-2]},
            scan={"eps": [1e-2], "y0": [0.0]},
        )
        self.assertPassed("limiting absorption constant is one for Couette k=1")
        self.assertEqual(self.statuses["coupling operator norm k=1"], Status.INFO)

    def test_lap_scan_bump(self):
        self.run_config(
            kind="lap_scan",
            profile=self.bump,
            grid={"spacing": 0.0125, "margin": 2.0},
            modes={"k": [1], "nu": [1e-2]},
            scan={"eps": [1e-2, 1e-3], "y0": [0.0]},
        )
        self.assertPassed(
            "limiting absorption constant k=1",
            "limiting absorption constant stable in eps k=1",
        )

    def test_theta_bounds(self):
        self.run_config(
            kind="theta_bounds",
            profile=self.bump,
            grid={"spacing": 0.0125, "margin": 7.0, "y0_spacing": 0.05},
            modes={"k": [1], "nu": [1e-2]},
            scan={"w": [0.0]},
        )
        self.assertPassed("Theta formulations agree k1_nu0.01 w=0")
        self.assertEqual(self.statuses["Theta Gevrey bound k1_nu0.01"], Status.INFO)

    def test_dsr_exponent(self):
        """With several viscosities the resolvent bound exponent is checked against 1/3."""
        config = dsr_config(
            grid={"spacing": 0.04, "margin": 2.0}, modes={"k": [1], "nu": [0.1, 0.05]}
        )
        manifest = self.run_config(**config)
        name = "resolvent bound exponent k=1 (expected 1/3)"
        check = next(check for check in manifest.checks if check.name == name)
        self.assertEqual(check.threshold, 0.1)
        slope = manifest.experiments[0].measured["k1_resolvent_exponent"]
        self.assertAlmostEqual(check.value, abs(slope - 1 / 3))
