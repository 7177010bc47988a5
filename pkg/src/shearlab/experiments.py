"""Experiment pipelines and artifact emission.

Each experiment kind maps to one pipeline taking the validated configuration
and an :class:`ArtifactWriter`. :func:`run_experiment` dispatches to it, times
the run, digests every emitted file and writes ``manifest.json``.

CSV files start with one header line naming the columns. Only fixed
quadrature and deterministic reductions are used, so an identical
configuration reproduces identical CSV files.
"""

import csv
import hashlib
import logging
import time
import warnings
from importlib import metadata
from pathlib import Path

import numpy as np
from scipy import special

from django.utils import timezone
from django.utils.translation import gettext_lazy as _

from rest_framework.exceptions import ParseError
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from shearlab.airy import (
    ResolventQuery,
    airy_kernel_column,
    airy_kernel_vw,
    airy_kernel_vw_direct,
    airy_resolvent_solve,
    couette_model_resolvent,
    energy_ratio,
    model_airy_W,
    pointwise_envelope,
    verify_airy_bounds,
    verify_vw_bounds,
)
from shearlab.conf import shearlab_settings
from shearlab.diagnostics import (
    FitModel,
    GevreyWeight,
    fit_rate,
    gevrey_norm_1d,
    gevrey_norm_2d,
    multiplier_kernel_probe,
    stream_profile_norm,
)
from shearlab.evolution import couette_closed_form, evolve_direct, evolve_representation
from shearlab.exceptions import (
    AliasingWarning,
    BoundaryLeakage,
    ConfigInvalid,
    ResidualWarning,
    ShearlabError,
)
from shearlab.grids import Grid
from shearlab.models import (
    CheckResult,
    ExperimentConfig,
    ExperimentKind,
    ExperimentResult,
    RunManifest,
)
from shearlab.orr_sommerfeld import (
    alpha_limit_check,
    default_initial_data,
    lap_fourth_order_ratio,
    lap_kappa_scan,
    os_resolvent_solve,
    pv_delta_limit_check,
    spectral_density,
    stream_flatness,
    theta_integral_solve,
)
from shearlab.profile import ModeParams, ProfileKind, build_profile, invert_profile
from shearlab.semigroup import (
    GeneratorMatrix,
    default_lambdas,
    discretize_generator,
    dsr_envelope_check,
)
from shearlab.serializers import ExperimentConfigSerializer, RunManifestSerializer

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

# Acceptance thresholds of the checks.
TWO_PATH_TOLERANCE = 5e-3
CLOSED_FORM_TOLERANCE = 1e-3
RECONSTRUCTION_TOLERANCE = 1e-3
RESIDUAL_TOLERANCE = 1e-8
ELLIPTIC_TOLERANCE = 1e-10
SYMMETRY_TOLERANCE = 1e-10
MODEL_AIRY_TOLERANCE = 1e-4
MODEL_AIRY_ORIGIN_TOLERANCE = 1e-6
LIMIT_TOLERANCE = 5e-2
THETA_TOLERANCE = 5e-3
BAND_RATIO_CAP = 10.0
FIT_RESIDUAL_CAP = 0.15
FORMULATION_GAP_TOLERANCE = 1e-5
ENTANGLEMENT_FLOOR = -1e-10
KAPPA_FLOOR = 0.01
STABILITY_FACTOR = 2.0
DISSIPATION_EXPONENT = 1 / 3
DISSIPATION_EXPONENT_TOLERANCE = 0.1
STREAM_POWER = -2.0
STREAM_POWER_TOLERANCE = 0.3

# Viscosity at which the stream function decay power is checked.
STREAM_REFERENCE_NU = 1e-4

# Kernel grids span this many critical-layer widths beyond the sources.
KERNEL_REACH = 15.0

# Kernel grids use this many nodes per critical-layer width.
KERNEL_REFINEMENT = 40.0

# Model-Airy comparisons use this many nodes per critical-layer width.
MODEL_AIRY_REFINEMENT = 100.0

# Largest number of samples per axis of resampled Theta fields.
THETA_SAMPLES = 1025


def load_config(path, kind: ExperimentKind | str | None = None) -> ExperimentConfig:
    """Parse and validate a JSON configuration file.

    :raises ConfigInvalid: when the file is not JSON or fails validation.
    :raises OSError: when the file cannot be read.
    """
    with Path(path).open("rb") as stream:
        try:
            data = JSONParser().parse(stream)
        except ParseError as error:
            raise ConfigInvalid({"non_field_errors": [str(error.detail)]}) from error
    return parse_config(data, kind)


def parse_config(data, kind: ExperimentKind | str | None = None) -> ExperimentConfig:
    """Validate configuration data, optionally requiring a kind.

    :raises ConfigInvalid: with field-level messages.
    """
    if not isinstance(data, dict):
        raise ConfigInvalid({"non_field_errors": [_("The configuration must be an object.")]})
    if kind is not None:
        kind = ExperimentKind(kind)
        data = dict(data)
        if data.setdefault("kind", str(kind)) != kind:
            raise ConfigInvalid(
                {"kind": [_("Expected a {0} configuration.").format(kind)]}
            )
    serializer = ExperimentConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigInvalid(serializer.errors)
    return serializer.save()


def _plain(value):
    """Recursively convert numpy values to JSON types, non-finite floats to ``None``."""
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(item) for item in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return [_plain(value.real), _plain(value.imag)]
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


class ArtifactWriter:
    """Writes artifacts into one directory and remembers their names."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.names: list[str] = []

    def csv(self, name: str, header, rows) -> str:
        with (self.directory / name).open("w", newline="") as stream:
            writer = csv.writer(stream)
            writer.writerow(header)
            writer.writerows(rows)
        self.names.append(name)
        logger.debug("Wrote %s.", name)
        return name

    def json(self, name: str, data) -> str:
        rendered = JSONRenderer().render(_plain(data), renderer_context={"indent": 2})
        (self.directory / name).write_bytes(rendered)
        self.names.append(name)
        logger.debug("Wrote %s.", name)
        return name

    def digests(self) -> dict[str, str]:
        return {
            name: hashlib.sha256((self.directory / name).read_bytes()).hexdigest()
            for name in self.names
        }


def _tag(mode: ModeParams) -> str:
    return f"k{mode.k}_nu{mode.nu:g}"


def _gaussian(y):
    return np.exp(-np.asarray(y) ** 2)


def _shifted_gaussian(y):
    return np.exp(-((np.asarray(y) - 0.3) ** 2) / 0.5)


def _variation(values) -> float:
    values = np.asarray(list(values), dtype=float)
    return float(values.max() / values.min())


def simulate(config: ExperimentConfig, writer: ArtifactWriter) -> ExperimentResult:
    """Both evolution paths for every mode, their agreement and profile norms."""
    result = ExperimentResult(ExperimentKind.SIMULATE)
    profile, grid, times = config.profile, config.grid, config.times
    initial = default_initial_data(profile, grid)
    initial_norm = grid.l2_norm(initial.omega0)
    for mode in config.modes:
        tag = _tag(mode)
        field = spectral_density(profile, mode, initial, config.y0_nodes, config.workers)
        represented = evolve_representation(field, times, profile, workers=config.workers)
        stepped = evolve_direct(profile, mode, initial, times, config.dt)
        agreement = represented.relative_difference(stepped)
        checks = [
            CheckResult.at_most(
                f"two-path agreement {tag}",
                agreement.max(),
                TWO_PATH_TOLERANCE,
                "evolve_representation vs evolve_direct [modes, times]",
            ),
            CheckResult.at_most(
                f"spectral density residual {tag}",
                field.residual,
                RESIDUAL_TOLERANCE,
                "spectral_density [grid]",
            ),
            CheckResult.at_most(
                f"stream function consistency {tag}",
                stepped.elliptic_defect(),
                ELLIPTIC_TOLERANCE,
                "evolve_direct [grid]",
            ),
        ]
        if times[0] == 0:
            start = grid.l2_norm(represented.omega_t[0] - initial.omega0) / initial_norm
            checks.append(
                CheckResult.at_most(
                    f"initial data reconstruction {tag}",
                    start,
                    RECONSTRUCTION_TOLERANCE,
                    "evolve_representation [grid.y0_spacing]",
                )
            )
        if profile.is_couette:
            exact = couette_closed_form(mode, initial, times)
            for name, series in (("representation", represented), ("time stepper", stepped)):
                checks.append(
                    CheckResult.at_most(
                        f"Couette closed form, {name} {tag}",
                        series.relative_difference(exact).max(),
                        CLOSED_FORM_TOLERANCE,
                        "couette_closed_form [profile, times]",
                    )
                )

        represented_rows = np.array(list(represented.norm_rows(config.delta)))
        stepped_rows = np.array(list(stepped.norm_rows(config.delta)))
        h = stepped.v_spacing
        weighted = np.array(
            [
                stream_profile_norm(Phi, h, mode.k, t, config.delta, config.strict)
                for t, Phi in zip(times, stepped.Phi_t)
            ]
        )
        checks += [
            CheckResult.info(
                f"vorticity profile bound {tag}",
                stepped_rows[:, 1].max() / stepped_rows[0, 1],
                "extract_profiles, gevrey_norm_1d [diagnostics.delta=0]",
            ),
            CheckResult.info(
                f"Gevrey profile bound {tag}",
                stepped_rows[:, 2].max() / stepped_rows[0, 2],
                "extract_profiles, gevrey_norm_1d [diagnostics.delta]",
            ),
            CheckResult.info(
                f"weighted stream profile bound {tag}",
                weighted.max() / stepped_rows[0, 2],
                "stream_profile_norm [diagnostics.delta]",
            ),
        ]
        result.checks += checks
        result.measured[tag] = {
            "two_path_difference": agreement.max(),
            "spectral_density_residual": field.residual,
            "w_range": [field.w_nodes[0], field.w_nodes[-1]],
        }

        writer.csv(
            f"norms_{tag}.csv",
            (
                "t",
                "l2_F_representation",
                "gevrey_F_representation",
                "l2_Phi_representation",
                "l2_F_direct",
                "gevrey_F_direct",
                "l2_Phi_direct",
                "weighted_Phi_direct",
                "relative_difference",
            ),
            np.column_stack(
                [represented_rows, stepped_rows[:, 1:], weighted, agreement]
            ).tolist(),
        )
        if config.write_fields:
            writer.csv(
                f"profiles_{tag}.csv",
                ("t", "v", "re_F", "im_F", "re_Phi", "im_Phi"),
                represented.rows(),
            )
            writer.csv(
                f"spectral_density_{tag}.csv",
                ("v", "w", "re_Omega", "im_Omega", "re_Theta", "im_Theta"),
                field.rows(),
            )
            writer.json(f"spectral_density_{tag}.json", field.header())
    return result


def fit_decay(config: ExperimentConfig, writer: ArtifactWriter) -> ExperimentResult:
    """Enhanced dissipation, uniform inviscid damping and stream decay over a viscosity sweep."""
    result = ExperimentResult(ExperimentKind.FIT_DECAY)
    profile, grid, times = config.profile, config.grid, config.times
    initial = default_initial_data(profile, grid)
    nu_values = config.nu_values
    for k in config.k_values:
        rates, gevrey_ratios, stream_fits = {}, {}, {}
        for nu in nu_values:
            mode = ModeParams(k, nu)
            tag = _tag(mode)
            stepped = evolve_direct(profile, mode, initial, times, config.dt)
            rows = np.array(list(stepped.norm_rows(config.delta)))
            t = rows[:, 0]
            enhanced = rows[:, 1] * np.exp(nu * k**2 * t)
            scale = nu ** (-1 / 3) * abs(k) ** (-2 / 3)
            lo, hi = config.fit_window
            fit = fit_rate(t, enhanced, FitModel.EXPONENTIAL, (lo * scale, hi * scale))
            # The stream profile relative to the dissipated vorticity profile.
            damped = rows[:, 3] * rows[0, 1] / rows[:, 1]
            stream = fit_rate(t, damped, FitModel.POWER, config.stream_window)
            rates[nu] = fit.rate
            gevrey_ratios[nu] = rows[:, 2].max() / rows[0, 2]
            stream_fits[nu] = stream
            result.measured[tag] = {
                "enhanced_dissipation": fit.as_dict(),
                "stream_decay": stream.as_dict(),
                "gevrey_ratio": gevrey_ratios[nu],
            }
            result.checks.append(
                CheckResult.info(
                    f"enhanced dissipation rate {tag}",
                    fit.rate,
                    "fit_rate [diagnostics.fit_window]",
                )
            )
            writer.csv(
                f"decay_{tag}.csv",
                ("t", "l2_F", "gevrey_F", "l2_Phi", "l2_F_heat_removed", "l2_Phi_relative"),
                np.column_stack([rows, enhanced, damped]).tolist(),
            )

        if len(nu_values) > 1:
            slope, _intercept = np.polyfit(
                np.log(nu_values), np.log([rates[nu] for nu in nu_values]), 1
            )
            result.checks += [
                CheckResult.at_most(
                    f"enhanced dissipation rate exponent k={k} (expected 1/3)",
                    abs(slope - DISSIPATION_EXPONENT),
                    DISSIPATION_EXPONENT_TOLERANCE,
                    "fit_rate over modes.nu [diagnostics.fit_window]",
                ),
                CheckResult.at_most(
                    f"uniform inviscid damping k={k}",
                    _variation(gevrey_ratios.values()),
                    STABILITY_FACTOR,
                    "gevrey_norm_1d over modes.nu [diagnostics.delta]",
                ),
            ]
            result.measured[f"k{k}_rate_exponent"] = slope
        reference = min(nu_values, key=lambda nu: abs(np.log(nu / STREAM_REFERENCE_NU)))
        power = stream_fits[reference].rate
        result.checks.append(
            CheckResult.at_most(
                f"stream function decay power k={k} nu={reference:g} (expected -2)",
                abs(power - STREAM_POWER),
                STREAM_POWER_TOLERANCE,
                "fit_rate [diagnostics.stream_window]",
            )
        )
    return result


def _theta_gevrey_ratio(field, initial, k: int, delta: float, strict: bool) -> float:
    samples = min(field.v_nodes.size, THETA_SAMPLES)
    v, w, theta = field.theta_uniform(samples, min(field.w_nodes.size, THETA_SAMPLES))
    weight = GevreyWeight(delta, k)
    h_v, h_w = v[1] - v[0], w[1] - w[0]
    data = initial.F0_at(v)
    return gevrey_norm_2d(theta, weight, h_v, h_w, strict=strict) / gevrey_norm_1d(
        data, weight, h_v, strict=strict
    )


def theta_bounds(config: ExperimentConfig, writer: ArtifactWriter) -> ExperimentResult:
    """Agreement of the two ``Theta`` formulations and its Gevrey bound across viscosities."""
    result = ExperimentResult(ExperimentKind.THETA_BOUNDS)
    profile, grid = config.profile, config.grid
    initial = default_initial_data(profile, grid)
    for k in config.k_values:
        ratios, plain_ratios = {}, {}
        for nu in config.nu_values:
            mode = ModeParams(k, nu)
            tag = _tag(mode)
            rows = []
            for w in config.scan.w:
                solution = theta_integral_solve(profile, mode, initial, w)
                query = ResolventQuery(mode.eps, 0.0, float(invert_profile(profile, w)))
                direct = os_resolvent_solve(profile, mode, query, initial.omega0, grid).psi
                difference = grid.l2_norm(solution.theta - direct) / grid.l2_norm(direct)
                rows.append((w, difference, solution.h1k_ratio))
                result.checks.append(
                    CheckResult.at_most(
                        f"Theta formulations agree {tag} w={w:g}",
                        difference,
                        THETA_TOLERANCE,
                        "theta_integral_solve vs os_resolvent_solve [scan.w]",
                    )
                )
            writer.csv(
                f"theta_{tag}.csv", ("w", "relative_difference", "h1k_ratio"), rows
            )
            field = spectral_density(profile, mode, initial, config.y0_nodes, config.workers)
            ratios[nu] = _theta_gevrey_ratio(field, initial, k, config.delta, config.strict)
            plain_ratios[nu] = _theta_gevrey_ratio(field, initial, k, 0.0, config.strict)
            result.checks += [
                CheckResult.info(
                    f"Theta Gevrey bound {tag}",
                    ratios[nu],
                    "gevrey_norm_2d [diagnostics.delta]",
                ),
                CheckResult.info(
                    f"Theta unweighted bound {tag}",
                    plain_ratios[nu],
                    "gevrey_norm_2d [delta=0]",
                ),
            ]
        writer.csv(
            f"theta_bounds_k{k}.csv",
            ("nu", "gevrey_ratio", "unweighted_ratio"),
            [(nu, ratios[nu], plain_ratios[nu]) for nu in config.nu_values],
        )
        if len(ratios) > 1:
            result.checks.append(
                CheckResult.at_most(
                    f"Theta Gevrey bound uniform in nu k={k}",
                    _variation(ratios.values()),
                    STABILITY_FACTOR,
                    "gevrey_norm_2d over modes.nu [diagnostics.delta]",
                )
            )
    return result


def _model_airy_checks(eps: float, writer: ArtifactWriter) -> list[CheckResult]:
    """Couette resolvent of a constant against the explicit model solution."""
    couette = build_profile(ProfileKind.COUETTE, 0.0, 1.0)
    scale = abs(eps) ** (1 / 3)
    grid = Grid(2.0, scale / MODEL_AIRY_REFINEMENT)
    query = ResolventQuery(eps, 0.0, 0.0)
    numeric = airy_resolvent_solve(couette, query, np.ones(grid.size, dtype=complex), grid)
    inside = np.flatnonzero(np.abs(grid.nodes) <= 1.0)[::10]
    y = grid.nodes[inside]
    model = couette_model_resolvent(eps, 0.0, y)
    error = np.max(np.abs(numeric[inside] - model)) / np.max(np.abs(model))
    origin = model_airy_W(0.0, np.array([0.0])).values[0]
    expected = -(3 ** (-2 / 3)) * special.gamma(1 / 3)
    writer.csv(
        "model_airy.csv",
        ("y", "re_numeric", "im_numeric", "re_model", "im_model"),
        zip(y, numeric[inside].real, numeric[inside].imag, model.real, model.imag),
    )
    return [
        CheckResult.at_most(
            f"model Airy oracle eps={eps:g}",
            error,
            MODEL_AIRY_TOLERANCE,
            "airy_resolvent_solve vs model_airy_W",
        ),
        CheckResult.at_most(
            "model Airy value at the origin",
            abs(origin - expected),
            MODEL_AIRY_ORIGIN_TOLERANCE,
            "model_airy_W",
        ),
    ]


def _limit_checks(config: ExperimentConfig, writer: ArtifactWriter) -> list[CheckResult]:
    profile = config.profile
    y0 = config.scan.y0[0]
    eps_sequence = np.asarray(config.scan.limit_eps)
    checks, rows = [], []
    for side, sequence in (("eps>0", eps_sequence), ("eps<0", -eps_sequence)):
        report = pv_delta_limit_check(profile, _gaussian, _shifted_gaussian, y0, sequence)
        rows += [("principal value", eps, error) for eps, error in zip(report.eps, report.errors)]
        checks += [
            CheckResult.holds(
                f"distributional limit error decreasing {side}",
                report.decreasing,
                source="pv_delta_limit_check [scan.limit_eps]",
            ),
            CheckResult.at_most(
                f"distributional limit error {side}",
                report.errors[-1],
                LIMIT_TOLERANCE,
                "pv_delta_limit_check [scan.limit_eps]",
            ),
            CheckResult.holds(
                f"delta term sign {side}",
                report.delta_sign == report.expected_sign,
                report.delta_sign,
                "pv_delta_limit_check [scan.limit_eps]",
            ),
        ]
    alpha = alpha_limit_check(profile, _gaussian, y0, 1.0, eps_sequence)
    checks.append(
        CheckResult.holds(
            "nonzero-alpha limit error decreasing",
            alpha.decreasing,
            alpha.errors[-1],
            "alpha_limit_check [scan.limit_eps]",
        )
    )
    rows += [("nonzero alpha", eps, error) for eps, error in zip(alpha.eps, alpha.errors)]
    writer.csv("limits.csv", ("limit", "eps", "error"), rows)
    return checks


def resolvent(config: ExperimentConfig, writer: ArtifactWriter) -> ExperimentResult:
    """Coupled resolvent estimates over the modes, oracles and distributional limits."""
    result = ExperimentResult(ExperimentKind.RESOLVENT)
    profile, grid = config.profile, config.grid
    f = default_initial_data(profile, grid).omega0
    rows = []
    energies: dict[int, list[float]] = {}
    for mode in config.modes:
        tag = _tag(mode)
        residual, symmetry = 0.0, 0.0
        for ratio in config.scan.alpha_ratios:
            for y0 in config.scan.y0:
                query = ResolventQuery(mode.eps, ratio * mode.eps, y0)
                solution = os_resolvent_solve(profile, mode, query, f, grid)
                flipped = ModeParams(-mode.k, mode.nu)
                mirror = os_resolvent_solve(
                    profile,
                    flipped,
                    ResolventQuery(-query.eps, -query.alpha, y0),
                    f,
                    grid,
                )
                symmetry = max(
                    symmetry,
                    np.max(np.abs(mirror.w + np.conj(solution.w))) / np.max(np.abs(solution.w)),
                )
                residual = max(residual, solution.residual)
                energy = energy_ratio(query, f, solution.w, grid)
                value, derivative = pointwise_envelope(query, f, solution.w, grid)
                flatness = stream_flatness(solution, grid)
                fourth = lap_fourth_order_ratio(profile, mode, query, f, grid)
                energies.setdefault(mode.k, []).append(energy)
                rows.append(
                    (
                        mode.k,
                        mode.nu,
                        query.eps,
                        query.alpha,
                        y0,
                        solution.residual,
                        energy,
                        value,
                        derivative,
                        flatness,
                        fourth,
                    )
                )
        result.checks += [
            CheckResult.at_most(
                f"coupled resolvent residual {tag}",
                residual,
                RESIDUAL_TOLERANCE,
                "os_resolvent_solve [modes, scan.alpha_ratios, scan.y0]",
            ),
            CheckResult.at_most(
                f"conjugation symmetry {tag}",
                symmetry,
                SYMMETRY_TOLERANCE,
                "os_resolvent_solve at (-k, -eps, -alpha)",
            ),
        ]
    for k, values in energies.items():
        result.checks.append(
            CheckResult.info(
                f"resolvent energy bound k={k}",
                max(values),
                "energy_ratio [modes, scan.alpha_ratios, scan.y0]",
            )
        )
    writer.csv(
        "resolvent_scan.csv",
        (
            "k",
            "nu",
            "eps",
            "alpha",
            "y0",
            "residual",
            "energy_ratio",
            "value_constant",
            "derivative_constant",
            "stream_flatness",
            "fourth_order_ratio",
        ),
        rows,
    )
    smallest = min((mode.eps for mode in config.modes if mode.eps > 0), default=None)
    if smallest is not None:
        result.checks += _model_airy_checks(smallest, writer)
    result.checks += _limit_checks(config, writer)
    result.measured["columns"] = len(rows)
    return result


def _kernel_grid(scale: float, config: ExperimentConfig) -> Grid:
    reach = max(abs(y0) for y0 in config.scan.y0) + (
        max(abs(z) for z in config.scan.sources) + KERNEL_REACH
    ) * scale
    return Grid(reach, scale / KERNEL_REFINEMENT)


def kernel_verify(config: ExperimentConfig, writer: ArtifactWriter) -> ExperimentResult:
    """Envelope constants of Airy kernels in both variable sets and of the Gevrey multiplier."""
    result = ExperimentResult(ExperimentKind.KERNEL_VERIFY)
    profile, scan = config.profile, config.scan
    columns, vw_columns, diagonal = [], [], []
    formulation_gap = 0.0
    for eps in scan.eps:
        scale = abs(eps) ** (1 / 3)
        grid = _kernel_grid(scale, config)
        for scaled_alpha in scan.scaled_alphas:
            alpha = float(np.sign(eps)) * scaled_alpha * scale
            for y0 in scan.y0:
                query = ResolventQuery(eps, alpha, y0)
                for Z in scan.sources:
                    column = airy_kernel_column(profile, query, y0 + Z * scale, grid)
                    columns.append(column)
                    at = grid.nearest_index(column.source)
                    value = column.values[at]
                    diagonal.append((eps, alpha, y0, column.source, value.real, value.imag))
        mode = ModeParams(int(np.sign(eps)), abs(eps))
        for y0 in scan.y0:
            w = float(profile.b(y0))
            for Z in scan.sources:
                mapped = airy_kernel_vw(profile, mode, Z * scale, w, grid)
                direct = airy_kernel_vw_direct(profile, mode, Z * scale, w, grid)
                vw_columns.append(mapped)
                formulation_gap = max(
                    formulation_gap,
                    np.max(np.abs(direct.values - mapped.values)) / np.max(np.abs(mapped.values)),
                )

    report = verify_airy_bounds(columns)
    vw_report = verify_vw_bounds(vw_columns)
    probe = multiplier_kernel_probe(scan.mu, config.k_values[0], np.linspace(2.0, 12.0, 11))
    result.checks += [
        CheckResult.at_most(
            "kernel diagonal comparability band",
            report.band_ratio,
            BAND_RATIO_CAP,
            "verify_airy_bounds [scan.eps, scan.scaled_alphas, scan.sources]",
        ),
        CheckResult.holds(
            "kernel off-diagonal decay rate positive",
            report.decay_rate > 0,
            report.decay_rate,
            "verify_airy_bounds",
        ),
        CheckResult.at_most(
            "kernel envelope fit residual",
            report.fit_residual,
            FIT_RESIDUAL_CAP,
            "verify_airy_bounds",
        ),
        CheckResult.at_least(
            "entanglement inequality",
            report.entanglement_min,
            ENTANGLEMENT_FLOOR,
            "entanglement_functional with fitted c0",
        ),
        CheckResult.info("kernel decay constant c0", report.c0, "verify_airy_bounds"),
        CheckResult.info(
            "kernel derivative envelope constant",
            report.derivative_constant,
            "verify_airy_bounds",
        ),
        CheckResult.info(
            "kernel weighted energy bound", report.weighted_energy_max, "verify_airy_bounds"
        ),
        CheckResult.info(
            "kernel gradient energy bound", report.gradient_energy_max, "verify_airy_bounds"
        ),
        CheckResult.holds(
            "transformed kernel decay rate positive",
            vw_report.decay_rate > 0,
            vw_report.decay_rate,
            "verify_vw_bounds [scan.eps, scan.y0, scan.sources]",
        ),
        CheckResult.info(
            "transformed kernel value constant", vw_report.value_constant, "verify_vw_bounds"
        ),
        CheckResult.info(
            "transformed kernel derivative constant",
            vw_report.derivative_constant,
            "verify_vw_bounds",
        ),
        CheckResult.at_most(
            "transformed kernel formulations agree",
            formulation_gap,
            FORMULATION_GAP_TOLERANCE,
            "airy_kernel_vw vs airy_kernel_vw_direct",
        ),
        CheckResult.holds(
            "Gevrey multiplier kernel decay",
            probe.c0 > 0,
            probe.c0,
            "multiplier_kernel_probe [scan.mu]",
        ),
    ]
    result.measured.update(
        airy=report.as_dict(), vw=vw_report.as_dict(), multiplier=probe.as_dict()
    )
    writer.csv(
        "kernel_diagonal.csv", ("eps", "alpha", "y0", "z", "re_K", "im_K"), diagonal
    )
    if config.write_fields:
        writer.csv(
            "kernel_columns.csv",
            ("eps", "alpha", "y0", "z", "y", "re_K", "im_K", "re_dK", "im_dK"),
            (
                (column.query.eps, column.query.alpha, column.query.y0, column.source, *row)
                for column in columns
                for row in column.rows()
            ),
        )
    writer.json("kernel_bounds.json", result.measured)
    return result


def lap_scan(config: ExperimentConfig, writer: ArtifactWriter) -> ExperimentResult:
    """The limiting-absorption constant over ``(eps, alpha, y0)`` for every wavenumber."""
    result = ExperimentResult(ExperimentKind.LAP_SCAN)
    profile, scan = config.profile, config.scan
    for k in config.k_values:
        report = lap_kappa_scan(
            profile, k, scan.eps, scan.alpha_ratios, scan.y0, config.grid, config.workers
        )
        if profile.is_couette:
            result.checks.append(
                CheckResult.at_most(
                    f"limiting absorption constant is one for Couette k={k}",
                    abs(report.kappa_hat - 1.0),
                    1e-12,
                    "lap_kappa_scan [scan]",
                )
            )
        else:
            result.checks += [
                CheckResult.at_least(
                    f"limiting absorption constant k={k}",
                    report.kappa_hat,
                    KAPPA_FLOOR,
                    "lap_kappa_scan [scan]",
                ),
                CheckResult.at_most(
                    f"limiting absorption constant stable in eps k={k}",
                    _variation(report.kappa_by_eps().values()),
                    STABILITY_FACTOR,
                    "lap_kappa_scan [scan.eps]",
                ),
            ]
        result.checks.append(
            CheckResult.info(
                f"coupling operator norm k={k}",
                report.coupling_norm_max,
                "lap_kappa_scan [scan]",
            )
        )
        result.measured[f"k{k}"] = report.as_dict()
        writer.csv(
            f"lap_k{k}.csv",
            ("eps", "alpha", "y0", "kappa", "coupling_norm"),
            [
                (point.eps, point.alpha, point.y0, point.kappa, point.coupling_norm)
                for point in report.points
            ],
        )
    return result


def _reference_generators():
    skew = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return {
        "negative identity": -np.eye(3),
        "damped rotation": -np.eye(2) + skew,
    }


def dsr_check(config: ExperimentConfig, writer: ArtifactWriter) -> ExperimentResult:
    """Semigroup envelope constants of reference matrices and of the discretized generators."""
    result = ExperimentResult(ExperimentKind.DSR_CHECK)
    times = config.times
    for name, matrix in _reference_generators().items():
        generator = GeneratorMatrix.from_matrix(matrix)
        lambdas = np.linspace(-5.0, 5.0, config.scan.lambdas)
        report = dsr_envelope_check(generator, times, lambdas, config.workers)
        result.checks.append(
            CheckResult.at_most(
                f"semigroup envelope of the {name}",
                abs(report.C0_required - 1.0),
                1e-6,
                "dsr_envelope_check",
            )
        )

    for k in config.k_values:
        nus, mus = [], []
        for nu in config.nu_values:
            mode = ModeParams(k, nu)
            tag = _tag(mode)
            generator = discretize_generator(config.profile, mode, config.grid)
            lambdas = default_lambdas(generator, config.scan.lambdas)
            report = dsr_envelope_check(generator, times, lambdas, config.workers)
            nus.append(nu)
            mus.append(report.mu)
            result.checks += [
                CheckResult.at_most(
                    f"semigroup envelope constant {tag}",
                    report.C0_required,
                    shearlab_settings.C0_CAP,
                    "dsr_envelope_check [grid, times]",
                ),
                CheckResult.info(
                    f"imaginary-axis resolvent bound {tag}",
                    report.mu,
                    "resolvent_scan [scan.lambdas]",
                ),
            ]
            result.measured[tag] = report.as_dict()
            writer.csv(f"semigroup_{tag}.csv", ("t", "norm"), zip(report.times, report.norms))
            writer.csv(f"resolvent_{tag}.csv", ("lambda", "sigma_min"), report.scan.rows())

        roots = np.cbrt(nus)
        c = float(np.dot(mus, roots) / np.dot(roots, roots))
        result.checks.append(
            CheckResult.holds(
                f"resolvent bound proportional to nu^(1/3) k={k}",
                c > 0 and min(mus) > 0,
                c,
                "resolvent_scan over modes.nu",
            )
        )
        if len(nus) > 1:
            slope, _intercept = np.polyfit(np.log(nus), np.log(mus), 1)
            result.checks.append(
                CheckResult.at_most(
                    f"resolvent bound exponent k={k} (expected 1/3)",
                    abs(slope - DISSIPATION_EXPONENT),
                    DISSIPATION_EXPONENT_TOLERANCE,
                    "resolvent_scan over modes.nu",
                )
            )
            result.measured[f"k{k}_resolvent_exponent"] = slope
    return result


PIPELINES = {
    ExperimentKind.SIMULATE: simulate,
    ExperimentKind.RESOLVENT: resolvent,
    ExperimentKind.KERNEL_VERIFY: kernel_verify,
    ExperimentKind.LAP_SCAN: lap_scan,
    ExperimentKind.DSR_CHECK: dsr_check,
    ExperimentKind.FIT_DECAY: fit_decay,
    ExperimentKind.THETA_BOUNDS: theta_bounds,
}


def tool_version() -> str:
    try:
        return metadata.version("shearlab")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_manifest(manifest: RunManifest, directory) -> Path:
    path = Path(directory) / MANIFEST_NAME
    data = RunManifestSerializer(manifest).data
    path.write_bytes(JSONRenderer().render(data, renderer_context={"indent": 2}))
    return path


def run_experiment(config: ExperimentConfig, directory) -> RunManifest:
    """Run the pipeline of ``config.kind`` and write its artifacts and manifest.

    In strict mode boundary leakage, aliasing and residual warnings are raised as errors.

    :raises ShearlabError: from the pipeline, with the experiment kind appended.
    :raises OSError: when the output directory is not writable.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    writer = ArtifactWriter(directory)
    started = timezone.now()
    clock = time.perf_counter()
    logger.info("Running %s experiment into %s.", config.kind, directory)
    with warnings.catch_warnings():
        if config.strict:
            warnings.simplefilter("error", BoundaryLeakage)
            warnings.simplefilter("error", AliasingWarning)
            warnings.simplefilter("error", ResidualWarning)
        try:
            result = PIPELINES[config.kind](config, writer)
        except ShearlabError as error:
            raise error.with_context(experiment=str(config.kind)) from error
    result.artifacts = list(writer.names)
    result.measured = _plain(result.measured)
    manifest = RunManifest(
        config=_plain(config.source),
        version=tool_version(),
        started=started.isoformat(),
        wall_clock=time.perf_counter() - clock,
        experiments=[result],
        digests=writer.digests(),
    )
    write_manifest(manifest, directory)
    logger.info(
        "Finished %s experiment in %.1f s: %d checks, %s.",
        config.kind,
        manifest.wall_clock,
        len(manifest.checks),
        "passed" if manifest.passed else "failed",
    )
    return manifest
