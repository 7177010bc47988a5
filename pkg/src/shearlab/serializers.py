"""Serializers for experiment configurations and run manifests."""

import logging
import math

import numpy as np

from django.utils.translation import gettext_lazy as _

from rest_framework import serializers

from shearlab.airy import MIN_COLUMNS
from shearlab.conf import shearlab_settings
from shearlab.exceptions import ProfileError
from shearlab.grids import Grid
from shearlab.models import (
    DEFAULT_FIT_WINDOW,
    DEFAULT_STREAM_WINDOW,
    ExperimentConfig,
    ExperimentKind,
    ScanParameters,
)
from shearlab.profile import ModeParams, ProfileKind, build_profile

logger = logging.getLogger(__name__)

#: Kinds whose pipelines solve on the configured grid for every mode.
GRID_KINDS = {
    ExperimentKind.SIMULATE,
    ExperimentKind.FIT_DECAY,
    ExperimentKind.DSR_CHECK,
    ExperimentKind.THETA_BOUNDS,
    ExperimentKind.RESOLVENT,
}

#: Kinds that step in time.
STEPPING_KINDS = {ExperimentKind.SIMULATE, ExperimentKind.FIT_DECAY}

#: Kinds that sample a time axis.
TIMED_KINDS = STEPPING_KINDS | {ExperimentKind.DSR_CHECK}


class FiniteFloatField(serializers.FloatField):
    """Float rendered as ``null`` when it is not finite."""

    def to_representation(self, value):
        value = super().to_representation(value)
        return value if math.isfinite(value) else None


class ProfileSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=[kind.value for kind in ProfileKind])
    amplitude = serializers.FloatField(default=0.3)
    support_radius = serializers.FloatField(default=1.0)

    def validate_support_radius(self, value):
        if value <= 0:
            raise serializers.ValidationError(_("The support radius must be positive."))
        return value


class GridSerializer(serializers.Serializer):
    spacing = serializers.FloatField()
    #: Defaults to ``TRUNCATION_MARGIN``.
    margin = serializers.FloatField(required=False)
    #: Defaults to ``spacing``.
    y0_spacing = serializers.FloatField(required=False)

    def validate(self, attrs):
        for name in ("spacing", "margin", "y0_spacing"):
            if name in attrs and attrs[name] <= 0:
                raise serializers.ValidationError({name: _("Must be positive.")})
        return attrs


class ModesSerializer(serializers.Serializer):
    k = serializers.ListField(child=serializers.IntegerField(), min_length=1)
    nu = serializers.ListField(child=serializers.FloatField(), min_length=1)

    def validate_k(self, value):
        if 0 in value:
            raise serializers.ValidationError(_("Wavenumbers must be nonzero."))
        return value

    def validate_nu(self, value):
        if any(not 0 < nu < 1 for nu in value):
            raise serializers.ValidationError(_("Viscosities must lie in (0, 1)."))
        return value


class TimesSerializer(serializers.Serializer):
    t_max = serializers.FloatField(min_value=0)
    samples = serializers.IntegerField(min_value=2, default=41)
    #: Defaults to the largest step allowed by ``STEP_LIMIT``.
    dt = serializers.FloatField(required=False)

    def validate_dt(self, value):
        if value <= 0:
            raise serializers.ValidationError(_("The time step must be positive."))
        return value


class WindowField(serializers.ListField):
    child = serializers.FloatField(min_value=0)

    def to_internal_value(self, data):
        values = super().to_internal_value(data)
        if len(values) != 2:
            raise serializers.ValidationError(_("A window has two ends."))
        lo, hi = values
        if lo >= hi:
            raise serializers.ValidationError(_("The window must be increasing."))
        return [lo, hi]


class DiagnosticsSerializer(serializers.Serializer):
    delta = serializers.FloatField(min_value=0, required=False)
    fit_window = WindowField(required=False)
    stream_window = WindowField(required=False)


class ScanSerializer(serializers.Serializer):
    eps = serializers.ListField(child=serializers.FloatField(), min_length=1, required=False)
    alpha_ratios = serializers.ListField(
        child=serializers.FloatField(min_value=0), min_length=1, required=False
    )
    scaled_alphas = serializers.ListField(
        child=serializers.FloatField(min_value=0), min_length=1, required=False
    )
    sources = serializers.ListField(child=serializers.FloatField(), min_length=1, required=False)
    y0 = serializers.ListField(child=serializers.FloatField(), min_length=1, required=False)
    w = serializers.ListField(child=serializers.FloatField(), min_length=1, required=False)
    limit_eps = serializers.ListField(
        child=serializers.FloatField(), min_length=2, required=False
    )
    mu = serializers.FloatField(required=False)
    lambdas = serializers.IntegerField(min_value=3, required=False)

    def validate_eps(self, value):
        if 0 in value:
            raise serializers.ValidationError(_("eps must be nonzero."))
        return value

    def validate_limit_eps(self, value):
        if any(eps <= 0 for eps in value) or any(
            later >= earlier for earlier, later in zip(value, value[1:])
        ):
            raise serializers.ValidationError(_("Must be positive and decreasing."))
        return value

    def validate_mu(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError(_("mu must lie in (0, 1)."))
        return value


class ExperimentConfigSerializer(serializers.Serializer):
    """Validates an experiment configuration against the solver preconditions.

    All checks run before any solve starts, so an invalid configuration never
    produces partial output.
    """

    kind = serializers.ChoiceField(choices=[kind.value for kind in ExperimentKind])
    profile = ProfileSerializer()
    grid = GridSerializer()
    modes = ModesSerializer()
    times = TimesSerializer(required=False)
    diagnostics = DiagnosticsSerializer(required=False)
    scan = ScanSerializer(required=False)
    workers = serializers.IntegerField(min_value=1, required=False, allow_null=True)
    strict = serializers.BooleanField(default=False)
    write_fields = serializers.BooleanField(default=False)

    def validate(self, attrs):
        kind = ExperimentKind(attrs["kind"])
        profile = self._profile(attrs)
        grid = self._grid(attrs)
        modes = self._modes(attrs)
        scan = ScanParameters(**attrs.get("scan", {}))

        if kind in TIMED_KINDS and "times" not in attrs:
            raise serializers.ValidationError(
                {"times": [_("Required for {0} experiments.").format(kind)]}
            )

        eps_values = [mode.eps for mode in modes] if kind in GRID_KINDS else []
        if kind == ExperimentKind.LAP_SCAN:
            eps_values += scan.eps
        for eps in eps_values:
            limit = abs(eps) ** (1 / 3) / shearlab_settings.RESOLUTION_FACTOR
            if grid.h > limit * (1 + 1e-9):
                raise serializers.ValidationError(
                    {
                        "grid": {
                            "spacing": [
                                _("Spacing {0:.3e} does not resolve eps = {1:g}.").format(
                                    grid.h, eps
                                )
                            ]
                        }
                    }
                )

        if kind == ExperimentKind.DSR_CHECK and grid.size > shearlab_settings.DENSE_DIMENSION_CAP:
            raise serializers.ValidationError(
                {
                    "grid": {
                        "spacing": [
                            _("{0} nodes exceed the dense cap {1}.").format(
                                grid.size, shearlab_settings.DENSE_DIMENSION_CAP
                            )
                        ]
                    }
                }
            )

        if kind == ExperimentKind.KERNEL_VERIFY:
            columns = len(scan.eps) * len(scan.scaled_alphas) * len(scan.sources)
            if columns < MIN_COLUMNS:
                raise serializers.ValidationError(
                    {
                        "scan": {
                            "sources": [
                                _("{0} kernel columns, at least {1} needed.").format(
                                    columns, MIN_COLUMNS
                                )
                            ]
                        }
                    }
                )
        if kind in (ExperimentKind.KERNEL_VERIFY, ExperimentKind.LAP_SCAN):
            for y0 in scan.y0:
                if abs(y0) >= grid.half_width:
                    raise serializers.ValidationError(
                        {"scan": {"y0": [_("Critical points must lie inside the grid.")]}}
                    )

        k_max = max(abs(mode.k) for mode in modes)
        b_max = float(np.max(np.abs(profile.b(grid.nodes))))
        if kind in STEPPING_KINDS and "dt" in attrs["times"]:
            bound = attrs["times"]["dt"] * k_max * b_max
            if bound > shearlab_settings.STEP_LIMIT:
                raise serializers.ValidationError(
                    {
                        "times": {
                            "dt": [
                                _("dt |k| max|b| = {0:.3g} exceeds {1:g}.").format(
                                    bound, shearlab_settings.STEP_LIMIT
                                )
                            ]
                        }
                    }
                )

        if kind == ExperimentKind.FIT_DECAY:
            diagnostics = attrs.get("diagnostics", {})
            fit_end = diagnostics.get("fit_window", DEFAULT_FIT_WINDOW)[1]
            stream_end = diagnostics.get("stream_window", DEFAULT_STREAM_WINDOW)[1]
            slowest = max(mode.nu ** (-1 / 3) * abs(mode.k) ** (-2 / 3) for mode in modes)
            reach = max(fit_end * slowest, stream_end)
            if attrs["times"]["t_max"] < reach:
                raise serializers.ValidationError(
                    {
                        "times": {
                            "t_max": [
                                _("The fit windows reach t = {0:.4g}.").format(reach)
                            ]
                        }
                    }
                )

        if kind == ExperimentKind.SIMULATE:
            dw = float(np.max(np.diff(profile.b(self.y0_nodes(attrs, grid)))))
            phase = k_max * attrs["times"]["t_max"] * dw
            if phase > shearlab_settings.PHASE_LIMIT:
                raise serializers.ValidationError(
                    {
                        "grid": {
                            "y0_spacing": [
                                _("|k| t_max dw = {0:.3g} exceeds {1:g}.").format(
                                    phase, shearlab_settings.PHASE_LIMIT
                                )
                            ]
                        }
                    }
                )
        return attrs

    def _profile(self, attrs):
        data = attrs["profile"]
        try:
            return build_profile(data["kind"], data["amplitude"], data["support_radius"])
        except (ProfileError, ValueError) as error:
            raise serializers.ValidationError({"profile": [str(error)]}) from error

    def _grid(self, attrs) -> Grid:
        data = attrs["grid"]
        return Grid.around(
            attrs["profile"]["support_radius"], data["spacing"], data.get("margin")
        )

    def _modes(self, attrs) -> list[ModeParams]:
        data = attrs["modes"]
        return [ModeParams(k, nu) for k in data["k"] for nu in data["nu"]]

    @staticmethod
    def y0_nodes(attrs, grid: Grid) -> np.ndarray:
        """Critical points of the spectral density scan, spanning the grid."""
        spacing = attrs["grid"].get("y0_spacing", attrs["grid"]["spacing"])
        count = int(round(2 * grid.half_width / spacing)) + 1
        return np.linspace(-grid.half_width, grid.half_width, count)

    def create(self, validated_data) -> ExperimentConfig:
        profile = self._profile(validated_data)
        grid = self._grid(validated_data)
        modes = self._modes(validated_data)
        times = validated_data.get("times", {"t_max": 0.0, "samples": 2})
        if "dt" in times:
            dt = times["dt"]
        else:
            k_max = max(abs(mode.k) for mode in modes)
            b_max = float(np.max(np.abs(profile.b(grid.nodes))))
            dt = 0.99 * shearlab_settings.STEP_LIMIT / (k_max * b_max)
        diagnostics = validated_data.get("diagnostics", {})
        y0_nodes = self.y0_nodes(validated_data, grid)
        logger.info(
            "Validated %s experiment: %d nodes, %d modes, dt=%g.",
            validated_data["kind"],
            grid.size,
            len(modes),
            dt,
        )
        return ExperimentConfig(
            kind=ExperimentKind(validated_data["kind"]),
            profile=profile,
            grid=grid,
            modes=modes,
            y0_nodes=y0_nodes,
            times=np.linspace(0.0, times["t_max"], times["samples"]),
            dt=float(dt),
            delta=diagnostics.get("delta", shearlab_settings.GEVREY_DELTA),
            fit_window=tuple(diagnostics.get("fit_window", DEFAULT_FIT_WINDOW)),
            stream_window=tuple(diagnostics.get("stream_window", DEFAULT_STREAM_WINDOW)),
            scan=ScanParameters(**validated_data.get("scan", {})),
            workers=validated_data.get("workers"),
            strict=validated_data["strict"],
            write_fields=validated_data["write_fields"],
            source=dict(self.initial_data),
        )


class CheckResultSerializer(serializers.Serializer):
    name = serializers.CharField()
    status = serializers.CharField()
    value = FiniteFloatField(allow_null=True)
    threshold = FiniteFloatField(allow_null=True)
    source = serializers.CharField(allow_blank=True)


class ExperimentResultSerializer(serializers.Serializer):
    kind = serializers.CharField()
    passed = serializers.BooleanField(read_only=True)
    checks = CheckResultSerializer(many=True)
    measured = serializers.JSONField()
    artifacts = serializers.ListField(child=serializers.CharField())


class RunManifestSerializer(serializers.Serializer):
    """Stable key set of ``manifest.json``."""

    version = serializers.CharField()
    started = serializers.CharField()
    wall_clock = serializers.FloatField()
    passed = serializers.BooleanField(read_only=True)
    config = serializers.JSONField()
    experiments = ExperimentResultSerializer(many=True)
    digests = serializers.DictField(child=serializers.CharField())
