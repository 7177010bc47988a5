"""Records describing experiments and their outcomes.

The laboratory keeps no persistent state, so these are plain dataclasses
rather than database models. Configurations are built by
:class:`shearlab.serializers.ExperimentConfigSerializer`, results by the
pipelines in :mod:`shearlab.experiments`.
"""

from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from shearlab.grids import Grid
from shearlab.profile import ModeParams, ShearProfile

#: Enhanced-dissipation fit window in units of ``nu^(-1/3) |k|^(-2/3)``.
DEFAULT_FIT_WINDOW = (0.5, 2.0)

#: Stream-function power fit window.
DEFAULT_STREAM_WINDOW = (5.0, 50.0)


class ExperimentKind(StrEnum):
    SIMULATE = "simulate"
    RESOLVENT = "resolvent"
    KERNEL_VERIFY = "kernel_verify"
    LAP_SCAN = "lap_scan"
    DSR_CHECK = "dsr_check"
    FIT_DECAY = "fit_decay"
    THETA_BOUNDS = "theta_bounds"


class Status(StrEnum):
    PASS = "PASS"
    FAIL = "FAIL"
    #: Measured value reported without an acceptance threshold.
    INFO = "INFO"


@dataclass
class ScanParameters:
    """Parameter lists of the scanning experiments."""

    #: Signed diffusion scales of resolvent and kernel scans.
    eps: list[float] = field(default_factory=lambda: [1e-2, 1e-3, 1e-4])

    #: ``alpha = ratio * eps`` for limiting-absorption scans.
    alpha_ratios: list[float] = field(default_factory=lambda: [0.0, 1.0])

    #: ``alpha / |eps|^(1/3)`` for kernel scans.
    scaled_alphas: list[float] = field(default_factory=lambda: [0.0, 1.0, 10.0])

    #: Kernel sources in critical-layer units ``Z = (z - y0) / |eps|^(1/3)``.
    sources: list[float] = field(default_factory=lambda: [-5.0, -2.5, 0.0, 2.5, 5.0])

    #: Critical points.
    y0: list[float] = field(default_factory=lambda: [0.0])

    #: Shifts ``w`` of the integral formulation of ``Theta``.
    w: list[float] = field(default_factory=lambda: [0.0])

    #: Decreasing ``eps`` of the distributional limit checks.
    limit_eps: list[float] = field(default_factory=lambda: [1e-1, 1e-2, 1e-3])

    #: Exponent of the multiplier kernel probe.
    mu: float = 0.3

    #: Number of imaginary-axis samples of resolvent scans.
    lambdas: int = 201


@dataclass(eq=False)
class ExperimentConfig:
    """A validated experiment configuration."""

    kind: ExperimentKind
    profile: ShearProfile
    grid: Grid
    modes: list[ModeParams]

    #: Critical points ``y0`` of spectral density scans.
    y0_nodes: np.ndarray

    times: np.ndarray
    dt: float

    #: Gevrey exponent of the norm diagnostics.
    delta: float

    #: Window of the enhanced-dissipation fit, in units of ``nu^(-1/3) |k|^(-2/3)``.
    fit_window: tuple[float, float]

    #: Window of the stream-function power fit, in time units.
    stream_window: tuple[float, float]

    scan: ScanParameters
    workers: int | None = None
    strict: bool = False

    #: Whether full spectral density and profile fields are written.
    write_fields: bool = False

    #: The configuration as it was given, echoed into the manifest.
    source: dict = field(default_factory=dict)

    @property
    def nu_values(self) -> list[float]:
        return sorted({mode.nu for mode in self.modes}, reverse=True)

    @property
    def k_values(self) -> list[int]:
        return sorted({mode.k for mode in self.modes})


@dataclass
class CheckResult:
    """Outcome of one named check."""

    name: str
    status: Status
    value: float | None = None
    threshold: float | None = None

    #: Operation and configuration section the value comes from.
    source: str = ""

    @classmethod
    def at_most(cls, name: str, value: float, threshold: float, source: str = ""):
        status = Status.PASS if value <= threshold else Status.FAIL
        return cls(name, status, float(value), float(threshold), source)

    @classmethod
    def at_least(cls, name: str, value: float, threshold: float, source: str = ""):
        status = Status.PASS if value >= threshold else Status.FAIL
        return cls(name, status, float(value), float(threshold), source)

    @classmethod
    def holds(cls, name: str, condition: bool, value=None, source: str = ""):
        status = Status.PASS if condition else Status.FAIL
        return cls(name, status, None if value is None else float(value), None, source)

    @classmethod
    def info(cls, name: str, value: float, source: str = ""):
        return cls(name, Status.INFO, float(value), None, source)

    @property
    def failed(self) -> bool:
        return self.status == Status.FAIL


@dataclass
class ExperimentResult:
    kind: ExperimentKind
    checks: list[CheckResult] = field(default_factory=list)

    #: Measured constants, keyed by name.
    measured: dict = field(default_factory=dict)

    #: Emitted artifact file names, relative to the output directory.
    artifacts: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not any(check.failed for check in self.checks)


@dataclass
class RunManifest:
    """Everything needed to trace and reproduce a run."""

    config: dict
    version: str
    started: str
    wall_clock: float
    experiments: list[ExperimentResult] = field(default_factory=list)

    #: SHA-256 digests of the emitted files, keyed by file name.
    digests: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(experiment.passed for experiment in self.experiments)

    @property
    def checks(self) -> list[CheckResult]:
        return [check for experiment in self.experiments for check in experiment.checks]
