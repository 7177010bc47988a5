"""Monotone shear profiles.

A profile is the background velocity ``b`` together with ``b'`` and ``b''``.
Two families are available: Couette flow ``b(y) = y`` and a bump deviation
whose curvature ``b'' = a * bump`` is supported in ``[-R, R]`` with
``bump(y) = exp(-1 / (1 - (y/R)^2))``. The slope is centred,
``b'(y) = 1 + a * (int_{-R}^{y} bump - M/2)`` with ``M`` the total bump mass,
so that ``b(0) = 0`` and the slope band is symmetric around 1.
"""

import logging
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property, lru_cache

import numpy as np
from scipy import integrate, interpolate, signal

from django.utils.translation import gettext_lazy as _

from shearlab.conf import shearlab_settings
from shearlab.exceptions import (
    AssumptionViolation,
    MonotonicityViolation,
    NonConvergence,
)
from shearlab.grids import Grid

logger = logging.getLogger(__name__)

# Panels of the curvature table on [-R, R].
TABLE_PANELS = 4000

# Upper cap of the reported Gevrey parameter.
DELTA0_CAP = 0.99


class ProfileKind(StrEnum):
    COUETTE = "couette"
    BUMP = "bump"


def bump(y, radius: float = 1.0):
    """The compactly supported bump ``exp(-1 / (1 - (y/R)^2))``."""
    s = np.asarray(y, dtype=float) / radius
    inside = np.abs(s) < 1
    out = np.zeros_like(s)
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def plateau(y, inner: float, outer: float, power: float = 1.0):
    """Gevrey cutoff equal to 1 on ``|y| <= inner`` and 0 on ``|y| >= outer``.

    The transition is built from ``exp(-1/s^power)``, which is Gevrey of
    class ``1 + 1/power``.
    """
    if not 0 < inner < outer:
        raise ValueError("The plateau needs 0 < inner < outer.")
    s = (outer - np.abs(np.asarray(y, dtype=float))) / (outer - inner)
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        rise = np.where(s > 0, np.exp(-1.0 / s**power), 0.0)
        fall = np.where(s < 1, np.exp(-1.0 / (1.0 - s) ** power), 0.0)
    return rise / (rise + fall)


@dataclass(frozen=True, eq=False)
class ShearProfile:
    """Background shear flow with its measured assumption constants.

    Profiles are immutable and may be shared between threads.
    """

    #: The profile family.
    kind: ProfileKind

    #: Deviation strength from Couette flow.
    amplitude: float

    #: Declared radius containing the support of ``b''``.
    support_radius: float

    #: Radius of the bump actually used to build ``b''``.
    bump_radius: float

    #: Measured slope pinch constant ``min(min b', 1/max b')``.
    sigma0: float

    #: Gevrey regularity parameter of ``b''``, the fitted Fourier decay exponent capped below 1.
    delta0: float

    #: Measured extreme slopes.
    db_min: float
    db_max: float

    #: Hermite spline of ``int_{-R}^{y} bump`` on ``[-R, R]``; ``None`` for Couette.
    mass_spline: interpolate.CubicHermiteSpline | None = None

    #: Total bump mass ``M``.
    mass: float = 0.0

    @property
    def is_couette(self) -> bool:
        return self.kind == ProfileKind.COUETTE or self.amplitude == 0.0

    def spec(self) -> dict:
        """Structured description from which the profile is rebuilt."""
        return {
            "kind": str(self.kind),
            "amplitude": self.amplitude,
            "support_radius": self.support_radius,
        }

    @cached_property
    def _mass_antiderivative(self) -> interpolate.PPoly:
        return self.mass_spline.antiderivative()

    def _primitive(self, y: np.ndarray) -> np.ndarray:
        """``int_0^y int_{-R}^{s} bump``."""
        R = self.bump_radius
        antiderivative = self._mass_antiderivative
        origin = antiderivative(0.0)
        inside = antiderivative(np.clip(y, -R, R)) - origin
        right = antiderivative(R) - origin + self.mass * (y - R)
        left = antiderivative(-R) - origin
        return np.where(y > R, right, np.where(y < -R, left, inside))

    def _mass_below(self, y: np.ndarray) -> np.ndarray:
        R = self.bump_radius
        inside = self.mass_spline(np.clip(y, -R, R))
        return np.where(y >= R, self.mass, np.where(y <= -R, 0.0, inside))

    def b(self, y):
        y = np.asarray(y, dtype=float)
        if self.is_couette:
            return y.copy()
        a = self.amplitude
        return y * (1 - a * self.mass / 2) + a * self._primitive(y)

    def db(self, y):
        y = np.asarray(y, dtype=float)
        if self.is_couette:
            return np.ones_like(y)
        a = self.amplitude
        return 1 + a * (self._mass_below(y) - self.mass / 2)

    def ddb(self, y):
        y = np.asarray(y, dtype=float)
        if self.is_couette:
            return np.zeros_like(y)
        return self.amplitude * bump(y, self.bump_radius)


@dataclass(frozen=True)
class ModeParams:
    """Horizontal wavenumber and viscosity of a Fourier mode."""

    #: Nonzero horizontal wavenumber.
    k: int

    #: Viscosity in ``(0, 1)``.
    nu: float

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k == 0:
            raise ValueError(_("The wavenumber must be a nonzero integer."))
        if not 0 < self.nu < 1:
            raise ValueError(_("The viscosity must lie in (0, 1)."))
        object.__setattr__(self, "k", int(self.k))

    @property
    def eps(self) -> float:
        """The signed Airy scale ``nu / k``."""
        return self.nu / self.k


@dataclass(frozen=True)
class AssumptionReport:
    sigma0_hat: float
    db_min: float
    db_max: float
    support_ok: bool
    gevrey_decay_fit: float


def _mass_table(radius: float):
    """Cumulative bump mass on ``[-R, R]`` by panelwise Gauss-Legendre quadrature."""
    nodes = np.linspace(-radius, radius, TABLE_PANELS + 1)
    x, wts = np.polynomial.legendre.leggauss(12)
    left, right = nodes[:-1, None], nodes[1:, None]
    points = (right - left) / 2 * x + (right + left) / 2
    panels = (bump(points, radius) * wts).sum(axis=1) * (nodes[1] - nodes[0]) / 2
    cumulative = np.concatenate([[0.0], np.cumsum(panels)])

    total, error = integrate.quad(bump, -radius, radius, args=(radius,), epsabs=1e-15)
    logger.debug(
        "Bump mass %.15f (quadrature error %.1e, table %.15f).",
        total,
        error,
        cumulative[-1],
    )
    spline = interpolate.CubicHermiteSpline(nodes, cumulative, bump(nodes, radius))
    return spline, total


def fourier_decay_exponent(values: np.ndarray, h: float) -> float:
    """Fit ``|FFT g| ~ exp(-c <xi>^(1/2))`` on the local maxima of the spectrum.

    Returns ``inf`` for data that vanishes identically.
    """
    spectrum = np.abs(np.fft.rfft(values)) * h
    peak = spectrum.max()
    if peak == 0:
        return np.inf
    xi = 2 * np.pi * np.fft.rfftfreq(values.size, d=h)
    (maxima,) = signal.argrelmax(spectrum)
    maxima = maxima[spectrum[maxima] > 1e-12 * peak]
    if maxima.size < 3:
        return np.inf
    slope, _intercept = np.polyfit(
        np.sqrt(1 + xi[maxima] ** 2), np.log(spectrum[maxima]), 1
    )
    return float(-slope)


def _measure_slopes(profile: ShearProfile, grid: Grid) -> tuple[float, float]:
    db = profile.db(grid.nodes)
    return float(db.min()), float(db.max())


@lru_cache(maxsize=32)
def build_profile(
    kind: ProfileKind | str, amplitude: float, support_radius: float
) -> ShearProfile:
    """Construct a profile of the given family.

    :raises MonotonicityViolation: when ``b'`` is not positive.
    :raises AssumptionViolation: when the measured slope band leaves ``[sigma, 1/sigma]``
        for the configured floor ``sigma``.
    """
    kind = ProfileKind(kind)
    if support_radius <= 0:
        raise ValueError(_("The support radius must be positive."))
    if kind == ProfileKind.COUETTE:
        return ShearProfile(
            kind=kind,
            amplitude=0.0,
            support_radius=float(support_radius),
            bump_radius=float(support_radius),
            sigma0=1.0,
            delta0=DELTA0_CAP,
            db_min=1.0,
            db_max=1.0,
        )

    spline, mass = _mass_table(support_radius)
    profile = ShearProfile(
        kind=kind,
        amplitude=float(amplitude),
        support_radius=float(support_radius),
        bump_radius=float(support_radius),
        sigma0=1.0,
        delta0=1.0,
        db_min=1.0,
        db_max=1.0,
        mass_spline=spline,
        mass=mass,
    )
    scan = Grid(3 * support_radius, support_radius / 2000)
    db_min, db_max = _measure_slopes(profile, scan)
    if db_min <= 0:
        raise MonotonicityViolation(
            _("min b' = {0:.4g} for amplitude {1:g}.").format(db_min, amplitude)
        )
    sigma0 = min(db_min, 1 / db_max)
    if sigma0 < shearlab_settings.SIGMA_FLOOR:
        raise AssumptionViolation(
            _("Measured sigma0 = {0:.4g} is below {1:g}.").format(
                sigma0, shearlab_settings.SIGMA_FLOOR
            )
        )
    coarse = Grid(3 * support_radius, min(1e-2, support_radius / 100))
    delta0 = min(fourier_decay_exponent(profile.ddb(coarse.nodes), coarse.h), DELTA0_CAP)
    logger.info(
        "Built %s profile a=%g R=%g: b' in [%.6f, %.6f], delta0=%.3f.",
        kind,
        amplitude,
        support_radius,
        db_min,
        db_max,
        delta0,
    )
    return ShearProfile(
        kind=kind,
        amplitude=float(amplitude),
        support_radius=float(support_radius),
        bump_radius=float(support_radius),
        sigma0=sigma0,
        delta0=delta0,
        db_min=db_min,
        db_max=db_max,
        mass_spline=spline,
        mass=mass,
    )


def invert_profile(profile: ShearProfile, v):
    """Return ``y`` with ``b(y) = v`` by safeguarded Newton iteration.

    Works elementwise on arrays. Newton steps leaving the current bracket are
    replaced by bisection.

    :raises NonConvergence: when the iteration cap is reached.
    """
    v = np.asarray(v, dtype=float)
    if profile.is_couette:
        return v.copy()
    scalar = v.ndim == 0
    v = np.atleast_1d(v)
    reach = np.abs(v) / profile.db_min + 1
    lo, hi = -reach, reach.copy()
    y = np.clip(v, lo, hi)
    tol = 1e-12 * (1 + np.abs(v))
    for iteration in range(shearlab_settings.INVERSION_MAX_ITER):
        residual = profile.b(y) - v
        done = np.abs(residual) <= tol
        if done.all():
            logger.debug("Profile inversion converged in %d iterations.", iteration)
            return y[0] if scalar else y
        hi = np.where(residual > 0, y, hi)
        lo = np.where(residual < 0, y, lo)
        newton = y - residual / profile.db(y)
        outside = (newton <= lo) | (newton >= hi)
        step = np.where(outside, (lo + hi) / 2, newton)
        y = np.where(done, y, step)
    raise NonConvergence(
        _("No convergence after {0} iterations.").format(
            shearlab_settings.INVERSION_MAX_ITER
        )
    )


def check_assumptions(profile: ShearProfile, grid: Grid) -> AssumptionReport:
    """Measure the profile constants on a grid.

    :raises ValueError: when the grid does not cover ``[-3R, 3R]`` with spacing
        at most ``1e-2``.
    """
    if grid.half_width < 3 * profile.support_radius or grid.h > 1e-2 * (1 + 1e-12):
        raise ValueError(
            _("The grid must cover [-3R, 3R] with spacing at most 1e-2.")
        )
    db_min, db_max = _measure_slopes(profile, grid)
    ddb = profile.ddb(grid.nodes)
    outside = np.abs(grid.nodes) > profile.support_radius
    return AssumptionReport(
        sigma0_hat=min(db_min, 1 / db_max),
        db_min=db_min,
        db_max=db_max,
        support_ok=bool(np.all(ddb[outside] == 0)),
        gevrey_decay_fit=fourier_decay_exponent(ddb, grid.h),
    )
