"""Library-wide numerical settings.

The values are read from the ``SHEARLAB`` dictionary in the Django settings
module and fall back to the defaults below, in the same way Django REST
framework resolves ``REST_FRAMEWORK``.
"""

import logging
from typing import Any

from django.conf import settings
from django.core.signals import setting_changed

logger = logging.getLogger(__name__)

DEFAULTS = {
    #: Distance between the edge of supp b'' and the truncated domain boundary.
    "TRUNCATION_MARGIN": 12.0,
    #: Grid spacing must satisfy h <= |eps|^(1/3) / RESOLUTION_FACTOR.
    "RESOLUTION_FACTOR": 8.0,
    #: Smallest admissible slope pinch constant of a profile.
    "SIGMA_FLOOR": 0.02,
    #: Default Gevrey weight exponent.
    "GEVREY_DELTA": 0.05,
    #: Acceptance cap for the semigroup envelope constant.
    "C0_CAP": 10.0,
    #: Relative size of |g| at the grid ends above which leakage is reported.
    "BOUNDARY_TOLERANCE": 1e-12,
    #: Relative size of the spectrum near Nyquist above which aliasing is reported.
    "ALIASING_TOLERANCE": 1e-8,
    #: Damping of the model resolvent subtracted in the representation formula.
    "MODEL_DAMPING": 0.1,
    #: Number of worker threads used by parameter scans.
    "WORKERS": 1,
    #: Largest admissible value of ||A||*t for matrix exponentials.
    "OVERFLOW_CAP": 1e5,
    #: Smallest singular value below which a resolvent is treated as singular.
    "NEAR_SINGULAR": 1e-13,
    #: Largest dimension for dense singular value and exponential computations.
    "DENSE_DIMENSION_CAP": 4000,
    #: Iteration cap of the profile inversion.
    "INVERSION_MAX_ITER": 100,
    #: Largest admissible dt*|k|*max|b| of the time stepper.
    "STEP_LIMIT": 0.1,
    #: Largest admissible |k|*t_max*dw of the representation quadrature.
    "PHASE_LIMIT": 0.1,
    #: Relative residual of a direct Airy solve above which it is reported.
    "SOLVE_RESIDUAL": 1e-10,
}


class ShearlabSettings:
    """Lazy view on the ``SHEARLAB`` settings dictionary."""

    def __init__(self, defaults: dict[str, Any]):
        self.defaults = defaults
        self._cached: dict[str, Any] = {}

    @property
    def user_settings(self) -> dict[str, Any]:
        return getattr(settings, "SHEARLAB", {})

    def __getattr__(self, attr: str) -> Any:
        if attr not in self.defaults:
            raise AttributeError(f"Invalid shearlab setting: '{attr}'")
        if attr not in self._cached:
            self._cached[attr] = self.user_settings.get(attr, self.defaults[attr])
        return self._cached[attr]

    def reload(self):
        self._cached.clear()


shearlab_settings = ShearlabSettings(DEFAULTS)


def reload_shearlab_settings(*args, setting: str, **kwargs):
    if setting == "SHEARLAB":
        logger.debug("Reloading shearlab settings.")
        shearlab_settings.reload()


setting_changed.connect(reload_shearlab_settings)
