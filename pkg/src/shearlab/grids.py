"""Uniform grids on a truncated line and the finite-difference operators on them.

All grid functions vanish implicitly one spacing beyond the end nodes
(homogeneous Dirichlet truncation).
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.integrate import trapezoid

from shearlab.conf import shearlab_settings
from shearlab.exceptions import CriticalLayerUnresolved

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[-half_width, half_width]``."""

    #: Half width of the truncated domain.
    half_width: float

    #: Requested spacing. The actual spacing :attr:`h` divides the domain exactly.
    spacing: float

    def __post_init__(self):
        if self.half_width <= 0 or self.spacing <= 0:
            raise ValueError("Grid half width and spacing must be positive.")

    @classmethod
    def around(cls, support_radius: float, spacing: float, margin=None) -> "Grid":
        """Grid covering the profile support plus the truncation margin."""
        if margin is None:
            margin = shearlab_settings.TRUNCATION_MARGIN
        return cls(float(support_radius + margin), float(spacing))

    @cached_property
    def size(self) -> int:
        return int(round(2 * self.half_width / self.spacing)) + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.size)

    @cached_property
    def h(self) -> float:
        return 2 * self.half_width / (self.size - 1)

    def nearest_index(self, z: float) -> int:
        """Index of the node closest to ``z``."""
        if abs(z) > self.half_width:
            raise ValueError(f"Point {z} lies outside the grid.")
        return int(round((z + self.half_width) / self.h))

    def delta(self, z: float) -> np.ndarray:
        """Discrete delta of unit mass at the node nearest to ``z``."""
        values = np.zeros(self.size, dtype=complex)
        values[self.nearest_index(z)] = 1.0 / self.h
        return values

    def second_difference(self) -> sparse.csc_matrix:
        """The centered second difference with Dirichlet truncation."""
        n = self.size
        return sparse.diags(
            [np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)],
            [-1, 0, 1],
            format="csc",
        ) / self.h**2

    def first_difference(self) -> sparse.csc_matrix:
        """Backward differences ``(g[i] - g[i-1]) / h`` over all ``n + 1`` links."""
        n = self.size
        return sparse.diags(
            [np.ones(n), -np.ones(n)], [0, -1], shape=(n + 1, n), format="csc"
        ) / self.h

    def derivative(self, values: np.ndarray) -> np.ndarray:
        """Centered derivative of a grid function."""
        return np.gradient(values, self.h)

    def l2_norm(self, values: np.ndarray) -> float:
        return float(np.sqrt(self.h * np.sum(np.abs(values) ** 2)))

    def h1k_norm(self, values: np.ndarray, k: int) -> float:
        """The norm ``(k^2 ||g||^2 + ||g'||^2)^(1/2)`` with Dirichlet differences."""
        dg = self.first_difference() @ values
        return float(
            np.sqrt(
                self.h * (k**2 * np.sum(np.abs(values) ** 2) + np.sum(np.abs(dg) ** 2))
            )
        )

    def integrate(self, values: np.ndarray) -> complex:
        """Trapezoid rule, which reduces to ``h * sum`` for data vanishing at the ends."""
        return trapezoid(values, dx=self.h)

    def require_resolution(self, eps: float):
        """Check the critical layer of width ``|eps|^(1/3)`` is resolved.

        :raises CriticalLayerUnresolved: when the spacing is too coarse.
        """
        limit = abs(eps) ** (1 / 3) / shearlab_settings.RESOLUTION_FACTOR
        if self.h > limit * (1 + 1e-9):
            raise CriticalLayerUnresolved(
                f"Grid spacing {self.h:.3e} exceeds |eps|^(1/3)/"
                f"{shearlab_settings.RESOLUTION_FACTOR:g} = {limit:.3e}."
            )
