"""Green's functions of the screened Poisson operator ``d^2/dy^2 - k^2`` on the line.

Two representations are available. The explicit one convolves with
``-exp(-|k||y - z|) / (2|k|)`` by the trapezoid rule, evaluated in linear time
with a pair of first-order recursions. The factored one solves the centered
second-difference system with homogeneous Dirichlet conditions at the ends of
the truncated grid.

In the change of variables ``v = b(y) - w`` the kernel keeps its values at
mapped nodes, so the same operators serve the ``(v, w)`` formulation.
"""

import logging
import warnings
from dataclasses import dataclass
from enum import StrEnum
from functools import lru_cache

import numpy as np
from scipy import signal
from scipy.sparse import identity
from scipy.sparse.linalg import splu

from shearlab.conf import shearlab_settings
from shearlab.exceptions import BoundaryLeakage, SingularSystem
from shearlab.grids import Grid

logger = logging.getLogger(__name__)


class Representation(StrEnum):
    EXPLICIT_EXPONENTIAL = "explicit_exponential"
    FACTORED_TRIDIAGONAL = "factored_tridiagonal"


def check_boundary(g: np.ndarray, name: str = "g"):
    """Warn when a grid function does not vanish at the truncated boundary.

    Two-dimensional input is a block of grid functions stored as columns.
    """
    scale = np.max(np.abs(g)) if g.size else 0.0
    if scale == 0:
        return
    edge = max(np.max(np.abs(g[0])), np.max(np.abs(g[-1])))
    if edge > shearlab_settings.BOUNDARY_TOLERANCE * scale:
        logger.warning("%s is %.2e at the boundary.", name, edge)
        warnings.warn(
            f"{name} is {edge:.2e} at the grid boundary (peak {scale:.2e}).",
            BoundaryLeakage,
            stacklevel=3,
        )


@lru_cache(maxsize=64)
def _factored_operator(k: int, grid: Grid):
    operator = grid.second_difference() - k**2 * identity(grid.size, format="csc")
    try:
        lu = splu(operator.tocsc())
    except RuntimeError as error:
        raise SingularSystem(str(error)) from error
    logger.debug("Factored screened Poisson operator k=%d on %d nodes.", k, grid.size)
    return lu


def _solve_real(lu, rhs: np.ndarray) -> np.ndarray:
    """Apply a real factorization to complex data."""
    if np.iscomplexobj(rhs):
        return lu.solve(np.ascontiguousarray(rhs.real)) + 1j * lu.solve(
            np.ascontiguousarray(rhs.imag)
        )
    return lu.solve(rhs)


@dataclass(frozen=True)
class GreensKernel:
    """The kernel of ``(d^2/dy^2 - k^2)^(-1)`` on a grid."""

    #: Nonzero wavenumber.
    k: int

    #: The grid the kernel acts on.
    grid: Grid

    #: How the kernel is evaluated.
    representation: Representation = Representation.FACTORED_TRIDIAGONAL

    def __post_init__(self):
        if self.k == 0:
            raise ValueError("The wavenumber must be nonzero.")

    def apply(self, g: np.ndarray) -> np.ndarray:
        """Return ``psi`` with ``(d^2/dy^2 - k^2) psi = g``, columnwise for 2-D ``g``."""
        g = np.asarray(g)
        check_boundary(g)
        if self.representation == Representation.EXPLICIT_EXPONENTIAL:
            return self._convolve(g)
        return _solve_real(_factored_operator(abs(self.k), self.grid), g)

    def _convolve(self, g: np.ndarray) -> np.ndarray:
        k, h = abs(self.k), self.grid.h
        ratio = np.exp(-k * h)
        weighted = np.array(g, dtype=complex if np.iscomplexobj(g) else float)
        # Trapezoid end weights.
        weighted[0] /= 2
        weighted[-1] /= 2
        forward = signal.lfilter([1.0], [1.0, -ratio], weighted, axis=0)
        backward = signal.lfilter([1.0], [1.0, -ratio], weighted[::-1], axis=0)[::-1]
        return -(h / (2 * k)) * (forward + backward - weighted)

    def rows(self, indices: np.ndarray) -> np.ndarray:
        """Dense rows of the discrete kernel, ``psi[indices] = rows @ g``."""
        indices = np.asarray(indices, dtype=int)
        if self.representation == Representation.EXPLICIT_EXPONENTIAL:
            k, nodes, h = abs(self.k), self.grid.nodes, self.grid.h
            weights = np.full(nodes.size, h)
            weights[[0, -1]] /= 2
            return (
                -np.exp(-k * np.abs(nodes[indices, None] - nodes[None, :]))
                / (2 * k)
                * weights
            )
        # The difference operator is symmetric, so its inverse rows are columns.
        unit = np.zeros((self.grid.size, indices.size))
        unit[indices, np.arange(indices.size)] = 1.0
        lu = _factored_operator(abs(self.k), self.grid)
        return lu.solve(unit).T

    def matrix(self) -> np.ndarray:
        """The full dense kernel matrix."""
        return self.rows(np.arange(self.grid.size))

    def column(self, z: float) -> np.ndarray:
        """Response to the discrete delta at ``z``."""
        return self.apply(self.grid.delta(z))


def green_kernel_apply(k: int, g: np.ndarray, grid: Grid) -> np.ndarray:
    """``psi(y) = -(1/(2|k|)) int exp(-|k||y - z|) g(z) dz`` by the trapezoid rule.

    Issues :class:`~shearlab.exceptions.BoundaryLeakage` when ``g`` does not vanish
    at the grid ends.
    """
    return GreensKernel(k, grid, Representation.EXPLICIT_EXPONENTIAL).apply(g)


def poisson_solve(k: int, g: np.ndarray, grid: Grid) -> np.ndarray:
    """Solve ``(D2 - k^2) psi = g`` with homogeneous Dirichlet truncation.

    :raises SingularSystem: when the factorization fails.
    """
    return GreensKernel(k, grid, Representation.FACTORED_TRIDIAGONAL).apply(g)


def screened_residual(k: int, psi: np.ndarray, g: np.ndarray, grid: Grid) -> float:
    """``max |(D2 - k^2) psi - g|`` over the grid."""
    applied = grid.second_difference() @ psi - k**2 * psi
    return float(np.max(np.abs(applied - g)))
