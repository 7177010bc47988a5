"""Decay certification of the semigroup generated by a discretized operator.

For a matrix ``A`` with ``||exp(At)|| <= M`` and ``||(i lambda - A)^(-1)|| <= 1/mu``
on the imaginary axis, the semigroup satisfies ``||exp(At)|| <= C0 M^2 exp(-mu t)``
with a universal ``C0``. This module measures ``M`` and ``mu`` and reports the
smallest ``C0`` consistent with the sampled propagator norms.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from django.utils.translation import gettext_lazy as _

from shearlab.conf import shearlab_settings
from shearlab.elliptic import GreensKernel
from shearlab.exceptions import NearSingular, OverflowRisk
from shearlab.grids import Grid
from shearlab.profile import ModeParams, ShearProfile

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Dense generator ``A``, with the mode and grid it was built from when known."""

    A: np.ndarray
    mode: ModeParams | None = None
    grid: Grid | None = None

    #: ``max |b|`` over the grid nodes.
    b_max: float | None = None

    @classmethod
    def from_matrix(cls, A) -> "GeneratorMatrix":
        A = np.atleast_2d(np.asarray(A, dtype=complex))
        if A.shape[0] != A.shape[1]:
            raise ValueError(_("The generator must be square."))
        return cls(A=A)

    @property
    def dimension(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class ResolventScan:
    lambdas: np.ndarray
    sigma: np.ndarray
    #: Refined minimum of the smallest singular value and where it occurs.
    mu_hat: float
    argmin: float

    def rows(self):
        return zip(self.lambdas, self.sigma)


@dataclass(frozen=True, eq=False)
class DsrReport:
    M: float
    mu: float
    C0_required: float
    times: np.ndarray
    norms: np.ndarray
    scan: ResolventScan

    @property
    def passed(self) -> bool:
        return self.C0_required <= shearlab_settings.C0_CAP

    def as_dict(self) -> dict:
        return {
            "M": self.M,
            "mu": self.mu,
            "C0_required": self.C0_required,
            "C0_cap": shearlab_settings.C0_CAP,
            "argmin_lambda": self.scan.argmin,
            "passed": self.passed,
        }


def discretize_generator(
    profile: ShearProfile, mode: ModeParams, grid: Grid
) -> GeneratorMatrix:
    """``A = nu D2 - i k diag(b) + i k diag(b'') G_k`` with Dirichlet truncation.

    :raises CriticalLayerUnresolved: when the grid is too coarse for ``nu / k``.
    :raises ValueError: when the dimension exceeds ``DENSE_DIMENSION_CAP``.
    """
    grid.require_resolution(mode.eps)
    if grid.size > shearlab_settings.DENSE_DIMENSION_CAP:
        raise ValueError(
            _("Dimension {0} exceeds the dense cap {1}.").format(
                grid.size, shearlab_settings.DENSE_DIMENSION_CAP
            )
        )
    nodes = grid.nodes
    k = mode.k
    b = profile.b(nodes)
    A = mode.nu * grid.second_difference().toarray().astype(complex)
    A[np.diag_indices_from(A)] -= 1j * k * b
    ddb = profile.ddb(nodes)
    if np.any(ddb):
        A += 1j * k * ddb[:, None] * GreensKernel(k, grid).matrix()
    logger.debug("Discretized generator of dimension %d for %s.", grid.size, mode)
    return GeneratorMatrix(A=A, mode=mode, grid=grid, b_max=float(np.max(np.abs(b))))


def _sigma_min(A: np.ndarray, lam: float) -> float:
    shifted = -A
    shifted[np.diag_indices_from(shifted)] += 1j * lam
    return float(linalg.svdvals(shifted)[-1])


def default_lambdas(generator: GeneratorMatrix, count: int = 201) -> np.ndarray:
    """Symmetric scan beyond twice the transport range, or the numerical range."""
    if generator.mode is not None:
        reach = 2 * abs(generator.mode.k) * generator.b_max + 1
    else:
        reach = 2 * np.linalg.norm(generator.A, 2) + 1
    return np.linspace(-reach, reach, count)


def resolvent_scan(
    generator: GeneratorMatrix, lambdas=None, workers: int | None = None
) -> ResolventScan:
    """Smallest singular value of ``i lambda - A`` along the imaginary axis.

    The grid minimum is refined by bounded scalar minimization between its
    neighbours.

    :raises NearSingular: when the minimum falls below ``NEAR_SINGULAR``.
    """
    lambdas = default_lambdas(generator) if lambdas is None else np.asarray(lambdas, float)
    A = generator.A
    with ThreadPoolExecutor(max_workers=workers or shearlab_settings.WORKERS) as executor:
        sigma = np.array(list(executor.map(lambda lam: _sigma_min(A, lam), lambdas)))

    index = int(np.argmin(sigma))
    mu_hat, argmin = float(sigma[index]), float(lambdas[index])
    if 0 < index < lambdas.size - 1:
        refined = optimize.minimize_scalar(
            lambda lam: _sigma_min(A, lam),
            bounds=(lambdas[index - 1], lambdas[index + 1]),
            method="bounded",
            options={"xatol": 1e-10},
        )
        if refined.fun < mu_hat:
            mu_hat, argmin = float(refined.fun), float(refined.x)
    if lambdas.size > 2 and (sigma[0] < sigma[1] or sigma[-1] < sigma[-2]):
        logger.warning("Smallest singular value still decreasing at the scan ends.")
    if mu_hat < shearlab_settings.NEAR_SINGULAR:
        raise NearSingular(
            _("sigma_min = {0:.2e} at lambda = {1:.6g}.").format(mu_hat, argmin)
        )
    logger.info("Resolvent scan: mu = %.6g at lambda = %.6g.", mu_hat, argmin)
    return ResolventScan(lambdas=lambdas, sigma=sigma, mu_hat=mu_hat, argmin=argmin)


def semigroup_norm_curve(generator: GeneratorMatrix, times) -> np.ndarray:
    """``||exp(At)||_2`` at each time.

    :raises OverflowRisk: when ``||A||_1 t`` exceeds ``OVERFLOW_CAP``.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError(_("Times must be nonnegative."))
    A = generator.A
    size = np.linalg.norm(A, 1)
    if size * times.max() > shearlab_settings.OVERFLOW_CAP:
        raise OverflowRisk(
            _("||A|| t = {0:.3g} exceeds {1:g}.").format(
                size * times.max(), shearlab_settings.OVERFLOW_CAP
            )
        )
    return np.array(
        [1.0 if t == 0 else float(linalg.svdvals(linalg.expm(A * t))[0]) for t in times]
    )


def dsr_envelope_check(
    generator: GeneratorMatrix, times, lambdas=None, workers: int | None = None
) -> DsrReport:
    """Measure ``M``, ``mu`` and the envelope constant ``max_t ||exp(At)|| e^(mu t) / M^2``."""
    times = np.asarray(times, dtype=float)
    norms = semigroup_norm_curve(generator, times)
    scan = resolvent_scan(generator, lambdas, workers)
    M = float(norms.max())
    C0 = float(np.max(norms * np.exp(scan.mu_hat * times)) / M**2)
    logger.info("Envelope check: M=%.4g mu=%.4g C0=%.4g.", M, scan.mu_hat, C0)
    return DsrReport(M=M, mu=scan.mu_hat, C0_required=C0, times=times, norms=norms, scan=scan)
