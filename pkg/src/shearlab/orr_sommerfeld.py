"""The Orr-Sommerfeld resolvent and the objects assembled from it.

The coupled resolvent solves

    eps w'' - alpha w + i(b(y0) - b) w + i b'' G_k w = f,    psi = G_k w,

where ``G_k = (d^2/dy^2 - k^2)^(-1)``. Since ``b''`` vanishes outside
``[-R, R]``, the coupling has rank ``m``, the number of grid points in the
support, and the system is reduced to an ``m x m`` dense solve on top of the
factored Airy operator.

The spectral density collects ``w`` and ``psi`` over a scan of critical points
``y0`` at ``alpha = 0``. In the variables ``v = b(y)`` and ``w = b(y0)`` these
are ``Omega(v, w)`` and ``Pi(v, w)``, and ``Theta(v, w) = Pi(v + w, w)``.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy import integrate, interpolate, linalg, sparse

from django.utils.translation import gettext_lazy as _

from shearlab.airy import (
    ResolventQuery,
    airy_operator,
    airy_resolvent_solve,
    airy_solve,
)
from shearlab.conf import shearlab_settings
from shearlab.diagnostics import fourier_transform
from shearlab.elliptic import GreensKernel, check_boundary, green_kernel_apply, poisson_solve
from shearlab.exceptions import CouplingSingular, DenseSystemSingular, ShearlabError
from shearlab.grids import Grid
from shearlab.profile import ModeParams, ShearProfile, invert_profile, plateau

logger = logging.getLogger(__name__)

# Pivot ratio below which a reduced dense system is treated as singular.
PIVOT_TOLERANCE = 1e-14


@dataclass(frozen=True, eq=False)
class OsSolution:
    """Vorticity-side and stream-side resolvent at one spectral point."""

    w: np.ndarray
    psi: np.ndarray
    query: ResolventQuery
    mode: ModeParams

    #: Relative sup-norm residual of the coupled equation.
    residual: float


@dataclass(frozen=True, eq=False)
class InitialData:
    """Initial vorticity of one Fourier mode.

    On the mapped nodes ``v = b(y)`` the profile ``F0(v) = omega0(b^(-1)(v))``
    takes the same values as ``omega0``.
    """

    profile: ShearProfile
    grid: Grid
    omega0: np.ndarray

    @classmethod
    def from_vorticity(cls, profile: ShearProfile, grid: Grid, omega0) -> "InitialData":
        omega0 = np.asarray(omega0, dtype=complex)
        if omega0.shape != grid.nodes.shape:
            raise ValueError(_("Initial data must be sampled on the grid."))
        check_boundary(omega0, "omega0")
        return cls(profile=profile, grid=grid, omega0=omega0)

    @cached_property
    def v_nodes(self) -> np.ndarray:
        return self.profile.b(self.grid.nodes)

    @property
    def F0(self) -> np.ndarray:
        """``F0`` at :attr:`v_nodes`."""
        return self.omega0

    def F0_at(self, v) -> np.ndarray:
        """``F0`` at arbitrary ``v``, zero outside the grid."""
        y = invert_profile(self.profile, np.asarray(v, dtype=float))
        spline = interpolate.CubicSpline(self.grid.nodes, self.omega0, extrapolate=False)
        return np.nan_to_num(spline(y))


def default_initial_data(
    profile: ShearProfile, grid: Grid, width: float = 0.5, radius: float = 2.5
) -> InitialData:
    """A Gaussian times a Gevrey cutoff, centred in the support of ``b''``."""
    y = grid.nodes
    omega0 = np.exp(-(y**2) / (2 * width**2)) * plateau(y, 0.6 * radius, radius)
    return InitialData.from_vorticity(profile, grid, omega0)


@dataclass(frozen=True, eq=False)
class _Coupling:
    #: Grid indices where ``b''`` is nonzero.
    support: np.ndarray

    #: ``A^(-1) U`` with ``U = i E_S diag(b''_S)``.
    Z: np.ndarray

    #: ``G_k Z``.
    GZ: np.ndarray

    #: LU factors of ``I + (G_k Z)_S``.
    lu: tuple


def check_pivots(lu: tuple, error_class, context: str):
    pivots = np.abs(np.diag(lu[0]))
    if pivots.size and pivots.min() <= PIVOT_TOLERANCE * pivots.max():
        raise error_class(
            f"{context}: pivot ratio {pivots.min() / pivots.max():.2e}."
        )


@lru_cache(maxsize=8)
def _coupling(
    profile: ShearProfile, query: ResolventQuery, k: int, grid: Grid
) -> _Coupling | None:
    ddb = profile.ddb(grid.nodes)
    support = np.flatnonzero(ddb)
    if support.size == 0:
        return None
    U = np.zeros((grid.size, support.size), dtype=complex)
    U[support, np.arange(support.size)] = 1j * ddb[support]
    Z = airy_solve(profile, query, U, grid)
    GZ = poisson_solve(k, Z, grid)
    capacitance = np.eye(support.size) + GZ[support]
    lu = linalg.lu_factor(capacitance)
    check_pivots(lu, CouplingSingular, f"Coupling at y0={query.y0:g}")
    logger.debug(
        "Coupling of rank %d for %s on %d nodes.", support.size, query, grid.size
    )
    return _Coupling(support=support, Z=Z, GZ=GZ, lu=lu)


def os_resolvent_solve(
    profile: ShearProfile,
    mode: ModeParams,
    query: ResolventQuery,
    f: np.ndarray,
    grid: Grid,
) -> OsSolution:
    """Solve the coupled resolvent equation by rank-``m`` reduction.

    :raises CriticalLayerUnresolved: when ``h > |eps|^(1/3) / 8``.
    :raises CouplingSingular: when the reduced system is numerically singular,
        which signals an approximate embedded eigenvalue.
    """
    f = np.asarray(f, dtype=complex)
    check_boundary(f, "f")
    a = airy_solve(profile, query, f, grid)
    Ga = poisson_solve(mode.k, a, grid)
    coupling = _coupling(profile, query, mode.k, grid)
    if coupling is None:
        w, psi = a, Ga
    else:
        c = linalg.lu_solve(coupling.lu, Ga[coupling.support])
        w = a - coupling.Z @ c
        psi = Ga - coupling.GZ @ c

    applied = airy_operator(profile, query, grid) @ w + 1j * profile.ddb(grid.nodes) * psi
    scale = np.max(np.abs(f)) or 1.0
    residual = float(np.max(np.abs(applied - f)) / scale)
    logger.debug("Orr-Sommerfeld residual %.2e at y0=%g.", residual, query.y0)
    return OsSolution(w=w, psi=psi, query=query, mode=mode, residual=residual)


def dense_os_matrix(
    profile: ShearProfile, mode: ModeParams, query: ResolventQuery, grid: Grid
) -> np.ndarray:
    """The coupled operator as a dense matrix, for small grids."""
    green = GreensKernel(mode.k, grid).matrix()
    return (
        airy_operator(profile, query, grid).toarray()
        + 1j * profile.ddb(grid.nodes)[:, None] * green
    )


def stream_flatness(solution: OsSolution, grid: Grid) -> float:
    """``sup_xi <k, xi>^2 |psi^(xi)|`` of the stream-side resolvent."""
    xi, spectrum = fourier_transform(solution.psi, grid.h)
    k = solution.mode.k
    return float(np.max((1 + k**2 + xi**2) * np.abs(spectrum)))


@dataclass(frozen=True, eq=False)
class SpectralDensityField:
    """``Omega`` and ``Pi`` over the ``(v, w)`` grid for one mode."""

    profile: ShearProfile
    mode: ModeParams
    initial: InitialData

    #: Critical points ``y0`` of the scan and their images ``w = b(y0)``.
    y0_nodes: np.ndarray
    w_nodes: np.ndarray

    #: ``Omega(v_i, w_l)`` and ``Pi(v_i, w_l)``, one column per ``w``.
    omega: np.ndarray
    pi: np.ndarray

    #: Largest equation residual over the scan.
    residual: float = 0.0

    @property
    def v_nodes(self) -> np.ndarray:
        return self.initial.v_nodes

    def _shifted(self, values: np.ndarray, w: float) -> np.ndarray:
        spline = interpolate.CubicSpline(self.v_nodes, values, extrapolate=False)
        return np.nan_to_num(spline(self.v_nodes + w))

    @cached_property
    def theta(self) -> np.ndarray:
        """``Theta(v_i, w_l) = Pi(v_i + w_l, w_l)``, zero where the shift leaves the grid."""
        return np.column_stack(
            [self._shifted(self.pi[:, l], w) for l, w in enumerate(self.w_nodes)]
        )

    def theta_uniform(self, n_v: int, n_w: int):
        """``Theta`` resampled on uniform ``(v, w)`` grids over the same ranges."""
        v = np.linspace(self.v_nodes[0], self.v_nodes[-1], n_v)
        w = np.linspace(self.w_nodes[0], self.w_nodes[-1], n_w)
        pi_w = interpolate.CubicSpline(self.w_nodes, self.pi, axis=1)(w)
        theta = np.empty((n_v, n_w), dtype=complex)
        for l, shift in enumerate(w):
            spline = interpolate.CubicSpline(self.v_nodes, pi_w[:, l], extrapolate=False)
            theta[:, l] = np.nan_to_num(spline(v + shift))
        return v, w, theta

    def header(self) -> dict:
        grid = self.initial.grid
        return {
            "k": self.mode.k,
            "nu": self.mode.nu,
            "profile": self.profile.spec(),
            "grid": {"half_width": grid.half_width, "h": grid.h, "size": grid.size},
            "w_grid": {
                "min": float(self.w_nodes[0]),
                "max": float(self.w_nodes[-1]),
                "size": int(self.w_nodes.size),
            },
            "residual": self.residual,
        }

    def rows(self):
        """CSV rows ``(v, w, ReOmega, ImOmega, ReTheta, ImTheta)``."""
        theta = self.theta
        for l, w in enumerate(self.w_nodes):
            for i, v in enumerate(self.v_nodes):
                yield (
                    v,
                    w,
                    self.omega[i, l].real,
                    self.omega[i, l].imag,
                    theta[i, l].real,
                    theta[i, l].imag,
                )


def spectral_density(
    profile: ShearProfile,
    mode: ModeParams,
    initial: InitialData,
    y0_nodes,
    workers: int | None = None,
) -> SpectralDensityField:
    """Coupled resolvents of the initial data at ``alpha = 0`` over a ``y0`` scan.

    Errors raised for one critical point carry that ``y0`` in their message.
    """
    grid = initial.grid
    y0_nodes = np.asarray(y0_nodes, dtype=float)

    def column(y0: float) -> OsSolution:
        query = ResolventQuery(mode.eps, 0.0, float(y0))
        try:
            return os_resolvent_solve(profile, mode, query, initial.omega0, grid)
        except ShearlabError as error:
            raise error.with_context(y0=float(y0)) from error

    workers = workers or shearlab_settings.WORKERS
    logger.info(
        "Spectral density k=%d nu=%g over %d critical points (%d workers).",
        mode.k,
        mode.nu,
        y0_nodes.size,
        workers,
    )
    with ThreadPoolExecutor(max_workers=workers) as executor:
        solutions = list(executor.map(column, y0_nodes))

    return SpectralDensityField(
        profile=profile,
        mode=mode,
        initial=initial,
        y0_nodes=y0_nodes,
        w_nodes=profile.b(y0_nodes),
        omega=np.column_stack([solution.w for solution in solutions]),
        pi=np.column_stack([solution.psi for solution in solutions]),
        residual=max(solution.residual for solution in solutions),
    )


@dataclass(frozen=True, eq=False)
class ThetaSolution:
    """``Theta(., w)`` from the integral formulation, on the nodes ``v = b(y) - w``."""

    w: float
    nodes: np.ndarray
    theta: np.ndarray
    forcing: np.ndarray

    #: ``||Theta||_H1k / ||F||_H1k`` in the ``v`` variable.
    h1k_ratio: float


def _trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    weights = np.gradient(nodes)
    weights[[0, -1]] /= 2
    return weights


def h1k_norm_nonuniform(values: np.ndarray, k: int, nodes: np.ndarray) -> float:
    """``(k^2 ||g||^2 + ||g'||^2)^(1/2)`` on nonuniform nodes."""
    derivative = np.gradient(values, nodes)
    density = k**2 * np.abs(values) ** 2 + np.abs(derivative) ** 2
    return float(np.sqrt(integrate.trapezoid(density, nodes)))


def theta_integral_solve(
    profile: ShearProfile, mode: ModeParams, initial: InitialData, w: float
) -> ThetaSolution:
    """Solve the integral equation for ``Theta(., w)`` directly.

    The equation reads

        Theta + i int int G(v, v') k_eps(v', rho; w) (B*'/B*)(rho + w)
            Theta(rho) / (rho + i eps^(1/3)) drho dv' = F(v)

    with ``F`` the same double integral applied to ``F0 / B*^2``. Kernel columns
    ``k_eps(., rho_j; w)`` are taken for every node in the support of ``b''`` or
    of the initial data, and the coupling is reduced to the support of ``b''``.

    :raises DenseSystemSingular: when the reduced system is numerically singular.
    """
    grid = initial.grid
    grid.require_resolution(mode.eps)
    k = mode.k
    y0 = float(invert_profile(profile, w))
    query = ResolventQuery(mode.eps, 0.0, y0)
    nodes = profile.b(grid.nodes) - w
    slope = profile.db(grid.nodes)
    ddb = profile.ddb(grid.nodes)
    shift = 1j * np.cbrt(mode.eps)
    drho = _trapezoid_weights(nodes)

    active = np.flatnonzero((ddb != 0) | (initial.omega0 != 0))
    sources = np.zeros((grid.size, active.size))
    sources[active, np.arange(active.size)] = 1 / grid.h
    # k_eps(v, rho_j; w) = (rho_j + i eps^(1/3)) b'(z_j) k*(y, z_j; y0)
    kernel = airy_solve(profile, query, sources, grid) * (
        (nodes[active] + shift) * slope[active]
    )

    # G(v, v') dv' = G(y, y') dv' / b'(y'), applied through the y-trapezoid rule.
    to_v = np.gradient(nodes) / (grid.h * slope)

    def green(values):
        weight = to_v if values.ndim == 1 else to_v[:, None]
        return green_kernel_apply(k, values * weight, grid)

    forcing_weights = drho[active] * initial.omega0[active] / (
        slope[active] ** 2 * (nodes[active] + shift)
    )
    forcing = green(kernel @ forcing_weights)

    coupled = np.flatnonzero(ddb[active] != 0)
    if coupled.size == 0:
        theta = forcing.copy()
    else:
        support = active[coupled]
        weights = drho[support] * ddb[support] / (
            slope[support] ** 2 * (nodes[support] + shift)
        )
        M = 1j * green(kernel[:, coupled]) * weights
        reduced = np.eye(support.size) + M[support]
        lu = linalg.lu_factor(reduced)
        check_pivots(lu, DenseSystemSingular, f"Integral system at w={w:g}")
        theta_support = linalg.lu_solve(lu, forcing[support])
        theta = forcing - M @ theta_support

    ratio = h1k_norm_nonuniform(theta, k, nodes) / h1k_norm_nonuniform(forcing, k, nodes)
    logger.debug("Integral Theta at w=%g: H1k ratio %.4f.", w, ratio)
    return ThetaSolution(w=float(w), nodes=nodes, theta=theta, forcing=forcing, h1k_ratio=ratio)


@dataclass(frozen=True)
class LapPoint:
    eps: float
    alpha: float
    y0: float
    #: Smallest H1k singular value of ``psi -> psi + T(i b'' psi)``.
    kappa: float
    #: H1k operator norm of ``psi -> T(i b'' psi)``.
    coupling_norm: float


@dataclass(frozen=True)
class LapScanReport:
    k: int
    points: list[LapPoint] = field(default_factory=list)

    @property
    def kappa_hat(self) -> float:
        return min(point.kappa for point in self.points)

    @property
    def coupling_norm_max(self) -> float:
        return max(point.coupling_norm for point in self.points)

    def kappa_by_eps(self) -> dict[float, float]:
        kappas: dict[float, float] = {}
        for point in self.points:
            kappas[point.eps] = min(kappas.get(point.eps, np.inf), point.kappa)
        return kappas

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "kappa_hat": self.kappa_hat,
            "coupling_norm_max": self.coupling_norm_max,
            "points": [asdict(point) for point in self.points],
        }


@lru_cache(maxsize=8)
def _h1k_factor(k: int, grid: Grid):
    """Upper bidiagonal ``R`` with ``R^T R = h (k^2 I - D2)``, the H1k Gram matrix."""
    n, h = grid.size, grid.h
    banded = np.zeros((2, n))
    banded[0, 1:] = -1 / h
    banded[1, :] = h * k**2 + 2 / h
    return linalg.cholesky_banded(banded)


def _kappa(
    profile: ShearProfile, k: int, query: ResolventQuery, grid: Grid
) -> LapPoint:
    ddb = profile.ddb(grid.nodes)
    support = np.flatnonzero(ddb)
    if support.size == 0:
        return LapPoint(query.eps, query.alpha, query.y0, 1.0, 0.0)

    banded = _h1k_factor(k, grid)
    R = sparse.diags([banded[1], banded[0, 1:]], [0, 1], format="csr")
    U = np.zeros((grid.size, support.size), dtype=complex)
    U[support, np.arange(support.size)] = 1j * ddb[support]
    GZ = poisson_solve(k, airy_solve(profile, query, U, grid), grid)

    # In H1k coordinates the operator is I + B C with B = R GZ and C = E_S^T R^(-1).
    B = R @ GZ
    unit = np.zeros((grid.size, support.size))
    unit[support, np.arange(support.size)] = 1.0
    transposed = np.vstack([banded[1], np.append(banded[0, 1:], 0.0)])
    C_adjoint = linalg.solve_banded((1, 0), transposed, unit)
    Q, _r = linalg.qr(np.hstack([B, C_adjoint]), mode="economic")
    small = (Q.conj().T @ B) @ (C_adjoint.T @ Q)
    singular = linalg.svdvals(np.eye(small.shape[0]) + small)
    kappa = float(singular.min())
    if grid.size > small.shape[0]:
        kappa = min(kappa, 1.0)
    return LapPoint(
        query.eps, query.alpha, query.y0, kappa, float(linalg.svdvals(small).max())
    )


def lap_kappa_scan(
    profile: ShearProfile,
    k: int,
    eps_values,
    alpha_ratios,
    y0_nodes,
    grid: Grid,
    workers: int | None = None,
) -> LapScanReport:
    """Scan the limiting-absorption constant over ``(eps, alpha, y0)``.

    ``alpha`` runs over ``ratio * eps`` for the given ratios, which keeps
    ``eps * alpha >= 0``.
    """
    queries = [
        ResolventQuery(float(eps), float(ratio) * float(eps), float(y0))
        for eps in eps_values
        for ratio in alpha_ratios
        for y0 in y0_nodes
    ]
    if not queries:
        raise ValueError(_("The scan grids must be nonempty."))
    for eps in eps_values:
        grid.require_resolution(eps)

    def point(query: ResolventQuery) -> LapPoint:
        try:
            return _kappa(profile, k, query, grid)
        except ShearlabError as error:
            raise error.with_context(eps=query.eps, alpha=query.alpha, y0=query.y0) from error

    with ThreadPoolExecutor(max_workers=workers or shearlab_settings.WORKERS) as executor:
        points = list(executor.map(point, queries))
    report = LapScanReport(k=k, points=points)
    logger.info(
        "Limiting absorption scan over %d points: kappa=%.4f, coupling norm %.4f.",
        len(points),
        report.kappa_hat,
        report.coupling_norm_max,
    )
    return report


def lap_fourth_order_ratio(
    profile: ShearProfile,
    mode: ModeParams,
    query: ResolventQuery,
    f: np.ndarray,
    grid: Grid,
) -> float:
    """``||psi||_H1k / ||psi*||_H1k`` for the coupled and uncoupled stream functions."""
    coupled = os_resolvent_solve(profile, mode, query, f, grid).psi
    uncoupled = poisson_solve(mode.k, airy_solve(profile, query, f, grid), grid)
    return grid.h1k_norm(coupled, mode.k) / grid.h1k_norm(uncoupled, mode.k)


@dataclass(frozen=True, eq=False)
class LimitReport:
    y0: float
    eps: np.ndarray
    pairings: np.ndarray
    limit: complex
    errors: np.ndarray
    #: Measured sign of the delta contribution at the smallest ``|eps|``.
    delta_sign: int
    expected_sign: int

    @property
    def decreasing(self) -> bool:
        return bool(np.all(np.diff(self.errors) < 0))

    def as_dict(self) -> dict:
        return {
            "y0": self.y0,
            "eps": self.eps.tolist(),
            "errors": self.errors.tolist(),
            "limit": [self.limit.real, self.limit.imag],
            "delta_sign": self.delta_sign,
            "expected_sign": self.expected_sign,
            "decreasing": self.decreasing,
        }


def _principal_value(profile: ShearProfile, integrand, y0: float, half_width: float) -> float:
    """``PV int integrand(y) / (b(y) - b(y0)) dy`` by Cauchy-weighted quadrature."""
    b0 = float(profile.b(y0))
    db0 = float(profile.db(y0))

    def regular(y):
        distance = y - y0
        if distance == 0:
            return integrand(y) / db0
        return integrand(y) * distance / (float(profile.b(y)) - b0)

    value, _error = integrate.quad(
        regular, -half_width, half_width, weight="cauchy", wvar=y0, limit=400
    )
    return value


def _limit_grid(eps: float, half_width: float, refinement: float) -> Grid:
    return Grid(half_width, abs(eps) ** (1 / 3) / refinement)


def pv_delta_limit_check(
    profile: ShearProfile,
    f,
    phi,
    y0: float,
    eps_sequence,
    half_width: float = 8.0,
    alpha_ratio: float = 0.0,
    refinement: float = 32.0,
) -> LimitReport:
    """Compare ``int w phi`` with its principal value plus delta limit.

    For ``eps -> 0+`` the limit is ``i PV int f phi / (b - b(y0)) - pi f(y0) phi(y0) / b'(y0)``;
    for ``eps -> 0-`` the delta term has the opposite sign. ``f`` and ``phi`` are
    vectorized callables. Each ``eps`` is solved on a grid of spacing
    ``|eps|^(1/3) / refinement``.
    """
    eps_sequence = np.asarray(eps_sequence, dtype=float)
    signs = np.sign(eps_sequence)
    if np.any(signs != signs[0]):
        raise ValueError(_("The eps sequence must have one sign."))
    sign = int(signs[0])

    def product(y):
        return float(f(np.asarray(y)) * phi(np.asarray(y)))

    principal = _principal_value(profile, product, y0, half_width)
    delta = np.pi * product(y0) / float(profile.db(y0))
    limit = 1j * principal - sign * delta

    pairings = []
    for eps in eps_sequence:
        grid = _limit_grid(eps, half_width, refinement)
        query = ResolventQuery(float(eps), alpha_ratio * float(eps), y0)
        w = airy_resolvent_solve(profile, query, f(grid.nodes).astype(complex), grid)
        pairings.append(grid.integrate(w * phi(grid.nodes)))
    pairings = np.array(pairings)
    errors = np.abs(pairings - limit)
    measured = pairings[-1].real
    logger.info("Limit check at y0=%g: errors %s.", y0, np.array2string(errors, precision=3))
    return LimitReport(
        y0=float(y0),
        eps=eps_sequence,
        pairings=pairings,
        limit=complex(limit),
        errors=errors,
        delta_sign=int(np.sign(measured * delta)) if delta else 0,
        expected_sign=-sign if delta else 0,
    )


@dataclass(frozen=True, eq=False)
class AlphaLimitReport:
    alpha0: float
    eps: np.ndarray
    errors: np.ndarray

    @property
    def decreasing(self) -> bool:
        return bool(np.all(np.diff(self.errors) < 0))

    def as_dict(self) -> dict:
        return {
            "alpha0": self.alpha0,
            "eps": self.eps.tolist(),
            "errors": self.errors.tolist(),
            "decreasing": self.decreasing,
        }


def alpha_limit_check(
    profile: ShearProfile,
    f,
    y0: float,
    alpha0: float,
    eps_sequence,
    half_width: float = 8.0,
    exclusion: float = 0.0,
    refinement: float = 16.0,
) -> AlphaLimitReport:
    """Relative sup-distance of ``w`` to ``-f / (alpha0 + i(b - b(y0)))`` as ``eps -> 0``.

    Points within ``exclusion`` of ``y0`` are left out.
    """
    eps_sequence = np.asarray(eps_sequence, dtype=float)
    errors = []
    for eps in eps_sequence:
        grid = _limit_grid(eps, half_width, refinement)
        query = ResolventQuery(float(eps), alpha0, y0)
        values = f(grid.nodes).astype(complex)
        w = airy_resolvent_solve(profile, query, values, grid)
        limit = -values / (alpha0 + 1j * (profile.b(grid.nodes) - profile.b(y0)))
        away = np.abs(grid.nodes - y0) >= exclusion
        errors.append(np.max(np.abs(w - limit)[away]) / np.max(np.abs(limit[away])))
    return AlphaLimitReport(alpha0=alpha0, eps=eps_sequence, errors=np.array(errors))
