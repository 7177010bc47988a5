"""Generalized Airy operator ``eps d^2/dy^2 - alpha + i(b(y0) - b(y))``.

The operator is discretized by centered differences with Dirichlet
truncation and factored once per query. Kernel columns are responses to the
discrete delta. The ``(v, rho; w)`` form of the kernel is obtained either by
the change of variables ``v = b(y) - w`` applied to a ``y``-column, or by
discretizing the transformed equation

    eps k'' + eps (B*'/B*)(v + w) k' - i v / B*(v + w)^2 k = (rho + i eps^(1/3)) delta(v - rho)

directly on the mapped nodes. For Couette flow with ``y0 = 0`` the resolvent
of a constant is ``eps^(-1/3) W(eps^(-1/3) y)`` where ``W`` is the model
solution computed by :func:`model_airy_W`.
"""

import logging
import warnings
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, sparse
from scipy.sparse.linalg import splu

from django.utils.translation import gettext_lazy as _

from shearlab.conf import shearlab_settings
from shearlab.exceptions import InsufficientScan, ResidualWarning, SignViolation, SolverError
from shearlab.grids import Grid
from shearlab.profile import ModeParams, ShearProfile, invert_profile

logger = logging.getLogger(__name__)

# The model integrand exp(xi^3/3) is below 1e-70 beyond this point.
MODEL_CUTOFF = -8.0

# Smallest number of columns for an envelope fit.
MIN_COLUMNS = 10


def bracket(*args) -> np.ndarray:
    """Japanese bracket ``(1 + a^2 + b^2 + ...)^(1/2)``."""
    return np.sqrt(1 + sum(np.abs(a) ** 2 for a in args))


@dataclass(frozen=True)
class ResolventQuery:
    """Parameters of one Airy resolvent."""

    #: Signed diffusion scale ``nu / k``.
    eps: float

    #: Spectral shift, with the sign of ``eps`` or zero.
    alpha: float = 0.0

    #: Critical point; the spectral parameter is ``b(y0)``.
    y0: float = 0.0

    def __post_init__(self):
        if self.eps == 0:
            raise ValueError(_("eps must be nonzero."))
        if self.eps * self.alpha < 0:
            raise SignViolation(
                _("eps = {0:g} and alpha = {1:g} have opposite signs.").format(
                    self.eps, self.alpha
                )
            )

    @property
    def scale(self) -> float:
        """Critical layer width ``|eps|^(1/3)``."""
        return abs(self.eps) ** (1 / 3)

    @property
    def scaled_alpha(self) -> float:
        return abs(self.alpha) / self.scale

    @property
    def in_asymptotic_regime(self) -> bool:
        return abs(self.eps) < 1 / 8


@dataclass(frozen=True, eq=False)
class KernelColumn:
    """One column of an Airy-type fundamental solution."""

    query: ResolventQuery

    #: Source point, ``z`` for ``y``-columns or ``rho`` for ``(v, rho; w)`` columns.
    source: float

    #: Nodes the values live on, ``y`` or ``v = b(y) - w``.
    nodes: np.ndarray

    values: np.ndarray
    derivative_values: np.ndarray

    #: The shift ``w`` of a ``(v, rho; w)`` column, ``None`` for ``y``-columns.
    shift: float | None = None

    def rows(self):
        """CSV rows ``(node, Re, Im, Re', Im')``."""
        return zip(
            self.nodes,
            self.values.real,
            self.values.imag,
            self.derivative_values.real,
            self.derivative_values.imag,
        )


@dataclass(frozen=True, eq=False)
class ModelAiry:
    """The explicit solution of ``W'' - a W - i Y W = 1``."""

    alpha_tilde: float
    Y: np.ndarray
    values: np.ndarray

    def residual(self) -> np.ndarray:
        """Finite-difference residual at the interior nodes of a uniform ``Y``-grid."""
        dY = self.Y[1] - self.Y[0]
        W = self.values
        second = (W[2:] - 2 * W[1:-1] + W[:-2]) / dY**2
        return second - (self.alpha_tilde + 1j * self.Y[1:-1]) * W[1:-1] - 1


def airy_operator(profile: ShearProfile, query: ResolventQuery, grid: Grid):
    """The discrete operator ``eps D2 - alpha + i(b(y0) - b(y))``."""
    potential = 1j * (profile.b(query.y0) - profile.b(grid.nodes)) - query.alpha
    return (query.eps * grid.second_difference() + sparse.diags(potential)).tocsc()


@lru_cache(maxsize=256)
def _factored(profile: ShearProfile, query: ResolventQuery, grid: Grid):
    try:
        lu = splu(airy_operator(profile, query, grid))
    except RuntimeError as error:
        raise SolverError(str(error)) from error
    return lu


def airy_solve(profile: ShearProfile, query: ResolventQuery, rhs: np.ndarray, grid: Grid):
    """Apply the factored inverse to one or several right-hand sides."""
    grid.require_resolution(query.eps)
    return _factored(profile, query, grid).solve(np.asarray(rhs, dtype=complex))


def airy_resolvent_solve(
    profile: ShearProfile, query: ResolventQuery, f: np.ndarray, grid: Grid
) -> np.ndarray:
    """Solve ``eps w'' - alpha w + i(b(y0) - b) w = f``.

    :raises CriticalLayerUnresolved: when ``h > |eps|^(1/3) / 8``.
    :raises SignViolation: when ``eps`` and ``alpha`` have opposite signs.

    Issues :class:`~shearlab.exceptions.ResidualWarning` when the relative
    residual exceeds ``SOLVE_RESIDUAL``.
    """
    w = airy_solve(profile, query, f, grid)
    scale = np.max(np.abs(f))
    if scale > 0:
        residual = np.max(np.abs(airy_operator(profile, query, grid) @ w - f)) / scale
        logger.debug("Airy resolvent residual %.2e for %s.", residual, query)
        if residual > shearlab_settings.SOLVE_RESIDUAL:
            logger.warning("Airy resolvent residual %.2e for %s.", residual, query)
            warnings.warn(
                f"Airy resolvent residual {residual:.2e} exceeds "
                f"{shearlab_settings.SOLVE_RESIDUAL:g}.",
                ResidualWarning,
                stacklevel=2,
            )
    return w


def airy_kernel_column(
    profile: ShearProfile, query: ResolventQuery, z: float, grid: Grid
) -> KernelColumn:
    """Response to the discrete delta ``1/h`` at the node nearest to ``z``."""
    values = airy_solve(profile, query, grid.delta(z), grid)
    return KernelColumn(
        query=query,
        source=float(grid.nodes[grid.nearest_index(z)]),
        nodes=grid.nodes,
        values=values,
        derivative_values=grid.derivative(values),
    )


def model_airy_W(alpha_tilde: float, Y: np.ndarray) -> ModelAiry:
    """``W(Y) = -int_{-inf}^0 exp(xi^3/3 + a xi + i Y xi) d xi`` by adaptive quadrature."""
    if alpha_tilde < 0:
        raise ValueError(_("alpha_tilde must be nonnegative."))
    Y = np.atleast_1d(np.asarray(Y, dtype=float))

    def envelope(xi):
        return np.exp(xi**3 / 3 + alpha_tilde * xi)

    values = np.empty(Y.size, dtype=complex)
    for index, y in enumerate(Y):
        options = dict(epsabs=1e-14, epsrel=1e-11, limit=400)
        if y == 0:
            real, _err = integrate.quad(envelope, MODEL_CUTOFF, 0, **options)
            imag = 0.0
        else:
            real, _err = integrate.quad(
                envelope, MODEL_CUTOFF, 0, weight="cos", wvar=y, **options
            )
            imag, _err = integrate.quad(
                envelope, MODEL_CUTOFF, 0, weight="sin", wvar=y, **options
            )
        values[index] = -(real + 1j * imag)
    return ModelAiry(alpha_tilde=float(alpha_tilde), Y=Y, values=values)


def couette_model_resolvent(eps: float, alpha: float, y: np.ndarray) -> np.ndarray:
    """Resolvent of ``f = 1`` for Couette flow at ``y0 = 0`` on the whole line."""
    if eps < 0:
        return -np.conj(couette_model_resolvent(-eps, -alpha, y))
    scale = eps ** (1 / 3)
    model = model_airy_W(alpha / scale, np.asarray(y) / scale)
    return model.values / scale


def _vw_nodes(profile: ShearProfile, mode: ModeParams, rho: float, w: float, grid: Grid):
    y0 = float(invert_profile(profile, w))
    z = float(invert_profile(profile, rho + w))
    source = grid.nearest_index(z)
    nodes = profile.b(grid.nodes) - w
    return ResolventQuery(mode.eps, 0.0, y0), source, nodes


def airy_kernel_vw(
    profile: ShearProfile, mode: ModeParams, rho: float, w: float, grid: Grid
) -> KernelColumn:
    """Column ``k_eps(., rho; w)`` on the nodes ``v = b(y) - w``.

    Computed from the ``y``-column through
    ``k_eps(v, rho; w) = (rho + i eps^(1/3)) b'(z) k*(y, z; y0)``
    with ``y0 = b^(-1)(w)`` and ``z = b^(-1)(rho + w)``.
    """
    query, source, nodes = _vw_nodes(profile, mode, rho, w, grid)
    column = airy_kernel_column(profile, query, grid.nodes[source], grid)
    rho_node = nodes[source]
    weight = (rho_node + 1j * np.cbrt(mode.eps)) * profile.db(grid.nodes[source])
    return KernelColumn(
        query=query,
        source=float(rho_node),
        nodes=nodes,
        values=weight * column.values,
        derivative_values=weight * column.derivative_values / profile.db(grid.nodes),
        shift=float(w),
    )


def _nonuniform_stencils(nodes: np.ndarray):
    """Second-order first and second derivative stencils on nonuniform nodes."""
    spacing = np.diff(nodes)
    left = np.concatenate([[spacing[0]], spacing])
    right = np.concatenate([spacing, [spacing[-1]]])
    total = left + right
    second = (2 / (left * total), -2 / (left * right), 2 / (right * total))
    first = (-right / (left * total), (right - left) / (left * right), left / (right * total))
    return first, second, total / 2


def airy_kernel_vw_direct(
    profile: ShearProfile, mode: ModeParams, rho: float, w: float, grid: Grid
) -> KernelColumn:
    """Column ``k_eps(., rho; w)`` by discretizing the transformed equation directly."""
    query, source, nodes = _vw_nodes(profile, mode, rho, w, grid)
    grid.require_resolution(mode.eps)
    eps = mode.eps
    slope = profile.db(grid.nodes)
    drift = profile.ddb(grid.nodes) / slope**2
    first, second, cell = _nonuniform_stencils(nodes)
    lower = eps * second[0] + eps * drift * first[0]
    diagonal = eps * second[1] + eps * drift * first[1] - 1j * nodes / slope**2
    upper = eps * second[2] + eps * drift * first[2]
    operator = sparse.diags(
        [lower[1:], diagonal, upper[:-1]], [-1, 0, 1], format="csc"
    )
    rho_node = nodes[source]
    rhs = np.zeros(nodes.size, dtype=complex)
    rhs[source] = (rho_node + 1j * np.cbrt(eps)) / cell[source]
    values = splu(operator).solve(rhs)
    return KernelColumn(
        query=query,
        source=float(rho_node),
        nodes=nodes,
        values=values,
        derivative_values=np.gradient(values, nodes),
        shift=float(w),
    )


@dataclass
class BoundEnvelopeReport:
    """Measured constants of the kernel envelopes over a scan."""

    columns: int
    diagonal_min: float
    diagonal_max: float
    band_ratio: float
    decay_rate: float
    fit_residual: float
    c0: float
    entanglement_min: float
    derivative_constant: float
    weighted_energy_max: float
    gradient_energy_max: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class _Scaled:
    Y: np.ndarray
    Z: float
    K: np.ndarray
    dK: np.ndarray
    alpha: float
    dY: float


def _scaled(column: KernelColumn) -> _Scaled:
    query = column.query
    s = query.scale
    return _Scaled(
        Y=(column.nodes - query.y0) / s,
        Z=(column.source - query.y0) / s,
        K=column.values * s**2,
        dK=column.derivative_values * s**3,
        alpha=query.scaled_alpha,
        dY=(column.nodes[1] - column.nodes[0]) / s,
    )


def entanglement_functional(
    column: KernelColumn, phi: np.ndarray, dphi: np.ndarray, c0: float
) -> float:
    """``int (|phi'|^2 - c0^2 <alpha, Y> |phi|^2) |K|^2 dY`` in scaled variables."""
    scaled = _scaled(column)
    density = np.abs(scaled.K) ** 2
    weight = bracket(scaled.alpha, scaled.Y)
    integrand = (np.abs(dphi) ** 2 - c0**2 * weight * np.abs(phi) ** 2) * density
    return float(np.sum(integrand) * scaled.dY)


def tent_cutoffs(column: KernelColumn):
    """Tent cutoffs ``(phi, phi')`` in scaled variables.

    Each tent is supported on an interval where ``Y`` has one sign and which
    does not contain the source ``Z``.
    """
    return list(_tents(_scaled(column)))


def _tents(scaled: _Scaled):
    for radius in (0.5, 1.0, 2.0):
        centers = [side * (offset + radius) for side in (-1, 1) for offset in (0.25, 1.0, 3.0)]
        centers += [scaled.Z + side * (gap + radius) for side in (-1, 1) for gap in (0.25, 1.0)]
        for center in centers:
            if abs(center) < radius or abs(center - scaled.Z) < radius:
                continue
            distance = np.abs(scaled.Y - center)
            phi = np.clip(1 - distance / radius, 0, None)
            dphi = np.where(distance < radius, -np.sign(scaled.Y - center) / radius, 0.0)
            if np.count_nonzero(phi) > 4:
                yield phi, dphi


def _tent_c0(scaled: _Scaled, phi: np.ndarray, dphi: np.ndarray) -> float | None:
    density = np.abs(scaled.K) ** 2
    numerator = np.sum(dphi**2 * density)
    denominator = np.sum(bracket(scaled.alpha, scaled.Y) * phi**2 * density)
    if denominator <= 1e-300:
        return None
    return float(np.sqrt(numerator / denominator))


def verify_airy_bounds(columns: list[KernelColumn]) -> BoundEnvelopeReport:
    """Fit the envelope constants of a scan of ``y``-columns.

    The diagonal band measures ``|K(Z, Z)| <alpha, Z>^(1/2)``. The decay rate
    is the negative slope of ``log(|K| <alpha, Z>^(1/2))`` against
    ``<alpha, Y, Z>^(1/2) |Y - Z|``. The constant ``c0`` is the largest value
    for which every tent cutoff keeps the entanglement functional nonnegative,
    capped by the decay rate.

    :raises InsufficientScan: when fewer than 10 columns are given.
    """
    if len(columns) < MIN_COLUMNS:
        raise InsufficientScan(
            _("{0} columns given, at least {1} needed.").format(len(columns), MIN_COLUMNS)
        )
    diagonal, xs, logs, tent_bounds, weighted, gradient = [], [], [], [], [], []
    scans = [_scaled(column) for column in columns]
    for column, scaled in zip(columns, scans):
        Z, alpha = scaled.Z, scaled.alpha
        source = int(np.argmin(np.abs(column.nodes - column.source)))
        diag = abs(scaled.K[source])
        diagonal.append(diag * bracket(alpha, Z) ** 0.5)

        magnitude = np.abs(scaled.K)
        keep = magnitude >= 1e-12 * diag
        xs.append(bracket(alpha, scaled.Y[keep], Z) ** 0.5 * np.abs(scaled.Y[keep] - Z))
        logs.append(np.log(magnitude[keep] * bracket(alpha, Z) ** 0.5))

        for phi, dphi in _tents(scaled):
            bound = _tent_c0(scaled, phi, dphi)
            if bound is not None:
                tent_bounds.append(bound)

        density = magnitude**2
        weighted.append(
            np.sum(bracket(scaled.Y) ** 2 * density) * scaled.dY / bracket(alpha, Z) ** 0.5
        )
        gradient.append(
            (alpha * np.sum(density) + np.sum(np.abs(scaled.dK) ** 2))
            * scaled.dY
            * bracket(alpha, Z) ** 0.5
        )

    x, y = np.concatenate(xs), np.concatenate(logs)
    slope, intercept = np.polyfit(x, y, 1)
    residual = np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)) / np.ptp(y)
    decay_rate = float(-slope)
    c0 = min([decay_rate, *tent_bounds])

    entanglement = []
    derivative = 0.0
    for column, scaled in zip(columns, scans):
        for phi, dphi in _tents(scaled):
            entanglement.append(entanglement_functional(column, phi, dphi, c0))
        slope_magnitude = np.abs(scaled.dK)
        keep = slope_magnitude >= 1e-10 * slope_magnitude.max()
        X = bracket(scaled.alpha, scaled.Y[keep], scaled.Z) ** 0.5 * np.abs(
            scaled.Y[keep] - scaled.Z
        )
        derivative = max(
            derivative, float(np.max(slope_magnitude[keep] * np.exp(c0 * X / 2)))
        )

    report = BoundEnvelopeReport(
        columns=len(columns),
        diagonal_min=float(min(diagonal)),
        diagonal_max=float(max(diagonal)),
        band_ratio=float(max(diagonal) / min(diagonal)),
        decay_rate=decay_rate,
        fit_residual=float(residual),
        c0=float(c0),
        entanglement_min=float(min(entanglement)) if entanglement else 0.0,
        derivative_constant=derivative,
        weighted_energy_max=float(max(weighted)),
        gradient_energy_max=float(max(gradient)),
    )
    logger.info("Airy envelope report: %s", report)
    return report


@dataclass
class VwEnvelopeReport:
    columns: int
    value_constant: float
    derivative_constant: float
    decay_rate: float

    def as_dict(self) -> dict:
        return asdict(self)


def verify_vw_bounds(columns: list[KernelColumn]) -> VwEnvelopeReport:
    """Measure the value and derivative envelopes of ``(v, rho; w)`` columns.

    Values are compared with ``|eps|^(-1/3) <rho/s>^(1/2)`` and derivatives with
    ``|eps|^(-2/3) <rho/s>``, where ``s = |eps|^(1/3)``. The decay rate is fitted
    against ``<v/s, rho/s>^(1/2) |v - rho| / s``.
    """
    if not columns:
        raise InsufficientScan(_("No columns given."))
    values, derivatives, xs, logs = [], [], [], []
    for column in columns:
        s = column.query.scale
        v, rho = column.nodes / s, column.source / s
        prefactor = bracket(rho) ** 0.5 / s
        magnitude = np.abs(column.values) / prefactor
        values.append(magnitude.max())
        derivatives.append(np.max(np.abs(column.derivative_values)) * s**2 / bracket(rho))
        keep = magnitude >= 1e-12 * magnitude.max()
        xs.append(bracket(v[keep], rho) ** 0.5 * np.abs(v[keep] - rho))
        logs.append(np.log(magnitude[keep]))
    slope, _intercept = np.polyfit(np.concatenate(xs), np.concatenate(logs), 1)
    return VwEnvelopeReport(
        columns=len(columns),
        value_constant=float(max(values)),
        derivative_constant=float(max(derivatives)),
        decay_rate=float(-slope),
    )


def energy_ratio(query: ResolventQuery, f: np.ndarray, w: np.ndarray, grid: Grid) -> float:
    """``(||(y - y0) w|| + s ||w|| + s^2 ||w'||) / ||f||`` with ``s = |eps|^(1/3)``."""
    s = query.scale
    lhs = (
        grid.l2_norm((grid.nodes - query.y0) * w)
        + s * grid.l2_norm(w)
        + s**2 * grid.l2_norm(grid.derivative(w))
    )
    return lhs / grid.l2_norm(f)


def pointwise_envelope(
    query: ResolventQuery, f: np.ndarray, w: np.ndarray, grid: Grid
) -> tuple[float, float]:
    """Measured constants of the pointwise value and derivative envelopes.

    Values are compared with ``s^(-1) <(y - y0)/s, alpha/s>^(-1) ||f||_H1`` and
    derivatives with ``|eps|^(-1/2) <.>^(-3/4) + |eps|^(-2/3) <.>^(-2)``, both
    scaled by ``||f||_H1``.
    """
    s = query.scale
    eps = abs(query.eps)
    norm = np.sqrt(grid.l2_norm(f) ** 2 + grid.l2_norm(grid.derivative(f)) ** 2)
    weight = bracket((grid.nodes - query.y0) / s, query.scaled_alpha)
    value = np.max(np.abs(w) * s * weight) / norm
    envelope = eps ** (-1 / 2) * weight ** (-3 / 4) + eps ** (-2 / 3) * weight ** (-2)
    derivative = np.max(np.abs(grid.derivative(w)) / envelope) / norm
    return float(value), float(derivative)
