"""Time evolution of one Fourier mode of the linearized equations.

Two independent paths produce the vorticity ``omega_k(t, y)``:

* the representation formula, an oscillatory integral of the spectral density
  over ``w``,

      f_k(t, v) = -(sgn k / 2 pi) exp(-nu k^2 t) int exp(-i k w t) Omega(v, w) dw,

  evaluated on the mapped nodes ``v = b(y)`` where ``f_k(t, b(y)) = omega_k(t, y)``;
* Crank-Nicolson stepping of ``d omega / dt = nu (D2 - k^2) omega - i k b omega
  + i k b'' G_k omega``.

For Couette flow the closed form on the Fourier side serves as an oracle.

The integrand of the representation formula decays only like ``1/w`` and the
integral jumps at ``t = 0``. The model ``F0(v) / (i(w - v) - gamma sgn k)``,
whose transform ``F0(v) exp(-i k v t) exp(-gamma |k| t)`` is known, is
subtracted before quadrature and added back afterwards. The remainder decays
like ``1/w^2`` and its tails beyond the ``w``-grid are closed with exponential
integrals.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import interpolate, linalg, special
from scipy.integrate import trapezoid
from scipy.sparse import diags, identity
from scipy.sparse.linalg import splu

from django.utils.translation import gettext_lazy as _

from shearlab.conf import shearlab_settings
from shearlab.diagnostics import GevreyWeight, gevrey_norm_1d
from shearlab.elliptic import poisson_solve
from shearlab.exceptions import CouplingSingular, PhaseUnderresolved, StepTooLarge
from shearlab.grids import Grid
from shearlab.orr_sommerfeld import InitialData, SpectralDensityField, check_pivots
from shearlab.profile import ModeParams, ShearProfile, invert_profile

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EvolutionSeries:
    """Vorticity and stream function of one mode at sampled times."""

    mode: ModeParams
    grid: Grid
    times: np.ndarray

    #: ``omega_k(t, y)`` and ``psi_k(t, y)``, one row per time.
    omega_t: np.ndarray
    psi_t: np.ndarray

    #: Uniform ``v``-grid of the profiles.
    v_nodes: np.ndarray | None = None

    #: ``F_k(t, v) = f_k(t, v) exp(i k v t)`` and ``Phi_k`` likewise.
    F_t: np.ndarray | None = None
    Phi_t: np.ndarray | None = None

    def relative_difference(self, other: "EvolutionSeries") -> np.ndarray:
        """Relative L2 difference of the vorticities at each time, against ``other``."""
        difference = np.sqrt(np.sum(np.abs(self.omega_t - other.omega_t) ** 2, axis=1))
        reference = np.sqrt(np.sum(np.abs(other.omega_t) ** 2, axis=1))
        return difference / reference

    def elliptic_defect(self) -> float:
        """Largest relative residual of ``(D2 - k^2) psi = omega`` over the times."""
        operator = self.grid.second_difference() - self.mode.k**2 * identity(self.grid.size)
        defects = [
            np.max(np.abs(operator @ psi - omega)) / (np.max(np.abs(omega)) or 1.0)
            for omega, psi in zip(self.omega_t, self.psi_t)
        ]
        return float(max(defects))

    @property
    def v_spacing(self) -> float:
        return float(self.v_nodes[1] - self.v_nodes[0])

    def norm_rows(self, delta: float | None = None):
        """Rows ``(t, ||F||, ||F||_Gevrey, ||Phi||)`` of the profiles."""
        if self.F_t is None:
            raise ValueError(_("Profiles have not been extracted."))
        if delta is None:
            delta = shearlab_settings.GEVREY_DELTA
        weight = GevreyWeight(delta, self.mode.k)
        plain = GevreyWeight(0.0, self.mode.k)
        h = self.v_spacing
        for t, F, Phi in zip(self.times, self.F_t, self.Phi_t):
            yield (
                float(t),
                gevrey_norm_1d(F, plain, h),
                gevrey_norm_1d(F, weight, h),
                gevrey_norm_1d(Phi, plain, h),
            )

    def rows(self):
        """CSV rows ``(t, v, ReF, ImF, RePhi, ImPhi)``."""
        if self.F_t is None:
            raise ValueError(_("Profiles have not been extracted."))
        for t, F, Phi in zip(self.times, self.F_t, self.Phi_t):
            for v, f_value, phi_value in zip(self.v_nodes, F, Phi):
                yield (t, v, f_value.real, f_value.imag, phi_value.real, phi_value.imag)


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.size == 0 or times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError(_("Times must be nonnegative and increasing."))
    return times


def _tail(kappa: float, gap: np.ndarray) -> np.ndarray:
    """``int_gap^inf exp(-i kappa u) / u^2 du`` for positive gaps."""
    value = np.exp(-1j * kappa * gap) / gap
    if kappa != 0:
        value = value - 1j * kappa * special.exp1(1j * kappa * gap)
    return value


class _Reconstruction:
    """Oscillatory ``w``-integral of one density with the model subtracted."""

    def __init__(self, density, data, v, w, k, gamma):
        self.v, self.w, self.k, self.gamma = v, w, k, gamma
        self.data = data
        sign = np.sign(k)
        model = data[:, None] / (1j * (w[None, :] - v[:, None]) - gamma * sign)
        self.remainder = density - model
        upper, lower = w[-1] - v, v - w[0]
        self.upper = np.where(upper > 0, upper, 1.0)
        self.lower = np.where(lower > 0, lower, 1.0)
        self.upper_coefficient = np.where(upper > 0, self.remainder[:, -1] * upper**2, 0)
        self.lower_coefficient = np.where(lower > 0, self.remainder[:, 0] * lower**2, 0)

    def __call__(self, t: float) -> np.ndarray:
        kappa = self.k * t
        integral = trapezoid(self.remainder * np.exp(-1j * kappa * self.w), self.w, axis=1)
        integral = integral + np.exp(-1j * kappa * self.v) * (
            self.upper_coefficient * _tail(kappa, self.upper)
            + self.lower_coefficient * _tail(-kappa, self.lower)
        )
        transport = self.data * np.exp(-1j * kappa * self.v - self.gamma * abs(self.k) * t)
        return -np.sign(self.k) / (2 * np.pi) * integral + transport


def evolve_representation(
    field: SpectralDensityField,
    times,
    profile: ShearProfile | None = None,
    viscous_prefactor: bool = True,
    workers: int | None = None,
) -> EvolutionSeries:
    """Vorticity and stream function from the spectral density.

    :raises PhaseUnderresolved: when ``|k| t_max max(dw) > PHASE_LIMIT``.
    """
    times = _check_times(times)
    mode, grid = field.mode, field.initial.grid
    k = mode.k
    w = field.w_nodes
    phase = abs(k) * times[-1] * np.max(np.diff(w))
    if phase > shearlab_settings.PHASE_LIMIT:
        raise PhaseUnderresolved(
            _("|k| t_max dw = {0:.3g} exceeds {1:g}.").format(
                phase, shearlab_settings.PHASE_LIMIT
            )
        )

    gamma = shearlab_settings.MODEL_DAMPING
    v = field.v_nodes
    omega0 = field.initial.omega0
    vorticity = _Reconstruction(field.omega, omega0, v, w, k, gamma)
    stream = _Reconstruction(field.pi, poisson_solve(k, omega0, grid), v, w, k, gamma)

    def sample(t: float):
        factor = np.exp(-mode.nu * k**2 * t) if viscous_prefactor else 1.0
        return factor * vorticity(t), factor * stream(t)

    with ThreadPoolExecutor(max_workers=workers or shearlab_settings.WORKERS) as executor:
        samples = list(executor.map(sample, times))
    logger.info(
        "Representation formula k=%d nu=%g at %d times (phase step %.3f).",
        k,
        mode.nu,
        times.size,
        phase,
    )
    series = EvolutionSeries(
        mode=mode,
        grid=grid,
        times=times,
        omega_t=np.array([omega for omega, _psi in samples]),
        psi_t=np.array([psi for _omega, psi in samples]),
    )
    return extract_profiles(series, profile or field.profile)


class _CrankNicolson:
    """Factored ``I - (tau/2) L`` with the coupling reduced to the support of ``b''``."""

    def __init__(self, profile: ShearProfile, mode: ModeParams, grid: Grid, tau: float):
        self.k, self.nu, self.grid, self.tau = mode.k, mode.nu, grid, tau
        nodes = grid.nodes
        self.b = profile.b(nodes)
        self.ddb = profile.ddb(nodes)
        local = (
            mode.nu * grid.second_difference()
            + diags(-mode.nu * mode.k**2 - 1j * mode.k * self.b)
        )
        self.local = local.tocsc()
        self.lu = splu((identity(grid.size, format="csc") - tau / 2 * self.local).tocsc())
        self.support = np.flatnonzero(self.ddb)
        if self.support.size:
            m = self.support.size
            U = np.zeros((grid.size, m), dtype=complex)
            U[self.support, np.arange(m)] = -tau / 2 * 1j * mode.k * self.ddb[self.support]
            self.Z = self.lu.solve(U)
            self.GZ = poisson_solve(mode.k, self.Z, grid)
            self.capacitance = linalg.lu_factor(np.eye(m) + self.GZ[self.support])
            check_pivots(self.capacitance, CouplingSingular, f"Time step {tau:g}")

    def apply(self, omega: np.ndarray) -> np.ndarray:
        """The generator applied to ``omega``."""
        coupling = 1j * self.k * self.ddb * poisson_solve(self.k, omega, self.grid)
        return self.local @ omega + coupling

    def step(self, omega: np.ndarray) -> np.ndarray:
        rhs = omega + self.tau / 2 * self.apply(omega)
        x = self.lu.solve(rhs)
        if self.support.size:
            Gx = poisson_solve(self.k, x, self.grid)
            x = x - self.Z @ linalg.lu_solve(self.capacitance, Gx[self.support])
        return x


def evolve_direct(
    profile: ShearProfile,
    mode: ModeParams,
    initial: InitialData,
    times,
    dt: float,
) -> EvolutionSeries:
    """Crank-Nicolson evolution, reaching every sampled time exactly.

    :raises StepTooLarge: when ``dt |k| max|b| > STEP_LIMIT``.
    :raises CouplingSingular: when a step operator cannot be reduced.
    """
    times = _check_times(times)
    grid = initial.grid
    bound = dt * abs(mode.k) * np.max(np.abs(profile.b(grid.nodes)))
    if bound > shearlab_settings.STEP_LIMIT:
        raise StepTooLarge(
            _("dt |k| max|b| = {0:.3g} exceeds {1:g}.").format(
                bound, shearlab_settings.STEP_LIMIT
            )
        )

    steppers: dict[float, _CrankNicolson] = {}
    omega = initial.omega0.copy()
    current = 0.0
    samples = []
    for t in times:
        interval = t - current
        if interval > 0:
            count = math.ceil(interval / dt - 1e-9)
            tau = interval / count
            key = round(tau, 14)
            if key not in steppers:
                steppers[key] = _CrankNicolson(profile, mode, grid, tau)
            stepper = steppers[key]
            for _step in range(count):
                omega = stepper.step(omega)
            current = t
        samples.append(omega.copy())
    omega_t = np.array(samples)
    psi_t = np.array([poisson_solve(mode.k, omega, grid) for omega in omega_t])
    logger.info(
        "Crank-Nicolson k=%d nu=%g dt=%g to t=%g.", mode.k, mode.nu, dt, times[-1]
    )
    series = EvolutionSeries(mode=mode, grid=grid, times=times, omega_t=omega_t, psi_t=psi_t)
    return extract_profiles(series, profile)


def couette_spectral_amplitude(mode: ModeParams, omega0_hat, xi, t: float):
    """``omega0^(xi + kt) exp(-nu [k^2 t + ((xi + kt)^3 - xi^3) / (3k)])``."""
    k, nu = mode.k, mode.nu
    xi = np.asarray(xi, dtype=float)
    shifted = xi + k * t
    return omega0_hat(shifted) * np.exp(-nu * (k**2 * t + (shifted**3 - xi**3) / (3 * k)))


def couette_closed_form(
    mode: ModeParams, initial: InitialData, times, inviscid: bool = False
) -> EvolutionSeries:
    """Exact evolution for ``b(y) = y`` on the periodic extension of the grid."""
    if not initial.profile.is_couette:
        raise ValueError(_("The closed form holds for Couette flow only."))
    times = _check_times(times)
    grid = initial.grid
    y, k = grid.nodes, mode.k
    nu = 0.0 if inviscid else mode.nu
    xi = 2 * np.pi * np.fft.fftfreq(grid.size, d=grid.h)
    omega_t = []
    for t in times:
        spectrum = np.fft.fft(initial.omega0 * np.exp(-1j * k * t * y))
        decay = np.exp(-nu * (k**2 * t + ((xi + k * t) ** 3 - xi**3) / (3 * k)))
        omega_t.append(np.fft.ifft(spectrum * decay))
    omega_t = np.array(omega_t)
    psi_t = np.array([poisson_solve(k, omega, grid) for omega in omega_t])
    series = EvolutionSeries(mode=mode, grid=grid, times=times, omega_t=omega_t, psi_t=psi_t)
    return extract_profiles(series, initial.profile)


def extract_profiles(series: EvolutionSeries, profile: ShearProfile) -> EvolutionSeries:
    """Fill ``F_t`` and ``Phi_t`` on a uniform ``v``-grid spanning ``b`` of the grid."""
    grid = series.grid
    span = profile.b(grid.nodes[[0, -1]])
    v = np.linspace(span[0], span[1], grid.size)
    y = np.clip(invert_profile(profile, v), grid.nodes[0], grid.nodes[-1])
    omega = interpolate.CubicSpline(grid.nodes, series.omega_t, axis=1)(y)
    psi = interpolate.CubicSpline(grid.nodes, series.psi_t, axis=1)(y)
    phase = np.exp(1j * series.mode.k * np.outer(series.times, v))
    return replace(series, v_nodes=v, F_t=omega * phase, Phi_t=psi * phase)
