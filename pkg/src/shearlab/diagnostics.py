"""Fourier-side norms, decay fits and the Gevrey multiplier kernel.

Transforms use ``g^(xi) = int g(y) exp(-i y xi) dy`` approximated by ``h`` times
the discrete Fourier transform of the zero-padded samples, so that
``||g||^2 = (1/2pi) int |g^|^2`` holds exactly for the discrete data.
"""

import logging
import warnings
from dataclasses import asdict, dataclass
from enum import StrEnum

import numpy as np
from scipy import fft, integrate
from scipy.signal import windows

from shearlab.airy import bracket
from shearlab.conf import shearlab_settings
from shearlab.exceptions import (
    AliasingRisk,
    AliasingWarning,
    DegenerateFit,
    RegularizationUnconverged,
)
from shearlab.profile import plateau

logger = logging.getLogger(__name__)

# Relative edge size above which samples are tapered before transforming.
TAPER_THRESHOLD = 1e-10

# Tukey window parameter of the taper.
TAPER_ALPHA = 0.1

# Fraction of the Nyquist band inspected for aliasing.
NYQUIST_BAND = 0.9

# Weighted integrand entries below this fraction of the peak are dropped.
FREQUENCY_CUTOFF = 1e-14


class FitModel(StrEnum):
    EXPONENTIAL = "exponential"
    POWER = "power"


@dataclass(frozen=True)
class GevreyWeight:
    """The multiplier ``exp(delta <k, xi>^(1/2))``."""

    #: Weight exponent, zero for the plain L2 norm.
    delta: float

    #: Nonzero horizontal wavenumber.
    k: int

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("The Gevrey exponent must be nonnegative.")
        if self.k == 0:
            raise ValueError("The wavenumber must be nonzero.")

    def symbol(self, xi) -> np.ndarray:
        return np.exp(self.delta * np.sqrt(bracket(self.k, xi)))


@dataclass(frozen=True)
class DecayFit:
    model: FitModel
    #: Decay rate for the exponential model, log-log slope for the power model.
    rate: float
    prefactor: float
    window: tuple[float, float]
    #: RMS of the log residuals inside the window.
    residual: float

    def as_dict(self) -> dict:
        data = asdict(self)
        data["model"] = str(self.model)
        data["window"] = list(self.window)
        return data


@dataclass(frozen=True, eq=False)
class KernelProbeReport:
    mu: float
    k: int
    cutoff: float
    y: np.ndarray
    values: np.ndarray
    #: Fitted constant of ``|K(y)| ~ exp(-c0 |y|^(1/2))``.
    c0: float
    #: RMS of the fit residual relative to the spread of ``log |K|``.
    residual: float

    def as_dict(self) -> dict:
        return {
            "mu": self.mu,
            "k": self.k,
            "cutoff": self.cutoff,
            "c0": self.c0,
            "residual": self.residual,
            "samples": int(self.y.size),
        }


def _taper(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Apply a Tukey window along ``axis`` when the samples do not decay there."""
    peak = np.max(np.abs(values))
    if peak == 0:
        return values
    moved = np.moveaxis(values, axis, 0)
    edge = max(np.max(np.abs(moved[0])), np.max(np.abs(moved[-1])))
    if edge <= TAPER_THRESHOLD * peak:
        return values
    logger.debug("Tapering samples with relative edge %.2e along axis %d.", edge / peak, axis)
    shape = [1] * values.ndim
    shape[axis] = values.shape[axis]
    return values * windows.tukey(values.shape[axis], TAPER_ALPHA).reshape(shape)


def _check_aliasing(spectrum: np.ndarray, frequencies: np.ndarray, strict: bool):
    peak = np.max(np.abs(spectrum))
    if peak == 0:
        return
    band = np.abs(frequencies) >= NYQUIST_BAND * np.max(np.abs(frequencies))
    tail = np.max(np.abs(spectrum[band])) / peak
    if tail <= shearlab_settings.ALIASING_TOLERANCE:
        return
    message = f"Spectrum is {tail:.2e} of its peak near the Nyquist frequency."
    if strict:
        raise AliasingRisk(message)
    logger.warning(message)
    warnings.warn(message, AliasingWarning, stacklevel=3)


def fourier_transform(values: np.ndarray, h: float, pad: int = 2):
    """Return ``(xi, g^)`` along the first axis from tapered, zero-padded samples."""
    values = _taper(np.asarray(values))
    n = fft.next_fast_len(pad * values.shape[0])
    return (
        2 * np.pi * np.fft.fftfreq(n, d=h),
        h * np.fft.fft(values, n=n, axis=0),
    )


def _weighted_sum(spectrum: np.ndarray, weight: np.ndarray) -> float:
    integrand = np.abs(spectrum * weight) ** 2
    keep = integrand >= FREQUENCY_CUTOFF**2 * integrand.max()
    return float(np.sum(integrand[keep]))


def gevrey_norm_1d(
    g: np.ndarray, weight: GevreyWeight, h: float, strict: bool = False
) -> float:
    """``||exp(delta <k, xi>^(1/2)) g^||_L2`` of uniformly sampled data.

    :raises AliasingRisk: in strict mode, when the spectrum has not decayed at
        the Nyquist frequency. Otherwise :class:`AliasingWarning` is issued.
    """
    g = np.asarray(g)
    if not np.any(g):
        return 0.0
    xi, spectrum = fourier_transform(g, h)
    _check_aliasing(spectrum, xi, strict)
    return float(np.sqrt(_weighted_sum(spectrum, weight.symbol(xi)) / (h * xi.size)))


def gevrey_norm_2d(
    G: np.ndarray,
    weight: GevreyWeight,
    h_v: float,
    h_w: float,
    xi_weight: bool = True,
    strict: bool = False,
) -> float:
    """``||(|k| + |xi|) exp(delta <k, eta>^(1/2)) G~||_L2`` over ``(v, w)``.

    ``xi`` is dual to ``v`` (rows) and ``eta`` to ``w`` (columns). With
    ``xi_weight=False`` the factor ``|k| + |xi|`` is omitted.
    """
    G = np.asarray(G)
    if not np.any(G):
        return 0.0
    G = _taper(_taper(G, axis=0), axis=1)
    shape = (fft.next_fast_len(2 * G.shape[0]), fft.next_fast_len(2 * G.shape[1]))
    spectrum = np.fft.fft2(G, s=shape)
    xi = 2 * np.pi * np.fft.fftfreq(shape[0], d=h_v)
    eta = 2 * np.pi * np.fft.fftfreq(shape[1], d=h_w)
    _check_aliasing(np.max(np.abs(spectrum), axis=1), xi, strict)
    _check_aliasing(np.max(np.abs(spectrum), axis=0), eta, strict)
    symbol = weight.symbol(eta)[None, :]
    if xi_weight:
        symbol = (abs(weight.k) + np.abs(xi))[:, None] * symbol
    total = _weighted_sum(spectrum, symbol)
    return float(np.sqrt(h_v * h_w * total / (shape[0] * shape[1])))


def stream_profile_norm(
    Phi: np.ndarray, h: float, k: int, t: float, delta: float, strict: bool = False
) -> float:
    """``||<k, xi - kt>^2 exp(delta <k, xi>^(1/2)) Phi^(xi)||_L2`` of a stream profile."""
    Phi = np.asarray(Phi)
    if not np.any(Phi):
        return 0.0
    xi, spectrum = fourier_transform(Phi, h)
    _check_aliasing(spectrum, xi, strict)
    symbol = bracket(k, xi - k * t) ** 2 * GevreyWeight(delta, k).symbol(xi)
    # The sum of |spectrum|^2 carries h^2 from the transform.
    return float(np.sqrt(_weighted_sum(spectrum, symbol) / (h * xi.size)))


def fit_rate(
    times, values, model: FitModel | str = FitModel.EXPONENTIAL, window=None
) -> DecayFit:
    """Least-squares rate of ``P exp(-rate t)`` or ``P t^rate``.

    :raises DegenerateFit: with fewer than five samples in the window,
        nonpositive values, or values spanning less than ``1e-12`` relative range.
    """
    model = FitModel(model)
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window if window is not None else (times.min(), times.max())
    inside = (times >= lo) & (times <= hi)
    t, v = times[inside], values[inside]
    if t.size < 5:
        raise DegenerateFit(f"{t.size} samples in [{lo:g}, {hi:g}].")
    if np.any(v <= 0):
        raise DegenerateFit("Decay fits need positive values.")
    if (v.max() - v.min()) <= 1e-12 * v.max():
        raise DegenerateFit("Values do not vary over the window.")

    if model == FitModel.POWER:
        if np.any(t <= 0):
            raise DegenerateFit("Power fits need positive times.")
        x = np.log(t)
    else:
        x = t
    slope, intercept = np.polyfit(x, np.log(v), 1)
    residual = np.log(v) - (slope * x + intercept)
    fit = DecayFit(
        model=model,
        rate=float(-slope if model == FitModel.EXPONENTIAL else slope),
        prefactor=float(np.exp(intercept)),
        window=(float(lo), float(hi)),
        residual=float(np.sqrt(np.mean(residual**2))),
    )
    logger.debug("Fitted %s rate %.6g (residual %.2e).", model, fit.rate, fit.residual)
    return fit


def _kernel_samples(mu: float, k: int, y: np.ndarray, cutoff: float):
    def symbol(xi):
        return np.exp(mu * np.sqrt(bracket(k, xi))) * plateau(xi / cutoff, 1.0, 2.0, power=4)

    values, errors = [], []
    for point in np.abs(y):
        value, error = integrate.quad(
            symbol, 0.0, 2 * cutoff, weight="cos", wvar=point, limit=2000
        )
        values.append(2 * value / np.sqrt(2 * np.pi))
        errors.append(2 * error / np.sqrt(2 * np.pi))
    return np.array(values), np.array(errors)


def multiplier_kernel_probe(
    mu: float, k: int, y, cutoff: float = 100.0
) -> KernelProbeReport:
    """Sample the kernel of ``exp(mu <k, xi>^(1/2))`` away from the origin.

    The symbol is regularized by a Gevrey cutoff at ``|xi| ~ cutoff``. Samples
    below the quadrature error are left out of the fit.

    :raises RegularizationUnconverged: when doubling the cutoff moves a sample
        by more than ``1e-6``.
    :raises DegenerateFit: when fewer than three samples rise above the
        quadrature error.
    """
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1).")
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) <= 1):
        raise ValueError("Kernel samples are defined for |y| > 1 only.")

    values, errors = _kernel_samples(mu, k, y, cutoff)
    refined, _errors = _kernel_samples(mu, k, y, 2 * cutoff)
    change = float(np.max(np.abs(refined - values)))
    if change > 1e-6:
        raise RegularizationUnconverged(
            f"Doubling the cutoff {cutoff:g} moved the kernel by {change:.2e}."
        )

    resolved = np.abs(values) > 10 * errors
    if resolved.sum() < 3:
        raise DegenerateFit("Too few kernel samples above the quadrature error.")
    x = np.sqrt(np.abs(y[resolved]))
    logs = np.log(np.abs(values[resolved]))
    slope, intercept = np.polyfit(x, logs, 1)
    spread = np.ptp(logs) or 1.0
    residual = np.sqrt(np.mean((logs - slope * x - intercept) ** 2)) / spread
    logger.info("Multiplier kernel mu=%g k=%d: c0=%.4f.", mu, k, -slope)
    return KernelProbeReport(
        mu=mu,
        k=k,
        cutoff=cutoff,
        y=y,
        values=values,
        c0=float(-slope),
        residual=float(residual),
    )


def multiplier_pairing(mu: float, k: int, phi: np.ndarray, h: float) -> float:
    """``int K(y) phi(y) dy``, the multiplier applied to ``phi`` evaluated at 0.

    ``phi`` is sampled at an odd number of nodes centred at the origin.
    """
    phi = np.asarray(phi)
    n = phi.size
    if n % 2 == 0:
        raise ValueError("The samples must be centred at the origin.")
    xi = 2 * np.pi * np.fft.fftfreq(n, d=h)
    # Shift so that the transform refers to the origin at the middle sample.
    spectrum = h * np.fft.fft(np.fft.ifftshift(phi))
    symbol = np.exp(mu * np.sqrt(bracket(k, xi)))
    return float(np.real(np.sum(symbol * spectrum)) / (n * h))
