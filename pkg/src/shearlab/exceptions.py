"""Exceptions raised by the laboratory.

Solver and diagnostic failures derive from :class:`ShearlabError`. Invalid
experiment configurations raise :class:`ConfigInvalid`, which is a Django REST
framework validation error so the field-level detail survives intact.
"""

from django.utils.translation import gettext_lazy as _

from rest_framework import exceptions


class ShearlabError(Exception):
    """Base class of all laboratory errors."""

    default_detail = _("Numerical failure.")

    def __init__(self, detail=None):
        self.detail = str(detail if detail is not None else self.default_detail)
        super().__init__(self.detail)

    def with_context(self, **context) -> "ShearlabError":
        """Return a copy of the error with the scan coordinates appended."""
        where = ", ".join(f"{key}={value!r}" for key, value in context.items())
        error = type(self)(f"{self.detail} [{where}]")
        error.__cause__ = self
        return error


class ProfileError(ShearlabError):
    default_detail = _("Invalid shear profile.")


class MonotonicityViolation(ProfileError):
    default_detail = _("The profile derivative is not positive.")


class AssumptionViolation(ProfileError):
    default_detail = _("The profile slope leaves the admissible band.")


class NonConvergence(ProfileError):
    default_detail = _("Profile inversion did not converge.")


class SolverError(ShearlabError):
    default_detail = _("Linear solve failed.")


class CriticalLayerUnresolved(SolverError):
    default_detail = _("The grid does not resolve the critical layer.")


class SignViolation(SolverError):
    default_detail = _("eps and alpha must not have opposite signs.")


class SingularSystem(SolverError):
    default_detail = _("The discrete elliptic system is singular.")


class CouplingSingular(SolverError):
    default_detail = _("The reduced coupling system is numerically singular.")


class DenseSystemSingular(SolverError):
    default_detail = _("The integral-equation system is numerically singular.")


class NearSingular(SolverError):
    default_detail = _("The resolvent is numerically singular on the imaginary axis.")


class OverflowRisk(SolverError):
    default_detail = _("Matrix exponential argument is too large.")


class StepTooLarge(SolverError):
    default_detail = _("Time step violates the stability bound.")


class PhaseUnderresolved(SolverError):
    default_detail = _("The w-grid does not resolve the oscillatory phase.")


class DiagnosticError(ShearlabError):
    default_detail = _("Diagnostic failed.")


class DegenerateFit(DiagnosticError):
    default_detail = _("Samples do not determine a rate.")


class RegularizationUnconverged(DiagnosticError):
    default_detail = _("Kernel samples depend on the symbol cutoff.")


class InsufficientScan(DiagnosticError):
    default_detail = _("Too few kernel columns for an envelope fit.")


class AliasingRisk(DiagnosticError):
    default_detail = _("The spectrum has not decayed at the Nyquist frequency.")


class BoundaryLeakage(UserWarning):
    """The grid function does not vanish at the truncated boundary."""


class AliasingWarning(UserWarning):
    """The spectrum has not decayed at the Nyquist frequency."""


class ResidualWarning(UserWarning):
    """A direct solve left a residual above the configured tolerance."""


class ConfigInvalid(exceptions.ValidationError):
    default_detail = _("Invalid experiment configuration.")
    default_code = "config_invalid"
