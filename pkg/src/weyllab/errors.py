"""Exception types shared across the package."""
from __future__ import annotations


class WeylLabError(Exception):
    """Base class for all package-specific failures."""


class RadiusOutOfDomain(WeylLabError):
    """A requested ball leaves the domain (and clipping was not asked for)."""


class NonconvergentDensity(WeylLabError):
    """Density ladder failed to extrapolate within the residual threshold."""


class ResolutionTooCoarse(WeylLabError):
    """Mesh resolution too coarse for the requested domain."""


class SingularElement(WeylLabError):
    """An element with non-positive measure was produced."""


class UnsupportedSpace(WeylLabError):
    """Operation not available for this space kind / weight combination."""


class UnsupportedDomain(WeylLabError):
    """Domain descriptor not meshable / not supported by the operation."""


class NoConvergence(WeylLabError):
    """Iterative eigensolve failed; partial results (if any) are attached."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class FactorizationBreakdown(WeylLabError):
    """Symmetric-indefinite factorization failed even after shift perturbation."""


class TailModelMissing(WeylLabError):
    """Heat-trace truncation is not negligible and no growth model was given."""


class TimeTooSmall(WeylLabError):
    """Kernel truncation error bound exceeds the allowed relative budget."""


class DomainTooSmall(WeylLabError):
    """Host domain cannot contain the requested ball with a safe margin."""


class UnresolvedLimit(WeylLabError):
    """Extrapolation ladder does not determine the limit to usable accuracy."""


class WindowTooNarrow(WeylLabError):
    """Fit window has too few points, is degenerate, or leaves the reliable band."""


class ConfigError(WeylLabError):
    """Invalid experiment configuration; carries the offending field path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
