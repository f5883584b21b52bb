"""
Error Types
Exceptions and warnings raised by the aperiodica library.

Every hard failure derives from AperiodicaError (a ValueError), so callers
that only care about "bad input" can catch a single type. Soft failures are
warnings: the computation still returns a value.
"""


class AperiodicaError(ValueError):
    """Root of all library errors."""


class InvalidComb(AperiodicaError):
    """Comb data violates its invariants (points outside window, duplicates)."""


class WindowTooSmall(AperiodicaError):
    """The data window cannot host the requested probe set."""


class DegenerateWindow(AperiodicaError):
    """A cut-and-project acceptance window has empty interior."""


class EpsilonTooLarge(AperiodicaError):
    """Perturbation amplitude destroys uniform discreteness."""


class KOutsideWindow(AperiodicaError):
    """The compact set K of a U_{K,V} check is not covered by the data window."""


class EmptyBasis(AperiodicaError):
    """A hit-and-miss basis element is empty (some A \\ C is empty)."""


class NonFLCWithZeroBinning(AperiodicaError):
    """Exact distance matching requested on a comb whose distance set explodes."""


class SigmaNotNormalized(AperiodicaError):
    """The averaging function sigma does not integrate to one."""


class RangeExceeded(AperiodicaError):
    """A pairing or oracle needs autocorrelation coefficients beyond its range."""


class GridTooCoarse(AperiodicaError):
    """The coarse k-grid cannot resolve the Dirichlet main lobe."""


class ZeroDenominator(AperiodicaError):
    """The purity denominator is numerically zero."""


class NotPurePoint(AperiodicaError):
    """Eigenvalue group checks require a pure point diffraction spectrum."""


class AtomRejected(AperiodicaError):
    """The requested wave vector is not an accepted Bragg atom."""


class ConfigError(AperiodicaError):
    """A run configuration failed validation."""


class TruncatedSupportWarning(UserWarning):
    """A test function reaches outside the data window; the value is a truncation."""


class EmptyCoverWarning(UserWarning):
    """K and H do not meet; the hit family is empty."""
