"""Exception hierarchy for the toric mirror engine.

Everything raised on purpose by this package derives from ToricMirrorError,
so callers can catch one type at the CLI boundary.  The leaf names mirror the
failure modes of the individual stages: fan validation, truncated series
arithmetic, cohomology reduction, Birkhoff factorization, Gauss-Manin
transport, and the verification suites.
"""

from __future__ import annotations


class ToricMirrorError(Exception):
    """Base class for all engine errors."""


# ----------------------------------------------------------------- fan layer


class FanError(ToricMirrorError):
    """Base class for fan validation / combinatorics errors."""


class NonUnimodularCone(FanError):
    """A maximal cone's ray matrix does not have determinant +-1."""


class NonConvexSupport(FanError):
    """The union of maximal cones is not a convex (or not closed) region."""


class NoStrictlyConvexSupportFunction(FanError):
    """No strictly convex piecewise-linear support function exists."""


class BadPolarization(FanError):
    """A supplied polarization vector is not positive on all wall classes."""


class PolarizationUnbounded(FanError):
    """Enumeration requested without a positive degree functional."""


class OutsideSupport(FanError):
    """A lattice point does not lie in the support of the fan."""


# -------------------------------------------------------------- series layer


class SeriesError(ToricMirrorError):
    """Base class for truncated-series arithmetic errors."""


class PolicyMismatch(SeriesError):
    """Operands built under different truncation policies were combined."""


class SingularJacobian(SeriesError):
    """A series substitution/inversion has a non-invertible linear part."""


class TruncationLoss(SeriesError):
    """An operation was asked to be loss-free but dropped terms."""


# ---------------------------------------------------------- cohomology layer


class NonCompactFan(ToricMirrorError):
    """Integration requested on a fan whose support is not all of R^D."""


# -------------------------------------------------------------- mirror layer


class FactorizationResidue(ToricMirrorError):
    """M * P - dI is nonzero inside the certified z-window."""


class NegativePowerInP(ToricMirrorError):
    """The positive factor P acquired a negative z power."""


class NonPolynomialCoefficient(ToricMirrorError):
    """A primitive-form coefficient failed to be a z-polynomial."""


class NormalizationFailure(ToricMirrorError):
    """Route B could not remove all z >= 1 terms at the requested caps."""


class RouteDisagreement(ToricMirrorError):
    """The two primitive-form routes produced different answers."""


# ---------------------------------------------------------- Gauss-Manin layer


class PropertyViolation(ToricMirrorError):
    """A structural identity of the Gauss-Manin transport failed."""


class RankDeficientUnfolding(ToricMirrorError):
    """The restricted deformation fails the universal-unfolding rank test."""


class SectionNotALift(ToricMirrorError):
    """A supplied section's reductions do not form a cohomology basis."""


# --------------------------------------------------------------- verify layer


class IdentityViolation(ToricMirrorError):
    """An exact identity (localization, flow, residual) failed somewhere."""


class MismatchedInvariant(ToricMirrorError):
    """Engine-extracted invariants disagree with the independent oracle."""
