"""Exception types raised by the library.

All of them derive from ValueError so callers that do not care about the
distinction can catch one base class.
"""


class ZeroVector(ValueError):
    """Vector norm too small to normalize (below 1e-14)."""


class IndexOutOfRange(ValueError):
    """Row index outside the ambient dimension of a basis."""


class Underdetermined(ValueError):
    """Fewer observed entries than the subspace rank."""


class RankDeficient(ValueError):
    """Restricted basis is numerically rank deficient."""


class DegenerateGradient(ValueError):
    """Gradient has no usable direction (residual below tolerance)."""


class ShapeMismatch(ValueError):
    """Operands have incompatible shapes or ambient dimensions."""


class InvalidShape(ValueError):
    """Array does not have the required shape or ordering."""


class AllColumnsUnusable(ValueError):
    """Every column was skipped during a full pass over the data."""


class InvalidSpec(ValueError):
    """Synthetic data parameters out of range or inconsistent."""


class TooFewColumns(ValueError):
    """Not enough usable columns to seed the requested candidates."""


class ZeroDenominator(ValueError):
    """Reference quantity has zero norm, the ratio is undefined."""


class EmptyInliers(ValueError):
    """No inlier columns remain after excluding outliers."""
