"""Exception types shared across the package."""


class SurfError(Exception):
    """Base class for all package-specific errors."""


class DomainError(SurfError, ValueError):
    """Argument outside the mathematically valid domain."""


class ParameterError(SurfError, ValueError):
    """Configuration or parameter value outside its allowed range."""


class ShapeError(SurfError, ValueError):
    """Array arguments with inconsistent shapes or lengths."""


class OrderingError(SurfError, ValueError):
    """Knot or weight sequence not (strictly) increasing."""


class InsufficientSamplesError(SurfError, ValueError):
    """Too few points for the requested operation."""


class DegenerateFrontError(SurfError, ValueError):
    """Total front length below the numerical floor; front collapses to a point."""


class NonInvertibleError(SurfError, ValueError):
    """Map is not strictly increasing and cannot be inverted."""


class EvaluationError(SurfError, RuntimeError):
    """A function evaluation produced a non-finite value."""


class NumericalError(SurfError, RuntimeError):
    """A linear-algebra or iterative routine failed numerically."""


class RankError(NumericalError):
    """Flow matrix numerically rank-deficient; the MDP data is malformed."""


class AugmentationError(NumericalError):
    """Augmented Hessian not positive definite; retry with a larger constant."""


class DivergenceError(NumericalError):
    """Iterates became non-finite during an inner solve."""


class CoverageError(SurfError, ValueError):
    """A dataset is missing observations for some arm."""


class BudgetError(SurfError, ValueError):
    """Sampling budget too small for the requested allocation."""


class UnsupportedProblemError(SurfError, TypeError):
    """The problem instance does not expose the required capability."""


class ConfigError(SurfError, ValueError):
    """Experiment configuration file invalid or incomplete."""
