"""Exception types shared across the package."""


class GradparabError(Exception):
    """Base class for all package errors."""


class OutOfRange(GradparabError):
    """Argument outside the closure of the range of a monotone function."""


class NotMonotone(GradparabError):
    """A supposedly monotone description violates monotonicity."""


class PropertyViolation(GradparabError):
    """A sampled structural inequality failed; carries a witness."""

    def __init__(self, name, witness, margin):
        self.name = name
        self.witness = witness
        self.margin = margin
        super().__init__(f"{name} violated by {margin:.3e} at {witness}")


class DimensionMismatch(GradparabError):
    """Vector length does not match the discretisation."""


class SolveFailure(GradparabError):
    """A linear solve failed (singular or badly conditioned system)."""


class NoConvergence(GradparabError):
    """An iterative solver hit its cap; carries the best iterate found."""

    def __init__(self, message, value=None, iterate=None, residual=None):
        self.value = value
        self.iterate = iterate
        self.residual = residual
        super().__init__(message)


class DegenerateMesh(GradparabError):
    """Mesh does not satisfy the builder's preconditions."""


class QuadratureFailure(GradparabError):
    """Numerical integration produced a non-finite value."""


class ConfigError(GradparabError):
    """Invalid study or run configuration."""
