"""Exception and warning types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or combination (maps to CLI exit code 2)."""


class DegenerateDataError(ValueError):
    """Data violates a precondition, e.g. a zero-variance component in normalize()."""


class SingularSystemError(RuntimeError):
    """Normal-equation factorization failed with no usable fallback.

    Attributes
    ----------
    pivot : int or None
        1-based index of the first non-positive-definite leading minor
        reported by the factorization, when known.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class QuadratureError(RuntimeError):
    """A self-refining quadrature failed to reach its convergence target."""


class SingularGramWarning(UserWarning):
    """Unregularized Gram matrix was singular; a least-squares fallback was used."""
