"""Typed exceptions shared across the package."""


class GaussThermError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(GaussThermError):
    """Vector/matrix dimensions are inconsistent with each other."""


class NotSymmetric(GaussThermError):
    """A matrix required to be symmetric is not, beyond tolerance."""


class NotPositiveDefinite(GaussThermError):
    """A matrix required to be positive definite has an eigenvalue <= 0."""


class NotFaithful(GaussThermError):
    """A covariance matrix has a symplectic eigenvalue at or below 1/2."""


class NotSymplectic(GaussThermError):
    """A matrix fails S @ Omega @ S.T == Omega beyond tolerance."""


class IllConditioned(GaussThermError):
    """Both the spectral and the quadrature evaluation paths failed."""


class SingularMatrix(GaussThermError):
    """An information matrix cannot be inverted (rank deficient)."""


class SingularPoint(GaussThermError):
    """A density was evaluated exactly at its singular point."""


class CutoffTooSmall(GaussThermError):
    """The Fock-space truncation loses more trace weight than allowed."""
