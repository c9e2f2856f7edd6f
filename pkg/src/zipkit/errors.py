"""Exception hierarchy shared by all zipkit modules."""


class ZipkitError(Exception):
    """Base class for every error raised by zipkit."""


class NumericalError(ZipkitError):
    """A numerical routine failed; the CLI maps these to exit code 1."""


class InvalidInput(ZipkitError, ValueError):
    """Bad user input; the CLI maps these to exit code 2."""


# numerics
class SingularMatrix(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class StepSizeUnderflow(NumericalError):
    pass


class MaxStepsExceeded(NumericalError):
    pass


class DimensionMismatch(InvalidInput):
    pass


# equilibrium
class RootBracketFailure(NumericalError):
    pass


class MultipleRoots(NumericalError):
    pass


class SteadyStateError(NumericalError):
    """Wraps a per-point failure on a steady-state branch with its mu."""

    def __init__(self, mu, cause):
        super().__init__(f"steady state failed at mu={mu!r}: {cause}")
        self.mu = mu
        self.cause = cause


# spectral
class NoComplexPair(NumericalError):
    pass


class BisectionStall(NumericalError):
    pass


class PairTrackingAmbiguous(NumericalError):
    pass


class InconsistentCount(NumericalError):
    pass


class ClassificationViolation(NumericalError):
    pass


# normal form
class DegenerateEigenvalue(NumericalError):
    pass


class ResonantEigenvalue(NumericalError):
    pass


class DegenerateBifurcation(NumericalError):
    pass


# orbits
class NoOscillationDetected(NumericalError):
    pass


class NewtonDivergence(NumericalError):
    pass


class ConvergedToSteadyState(NumericalError):
    pass


# buffering
class FoldEncountered(NumericalError):
    """Eigenvalue path reached a collision; ``p`` is where it stopped."""

    def __init__(self, msg, p=None):
        super().__init__(msg)
        self.p = p


class ValidationDrift(NumericalError):
    pass


class NoBracket(NumericalError):
    pass


class SingularShift(NumericalError):
    pass


class CertificationFailure(NumericalError):
    """A computed steady state failed its residual or determinant check."""
