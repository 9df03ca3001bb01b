"""Exception hierarchy.

Two families matter to callers: configuration problems (bad input, exit
code 2 on the command line) and mathematical degeneracies (exit code 3).
"""


class DhgError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 3

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details

    def diagnostic(self):
        out = {"error": type(self).__name__, "message": str(self),
               "exit_code": self.exit_code}
        if self.details:
            out["details"] = self.details
        return out


class ConfigError(DhgError):
    exit_code = 2


class DegeneracyError(DhgError):
    exit_code = 3


# quatlin
class NonInvertibleDifference(DegeneracyError):
    pass


class DegenerateSplitting(DegeneracyError):
    pass


# mesh
class NonPositiveBasis(ConfigError):
    pass


class NonRegularQuotient(ConfigError):
    pass


class TooSmall(ConfigError):
    pass


# holo
class DegenerateTriangle(DegeneracyError):
    pass


class BlackTriangleDegenerate(DegeneracyError):
    pass


class BasePoint(DegeneracyError):
    pass


# spectral
class InterpolationIllConditioned(DegeneracyError):
    pass


class EmptyKernel(DegeneracyError):
    pass


class SingularAtTriangle(DegeneracyError):
    pass


# darboux
class InconsistentSection(DegeneracyError):
    pass


class RegularityViolation(DegeneracyError):
    pass


class ZeroProlongation(DegeneracyError):
    pass


class ChiInconsistent(DegeneracyError):
    pass


class TransformsCollide(DegeneracyError):
    pass


# polygon
class NotAPolygon(DegeneracyError):
    pass


class EigenlineDegenerate(DegeneracyError):
    pass
