"""Exception hierarchy.

Two families: :class:`ValidationError` for malformed or out-of-domain input,
:class:`InfeasibleError` for well-formed input with no mathematical solution.
The command line maps them to exit codes 2 and 3.
"""


class PolylamError(Exception):
    pass


class ValidationError(PolylamError, ValueError):
    pass


class InfeasibleError(PolylamError, ArithmeticError):
    pass


# input validation
class InvalidMatrix(ValidationError):
    pass


class InvalidSpectrum(ValidationError):
    pass


class InvalidRotation(ValidationError):
    pass


class NotUnitTrace(ValidationError):
    pass


class OrderingError(ValidationError):
    pass


class OutOfKStarRange(ValidationError):
    pass


class NotOnSegment(ValidationError):
    pass


class DegenerateBarycenter(ValidationError):
    pass


class UniaxialInput(ValidationError):
    pass


# mathematical infeasibility
class NotAdmissible(InfeasibleError):
    pass


class DegenerateLambda(InfeasibleError):
    pass


class ConnectionFailure(InfeasibleError):
    pass


class SingularDenominator(InfeasibleError):
    pass


class CurveSolveFailure(InfeasibleError):
    pass


class ZOutOfRange(InfeasibleError):
    pass


class NotOnT2Curve(InfeasibleError):
    pass


class NotRankOne(InfeasibleError):
    pass


class NotConvexCombination(InfeasibleError):
    pass


class ConstructionDrift(InfeasibleError):
    def __init__(self, message, generation=None):
        super().__init__(message)
        self.generation = generation


class Inconclusive(InfeasibleError):
    pass


class AngleOutOfRange(InfeasibleError):
    pass


class BoundaryGap(InfeasibleError):
    pass


class WitnessFailure(InfeasibleError):
    pass


class InclusionViolation(InfeasibleError):
    pass


class IdentityFailure(InfeasibleError):
    pass


class RootBracketFailure(InfeasibleError):
    pass


class ThetaInconsistent(InfeasibleError):
    pass
