"""
Errors raised by the toolkit.

Every error carries an :attr:`~HorseshoeError.exit_code`. The ``horseshoe``
management command turns an error into a
:class:`~django.core.management.base.CommandError` with that return code:

=====  ===========================================================
code   meaning
=====  ===========================================================
0      success
1      analysis negative: a valid "not found" or "escaped" outcome
2      malformed run configuration
3      precondition violated
4      numeric failure
=====  ===========================================================
"""


class HorseshoeError(Exception):
    """
    Base class of all toolkit errors.
    """

    exit_code = 4


class ConfigError(HorseshoeError):
    """
    The run configuration text could not be parsed.

    :param str message: what went wrong
    :param int lineno: line of the offending input (optional)
    """

    exit_code = 2

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = 'line {}: {}'.format(lineno, message)
        super().__init__(message)


class PreconditionError(HorseshoeError, ValueError):
    """
    An argument violates the precondition of an operation.
    """

    exit_code = 3


class AnalysisNegative(HorseshoeError):
    """
    A valid negative result, e.g. an orbit left the domain or a root
    was not bracketed.
    """

    exit_code = 1


class NoBoundary(AnalysisNegative):
    """
    𝔽(·, z) has no sign change: the whole circle at this z is in V.
    """


class AllEscaped(AnalysisNegative):
    """
    No seed survived the burn-in iterations.
    """


class OrbitEscaped(AnalysisNegative):
    """
    An orbit left V before the requested number of iterations.

    :param int step: iteration at which the orbit escaped
    """

    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message)


class NoBracket(AnalysisNegative):
    """
    A scalar function does not change sign on the given interval.
    """


class FoldNotFound(AnalysisNegative):
    """
    The image of the unstable curve has no interior θ₁ extremum.
    """


class NotFixed(AnalysisNegative):
    """
    The point is not a fixed point to the required tolerance.
    """


class NoHomoclinic(AnalysisNegative):
    """
    Shooting could not close the homoclinic loop.

    :param float residual: best closure residual reached
    """

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class NumericFailure(HorseshoeError):
    """
    A computation produced an unusable result.
    """

    exit_code = 4


class NumericDomainError(NumericFailure, ArithmeticError):
    """
    Evaluation outside the domain of the map (𝔽 ≤ 0) or non-finite output.
    """


class MultipleRoots(NumericFailure):
    """
    dθ₁/dθ is not monotone on the strip: the forcing profile has more than
    one fold.
    """


class DegenerateConformal(NumericFailure):
    """
    The Jacobian product is a multiple of an orthogonal matrix, so every
    direction is equally contracted.

    :param float arclength: arclength reached by a curve integration (optional)
    """

    def __init__(self, message, arclength=None):
        self.arclength = arclength
        super().__init__(message)


class DegenerateDomain(NumericFailure):
    """
    V or U is empty.
    """


class Divergent(NumericFailure):
    """
    An improper integral does not converge: the integrand tail fails the
    exponential decay fit.
    """


class HypothesisViolated(NumericFailure):
    """
    A standing hypothesis of the return map derivation fails.

    :param str hypothesis: short name of the failed condition, e.g. ``'dissipative'``
    """

    def __init__(self, message, hypothesis=None):
        self.hypothesis = hypothesis
        super().__init__(message)
