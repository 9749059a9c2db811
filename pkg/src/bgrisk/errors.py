"""Exception hierarchy for the construction pipeline."""


class BGRiskError(Exception):
    """Base class for library errors."""


class MixedGridError(BGRiskError):
    """Two gridded densities with different steps were combined."""


class InfeasibleMeanOrder(BGRiskError):
    """First-order construction requested with E[X] <= E[Y]."""


class InfeasibleVarianceOrder(BGRiskError):
    """Second-order construction requested without equal means and Var[X] < Var[Y]."""


class KernelTooNarrow(BGRiskError):
    """The smoothing coefficient c is not below 1; the kernel must be widened."""


class GridTooNarrow(BGRiskError):
    """The requested grid loses more probability mass than allowed."""


class ParameterTooSmall(BGRiskError):
    """A closed-form parameter is below its validity bound."""


class VerificationFailed(BGRiskError):
    """The numerical dominance check rejected a constructed noise."""

    def __init__(self, message, verdict=None, diagnostics=None):
        super().__init__(message)
        self.verdict = verdict
        self.diagnostics = diagnostics or {}


class NotStrictlyBIC(BGRiskError):
    """A mechanism has a misreport whose expected payoff is not strictly lower."""

    def __init__(self, message, offending=()):
        super().__init__(message)
        self.offending = list(offending)
