"""Exception hierarchy; every error knows the exit code the CLI reports."""


class PipelineError(Exception):
    exit_code = 1

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage

    def __reduce__(self):
        # keep extra attributes when errors cross joblib worker boundaries
        return self.__class__, (str(self),), self.__dict__


class UsageError(PipelineError):
    exit_code = 1


class ParameterError(PipelineError, ValueError):
    """A value outside the domain an operation accepts."""
    exit_code = 1


class DataError(PipelineError):
    exit_code = 2


class ConvergenceError(PipelineError):
    exit_code = 3

    def __init__(self, message, residual=None, kappa=None, g=None, stage=None):
        super().__init__(message, stage=stage)
        self.residual = residual
        self.kappa = kappa
        self.g = g


class PostSelectionError(PipelineError):
    """Ancilla |0> has zero probability: every neighbor is at maximal distance."""
    exit_code = 4


class NoCrossingError(PipelineError):
    exit_code = 4
