"""Exception hierarchy shared by every ssflab module."""


class SSFError(Exception):
    """Base class for all library errors."""


class NonSquare(SSFError, ValueError):
    pass


class HermiticityViolation(SSFError, ValueError):
    pass


class DimensionMismatch(SSFError, ValueError):
    pass


class PairMismatch(SSFError, ValueError):
    pass


class ConvergenceFailure(SSFError, RuntimeError):
    pass


class FunctionEvaluationError(SSFError, ValueError):
    pass


class UnsupportedWeight(SSFError, TypeError):
    pass


class EmptyVectorList(SSFError, ValueError):
    pass


class DegenerateInput(SSFError, ValueError):
    pass


class SliceCountOverflow(SSFError, OverflowError):
    """The guaranteed slice count is not representable as a float."""


class ScenarioParseError(SSFError, ValueError):
    pass


class ScenarioValidationError(SSFError, ValueError):
    pass


__all__ = [name for name, obj in list(globals().items()) if isinstance(obj, type) and issubclass(obj, Exception)]
