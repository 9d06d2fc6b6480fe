"""Exception hierarchy shared by every symflow module."""


class SymflowError(Exception):
    """Base class for all symflow errors."""


class DomainError(SymflowError, ValueError):
    """An expression was evaluated outside its real domain."""


class UnboundSymbol(SymflowError, KeyError):
    """Evaluation hit a variable or parameter with no value."""


class InvalidParams(SymflowError, ValueError):
    pass


class CaseMismatch(SymflowError, ValueError):
    pass


class AnsatzViolation(SymflowError, ValueError):
    """xi or tau depends on u, so the reduced determining equations do not apply."""


class UnknownIndex(SymflowError, KeyError):
    pass


class BlowUp(SymflowError, RuntimeError):
    """A flow left its domain or the integrator stalled before reaching eps."""


class RootNotBracketed(SymflowError, ValueError):
    pass


class Extinction(SymflowError, ValueError):
    """Amplitude along a characteristic reaches zero within the requested time."""


class ShockReached(SymflowError, RuntimeError):
    pass


class BracketFail(SymflowError, RuntimeError):
    pass
