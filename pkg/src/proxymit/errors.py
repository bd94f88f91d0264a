"""Exception hierarchy. Numerical failures map to CLI exit code 3, config errors to 2."""


class ProxyMitError(Exception):
    pass


class SizingError(ProxyMitError, ValueError):
    pass


class BasisError(ProxyMitError, ValueError):
    pass


class NotOrthonormalError(ProxyMitError, ValueError):
    pass


class ConfigError(ProxyMitError, ValueError):
    pass


class NumericalError(ProxyMitError, ArithmeticError):
    pass


class PostSelectionError(NumericalError):
    def __init__(self, message: str, probability: float, label: str = ""):
        super().__init__(message)
        self.probability = probability
        self.label = label


class IllConditionedError(NumericalError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class StepSizeError(NumericalError):
    pass
