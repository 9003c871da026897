"""Exception hierarchy.

``ConfigError`` covers bad user input (CLI exit 2); ``NumericalError`` covers
failures inside the numerics (CLI exit 3).
"""


class DtwinError(Exception):
    pass


class ConfigError(DtwinError, ValueError):
    pass


class NumericalError(DtwinError, ArithmeticError):
    pass


class InvalidMassMatrix(ConfigError):
    def __init__(self, detail: str = ""):
        super().__init__("invalid mass matrix" + (f": {detail}" if detail else ""))


class ModalAnalysisFailed(NumericalError):
    def __init__(self, detail: str = ""):
        super().__init__("modal analysis failed" + (f": {detail}" if detail else ""))


class SingularSystem(NumericalError):
    def __init__(self, frequency_hz: float):
        self.frequency_hz = frequency_hz
        super().__init__(f"singular at frequency {frequency_hz:g} Hz")


class DatasetFormatError(ConfigError):
    pass
