"""Exception hierarchy shared by all modules.

Everything raised on purpose derives from :class:`DomainError`, which the CLI
maps to exit code 1.
"""


class DomainError(Exception):
    """A well-formed request that cannot be satisfied."""


class UnsupportedIndex(DomainError):
    pass


class PrecisionUnreachable(DomainError):
    pass


class TruncationInsufficient(DomainError):
    pass


class NearPole(DomainError):
    pass


class RangeExceeded(DomainError):
    pass


class NearZeroDenominator(DomainError):
    pass


class ParseError(DomainError):
    def __init__(self, line: int, text: str, reason: str = "not a decimal ordinate"):
        self.line = line
        self.text = text
        super().__init__(f"line {line}: {reason}: {text!r}")


class NonMonotonic(DomainError):
    def __init__(self, line: int, value):
        self.line = line
        super().__init__(f"line {line}: ordinate {value} does not increase")


class MissedZero(DomainError):
    pass


class InsufficientZeros(DomainError):
    pass
