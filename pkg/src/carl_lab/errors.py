"""Exception types raised across the package."""

from __future__ import annotations


class CarlLabError(Exception):
    """Base class for all package errors."""


class OutOfBounds(CarlLabError, ValueError):
    def __init__(self, feature: str, value: float, lower: float, upper: float):
        self.feature = feature
        self.value = value
        super().__init__(f"{feature}={value!r} outside bounds [{lower}, {upper}]")


class LengthMismatch(CarlLabError, ValueError):
    pass


class IndexOutOfRange(CarlLabError, IndexError):
    pass


class NonFiniteState(CarlLabError, FloatingPointError):
    pass


class NoConvergence(CarlLabError, RuntimeError):
    pass


class TooLarge(CarlLabError, ValueError):
    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"{count} policies exceed the enumeration cap of {cap}")


class WrongContextCount(CarlLabError, ValueError):
    pass


class ParseError(CarlLabError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ZeroDefault(CarlLabError, ValueError):
    def __init__(self, feature: str):
        self.feature = feature
        super().__init__(f"feature {feature!r} has default 0; relative sigma is undefined")


class RegionEmpty(CarlLabError, ValueError):
    pass


class DimMismatch(CarlLabError, ValueError):
    pass


class StaleCache(CarlLabError, RuntimeError):
    pass


class Underfull(CarlLabError, ValueError):
    pass


class NonFiniteLoss(CarlLabError, FloatingPointError):
    pass


class EmptyResults(CarlLabError, ValueError):
    pass


class ConfigError(CarlLabError, ValueError):
    pass
