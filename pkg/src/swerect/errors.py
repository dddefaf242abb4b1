"""Exception types raised by the solvers and diagnostics."""

from __future__ import annotations

__all__ = [
    "SweRectError",
    "NumericError",
    "GridTooCoarse",
    "GridMismatch",
    "EmptyTrajectory",
    "NonPositiveHeight",
    "NotSupercritical",
    "NotStrongSupercritical",
    "CoriolisRequiresProfile",
    "RegimeLost",
    "IntegrationFailure",
    "KernelTooWide",
    "SupportTouchesBoundary",
    "IncompatibleData",
    "UnstableStep",
    "BackgroundTooShort",
    "ResidualTooLarge",
    "NoConvergence",
]


class SweRectError(Exception):
    """Base class for all package errors."""


class NumericError(SweRectError):
    pass


class GridTooCoarse(SweRectError):
    pass


class GridMismatch(SweRectError):
    pass


class EmptyTrajectory(SweRectError):
    pass


class NonPositiveHeight(SweRectError):
    pass


class NotSupercritical(SweRectError):
    pass


class NotStrongSupercritical(SweRectError):
    pass


class CoriolisRequiresProfile(SweRectError):
    pass


class RegimeLost(SweRectError):
    """The flow left the supercritical regime.

    ``where`` carries a human readable location (x coordinate for the
    stationary march, iterate/sample index for Picard).
    """

    def __init__(self, message: str, where=None, report=None):
        super().__init__(message)
        self.where = where
        self.report = report


class IntegrationFailure(SweRectError):
    pass


class KernelTooWide(SweRectError):
    pass


class SupportTouchesBoundary(SweRectError):
    pass


class IncompatibleData(SweRectError):
    """Data violates the compatibility conditions on the inflow boundary."""


class UnstableStep(SweRectError):
    pass


class BackgroundTooShort(SweRectError):
    pass


class ResidualTooLarge(SweRectError):
    pass


class NoConvergence(SweRectError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
