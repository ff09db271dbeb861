"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration/validation problems exit
with 1, runtime failures (divergence, infeasible designs, bad tables) with 2.
"""

from __future__ import annotations


class FlyinvError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FlyinvError):
    """A config file or override string does not follow the documented grammar."""


class ValidationError(FlyinvError):
    """One or more parameter invariants are violated.

    Carries the complete list of violations, not just the first, as
    ``(field_path, rule)`` pairs.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = [f"{path}: {rule}" for path, rule in self.violations]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class NumericalDivergence(FlyinvError):
    """A state variable exceeded the magnitude bound; the configuration is unstable."""

    def __init__(self, t, bound):
        self.t = t
        self.bound = bound
        super().__init__(f"state magnitude exceeded {bound:g} at t = {t:.9g} s")


class ResonanceSingularity(FlyinvError):
    """The requested frequency sits on the undamped filter pole."""


class InfeasibleDesign(FlyinvError):
    """No positive filter inductance can realise the requested resonant frequency."""


class PlacementError(FlyinvError):
    """The filter resonance does not lie between the fundamental and the switching frequency."""


class NonIntegerSpan(FlyinvError):
    """Spectral analysis was asked for a window that is not a whole number of periods."""


class ZeroFundamental(FlyinvError):
    """THD is undefined because the fundamental component is zero."""


class ZeroInputPower(FlyinvError):
    """Efficiency is undefined because the average input power is zero."""


class TargetUnreachable(FlyinvError):
    """A sweep setpoint cannot be realised with a valid configuration."""


class MalformedTable(FlyinvError):
    """A tabular input file is empty, truncated, or has bad cells."""

    def __init__(self, path, detail, row=None, column=None):
        self.path = str(path)
        self.row = row
        self.column = column
        where = ""
        if column is not None:
            where += f", column {column!r}"
        if row is not None:
            where += f", row {row}"
        super().__init__(f"{path}{where}: {detail}")
