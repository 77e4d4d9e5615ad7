"""Exception hierarchy shared by the solver, the norms and the CLI.

Each class carries the process exit status the CLI reports for it.
"""


class TVLaplaceError(Exception):
    exit_code = 1


class ScenarioError(TVLaplaceError, ValueError):
    """Invalid scenario document or invalid problem data."""

    exit_code = 2


class InapplicableDatumError(TVLaplaceError, ValueError):
    exit_code = 3


class InfeasibleFieldError(TVLaplaceError):
    exit_code = 4


class NonexistenceError(TVLaplaceError):
    """The requested level lies above the range of G, so no radial solution exists."""

    exit_code = 5


class VerificationError(TVLaplaceError):
    exit_code = 6


class ReportIOError(TVLaplaceError, OSError):
    """Reading a scenario or writing a report failed; the message names the path."""

    exit_code = 7
