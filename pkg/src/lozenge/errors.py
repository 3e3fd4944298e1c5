"""Exception types shared across the package.

Each carries an ``exit_code`` used by the command line front end.
"""


class LozengeError(Exception):
    exit_code = 1


class InvariantViolation(LozengeError):
    """A height function, tiling or path ensemble breaks a structural rule."""

    exit_code = 3


class Infeasible(LozengeError):
    """Boundary data that admits no extension, or an empty configuration set."""

    exit_code = 4


class NonConvergence(LozengeError):
    """A numerical routine missed its tolerance after exhausting refinement."""

    exit_code = 5


class CapExceeded(LozengeError):
    exit_code = 6
