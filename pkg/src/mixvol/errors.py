"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError -> 2, DivergenceError -> 3,
EstimationError -> 4.
"""


class MixvolError(Exception):
    pass


class InputError(MixvolError, ValueError):
    """Malformed input: bad degrees, dimension mismatch, unreadable polytope."""


class DegenerateInputError(InputError):
    """Point set is not full-dimensional where a full-dimensional body is required."""

    def __init__(self, msg, intrinsic_dim=None):
        super().__init__(msg)
        self.intrinsic_dim = intrinsic_dim


class DivergenceError(MixvolError, ArithmeticError):
    """An integral that the caller asked for at eps=0 is divergent or overflows."""


class EstimationError(MixvolError, RuntimeError):
    """A Monte Carlo estimation step failed (conditioning, resample budget, ...)."""
