"""Exception types shared across the package.

Kept distinct from the builtins so callers can tell a rejected input from
a genuine bug in the numerics.
"""


class InputError(ValueError):
    """An argument fails a documented precondition."""


class CapacityError(RuntimeError):
    """A requested construction exceeds the configured dense-matrix budget."""


class DegeneracyError(RuntimeError):
    """A state or triple is degenerate where faithfulness is required."""


class ScheduleError(InputError):
    """An eigenvalue schedule violates its constraints (zero start, strictly
    increasing absolute values)."""


class ParityError(InputError):
    """A construction received a triple of the wrong parity."""


class CommutationError(RuntimeError):
    """Two group actions that must commute do not; carries a witness."""


class InvarianceError(RuntimeError):
    """A metric partition is not permuted by the group action; carries a
    witness edge."""
