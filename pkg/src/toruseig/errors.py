"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An argument violates a documented precondition."""


class OverflowGuardError(OverflowError):
    """A count or coordinate would leave the 64-bit range the library guarantees."""


class PairBudgetExceeded(RuntimeError):
    """The frequency-space pair enumeration would exceed its configured budget."""


class TailToleranceError(RuntimeError):
    """A truncated approximant cannot reach the requested tail tolerance."""


U64_MAX = 2**64 - 1
MAX_NORM = 2**40


def check_u64(value: int) -> int:
    if value < 0 or value > U64_MAX:
        raise OverflowGuardError(f"count {value} outside unsigned 64-bit range")
    return value
