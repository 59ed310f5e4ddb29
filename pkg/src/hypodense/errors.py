"""Exception types shared across the package.

Everything raised on purpose derives from HypodenseError so callers (and
the command line driver) can tell our failures apart from genuine bugs.
ConfigError marks bad user input; the driver maps it to exit code 2,
while failed mathematical checks map to exit code 1.
"""


class HypodenseError(Exception):
    """Base class for every error this package raises deliberately."""


class ConfigError(HypodenseError):
    """Malformed configuration, flags, or serialized input."""


class ExponentCapError(HypodenseError):
    """Materializing a power of two would exceed the exponent cap."""


class ValidationError(HypodenseError):
    """A structural invariant of a built object does not hold."""


class HorizonExhausted(HypodenseError):
    """A greedy search ran past its horizon without finding a block."""

    def __init__(self, block_index: int, part: int | None = None, message: str = ""):
        self.block_index = block_index
        self.part = part
        if not message:
            message = f"no admissible block {block_index} below the horizon"
            if part is not None:
                message += f" (serving part {part})"
        super().__init__(message)


class ScanExhausted(HypodenseError):
    """An upward scan hit its cap before the defining inequality held."""

    def __init__(self, position: int, message: str = ""):
        self.position = position
        super().__init__(message or f"scan cap hit at position {position}")


class MapInfeasible(HypodenseError):
    """The requested pairing map cannot be built within the horizon."""


class NoFeasibleLevel(HypodenseError):
    """No schedule level satisfies the shadowing size inequality."""


class NoFeasibleStep(HypodenseError):
    """No pairing-map step with the required pair exists in the horizon."""


class SupportOutOfRange(HypodenseError):
    """A vector's support extends past the realized parameter horizon."""


class HypothesisViolated(HypodenseError):
    """A check's quantitative hypothesis fails at some index."""

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"hypothesis fails at index {index}")
