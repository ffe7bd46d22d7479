class QuasinvError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(QuasinvError, ValueError):
    pass


class MatrixFormatError(QuasinvError, ValueError):
    pass


class NotHermitian(QuasinvError, ValueError):
    pass


class NotPositiveDefinite(QuasinvError, ValueError):
    pass


class NotUnitary(QuasinvError, ValueError):
    pass


class NotFaithful(QuasinvError, ValueError):
    pass


class InvalidGroup(QuasinvError, ValueError):
    pass


class HomomorphismViolation(QuasinvError, ValueError):
    def __init__(self, pair, deviation):
        self.pair = pair
        self.deviation = deviation
        super().__init__(f"maps[{pair[0]}*{pair[1]}] != maps[{pair[0]}] o maps[{pair[1]}]"
                         f" (deviation {deviation:.3e})")


class NotStronglyQuasiInvariant(QuasinvError):
    pass


class HypothesisNotSatisfied(QuasinvError):
    pass


class ErgodicityHypothesisFailed(HypothesisNotSatisfied):
    pass


class ChainNotNested(QuasinvError, ValueError):
    pass


class InvalidParams(QuasinvError, ValueError):
    pass


class InvariantViolation(QuasinvError):
    """A construction-time self-test failed (indicates a numerical or logic bug)."""
