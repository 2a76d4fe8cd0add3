"""Exception hierarchy shared by every module."""


class EBMError(Exception):
    """Base class for all library errors."""


class ShapeMismatch(EBMError, ValueError):
    pass


class LengthMismatch(EBMError, ValueError):
    pass


class AsymmetricLateral(EBMError, ValueError):
    pass


class NonzeroLateralDiagonal(EBMError, ValueError):
    pass


class NonpositiveTemperature(EBMError, ValueError):
    pass


class NonfiniteEntry(EBMError, ValueError):
    pass


class CoordinateOutOfRange(EBMError, ValueError):
    pass


class TooLargeToEnumerate(EBMError, ValueError):
    pass


class InvalidConfig(EBMError, ValueError):
    pass


class EmptyBatch(EBMError, ValueError):
    pass


class EmptyDataset(EBMError, ValueError):
    pass


class PercentileOutOfRange(EBMError, ValueError):
    pass


class PlacementInfeasible(EBMError, RuntimeError):
    """Rejection sampling ran out of attempts while placing centers or anomalies."""


class InvalidPlan(EBMError, ValueError):
    pass
