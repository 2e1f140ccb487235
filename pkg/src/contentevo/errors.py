"""Exception types raised across the package."""


class ModelError(ValueError):
    """Base class for invalid inputs or unsupported model combinations."""


class OutOfDomain(ModelError):
    pass


class NegativeScale(ModelError):
    pass


class EmptyList(ModelError):
    pass


class NegativeDuration(ModelError):
    pass


class HorizonExceeded(ModelError):
    """No arrival before the sampling horizon."""


class CycleDetected(ModelError):
    pass


class MissingRelation(ModelError):
    pass


class MissingMultiplicityData(ModelError):
    pass


class UnsupportedModel(ModelError):
    pass


class MissingAttributeModel(ModelError):
    pass


class MissingState(ModelError):
    pass


class MissingHistogram(ModelError):
    pass


class MissingModel(ModelError):
    pass


class NotLumpable(ModelError):
    def __init__(self, block_from, block_to, deviation):
        super().__init__(
            f"partition not lumpable: rates from block {block_from!r} into block "
            f"{block_to!r} differ by {deviation:.3g}"
        )
        self.block_from = block_from
        self.block_to = block_to
        self.deviation = deviation


class UnknownValue(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class UnorderedSchedule(ModelError):
    pass


class NonpositiveRate(ModelError):
    pass


class TriggerNeverFires(ModelError):
    """The refresh trigger cannot fire; ``schedule`` holds the refreshes found so far."""

    def __init__(self, message, schedule=None):
        super().__init__(message)
        self.schedule = schedule


class EmptyTrace(ModelError):
    pass


class TooFewEvents(ModelError):
    pass


class EmptyBlockDuration(ModelError):
    pass


class EmptySample(ModelError):
    pass


class NoMultiEvents(ModelError):
    pass


class EmptyTraces(ModelError):
    pass


class MissingSection(ModelError):
    pass


class UnknownPolicy(ModelError):
    pass
