class ValstratError(Exception):
    """Base class for all library errors."""


class UndefinedProduct(ValstratError):
    pass


class DomainError(ValstratError):
    pass


class PrecisionExhausted(ValstratError):
    pass


class ResourceError(ValstratError):
    pass


class NotInValuationRing(ValstratError):
    pass


class NoConvergence(ValstratError):
    pass


class SingularSeed(ValstratError):
    pass


class DimensionMismatch(ValstratError):
    pass


class SingularMatrix(ValstratError):
    pass


class SizeCapExceeded(ValstratError):
    pass


class SampleClosureError(ValstratError):
    pass


class UnfitSamples(ValstratError):
    def __init__(self, message, outliers=()):
        super().__init__(message)
        self.outliers = list(outliers)


class SingularPoint(ValstratError):
    pass


class RejectedInput(ValstratError):
    pass


class UnsupportedFamily(ValstratError):
    pass
