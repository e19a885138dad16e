"""Exception types shared across the package."""


class EqmlError(Exception):
    """Base class for all package errors."""


class InvalidDims(EqmlError):
    pass


class DimMismatch(EqmlError):
    pass


class NormZero(EqmlError):
    pass


class QubitOutOfRange(EqmlError):
    pass


class SameQubit(EqmlError):
    pass


class TooLarge(EqmlError):
    pass


class LabelOutOfRange(EqmlError):
    pass


class ZeroWeights(EqmlError):
    pass


class EmptyDataset(EqmlError):
    pass


class InvalidArgs(EqmlError):
    pass


class BadMagic(EqmlError):
    pass


class ChecksumMismatch(EqmlError):
    pass


class MissingBaseline(EqmlError):
    pass
