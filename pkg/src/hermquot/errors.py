"""Exception hierarchy shared by all hermquot modules."""


class HermquotError(Exception):
    """Base class for all package errors."""


# field layer
class NotPrime(HermquotError):
    pass


class UnsupportedSize(HermquotError):
    pass


class WrongLevel(HermquotError):
    pass


class NotMonic(HermquotError):
    pass


class DegreeTooHigh(HermquotError):
    pass


# projective / group layer
class NotUnitary(HermquotError):
    pass


class OrderCapExceeded(HermquotError):
    pass


class ConstraintViolated(HermquotError):
    pass


class ConstructionFailed(HermquotError):
    pass


class UnsupportedPrime(HermquotError):
    pass


class EnumerationTooLarge(HermquotError):
    pass


# classification
class IdentityElement(HermquotError):
    pass


class ClassificationContradiction(HermquotError):
    pass


# genus layer
class NotAGroup(HermquotError):
    pass


class NonIntegralGenus(HermquotError):
    pass


class RangeError(HermquotError):
    pass


class NotAdditiveSubgroup(HermquotError):
    pass


class GenusTooSmall(HermquotError):
    pass


# subgroup search
class CapExceeded(HermquotError):
    pass


class LatticeTooLarge(HermquotError):
    pass


class SearchSetNotClosed(HermquotError):
    pass


class NotNormal(HermquotError):
    pass


class MalformedConstraints(HermquotError):
    pass


class RecipeFailed(HermquotError):
    pass
