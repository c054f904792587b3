"""Exception types shared across the pipeline.

Errors split into two families so the command line can map them to exit
codes: :class:`UserError` for bad arguments or configuration and
:class:`DataError` for problems with input files or corpus contents.
"""


class BolwError(Exception):
    """Base class for every error raised by this package."""


class UserError(BolwError):
    pass


class DataError(BolwError):
    pass


class MalformedRecord(DataError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class DuplicateImageId(DataError):
    def __init__(self, image_id: str, line: int | None = None):
        self.image_id = image_id
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}duplicate image_id {image_id!r}")


class EmptyCorpus(DataError):
    pass


class AllWordsFiltered(DataError):
    pass


class LengthMismatch(DataError):
    pass


class NonFiniteWeight(DataError):
    pass


class NonIntegerWeights(UserError):
    pass


class InvalidTargetWeight(UserError):
    pass


class VocabularyMismatch(UserError):
    pass


class UnknownCamera(UserError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class IncompatibleBinWidth(UserError):
    pass


class IndexOutOfRange(UserError, IndexError):
    pass
