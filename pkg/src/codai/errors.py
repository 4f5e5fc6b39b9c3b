class CodaiError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(CodaiError):
    pass


class DataError(CodaiError):
    pass


class EncodingError(CodaiError):
    pass


class NotFoundError(CodaiError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class StageError(CodaiError):
    """A pipeline stage ran before the stage producing its inputs."""


class RankDeficientError(CodaiError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = list(columns)


class SeparationError(CodaiError):
    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class DegenerateResponseError(CodaiError):
    pass
